//! Synthetic number-prediction data, corpus loading at word/character/sentence
//! level, padding/windowing, and embedding-file ingestion.

use crate::error::{Error, Result};
use crate::model::Embedding;
use crate::numeric::{Rng, Scalar};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write as _};
use std::path::Path;

/// Reserved token indices.
pub const PAD: u32 = 0;
pub const UNK: u32 = 1;

/// One training/evaluation instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub tokens: Vec<u32>,
    pub label: usize,
    /// Candidate answer tokens (QA mode only).
    pub candidates: Option<Vec<u32>>,
}

/// Synthetic number-prediction task: token 0 holds an index `x0`, the label
/// is the token found at that index, and everything else is a distractor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub seq_len: usize,
    pub vocab_size: usize,
}

impl SyntheticSpec {
    pub fn new(seq_len: usize) -> Self {
        SyntheticSpec {
            seq_len,
            vocab_size: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seq_len < 2 {
            return Err(Error::Config(format!(
                "synthetic sequences need length >= 2, got {}",
                self.seq_len
            )));
        }
        if self.vocab_size < 2 {
            return Err(Error::Config("synthetic vocab must be >= 2".into()));
        }
        Ok(())
    }

    /// Largest valid answer position: `min(T, vocab) - 1`, since `x0` must be
    /// both a token value and a valid index.
    pub fn max_answer_pos(&self) -> usize {
        self.seq_len.min(self.vocab_size) - 1
    }
}

/// Label under the synthetic rule: the token at index `tokens[0]`.
pub fn synthetic_label(tokens: &[u32]) -> usize {
    tokens[tokens[0] as usize] as usize
}

/// Generate `n` synthetic examples: tokens i.i.d. uniform over the vocab,
/// position 0 overwritten by `x0` uniform in `[1, min(T, vocab) - 1]`.
pub fn gen_synthetic(spec: &SyntheticSpec, n: usize, rng: &mut Rng) -> Result<Vec<Example>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut tokens: Vec<u32> = (0..spec.seq_len)
            .map(|_| rng.below(spec.vocab_size as u64) as u32)
            .collect();
        tokens[0] = rng.range_inclusive(1, spec.max_answer_pos() as u64) as u32;
        let label = synthetic_label(&tokens);
        out.push(Example {
            tokens,
            label,
            candidates: None,
        });
    }
    Ok(out)
}

/// Serialize synthetic examples: header comment, then one line per example,
/// `x0 x1 ... x(T-1) TAB label`.
pub fn synthetic_to_string(examples: &[Example], header: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {header}");
    for ex in examples {
        let toks: Vec<String> = ex.tokens.iter().map(|t| t.to_string()).collect();
        let _ = writeln!(s, "{}\t{}", toks.join(" "), ex.label);
    }
    s
}

pub fn write_synthetic(path: &Path, examples: &[Example], header: &str) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    f.write_all(synthetic_to_string(examples, header).as_bytes())
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_synthetic(path: &Path) -> Result<Vec<Example>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        let lineno = idx + 1;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let (toks, label) = line.split_once('\t').ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            line: lineno,
            msg: "expected TAB between tokens and label".into(),
        })?;
        let parse_err = |msg: String| Error::Parse {
            path: path.display().to_string(),
            line: lineno,
            msg,
        };
        let tokens: Vec<u32> = toks
            .split_whitespace()
            .map(|t| t.parse::<u32>().map_err(|e| parse_err(format!("bad token {t:?}: {e}"))))
            .collect::<Result<_>>()?;
        if tokens.is_empty() {
            return Err(parse_err("no tokens".into()));
        }
        let label = label
            .trim()
            .parse::<usize>()
            .map_err(|e| parse_err(format!("bad label: {e}")))?;
        out.push(Example {
            tokens,
            label,
            candidates: None,
        });
    }
    Ok(out)
}

/// Tokenization granularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Word,
    Character,
    /// Each sentence becomes one fixed-width span of word tokens; the jump
    /// unit is the span.
    Sentence,
}

/// Corpus shaping parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusSpec {
    pub level: Level,
    /// Padded length in units (words, characters, or sentences).
    pub target_len: usize,
    /// Training augmentation: sample a contiguous window of this many units.
    pub window_len: Option<usize>,
    /// Tokens per sentence span (sentence level only).
    pub span_len: usize,
    /// Query tokens read unconditionally before the context (QA only).
    pub query_len: usize,
    /// Candidates per QA example; 0 means plain classification.
    pub num_candidates: usize,
}

impl CorpusSpec {
    pub fn words(target_len: usize, window_len: Option<usize>) -> Self {
        CorpusSpec {
            level: Level::Word,
            target_len,
            window_len,
            span_len: 1,
            query_len: 0,
            num_candidates: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(w) = self.window_len {
            if w > self.target_len {
                return Err(Error::Config(format!(
                    "window_len {} exceeds target_len {}",
                    w, self.target_len
                )));
            }
        }
        Ok(())
    }
}

/// Non-space character alphabet for character-level corpora; anything outside
/// it (after lowercasing) maps to the pad token, space gets its own index.
pub const CHAR_ALPHABET: &str = "abcdefghijklmnopqrstuvwxyz0123456789-,;.!?:'\"`/\\|_@#$";

/// Token-to-index map. Index 0 is the pad token, 1 the unknown token.
#[derive(Debug, Clone)]
pub struct Vocab {
    map: HashMap<String, u32>,
    items: Vec<String>,
}

impl Default for Vocab {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocab {
    pub fn new() -> Self {
        let mut v = Vocab {
            map: HashMap::new(),
            items: Vec::new(),
        };
        v.intern("<pad>");
        v.intern("<unk>");
        v
    }

    /// Fixed character-level vocabulary; independent of any corpus.
    pub fn for_characters() -> Self {
        let mut v = Vocab::new();
        v.intern(" ");
        for ch in CHAR_ALPHABET.chars() {
            v.intern(&ch.to_string());
        }
        v
    }

    pub fn intern(&mut self, token: &str) -> u32 {
        if let Some(&i) = self.map.get(token) {
            return i;
        }
        let i = self.items.len() as u32;
        self.map.insert(token.to_string(), i);
        self.items.push(token.to_string());
        i
    }

    pub fn lookup(&self, token: &str) -> u32 {
        self.map.get(token).copied().unwrap_or(UNK)
    }

    pub fn decode(&self, index: u32) -> &str {
        &self.items[index as usize]
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

fn encode_words(text: &str, vocab: &mut Vocab, build: bool) -> Vec<u32> {
    text.split_whitespace()
        .map(|w| {
            if build {
                vocab.intern(w)
            } else {
                vocab.lookup(w)
            }
        })
        .collect()
}

fn encode_characters(text: &str, vocab: &Vocab) -> Vec<u32> {
    text.to_lowercase()
        .chars()
        .map(|ch| {
            if ch == ' ' {
                vocab.lookup(" ")
            } else if CHAR_ALPHABET.contains(ch) {
                vocab.lookup(&ch.to_string())
            } else {
                PAD
            }
        })
        .collect()
}

fn encode_span(sentence: &str, vocab: &mut Vocab, build: bool, span_len: usize) -> Vec<u32> {
    let mut toks = encode_words(sentence, vocab, build);
    toks.truncate(span_len);
    toks.resize(span_len, PAD);
    toks
}

/// Load a `label TAB text` corpus. Sentence level expects one sentence per
/// additional TAB field; QA mode (`num_candidates > 0`) expects
/// `label TAB candidates TAB query TAB sentence...`.
///
/// With `build` set, unseen tokens extend `vocab`; otherwise they map to the
/// unknown token. Examples come back in file order.
pub fn load_corpus(
    path: &Path,
    spec: &CorpusSpec,
    vocab: &mut Vocab,
    build: bool,
) -> Result<Vec<Example>> {
    spec.validate()?;
    let f = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        let lineno = idx + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: path.display().to_string(),
            line: lineno,
            msg,
        };
        let mut fields = line.split('\t');
        let label_text = fields.next().unwrap_or("");
        let rest: Vec<&str> = fields.collect();
        if rest.is_empty() {
            return Err(parse_err("expected TAB after label".into()));
        }
        let label = label_text
            .trim()
            .parse::<usize>()
            .map_err(|e| parse_err(format!("bad label {label_text:?}: {e}")))?;
        let example = match (spec.level, spec.num_candidates) {
            (Level::Word, 0) => Example {
                tokens: encode_words(rest[0], vocab, build),
                label,
                candidates: None,
            },
            (Level::Character, 0) => Example {
                tokens: encode_characters(rest[0], vocab),
                label,
                candidates: None,
            },
            (Level::Sentence, 0) => {
                let mut tokens = Vec::new();
                for sentence in &rest {
                    tokens.extend(encode_span(sentence, vocab, build, spec.span_len));
                }
                Example {
                    tokens,
                    label,
                    candidates: None,
                }
            }
            (_, n_cand) => {
                // QA: candidates TAB query TAB sentences...
                if rest.len() < 3 {
                    return Err(parse_err(
                        "QA lines need candidates, query and at least one sentence".into(),
                    ));
                }
                let candidates = encode_words(rest[0], vocab, build);
                if candidates.len() != n_cand {
                    return Err(parse_err(format!(
                        "expected {} candidates, got {}",
                        n_cand,
                        candidates.len()
                    )));
                }
                if label >= n_cand {
                    return Err(parse_err(format!(
                        "label {label} out of range for {n_cand} candidates"
                    )));
                }
                let mut query = encode_words(rest[1], vocab, build);
                query.truncate(spec.query_len);
                query.resize(spec.query_len, PAD);
                let mut tokens = query;
                for sentence in &rest[2..] {
                    tokens.extend(encode_span(sentence, vocab, build, spec.span_len));
                }
                Example {
                    tokens,
                    label,
                    candidates: Some(candidates),
                }
            }
        };
        out.push(example);
    }
    Ok(out)
}

/// Pad (and optionally window) a token sequence to the spec's fixed length.
///
/// Short sequences are right-padded to `target_len`. When training with a
/// window length set, a uniformly random contiguous window of that length is
/// taken from the padded sequence; at evaluation the first `window_len`
/// tokens are taken.
pub fn pad_or_window(
    tokens: &[u32],
    spec: &CorpusSpec,
    rng: &mut Rng,
    training: bool,
) -> Vec<u32> {
    let mut padded = tokens.to_vec();
    if padded.len() < spec.target_len {
        padded.resize(spec.target_len, PAD);
    } else {
        padded.truncate(spec.target_len);
    }
    match spec.window_len {
        Some(w) => {
            let max_offset = spec.target_len - w;
            let offset = if training && max_offset > 0 {
                rng.below(max_offset as u64 + 1) as usize
            } else {
                0
            };
            padded[offset..offset + w].to_vec()
        }
        None => padded,
    }
}

/// Fill embedding rows from a text file of `token v1 v2 ...` lines. Rows for
/// tokens absent from the file keep their random initialization. Returns the
/// number of vocabulary tokens covered.
pub fn load_embeddings<S: Scalar>(
    path: &Path,
    vocab: &Vocab,
    embedding: &mut Embedding<S>,
) -> Result<usize> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let dim = embedding.table.cols();
    let mut coverage = 0usize;
    for (idx, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let token = parts.next().unwrap();
        let values: Vec<f64> = parts
            .map(|v| {
                v.parse::<f64>().map_err(|e| Error::Parse {
                    path: path.display().to_string(),
                    line: lineno,
                    msg: format!("bad value {v:?}: {e}"),
                })
            })
            .collect::<Result<_>>()?;
        if values.len() != dim {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: lineno,
                msg: format!("dimension {} does not match embedding dim {}", values.len(), dim),
            });
        }
        let index = vocab.lookup(token);
        if index != UNK || token == "<unk>" {
            let row = embedding.table.row_mut(index as usize);
            for (r, v) in row.iter_mut().zip(values.iter()) {
                *r = S::from_f64(*v);
            }
            coverage += 1;
        }
    }
    Ok(coverage)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Matrix;
    use std::io::Write;

    #[test]
    fn synthetic_rule_on_known_sequences() {
        assert_eq!(synthetic_label(&[4, 5, 1, 7, 6, 2]), 6);
        assert_eq!(synthetic_label(&[2, 4, 9, 4, 5, 6]), 9);
    }

    #[test]
    fn synthetic_x0_one_forces_label() {
        let spec = SyntheticSpec::new(10);
        let mut rng = Rng::new(3);
        for ex in gen_synthetic(&spec, 500, &mut rng).unwrap() {
            if ex.tokens[0] == 1 {
                assert_eq!(ex.label, ex.tokens[1] as usize);
            }
        }
    }

    #[test]
    fn synthetic_invariants_across_lengths() {
        for t in [10usize, 100, 1000] {
            let spec = SyntheticSpec::new(t);
            let mut rng = Rng::new(7 + t as u64);
            let n = 10_000;
            for ex in gen_synthetic(&spec, n, &mut rng).unwrap() {
                let x0 = ex.tokens[0] as usize;
                assert!(x0 >= 1 && x0 < t.min(100), "x0 {x0} out of range for T={t}");
                assert_eq!(ex.label, ex.tokens[x0] as usize);
                assert!(ex.tokens.iter().all(|&v| (v as usize) < 100));
                assert_eq!(ex.tokens.len(), t);
            }
        }
    }

    #[test]
    fn synthetic_too_short_is_error() {
        assert!(gen_synthetic(&SyntheticSpec::new(1), 5, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn synthetic_same_seed_same_bytes() {
        let spec = SyntheticSpec::new(20);
        let a = gen_synthetic(&spec, 200, &mut Rng::new(99)).unwrap();
        let b = gen_synthetic(&spec, 200, &mut Rng::new(99)).unwrap();
        assert_eq!(
            synthetic_to_string(&a, "seed=99"),
            synthetic_to_string(&b, "seed=99")
        );
    }

    #[test]
    fn synthetic_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.txt");
        let spec = SyntheticSpec::new(12);
        let examples = gen_synthetic(&spec, 50, &mut Rng::new(5)).unwrap();
        write_synthetic(&path, &examples, "t=12 seed=5").unwrap();
        let loaded = read_synthetic(&path).unwrap();
        assert_eq!(examples, loaded);
    }

    #[test]
    fn corpus_word_level_fresh_vocab() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.tsv");
        std::fs::write(&path, "1\tgood movie\n0\tbad movie\n").unwrap();
        let mut vocab = Vocab::new();
        let spec = CorpusSpec::words(10, None);
        let examples = load_corpus(&path, &spec, &mut vocab, true).unwrap();
        assert_eq!(examples.len(), 2);
        assert_eq!(examples[0].label, 1);
        assert_eq!(examples[0].tokens, vec![vocab.lookup("good"), vocab.lookup("movie")]);
        // encode-decode round trip
        let decoded: Vec<&str> = examples[0].tokens.iter().map(|&t| vocab.decode(t)).collect();
        assert_eq!(decoded.join(" "), "good movie");
    }

    #[test]
    fn corpus_empty_file_is_empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.tsv");
        std::fs::write(&path, "").unwrap();
        let mut vocab = Vocab::new();
        let examples =
            load_corpus(&path, &CorpusSpec::words(10, None), &mut vocab, true).unwrap();
        assert!(examples.is_empty());
    }

    #[test]
    fn corpus_missing_tab_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.tsv");
        std::fs::write(&path, "1\tok text\nno tab here\n").unwrap();
        let mut vocab = Vocab::new();
        let err = load_corpus(&path, &CorpusSpec::words(10, None), &mut vocab, true);
        match err {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn corpus_unknown_tokens_map_to_unk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.tsv");
        std::fs::write(&path, "1\thello world\n").unwrap();
        let mut vocab = Vocab::new();
        load_corpus(&path, &CorpusSpec::words(10, None), &mut vocab, true).unwrap();
        let path2 = dir.path().join("c2.tsv");
        std::fs::write(&path2, "0\thello mars\n").unwrap();
        let examples =
            load_corpus(&path2, &CorpusSpec::words(10, None), &mut vocab, false).unwrap();
        assert_eq!(examples[0].tokens[0], vocab.lookup("hello"));
        assert_eq!(examples[0].tokens[1], UNK);
    }

    #[test]
    fn character_level_alphabet_and_space() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.tsv");
        std::fs::write(&path, "2\tAb €!\n").unwrap();
        let mut vocab = Vocab::for_characters();
        let spec = CorpusSpec {
            level: Level::Character,
            ..CorpusSpec::words(10, None)
        };
        let examples = load_corpus(&path, &spec, &mut vocab, false).unwrap();
        // 'A' lowercases to 'a'; euro sign is out of alphabet -> pad
        assert_eq!(examples[0].tokens[0], vocab.lookup("a"));
        assert_eq!(examples[0].tokens[1], vocab.lookup("b"));
        assert_eq!(examples[0].tokens[2], vocab.lookup(" "));
        assert_eq!(examples[0].tokens[3], PAD);
        assert_eq!(examples[0].tokens[4], vocab.lookup("!"));
    }

    #[test]
    fn sentence_spans_pad_and_truncate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.tsv");
        std::fs::write(&path, "0\tone two three four five\tshort\n").unwrap();
        let mut vocab = Vocab::new();
        let spec = CorpusSpec {
            level: Level::Sentence,
            span_len: 3,
            ..CorpusSpec::words(2, None)
        };
        let examples = load_corpus(&path, &spec, &mut vocab, true).unwrap();
        assert_eq!(examples[0].tokens.len(), 6);
        // first sentence truncated to 3 tokens, second padded
        assert_eq!(&examples[0].tokens[3..], &[vocab.lookup("short"), PAD, PAD]);
    }

    #[test]
    fn qa_lines_carry_candidates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("qa.tsv");
        std::fs::write(&path, "1\tcat dog\twhere is the dog\tthe dog sat\tthe cat ran\n").unwrap();
        let mut vocab = Vocab::new();
        let spec = CorpusSpec {
            level: Level::Sentence,
            span_len: 4,
            query_len: 5,
            num_candidates: 2,
            ..CorpusSpec::words(2, None)
        };
        let examples = load_corpus(&path, &spec, &mut vocab, true).unwrap();
        let ex = &examples[0];
        assert_eq!(ex.candidates.as_ref().unwrap().len(), 2);
        assert_eq!(ex.tokens.len(), 5 + 2 * 4);
        assert_eq!(ex.label, 1);
    }

    #[test]
    fn pad_to_target() {
        let spec = CorpusSpec::words(60, None);
        let tokens: Vec<u32> = (2..24).collect(); // 22 tokens
        let out = pad_or_window(&tokens, &spec, &mut Rng::new(0), false);
        assert_eq!(out.len(), 60);
        assert_eq!(&out[..22], &tokens[..]);
        assert!(out[22..].iter().all(|&t| t == PAD));
    }

    #[test]
    fn window_offsets_stay_in_range() {
        let spec = CorpusSpec::words(60, Some(50));
        let tokens: Vec<u32> = (100..160).collect();
        let mut rng = Rng::new(1);
        let mut seen_nonzero = false;
        for _ in 0..200 {
            let out = pad_or_window(&tokens, &spec, &mut rng, true);
            assert_eq!(out.len(), 50);
            let offset = (out[0] - 100) as usize;
            assert!(offset <= 10);
            seen_nonzero |= offset > 0;
        }
        assert!(seen_nonzero, "training windows should vary");
        // deterministic at evaluation: first window
        let eval = pad_or_window(&tokens, &spec, &mut rng, false);
        assert_eq!(eval[0], 100);
    }

    #[test]
    fn identity_when_already_target_length() {
        let spec = CorpusSpec::words(8, None);
        let tokens: Vec<u32> = (1..9).collect();
        assert_eq!(pad_or_window(&tokens, &spec, &mut Rng::new(0), true), tokens);
    }

    fn embedding_fixture(vocab: &Vocab, dim: usize) -> Embedding<f64> {
        Embedding {
            table: Matrix::uniform(vocab.len(), dim, -0.25, 0.25, &mut Rng::new(11)),
            trainable: false,
        }
    }

    #[test]
    fn embeddings_full_coverage() {
        let mut vocab = Vocab::new();
        for w in ["alpha", "beta"] {
            vocab.intern(w);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vec.txt");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "<pad> 0 0 0").unwrap();
        writeln!(f, "<unk> 0.1 0.1 0.1").unwrap();
        writeln!(f, "alpha 1 2 3").unwrap();
        writeln!(f, "beta -1 -2 -3").unwrap();
        drop(f);
        let mut emb = embedding_fixture(&vocab, 3);
        let coverage = load_embeddings(&path, &vocab, &mut emb).unwrap();
        assert_eq!(coverage, vocab.len());
        assert_eq!(emb.table.row(vocab.lookup("alpha") as usize), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn embeddings_empty_file_changes_nothing() {
        let vocab = Vocab::new();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vec.txt");
        std::fs::write(&path, "").unwrap();
        let mut emb = embedding_fixture(&vocab, 3);
        let before = emb.table.clone();
        let coverage = load_embeddings(&path, &vocab, &mut emb).unwrap();
        assert_eq!(coverage, 0);
        assert_eq!(emb.table, before);
    }

    #[test]
    fn embeddings_partial_coverage_leaves_rows() {
        let mut vocab = Vocab::new();
        for w in ["a", "b", "c"] {
            vocab.intern(w);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vec.txt");
        std::fs::write(&path, "a 1 1\nc 2 2\n").unwrap();
        let mut emb = embedding_fixture(&vocab, 2);
        let before_b = emb.table.row(vocab.lookup("b") as usize).to_vec();
        let coverage = load_embeddings(&path, &vocab, &mut emb).unwrap();
        assert_eq!(coverage, 2);
        assert_eq!(emb.table.row(vocab.lookup("b") as usize), &before_b[..]);
    }

    #[test]
    fn embeddings_dimension_mismatch_is_error() {
        let vocab = Vocab::new();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vec.txt");
        std::fs::write(&path, "<pad> 1 2 3 4\n").unwrap();
        let mut emb = embedding_fixture(&vocab, 3);
        assert!(load_embeddings(&path, &vocab, &mut emb).is_err());
    }
}

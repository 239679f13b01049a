//! Sentence-level question answering with the bilinear candidate scorer: the
//! reader consumes the query, then jumps across context sentences (one
//! sentence = one jump unit); the final hidden state scores ten candidates.
//!
//!     cargo run --release --example qa_candidates

use lstm_jump::commands::cmd_train;
use lstm_jump::config::RunConfig;
use lstm_jump::jump::{rollout, RolloutMode, RolloutOptions};
use lstm_jump::model::{argmax, qa_score};
use lstm_jump::numeric::{Matrix, Rng};
use std::fmt::Write as _;

/// The answer is whichever candidate word occurs in the context.
fn toy_corpus(n: usize, seed: u64) -> String {
    let markers: Vec<String> = (0..10).map(|i| format!("marker{i}")).collect();
    let fillers = ["the", "cat", "sat", "near", "a", "tree", "and", "watched"];
    let mut rng = Rng::new(seed);
    let mut out = String::new();
    for _ in 0..n {
        let mut order: Vec<usize> = (0..10).collect();
        rng.shuffle(&mut order);
        let slot = rng.below(10) as usize;
        let answer = &markers[order[slot]];
        let where_ = rng.below(5) as usize;
        let candidates: Vec<String> = order.iter().map(|&i| markers[i].clone()).collect();
        let sentences: Vec<String> = (0..5)
            .map(|s| {
                let mut words: Vec<String> = (0..4)
                    .map(|_| fillers[rng.below(8) as usize].to_string())
                    .collect();
                if s == where_ {
                    words[1] = answer.clone();
                    words[3] = answer.clone();
                }
                words.join(" ")
            })
            .collect();
        let _ = writeln!(
            out,
            "{slot}\t{}\twhich marker appears\t{}",
            candidates.join(" "),
            sentences.join("\t")
        );
    }
    out
}

fn main() -> lstm_jump::Result<()> {
    let dir = std::env::temp_dir().join("lstm-jump-qa");
    std::fs::create_dir_all(&dir).expect("temp dir");
    let train_path = dir.join("qa_train.tsv");
    std::fs::write(&train_path, toy_corpus(400, 9)).expect("write corpus");

    let mut cfg = RunConfig::default();
    cfg.set("task", "qa")?;
    cfg.set("level", "sentence")?;
    cfg.seed = 4;
    cfg.hidden = 48;
    cfg.embed = 24;
    cfg.batch = 20;
    cfg.read_len = 1; // one sentence per read
    cfg.max_jump = 3;
    cfg.n_jumps = 4;
    cfg.span_len = 4;
    cfg.query_len = 3;
    cfg.candidates = 10;
    cfg.target_len = 5;
    cfg.max_epochs = 40;
    cfg.eval_every = 0;
    cfg.stop_val_acc = 0.9;
    cfg.train_path = train_path.display().to_string();
    cfg.checkpoint = String::new();

    println!("training the bilinear QA scorer on candidate matching ...");
    let mut sink = std::io::sink();
    let outcome = cmd_train(&cfg, false, &mut sink)?;
    println!("train-set accuracy {:.3} (chance is 0.100)\n", outcome.best_val);

    // score one fresh example by hand
    let model = outcome.model;
    let text = toy_corpus(1, 777);
    let mut vocab = lstm_jump::data::Vocab::new();
    // rebuild the training vocabulary, then encode the probe line with it
    lstm_jump::data::load_corpus(&train_path, &cfg.corpus_spec(), &mut vocab, true)?;
    let probe_path = dir.join("qa_probe.tsv");
    std::fs::write(&probe_path, &text).expect("write probe");
    let probe = lstm_jump::data::load_corpus(&probe_path, &cfg.corpus_spec(), &mut vocab, false)?
        .remove(0);

    let opts = RolloutOptions {
        mode: RolloutMode::Sample,
        span: cfg.span_len,
        prefix: cfg.query_len,
        ..Default::default()
    };
    let out = rollout(&model, &probe.tokens, &cfg.jump_config(), &opts, &mut Rng::new(1))?;
    let cand_tokens = probe.candidates.as_ref().unwrap();
    let mut rows = Vec::new();
    for &c in cand_tokens {
        rows.extend_from_slice(model.embedding.lookup(c)?);
    }
    let candidates = Matrix::from_vec(cand_tokens.len(), model.embedding.table.cols(), rows)?;
    let scores = qa_score(&model.qa, &candidates, out.state.top_h())?;
    println!(
        "probe: read {} of 5 sentences ({:?}), predicted candidate {} (answer {}), p = {:.2}",
        out.trace.tokens_read,
        out.trace.read_positions,
        argmax(&scores),
        probe.label,
        scores[argmax(&scores)],
    );
    Ok(())
}

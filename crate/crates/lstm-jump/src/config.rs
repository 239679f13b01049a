//! Flat `key = value` run configuration, shared by every command and embedded
//! verbatim in checkpoints.

use crate::data::{CorpusSpec, Level};
use crate::error::{Error, Result};
use crate::jump::JumpConfig;
use crate::model::ModelDims;
use crate::train::{ReaderSpec, TrainConfig};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Synthetic,
    Classify,
    Qa,
}

impl Task {
    fn as_str(&self) -> &'static str {
        match self {
            Task::Synthetic => "synthetic",
            Task::Classify => "classify",
            Task::Qa => "qa",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Sample,
    Greedy,
}

/// Everything a run needs. Unset paths are empty strings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub seed: u64,
    pub threads: usize,

    // model
    pub hidden: usize,
    pub embed: usize,
    pub layers: usize,
    pub vocab: usize,
    pub classes: usize,
    pub train_embedding: bool,

    // jumping
    pub jump: bool,
    pub read_len: usize,
    pub max_jump: usize,
    pub n_jumps: usize,

    // optimization
    pub batch: usize,
    pub lr: f64,
    pub clip: f64,
    pub lstm_dropout: f64,
    pub embed_dropout: f64,
    pub entropy_weight: f64,
    pub joint_flow: bool,

    // schedule
    pub curriculum: Vec<usize>,
    pub advance_threshold: f64,
    pub advance_window: usize,
    pub stop_val_acc: f64,
    pub max_epochs: usize,
    pub eval_every: usize,

    // data
    pub n_train: usize,
    pub n_valid: usize,
    pub n_test: usize,
    pub level: Level,
    pub target_len: usize,
    pub window_len: usize,
    pub span_len: usize,
    pub query_len: usize,
    pub candidates: usize,
    pub train_path: String,
    pub valid_path: String,
    pub test_path: String,
    pub embeddings_path: String,
    pub checkpoint: String,
    pub eval_mode: EvalMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            task: Task::Synthetic,
            seed: 1,
            threads: 1,
            hidden: 128,
            embed: 32,
            layers: 1,
            vocab: 100,
            classes: 100,
            train_embedding: true,
            jump: true,
            read_len: 1,
            max_jump: 100,
            n_jumps: 5,
            batch: 100,
            lr: 0.001,
            clip: 1.0,
            lstm_dropout: 0.0,
            embed_dropout: 0.0,
            entropy_weight: 0.0,
            joint_flow: false,
            curriculum: vec![10, 20, 30, 40, 50, 60, 70, 80, 90, 100],
            advance_threshold: 0.9,
            advance_window: 50,
            stop_val_acc: 0.98,
            max_epochs: 40,
            eval_every: 500,
            n_train: 100_000,
            n_valid: 10_000,
            n_test: 10_000,
            level: Level::Word,
            target_len: 100,
            window_len: 0,
            span_len: 1,
            query_len: 0,
            candidates: 0,
            train_path: String::new(),
            valid_path: String::new(),
            test_path: String::new(),
            embeddings_path: String::new(),
            checkpoint: String::new(),
            eval_mode: EvalMode::Sample,
        }
    }
}

fn parse_bool(v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("expected bool, got {v:?}"))),
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_str(&text)
    }

    pub fn from_str(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`, got {raw:?}", idx + 1))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", idx + 1)))?;
        }
        Ok(cfg)
    }

    /// Apply one `key = value` assignment (also the `--override` mechanism).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let int = |v: &str| -> Result<usize> {
            v.parse()
                .map_err(|e| Error::Config(format!("{key}: bad integer {v:?}: {e}")))
        };
        let float = |v: &str| -> Result<f64> {
            v.parse()
                .map_err(|e| Error::Config(format!("{key}: bad number {v:?}: {e}")))
        };
        match key {
            "task" => {
                self.task = match value {
                    "synthetic" => Task::Synthetic,
                    "classify" => Task::Classify,
                    "qa" => Task::Qa,
                    _ => return Err(Error::Config(format!("unknown task {value:?}"))),
                }
            }
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|e| Error::Config(format!("seed: {e}")))?
            }
            "threads" => self.threads = int(value)?.max(1),
            "hidden" => self.hidden = int(value)?,
            "embed" => self.embed = int(value)?,
            "layers" => self.layers = int(value)?,
            "vocab" => self.vocab = int(value)?,
            "classes" => self.classes = int(value)?,
            "train_embedding" => self.train_embedding = parse_bool(value)?,
            "jump" => self.jump = parse_bool(value)?,
            "read_len" => self.read_len = int(value)?,
            "max_jump" => self.max_jump = int(value)?,
            "n_jumps" => self.n_jumps = int(value)?,
            "batch" => self.batch = int(value)?,
            "lr" => self.lr = float(value)?,
            "clip" => self.clip = float(value)?,
            "lstm_dropout" => self.lstm_dropout = float(value)?,
            "embed_dropout" => self.embed_dropout = float(value)?,
            "entropy_weight" => self.entropy_weight = float(value)?,
            "joint_flow" => self.joint_flow = parse_bool(value)?,
            "curriculum" => {
                self.curriculum = value
                    .split(',')
                    .map(|v| int(v.trim()))
                    .collect::<Result<Vec<_>>>()?;
                if self.curriculum.is_empty()
                    || self.curriculum.windows(2).any(|w| w[0] >= w[1])
                {
                    return Err(Error::Config(
                        "curriculum must be a strictly increasing length list".into(),
                    ));
                }
            }
            "advance_threshold" => self.advance_threshold = float(value)?,
            "advance_window" => self.advance_window = int(value)?,
            "stop_val_acc" => self.stop_val_acc = float(value)?,
            "max_epochs" => self.max_epochs = int(value)?,
            "eval_every" => self.eval_every = int(value)?,
            "n_train" => self.n_train = int(value)?,
            "n_valid" => self.n_valid = int(value)?,
            "n_test" => self.n_test = int(value)?,
            "level" => {
                self.level = match value {
                    "word" => Level::Word,
                    "char" | "character" => Level::Character,
                    "sentence" => Level::Sentence,
                    _ => return Err(Error::Config(format!("unknown level {value:?}"))),
                }
            }
            "target_len" => self.target_len = int(value)?,
            "window_len" => self.window_len = int(value)?,
            "span_len" => self.span_len = int(value)?,
            "query_len" => self.query_len = int(value)?,
            "candidates" => self.candidates = int(value)?,
            "train_path" => self.train_path = value.to_string(),
            "valid_path" => self.valid_path = value.to_string(),
            "test_path" => self.test_path = value.to_string(),
            "embeddings_path" => self.embeddings_path = value.to_string(),
            "checkpoint" => self.checkpoint = value.to_string(),
            "eval_mode" => {
                self.eval_mode = match value {
                    "sample" => EvalMode::Sample,
                    "greedy" => EvalMode::Greedy,
                    _ => return Err(Error::Config(format!("unknown eval_mode {value:?}"))),
                }
            }
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Canonical text form; `from_str(to_string())` reproduces the config.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let curriculum: Vec<String> = self.curriculum.iter().map(|v| v.to_string()).collect();
        let level = match self.level {
            Level::Word => "word",
            Level::Character => "char",
            Level::Sentence => "sentence",
        };
        let eval_mode = match self.eval_mode {
            EvalMode::Sample => "sample",
            EvalMode::Greedy => "greedy",
        };
        let _ = writeln!(s, "task = {}", self.task.as_str());
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "threads = {}", self.threads);
        let _ = writeln!(s, "hidden = {}", self.hidden);
        let _ = writeln!(s, "embed = {}", self.embed);
        let _ = writeln!(s, "layers = {}", self.layers);
        let _ = writeln!(s, "vocab = {}", self.vocab);
        let _ = writeln!(s, "classes = {}", self.classes);
        let _ = writeln!(s, "train_embedding = {}", self.train_embedding);
        let _ = writeln!(s, "jump = {}", self.jump);
        let _ = writeln!(s, "read_len = {}", self.read_len);
        let _ = writeln!(s, "max_jump = {}", self.max_jump);
        let _ = writeln!(s, "n_jumps = {}", self.n_jumps);
        let _ = writeln!(s, "batch = {}", self.batch);
        let _ = writeln!(s, "lr = {}", self.lr);
        let _ = writeln!(s, "clip = {}", self.clip);
        let _ = writeln!(s, "lstm_dropout = {}", self.lstm_dropout);
        let _ = writeln!(s, "embed_dropout = {}", self.embed_dropout);
        let _ = writeln!(s, "entropy_weight = {}", self.entropy_weight);
        let _ = writeln!(s, "joint_flow = {}", self.joint_flow);
        let _ = writeln!(s, "curriculum = {}", curriculum.join(","));
        let _ = writeln!(s, "advance_threshold = {}", self.advance_threshold);
        let _ = writeln!(s, "advance_window = {}", self.advance_window);
        let _ = writeln!(s, "stop_val_acc = {}", self.stop_val_acc);
        let _ = writeln!(s, "max_epochs = {}", self.max_epochs);
        let _ = writeln!(s, "eval_every = {}", self.eval_every);
        let _ = writeln!(s, "n_train = {}", self.n_train);
        let _ = writeln!(s, "n_valid = {}", self.n_valid);
        let _ = writeln!(s, "n_test = {}", self.n_test);
        let _ = writeln!(s, "level = {level}");
        let _ = writeln!(s, "target_len = {}", self.target_len);
        let _ = writeln!(s, "window_len = {}", self.window_len);
        let _ = writeln!(s, "span_len = {}", self.span_len);
        let _ = writeln!(s, "query_len = {}", self.query_len);
        let _ = writeln!(s, "candidates = {}", self.candidates);
        let _ = writeln!(s, "train_path = {}", self.train_path);
        let _ = writeln!(s, "valid_path = {}", self.valid_path);
        let _ = writeln!(s, "test_path = {}", self.test_path);
        let _ = writeln!(s, "embeddings_path = {}", self.embeddings_path);
        let _ = writeln!(s, "checkpoint = {}", self.checkpoint);
        let _ = writeln!(s, "eval_mode = {eval_mode}");
        s
    }

    pub fn jump_config(&self) -> JumpConfig {
        JumpConfig {
            n_jumps: self.n_jumps,
            max_jump: self.max_jump,
            read_len: self.read_len,
        }
    }

    pub fn reader_spec(&self) -> ReaderSpec {
        match self.task {
            Task::Synthetic | Task::Classify if self.level != Level::Sentence => ReaderSpec {
                span: 1,
                prefix: 0,
                qa: false,
            },
            Task::Classify => ReaderSpec {
                span: self.span_len,
                prefix: 0,
                qa: false,
            },
            Task::Synthetic => ReaderSpec::default(),
            Task::Qa => ReaderSpec {
                span: self.span_len,
                prefix: self.query_len,
                qa: true,
            },
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch,
            lr: self.lr,
            clip_threshold: self.clip,
            lstm_dropout: self.lstm_dropout,
            embed_dropout: self.embed_dropout,
            jump: self.jump_config(),
            jump_enabled: self.jump,
            entropy_weight: self.entropy_weight,
            joint_flow: self.joint_flow,
            threads: self.threads,
            reader: self.reader_spec(),
        }
    }

    pub fn corpus_spec(&self) -> CorpusSpec {
        CorpusSpec {
            level: self.level,
            target_len: self.target_len,
            window_len: if self.window_len == 0 {
                None
            } else {
                Some(self.window_len)
            },
            span_len: self.span_len,
            query_len: self.query_len,
            num_candidates: if self.task == Task::Qa {
                self.candidates
            } else {
                0
            },
        }
    }

    /// Model sizes once the data has fixed `vocab` and `classes`.
    pub fn model_dims(&self, vocab: usize, classes: usize) -> ModelDims {
        ModelDims {
            vocab,
            embed: self.embed,
            hidden: self.hidden,
            layers: self.layers,
            classes,
            max_jump: self.max_jump,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 {
            return Err(Error::Config("batch must be >= 1".into()));
        }
        for (name, rate) in [
            ("lstm_dropout", self.lstm_dropout),
            ("embed_dropout", self.embed_dropout),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::Config(format!("{name} must be in [0, 1]")));
            }
        }
        if self.layers == 0 || self.hidden == 0 || self.embed == 0 {
            return Err(Error::Config("layers, hidden and embed must be >= 1".into()));
        }
        self.jump_config().validate()?;
        match self.task {
            Task::Synthetic => {}
            Task::Classify | Task::Qa => {
                if self.train_path.is_empty() {
                    return Err(Error::Config("train_path required for corpus tasks".into()));
                }
                if self.task == Task::Qa && self.candidates == 0 {
                    return Err(Error::Config("qa task needs candidates > 0".into()));
                }
            }
        }
        Ok(())
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        PathBuf::from(&self.checkpoint)
    }
}

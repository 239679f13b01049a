//! Command implementations behind the CLI: dataset generation, training with
//! curriculum and early stopping, evaluation with (R, N) overrides, and trace
//! inspection. Machine-readable records go to the supplied writer (stdout in
//! the CLI); human-readable progress goes to stderr.

use crate::checkpoint::{build_checkpoint, restore, Checkpoint, TrainState};
use crate::config::{EvalMode, RunConfig, Task};
use crate::data::{
    gen_synthetic, load_corpus, load_embeddings, pad_or_window, read_synthetic, write_synthetic,
    Example, SyntheticSpec, Vocab,
};
use crate::error::{Error, Result};
use crate::jump::{rollout, read_all, RolloutMode, RolloutOptions, trace_line};
use crate::model::ModelParams;
use crate::numeric::Rng;
use crate::train::{
    evaluate, train_step, AdamState, CurriculumSchedule, EvalReport, EvalSettings, TrainConfig,
};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

// Substream tags; every consumer of randomness gets its own lane.
const STREAM_INIT: u64 = 0;
const STREAM_DATA: u64 = 1;
const STREAM_SHUFFLE: u64 = 2;
const STREAM_EPISODE: u64 = 3;
const STREAM_EVAL: u64 = 4;
const STREAM_WINDOW: u64 = 5;
const STREAM_GEN: u64 = 6;
const VALID_DATA_TAG: u64 = u64::MAX;

/// Generate synthetic train/valid/test files at the configured paths.
pub fn cmd_gen(config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    if config.task != Task::Synthetic {
        return Err(Error::Config("gen only applies to the synthetic task".into()));
    }
    let spec = SyntheticSpec::new(config.target_len);
    spec.validate()?;
    let root = Rng::new(config.seed).substream(STREAM_GEN);
    let roles: [(&str, &str, usize); 3] = [
        ("train", &config.train_path, config.n_train),
        ("valid", &config.valid_path, config.n_valid),
        ("test", &config.test_path, config.n_test),
    ];
    for (i, (role, path, n)) in roles.iter().enumerate() {
        if path.is_empty() {
            return Err(Error::Config(format!("{role}_path not set")));
        }
        let mut rng = root.substream(i as u64);
        let examples = gen_synthetic(&spec, *n, &mut rng)?;
        let header = format!(
            "synthetic role={role} seed={} t={} n={n}",
            config.seed, config.target_len
        );
        let p = PathBuf::from(path);
        if let Some(parent) = p.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)
                    .map_err(|e| Error::io(parent.display().to_string(), e))?;
            }
        }
        write_synthetic(&p, &examples, &header)?;
        writeln!(out, "gen={role} path={path} n={n} t={} seed={}", config.target_len, config.seed)
            .map_err(|e| Error::io("stdout", e))?;
    }
    Ok(())
}

/// Corpus data (token sequences fixed up per epoch by windowing).
struct CorpusData {
    train: Vec<Example>,
    valid: Vec<Example>,
    vocab: Vocab,
    classes: usize,
}

fn load_corpus_data(config: &RunConfig) -> Result<CorpusData> {
    let spec = config.corpus_spec();
    let mut vocab = match config.level {
        crate::data::Level::Character => Vocab::for_characters(),
        _ => Vocab::new(),
    };
    let train = load_corpus(Path::new(&config.train_path), &spec, &mut vocab, true)?;
    let valid = if config.valid_path.is_empty() {
        Vec::new()
    } else {
        load_corpus(Path::new(&config.valid_path), &spec, &mut vocab, false)?
    };
    let classes = if config.task == Task::Qa {
        config.candidates
    } else {
        train
            .iter()
            .chain(valid.iter())
            .map(|e| e.label + 1)
            .max()
            .unwrap_or(2)
    };
    Ok(CorpusData {
        train,
        valid,
        vocab,
        classes,
    })
}

/// Fixed-shape episode tokens for one epoch (windowing is a train-time
/// augmentation; evaluation always takes the deterministic first window).
fn shape_example(
    ex: &Example,
    config: &RunConfig,
    rng: &mut Rng,
    training: bool,
) -> Example {
    match config.task {
        Task::Synthetic => ex.clone(),
        // sentence spans are pre-shaped by the loader; token windowing would
        // break span alignment
        Task::Classify if config.level != crate::data::Level::Sentence => {
            let spec = config.corpus_spec();
            Example {
                tokens: pad_or_window(&ex.tokens, &spec, rng, training),
                label: ex.label,
                candidates: None,
            }
        }
        Task::Classify | Task::Qa => ex.clone(),
    }
}

/// What `cmd_train` hands back besides the record stream.
pub struct TrainOutcome {
    pub model: ModelParams<f32>,
    pub config: RunConfig,
    pub best_val: f64,
    pub steps: u64,
    pub epochs: usize,
    pub wall_time: f64,
    pub stage_len: usize,
}

fn synthetic_stage_data(root: &Rng, stage_len: usize, n: usize, tag: u64) -> Result<Vec<Example>> {
    let spec = SyntheticSpec::new(stage_len);
    let mut rng = root.substream2(STREAM_DATA, tag);
    gen_synthetic(&spec, n, &mut rng)
}

/// Train per config (curriculum when synthetic), tracking the best-validation
/// model; writes it to the configured checkpoint path.
pub fn cmd_train(config: &RunConfig, resume: bool, out: &mut dyn Write) -> Result<TrainOutcome> {
    config.validate()?;
    let started = Instant::now();
    let root = Rng::new(config.seed);
    let mut train_cfg: TrainConfig = config.train_config();

    // data
    let corpus = match config.task {
        Task::Synthetic => None,
        _ => Some(load_corpus_data(config)?),
    };
    let (vocab_size, classes) = match (&corpus, config.task) {
        (Some(c), _) => (c.vocab.len(), c.classes),
        (None, _) => (config.vocab, config.classes),
    };

    // model, optimizer, progress
    let (mut model, mut adam, progress) = if resume && !config.checkpoint.is_empty()
        && Path::new(&config.checkpoint).exists()
    {
        let ckpt = Checkpoint::load(Path::new(&config.checkpoint))?;
        let (_, model, adam, state) = restore(&ckpt)?;
        let adam = adam.unwrap_or_else(|| AdamState::new(&model, config.lr));
        eprintln!(
            "resuming from {} at step {} (stage {}, epoch {})",
            config.checkpoint, state.step, state.stage, state.epoch
        );
        (model, adam, state)
    } else {
        let dims = config.model_dims(vocab_size, classes);
        let mut init_rng = root.substream(STREAM_INIT);
        let mut model = ModelParams::<f32>::init(&dims, &mut init_rng);
        model.embedding.trainable = config.train_embedding;
        if !config.embeddings_path.is_empty() {
            match &corpus {
                Some(c) => {
                    let n = load_embeddings(
                        Path::new(&config.embeddings_path),
                        &c.vocab,
                        &mut model.embedding,
                    )?;
                    eprintln!("loaded embeddings for {n}/{} vocab entries", c.vocab.len());
                }
                None => eprintln!("embeddings_path ignored for the synthetic task"),
            }
        }
        let adam = AdamState::new(&model, config.lr);
        (model, adam, TrainState::default())
    };

    // curriculum (synthetic) and stage data
    let mut curriculum = match config.task {
        Task::Synthetic => {
            let mut c = CurriculumSchedule::new(
                config.curriculum.clone(),
                config.advance_threshold,
                config.advance_window,
            );
            c.stage = progress.stage.min(config.curriculum.len() - 1);
            Some(c)
        }
        _ => None,
    };
    let stage_len = |c: &Option<CurriculumSchedule>| -> usize {
        c.as_ref().map(|c| c.current_len()).unwrap_or(config.target_len)
    };
    let mut train_data: Vec<Example> = match &corpus {
        Some(c) => c.train.clone(),
        None => synthetic_stage_data(&root, stage_len(&curriculum), config.n_train,
                                     curriculum.as_ref().map(|c| c.stage as u64).unwrap_or(0))?,
    };
    if train_data.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    let valid_data: Vec<Example> = match &corpus {
        Some(c) => {
            let source = if c.valid.is_empty() { &c.train } else { &c.valid };
            let mut rng = root.substream2(STREAM_WINDOW, VALID_DATA_TAG);
            source
                .iter()
                .map(|e| shape_example(e, config, &mut rng, false))
                .collect()
        }
        None => {
            let t = *config.curriculum.last().unwrap_or(&config.target_len);
            let spec = SyntheticSpec::new(t);
            let mut rng = root.substream2(STREAM_DATA, VALID_DATA_TAG);
            gen_synthetic(&spec, config.n_valid, &mut rng)?
        }
    };

    let eval_settings = EvalSettings {
        jump: config.jump_config(),
        jump_enabled: config.jump,
        mode: match config.eval_mode {
            EvalMode::Sample => RolloutMode::Sample,
            EvalMode::Greedy => RolloutMode::Greedy,
        },
        reader: config.reader_spec(),
        threads: config.threads,
    };

    let episode_root = root.substream(STREAM_EPISODE);
    let mut step: u64 = progress.step;
    let mut eval_count: u64 = 0;
    let mut best: Option<(f64, ModelParams<f32>, AdamState<f32>, TrainState)> = None;
    let mut stop = false;

    // running sums between validation records
    let mut sums = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0usize); // j1, j2, mse, total, acc, tokens, batches

    let mut epoch = progress.epoch;
    while epoch < config.max_epochs && !stop {
        let mut order: Vec<usize> = (0..train_data.len()).collect();
        root.substream2(STREAM_SHUFFLE, epoch as u64).shuffle(&mut order);
        let mut advanced = false;
        let mut window_rng = root.substream2(STREAM_WINDOW, epoch as u64);
        for chunk in order.chunks(config.batch) {
            let batch: Vec<Example> = chunk
                .iter()
                .map(|&i| shape_example(&train_data[i], config, &mut window_rng, true))
                .collect();
            let metrics = train_step(&mut model, &mut adam, &batch, &train_cfg, &episode_root, step)?;
            step += 1;
            sums.0 += metrics.loss.j1 as f64;
            sums.1 += metrics.loss.j2_surrogate as f64;
            sums.2 += metrics.loss.baseline_mse as f64;
            sums.3 += metrics.loss.total as f64;
            sums.4 += metrics.accuracy;
            sums.5 += metrics.avg_tokens;
            sums.6 += 1;
            if let Some(c) = curriculum.as_mut() {
                if c.observe_batch(metrics.accuracy) {
                    eprintln!(
                        "stage advance: sequence length {} at step {step} ({:.1}s)",
                        c.current_len(),
                        started.elapsed().as_secs_f64()
                    );
                    train_data = synthetic_stage_data(
                        &root,
                        c.current_len(),
                        config.n_train,
                        c.stage as u64,
                    )?;
                    // exploration pressure is for discovering jump targets on
                    // the way up; the final stage trains the pure objective
                    if c.at_final_stage() {
                        train_cfg.entropy_weight = 0.0;
                    }
                    advanced = true;
                }
            }
            let due = config.eval_every > 0 && step % config.eval_every as u64 == 0;
            if due {
                let val = run_validation(
                    &model, &adam, &valid_data, &eval_settings, &root, &mut eval_count,
                    step, epoch, stage_len(&curriculum), &mut sums, &mut best, out, started,
                    curriculum.as_ref(),
                )?;
                if val > config.stop_val_acc {
                    stop = true;
                }
            }
            if stop || advanced {
                break;
            }
        }
        epoch += 1;
        if !stop && !advanced {
            let val = run_validation(
                &model, &adam, &valid_data, &eval_settings, &root, &mut eval_count, step,
                epoch, stage_len(&curriculum), &mut sums, &mut best, out, started,
                curriculum.as_ref(),
            )?;
            if val > config.stop_val_acc {
                stop = true;
            }
        }
    }
    if best.is_none() {
        run_validation(
            &model, &adam, &valid_data, &eval_settings, &root, &mut eval_count, step,
            epoch, stage_len(&curriculum), &mut sums, &mut best, out, started,
            curriculum.as_ref(),
        )?;
    }
    let (best_val, best_model, best_adam, best_state) = best.expect("at least one validation");
    if !config.checkpoint.is_empty() {
        let ckpt = build_checkpoint(config, &best_model, Some(&best_adam), &best_state);
        ckpt.save(Path::new(&config.checkpoint))?;
        eprintln!("wrote checkpoint {}", config.checkpoint);
    }
    let wall = started.elapsed().as_secs_f64();
    eprintln!(
        "training done: best val accuracy {best_val:.4} after {step} steps, {wall:.1}s"
    );
    Ok(TrainOutcome {
        model: best_model,
        config: config.clone(),
        best_val,
        steps: step,
        epochs: epoch,
        wall_time: wall,
        stage_len: stage_len(&curriculum),
    })
}

#[allow(clippy::too_many_arguments)]
fn run_validation(
    model: &ModelParams<f32>,
    adam: &AdamState<f32>,
    valid: &[Example],
    eval_settings: &EvalSettings,
    root: &Rng,
    eval_count: &mut u64,
    step: u64,
    epoch: usize,
    stage_len: usize,
    sums: &mut (f64, f64, f64, f64, f64, f64, usize),
    best: &mut Option<(f64, ModelParams<f32>, AdamState<f32>, TrainState)>,
    out: &mut dyn Write,
    started: Instant,
    curriculum: Option<&CurriculumSchedule>,
) -> Result<f64> {
    let rng = root.substream2(STREAM_EVAL, *eval_count);
    *eval_count += 1;
    let report = evaluate(model, valid, eval_settings, &rng)?;
    let batches = sums.6.max(1) as f64;
    writeln!(
        out,
        "step={step} stage_len={stage_len} epoch={epoch} train_acc={:.4} val_acc={:.4} \
         avg_tokens_read={:.3} j1={:.4} j2={:.4} baseline_mse={:.4} total={:.4} wall_time={:.3}",
        sums.4 / batches,
        report.accuracy,
        report.avg_tokens_read,
        sums.0 / batches,
        sums.1 / batches,
        sums.2 / batches,
        sums.3 / batches,
        started.elapsed().as_secs_f64(),
    )
    .map_err(|e| Error::io("metrics", e))?;
    *sums = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0);
    let val = report.accuracy;
    let improved = best.as_ref().map_or(true, |(b, _, _, _)| val > *b);
    if improved {
        *best = Some((
            val,
            model.clone(),
            adam.clone(),
            TrainState {
                step,
                stage: curriculum.map(|c| c.stage).unwrap_or(0),
                epoch,
                best_val: val,
            },
        ));
    }
    Ok(val)
}

/// Parse a `key=value` record line.
pub fn parse_record(line: &str) -> std::collections::HashMap<String, String> {
    line.split_whitespace()
        .filter_map(|kv| kv.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn load_eval_data(config: &RunConfig, data_path: Option<&Path>) -> Result<Vec<Example>> {
    match config.task {
        Task::Synthetic => {
            let path = data_path
                .map(|p| p.to_path_buf())
                .unwrap_or_else(|| PathBuf::from(&config.test_path));
            if path.as_os_str().is_empty() {
                return Err(Error::Config("no test data path given".into()));
            }
            read_synthetic(&path)
        }
        _ => {
            let spec = config.corpus_spec();
            let mut vocab = match config.level {
                crate::data::Level::Character => Vocab::for_characters(),
                _ => Vocab::new(),
            };
            // vocabulary is defined by the training corpus
            load_corpus(Path::new(&config.train_path), &spec, &mut vocab, true)?;
            let path = data_path
                .map(|p| p.to_path_buf())
                .unwrap_or_else(|| PathBuf::from(&config.test_path));
            if path.as_os_str().is_empty() {
                return Err(Error::Config("no test data path given".into()));
            }
            let raw = load_corpus(&path, &spec, &mut vocab, false)?;
            let mut rng = Rng::new(0);
            Ok(raw
                .iter()
                .map(|e| shape_example(e, config, &mut rng, false))
                .collect())
        }
    }
}

/// Evaluate a checkpoint, honoring `R`/`N` overrides already applied to
/// `config`. An optional baseline record (a previous eval line) yields a
/// speedup ratio.
pub fn cmd_eval(
    config: &RunConfig,
    checkpoint_path: Option<&Path>,
    data_path: Option<&Path>,
    baseline_report: Option<&Path>,
    out: &mut dyn Write,
) -> Result<EvalReport> {
    let ckpt_path = checkpoint_path
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| config.checkpoint_path());
    let ckpt = Checkpoint::load(&ckpt_path)?;
    let (_, model, _, _) = restore(&ckpt)?;
    let data = load_eval_data(config, data_path)?;
    let settings = EvalSettings {
        jump: config.jump_config(),
        jump_enabled: config.jump,
        mode: match config.eval_mode {
            EvalMode::Sample => RolloutMode::Sample,
            EvalMode::Greedy => RolloutMode::Greedy,
        },
        reader: config.reader_spec(),
        threads: config.threads,
    };
    let rng = Rng::new(config.seed).substream(STREAM_EVAL);
    let report = evaluate(&model, &data, &settings, &rng)?;
    let mode = match config.eval_mode {
        EvalMode::Sample => "sample",
        EvalMode::Greedy => "greedy",
    };
    let mut line = format!(
        "accuracy={:.4} avg_tokens_read={:.3} wall_time={:.3} n={} zero_jump={} max_jumps={} \
         end_of_sequence={} read_len={} n_jumps={} mode={mode}",
        report.accuracy,
        report.avg_tokens_read,
        report.wall_time,
        report.n,
        report.zero_jump,
        report.max_jumps,
        report.end_of_sequence,
        config.read_len,
        config.n_jumps,
    );
    if let Some(base) = baseline_report {
        let text = std::fs::read_to_string(base)
            .map_err(|e| Error::io(base.display().to_string(), e))?;
        let record = text
            .lines()
            .rev()
            .map(parse_record)
            .find(|r| r.contains_key("wall_time"))
            .ok_or_else(|| {
                Error::Config(format!("no eval record in {}", base.display()))
            })?;
        if let Some(bt) = record.get("wall_time").and_then(|v| v.parse::<f64>().ok()) {
            line.push_str(&format!(" speedup={:.2}", bt / report.wall_time.max(1e-9)));
        }
        if let Some(btok) = record
            .get("avg_tokens_read")
            .and_then(|v| v.parse::<f64>().ok())
        {
            line.push_str(&format!(
                " tokens_reduction={:.2}",
                btok / report.avg_tokens_read.max(1e-9)
            ));
        }
    }
    writeln!(out, "{line}").map_err(|e| Error::io("stdout", e))?;
    eprintln!(
        "eval: accuracy {:.4}, avg tokens read {:.2}, {:.3}s over {} examples",
        report.accuracy, report.avg_tokens_read, report.wall_time, report.n
    );
    Ok(report)
}

/// Dump reading traces for the first `n` examples of the dataset.
pub fn cmd_inspect_trace(
    config: &RunConfig,
    checkpoint_path: Option<&Path>,
    data_path: Option<&Path>,
    n: usize,
    out: &mut dyn Write,
) -> Result<()> {
    let ckpt_path = checkpoint_path
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| config.checkpoint_path());
    let ckpt = Checkpoint::load(&ckpt_path)?;
    let (_, model, _, _) = restore(&ckpt)?;
    let data = load_eval_data(config, data_path)?;
    let reader = config.reader_spec();
    let root = Rng::new(config.seed).substream(STREAM_EVAL);
    for (i, ex) in data.iter().take(n).enumerate() {
        let opts = RolloutOptions {
            mode: match config.eval_mode {
                EvalMode::Sample => RolloutMode::Sample,
                EvalMode::Greedy => RolloutMode::Greedy,
            },
            record: false,
            embed_dropout: 0.0,
            lstm_dropout: 0.0,
            span: reader.span,
            prefix: reader.prefix,
        };
        let mut rng = root.substream(i as u64);
        let output = if config.jump {
            rollout(&model, &ex.tokens, &config.jump_config(), &opts, &mut rng)?
        } else {
            read_all(&model, &ex.tokens, &opts, &mut rng)?
        };
        writeln!(out, "{}", trace_line(i, &output.trace))
            .map_err(|e| Error::io("stdout", e))?;
    }
    Ok(())
}

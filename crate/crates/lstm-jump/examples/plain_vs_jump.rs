//! Tokens-read comparison between the plain sequential reader and the
//! jumping reader on the same inputs: the plain LSTM always consumes every
//! token, the jumping model a small bounded number.
//!
//!     cargo run --release --example plain_vs_jump

use lstm_jump::data::{gen_synthetic, SyntheticSpec};
use lstm_jump::jump::{JumpConfig, RolloutMode};
use lstm_jump::model::{ModelDims, ModelParams};
use lstm_jump::numeric::Rng;
use lstm_jump::train::{evaluate, EvalSettings, ReaderSpec};
use std::time::Instant;

fn main() -> lstm_jump::Result<()> {
    let dims = ModelDims {
        vocab: 100,
        embed: 32,
        hidden: 128,
        layers: 1,
        classes: 100,
        max_jump: 100,
    };
    let model = ModelParams::<f32>::init(&dims, &mut Rng::new(3));
    let jump = JumpConfig {
        n_jumps: 5,
        max_jump: 100,
        read_len: 1,
    };

    println!("{:>6} {:>14} {:>14} {:>9}", "T", "plain tokens", "jump tokens", "speedup");
    for t in [10usize, 100, 1000] {
        let data = gen_synthetic(&SyntheticSpec::new(t), 1_000, &mut Rng::new(t as u64))?;
        let plain = EvalSettings {
            jump,
            jump_enabled: false,
            mode: RolloutMode::Sample,
            reader: ReaderSpec::default(),
            threads: 1,
        };
        let t0 = Instant::now();
        let plain_report = evaluate(&model, &data, &plain, &Rng::new(1))?;
        let plain_time = t0.elapsed().as_secs_f64();

        let jumping = EvalSettings {
            jump_enabled: true,
            ..plain
        };
        let t1 = Instant::now();
        let jump_report = evaluate(&model, &data, &jumping, &Rng::new(1))?;
        let jump_time = t1.elapsed().as_secs_f64();

        println!(
            "{t:>6} {:>14.1} {:>14.2} {:>8.1}x",
            plain_report.avg_tokens_read,
            jump_report.avg_tokens_read,
            plain_time / jump_time.max(1e-9),
        );
    }
    println!("(untrained weights; training sharpens the jump policy rather than the budget)");
    Ok(())
}

//! Reading traces: which positions were read, which jumps were taken, and
//! why each episode stopped. Shows the three termination conditions with
//! forced policies, then sampled behavior.
//!
//!     cargo run --release --example inspect_reading

use lstm_jump::data::{gen_synthetic, SyntheticSpec};
use lstm_jump::jump::{rollout, trace_line, JumpConfig, RolloutMode, RolloutOptions};
use lstm_jump::model::{ModelDims, ModelParams};
use lstm_jump::numeric::Rng;

fn main() -> lstm_jump::Result<()> {
    let dims = ModelDims {
        vocab: 100,
        embed: 16,
        hidden: 32,
        layers: 1,
        classes: 100,
        max_jump: 5,
    };
    let model = ModelParams::<f32>::init(&dims, &mut Rng::new(11));
    let cfg = JumpConfig {
        n_jumps: 10,
        max_jump: 5,
        read_len: 2,
    };
    let data = gen_synthetic(&SyntheticSpec::new(30), 4, &mut Rng::new(2))?;

    println!("id\ttermination\tread\tpositions\tjumps");
    println!("-- forced stop (kappa = 0 after the first segment)");
    for (i, ex) in data.iter().enumerate() {
        let opts = RolloutOptions {
            mode: RolloutMode::Fixed(0),
            ..Default::default()
        };
        let out = rollout(&model, &ex.tokens, &cfg, &opts, &mut Rng::new(i as u64))?;
        println!("{}", trace_line(i, &out.trace));
    }
    println!("-- forced contiguous reading (kappa = 1) exhausts the jump budget");
    for (i, ex) in data.iter().enumerate() {
        let opts = RolloutOptions {
            mode: RolloutMode::Fixed(1),
            ..Default::default()
        };
        let out = rollout(&model, &ex.tokens, &cfg, &opts, &mut Rng::new(i as u64))?;
        println!("{}", trace_line(i, &out.trace));
    }
    println!("-- sampled policy (untrained): jumps overshoot and hit the end");
    for (i, ex) in data.iter().enumerate() {
        let opts = RolloutOptions {
            mode: RolloutMode::Sample,
            ..Default::default()
        };
        let out = rollout(&model, &ex.tokens, &cfg, &opts, &mut Rng::new(i as u64))?;
        println!("{}", trace_line(i, &out.trace));
    }
    Ok(())
}

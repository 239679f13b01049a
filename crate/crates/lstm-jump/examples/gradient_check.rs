//! Verify the hand-derived backward pass against central finite differences
//! at f64, including gradient flow across a jump boundary (the carried LSTM
//! state is the only bridge between the segments).
//!
//!     cargo run --release --example gradient_check

use lstm_jump::jump::{rollout_scripted, JumpConfig, RolloutOptions};
use lstm_jump::model::{classify, classify_backward, lstm_backward, ModelDims, ModelParams};
use lstm_jump::numeric::{finite_diff_grad, Matrix, Rng};

fn main() -> lstm_jump::Result<()> {
    let dims = ModelDims {
        vocab: 10,
        embed: 4,
        hidden: 6,
        layers: 2,
        classes: 3,
        max_jump: 3,
    };
    let params = ModelParams::<f64>::init(&dims, &mut Rng::new(42));
    let tokens = [2u32, 7, 4, 1, 9];
    let label = 1usize;
    let cfg = JumpConfig {
        n_jumps: 3,
        max_jump: 3,
        read_len: 2,
    };
    let opts = RolloutOptions {
        record: true,
        ..Default::default()
    };
    // read tokens 1-2, jump over 3-4, read token 5
    let script = [3usize];

    let run_loss = |p: &ModelParams<f64>| -> f64 {
        let out = rollout_scripted(p, &tokens, &cfg, &opts, &script)
            .unwrap()
            .expect("script covers the episode");
        let probs = classify(&p.cls, out.state.top_h()).unwrap();
        -probs[label].ln()
    };

    // analytic gradients via backpropagation through the read tokens
    let out = rollout_scripted(&params, &tokens, &cfg, &opts, &script)?.unwrap();
    println!(
        "episode read positions {:?} (jump over 3 and 4)",
        out.trace.read_positions
    );
    let tape = out.tape.as_ref().unwrap();
    let probs = classify(&params.cls, out.state.top_h())?;
    let mut grads = params.zeros_like();
    let dh = classify_backward(&params.cls, out.state.top_h(), &probs, label, &mut grads.cls);
    lstm_backward(&params, tape, &[(tape.len() - 1, dh)], &mut grads)?;

    println!("{:<12} {:>12} {:>12}", "tensor", "|grad|", "max rel err");
    for (name, analytic, _) in grads.visit() {
        if name.starts_with("jump") || name.starts_with("baseline") || name == "qa.w" {
            continue; // not part of the cross-entropy path
        }
        let current: Matrix<f64> = params.get_named(&name);
        let fd = finite_diff_grad(
            |m| {
                let mut p = params.clone();
                for (n, t, _) in p.visit_mut() {
                    if n == name {
                        *t = m.clone();
                    }
                }
                run_loss(&p)
            },
            &current,
            1e-5,
        );
        let norm = analytic.sum_squares().sqrt();
        let err = analytic
            .as_slice()
            .iter()
            .zip(fd.as_slice())
            .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1e-6))
            .fold(0.0f64, f64::max);
        println!("{name:<12} {norm:>12.4e} {err:>12.2e}");
        assert!(err < 1e-4);
    }
    println!("all gradients match finite differences to < 1e-4");
    Ok(())
}

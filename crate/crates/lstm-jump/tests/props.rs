//! Property tests over the numeric primitives, the data layer, and the
//! rollout. The acceptance suite runs a larger fixed sweep; these shrink.

use lstm_jump::data::{gen_synthetic, pad_or_window, CorpusSpec, SyntheticSpec};
use lstm_jump::jump::{rollout, JumpConfig, RolloutMode, RolloutOptions};
use lstm_jump::model::{ModelDims, ModelParams};
use lstm_jump::numeric::{clip_global_norm, softmax, Matrix, Rng};
use proptest::prelude::*;

proptest! {
    #[test]
    fn softmax_is_a_distribution(logits in prop::collection::vec(-30.0f64..30.0, 1..24)) {
        let p = softmax(&logits).unwrap();
        prop_assert!(p.iter().all(|&x| x > 0.0 && x <= 1.0));
        let sum: f64 = p.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-6);
    }

    #[test]
    fn softmax_shift_invariant(
        logits in prop::collection::vec(-20.0f64..20.0, 1..16),
        shift in -100.0f64..100.0,
    ) {
        let shifted: Vec<f64> = logits.iter().map(|x| x + shift).collect();
        let a = softmax(&logits).unwrap();
        let b = softmax(&shifted).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn clip_never_exceeds_threshold(
        values in prop::collection::vec(-50.0f64..50.0, 1..40),
        threshold in 0.01f64..10.0,
    ) {
        let mut m = Matrix::from_vec(values.len(), 1, values).unwrap();
        clip_global_norm(&mut [&mut m], threshold);
        prop_assert!(m.sum_squares().sqrt() <= threshold + 1e-9);
    }

    #[test]
    fn synthetic_examples_obey_the_rule(t in 2usize..300, seed in 0u64..1000) {
        let spec = SyntheticSpec::new(t);
        let examples = gen_synthetic(&spec, 20, &mut Rng::new(seed)).unwrap();
        for ex in examples {
            let x0 = ex.tokens[0] as usize;
            prop_assert!(x0 >= 1 && x0 < t.min(100));
            prop_assert_eq!(ex.label, ex.tokens[x0] as usize);
        }
    }

    #[test]
    fn padded_windows_have_spec_length(
        len in 0usize..200,
        target in 1usize..120,
        window_frac in 0.1f64..1.0,
        seed in 0u64..100,
        training in any::<bool>(),
    ) {
        let window = ((target as f64 * window_frac) as usize).max(1);
        let spec = CorpusSpec::words(target, Some(window));
        let tokens: Vec<u32> = (0..len as u32).collect();
        let out = pad_or_window(&tokens, &spec, &mut Rng::new(seed), training);
        prop_assert_eq!(out.len(), window);
    }

    #[test]
    fn rollout_respects_budget_and_order(
        t in 1usize..100,
        r in 1usize..6,
        k in 1usize..8,
        n in 0usize..8,
        seed in 0u64..10_000,
    ) {
        let dims = ModelDims {
            vocab: 40,
            embed: 3,
            hidden: 4,
            layers: 1,
            classes: 3,
            max_jump: k,
        };
        let params = ModelParams::<f32>::init(&dims, &mut Rng::new(k as u64));
        let cfg = JumpConfig { n_jumps: n, max_jump: k, read_len: r };
        let tokens: Vec<u32> = (0..t).map(|i| (i % 40) as u32).collect();
        let opts = RolloutOptions { mode: RolloutMode::Sample, ..Default::default() };
        let out = rollout(&params, &tokens, &cfg, &opts, &mut Rng::new(seed)).unwrap();
        prop_assert!(out.trace.tokens_read <= t.min(r * (n + 1)));
        prop_assert!(out.trace.read_positions.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(out.trace.jumps.len() <= n + 1);
        for j in &out.trace.jumps {
            prop_assert!((j.log_prob - j.dist[j.kappa].ln()).abs() <= 1e-6);
        }
    }
}

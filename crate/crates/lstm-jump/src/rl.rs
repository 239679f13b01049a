//! Reward assignment, the learned linear baseline, the REINFORCE surrogate
//! loss, and assembly of the full training objective.
//!
//! The surrogate is built so that minimizing it ascends the expected reward:
//! `surrogate = -sum_i ln pi(kappa_i | h_i) * (R - b_i)`, with the advantage
//! `(R - b_i)` treated as a constant. Gradients from this term reach only the
//! jump head by default; the pre-jump hidden states are detached. The baseline
//! regression likewise treats its `h_i` inputs as constants, so its loss moves
//! only `w_b` and `c_b`.

use crate::error::{Error, Result};
use crate::jump::{JumpHead, ReadingTrace};
use crate::numeric::{Matrix, Scalar};

/// Linear reward predictor `b = w . h + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineParams<S> {
    /// `h x 1`
    pub w: Matrix<S>,
    /// `1 x 1`
    pub c: Matrix<S>,
}

/// Final-step reward: `+1` for a correct prediction, `-1` otherwise.
pub fn reward<S: Scalar>(prediction: usize, label: usize) -> S {
    if prediction == label {
        S::one()
    } else {
        -S::one()
    }
}

/// Baseline value for one pre-jump hidden state.
pub fn baseline_value<S: Scalar>(params: &BaselineParams<S>, h: &[S]) -> S {
    let mut acc = params.c.get(0, 0);
    for (w, x) in params.w.as_slice().iter().zip(h.iter()) {
        acc = acc + *w * *x;
    }
    acc
}

/// REINFORCE surrogate for one episode. `baselines[i]` pairs with the i-th
/// recorded jump; advantages are constants for gradient purposes.
pub fn reinforce_surrogate<S: Scalar>(
    trace: &ReadingTrace<S>,
    reward: S,
    baselines: &[S],
) -> Result<S> {
    if baselines.len() != trace.jumps.len() {
        return Err(Error::Contract(format!(
            "reinforce_surrogate: {} baselines for {} jumps",
            baselines.len(),
            trace.jumps.len()
        )));
    }
    let mut s = S::zero();
    for (j, &b) in trace.jumps.iter().zip(baselines.iter()) {
        s = s - j.log_prob * (reward - b);
    }
    Ok(s)
}

/// Loss components for one example (or a batch mean of them).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown<S> {
    /// Cross-entropy of the task prediction.
    pub j1: S,
    /// Policy surrogate (see module docs).
    pub j2_surrogate: S,
    /// `sum_i (R - b_i)^2`.
    pub baseline_mse: S,
    /// `-beta * sum_i H(pi_i)`; zero unless entropy regularization is on.
    pub entropy_term: S,
    pub total: S,
}

impl<S: Scalar> LossBreakdown<S> {
    pub fn zero() -> Self {
        LossBreakdown {
            j1: S::zero(),
            j2_surrogate: S::zero(),
            baseline_mse: S::zero(),
            entropy_term: S::zero(),
            total: S::zero(),
        }
    }

    pub fn add(&mut self, other: &LossBreakdown<S>) {
        self.j1 = self.j1 + other.j1;
        self.j2_surrogate = self.j2_surrogate + other.j2_surrogate;
        self.baseline_mse = self.baseline_mse + other.baseline_mse;
        self.entropy_term = self.entropy_term + other.entropy_term;
        self.total = self.total + other.total;
    }

    pub fn scale(&mut self, s: S) {
        self.j1 = self.j1 * s;
        self.j2_surrogate = self.j2_surrogate * s;
        self.baseline_mse = self.baseline_mse * s;
        self.entropy_term = self.entropy_term * s;
        self.total = self.total * s;
    }

    pub fn is_finite(&self) -> bool {
        self.total.is_finite()
            && self.j1.is_finite()
            && self.j2_surrogate.is_finite()
            && self.baseline_mse.is_finite()
    }
}

/// Assemble one example's objective: `j1 + surrogate + sum_i (R - b_i)^2`.
pub fn total_loss<S: Scalar>(j1: S, surrogate: S, baseline_sq_errors: &[S]) -> LossBreakdown<S> {
    let mse = baseline_sq_errors
        .iter()
        .fold(S::zero(), |acc, &x| acc + x);
    LossBreakdown {
        j1,
        j2_surrogate: surrogate,
        baseline_mse: mse,
        entropy_term: S::zero(),
        total: j1 + surrogate + mse,
    }
}

/// Mean of per-example breakdowns over a batch.
pub fn batch_mean<S: Scalar>(items: &[LossBreakdown<S>]) -> LossBreakdown<S> {
    let mut acc = LossBreakdown::zero();
    for it in items {
        acc.add(it);
    }
    if !items.is_empty() {
        acc.scale(S::one() / S::from_f64(items.len() as f64));
    }
    acc
}

/// Accumulate the surrogate's gradient into the jump head:
/// `d surrogate / d logits_i = (R - b_i) * (pi_i - onehot(kappa_i))`.
///
/// With `entropy_weight > 0` the entropy bonus `-beta H(pi_i)` contributes
/// `beta * pi_j (ln pi_j + H)` per logit. When `dh_sink` is given (the
/// documented joint-flow switch, off by default), the gradient w.r.t. each
/// decision's hidden state is emitted for injection into the LSTM backward.
pub fn policy_backward<S: Scalar>(
    head: &JumpHead<S>,
    trace: &ReadingTrace<S>,
    advantages: &[S],
    entropy_weight: S,
    head_grads: &mut JumpHead<S>,
    mut dh_sink: Option<&mut Vec<(usize, Vec<S>)>>,
) -> Result<()> {
    if advantages.len() != trace.jumps.len() {
        return Err(Error::Contract(format!(
            "policy_backward: {} advantages for {} jumps",
            advantages.len(),
            trace.jumps.len()
        )));
    }
    for (j, &adv) in trace.jumps.iter().zip(advantages.iter()) {
        let mut dlogits: Vec<S> = j.dist.iter().map(|&p| adv * p).collect();
        dlogits[j.kappa] = dlogits[j.kappa] - adv;
        if entropy_weight > S::zero() {
            let entropy = -j
                .dist
                .iter()
                .fold(S::zero(), |acc, &p| acc + p * p.max(S::from_f64(1e-30)).ln());
            for (d, &p) in dlogits.iter_mut().zip(j.dist.iter()) {
                let lp = p.max(S::from_f64(1e-30)).ln();
                *d = *d + entropy_weight * p * (lp + entropy);
            }
        }
        head_grads.w.add_outer(&dlogits, &j.hidden);
        for (b, d) in head_grads.bias.as_mut_slice().iter_mut().zip(dlogits.iter()) {
            *b = *b + *d;
        }
        if let Some(sink) = dh_sink.as_deref_mut() {
            let mut dh = vec![S::zero(); j.hidden.len()];
            head.w.matvec_t_add(&dlogits, &mut dh);
            sink.push((j.step, dh));
        }
    }
    Ok(())
}

/// Accumulate the baseline regression gradient:
/// `d/dw sum_i (R - b_i)^2 = sum_i -2 (R - b_i) h_i`, likewise for `c`.
pub fn baseline_backward<S: Scalar>(
    trace: &ReadingTrace<S>,
    reward: S,
    baselines: &[S],
    grads: &mut BaselineParams<S>,
) -> Result<()> {
    if baselines.len() != trace.jumps.len() {
        return Err(Error::Contract(format!(
            "baseline_backward: {} baselines for {} jumps",
            baselines.len(),
            trace.jumps.len()
        )));
    }
    let two = S::from_f64(2.0);
    for (j, &b) in trace.jumps.iter().zip(baselines.iter()) {
        let coeff = -two * (reward - b);
        let gw = grads.w.as_mut_slice();
        for (g, &h) in gw.iter_mut().zip(j.hidden.iter()) {
            *g = *g + coeff * h;
        }
        let c = grads.c.get(0, 0);
        grads.c.set(0, 0, c + coeff);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jump::{JumpDecision, TerminationReason};
    use crate::numeric::Rng;

    fn one_decision_trace(dist: Vec<f64>, kappa: usize, hidden: Vec<f64>) -> ReadingTrace<f64> {
        ReadingTrace {
            read_positions: vec![1],
            jumps: vec![JumpDecision {
                log_prob: dist[kappa].ln(),
                hidden,
                kappa,
                dist,
                step: 0,
            }],
            termination: TerminationReason::ZeroJump,
            tokens_read: 1,
        }
    }

    #[test]
    fn reward_sign() {
        assert_eq!(reward::<f64>(3, 3), 1.0);
        assert_eq!(reward::<f64>(2, 3), -1.0);
        // well-defined for any pair of class indices
        assert_eq!(reward::<f64>(0, 99), -1.0);
    }

    #[test]
    fn baseline_value_cases() {
        let p = BaselineParams {
            w: Matrix::<f64>::zeros(4, 1),
            c: Matrix::from_vec(1, 1, vec![0.5]).unwrap(),
        };
        assert_eq!(baseline_value(&p, &[9.0, -3.0, 1.0, 2.0]), 0.5);
        let mut p2 = BaselineParams {
            w: Matrix::<f64>::zeros(4, 1),
            c: Matrix::zeros(1, 1),
        };
        p2.w.set(0, 0, 1.0);
        assert_eq!(baseline_value(&p2, &[2.0, 7.0, 7.0, 7.0]), 2.0);
    }

    #[test]
    fn baseline_regression_converges_to_mean_reward() {
        // constant reward +1 and constant hidden state: least-squares fixed
        // point of (R - b)^2 is b = 1
        let mut p = BaselineParams {
            w: Matrix::<f64>::zeros(3, 1),
            c: Matrix::zeros(1, 1),
        };
        let trace = one_decision_trace(vec![0.5, 0.5], 0, vec![0.2, -0.1, 0.4]);
        for _ in 0..2000 {
            let b = baseline_value(&p, &trace.jumps[0].hidden);
            let mut g = BaselineParams {
                w: Matrix::zeros(3, 1),
                c: Matrix::zeros(1, 1),
            };
            baseline_backward(&trace, 1.0, &[b], &mut g).unwrap();
            p.w.add_scaled(&g.w, -0.05);
            p.c.add_scaled(&g.c, -0.05);
        }
        let b = baseline_value(&p, &trace.jumps[0].hidden);
        assert!((b - 1.0).abs() < 0.05, "converged to {b}");
    }

    #[test]
    fn surrogate_single_decision_value_and_gradient() {
        // pi = [0.5, 0.5], action 0, R = 1, b = 0
        let trace = one_decision_trace(vec![0.5, 0.5], 0, vec![1.0, 0.0]);
        let s = reinforce_surrogate(&trace, 1.0, &[0.0]).unwrap();
        assert!((s - std::f64::consts::LN_2).abs() < 1e-12);

        let mut grads = JumpHead {
            w: Matrix::<f64>::zeros(2, 2),
            bias: Matrix::zeros(2, 1),
        };
        let head = JumpHead {
            w: Matrix::<f64>::zeros(2, 2),
            bias: Matrix::zeros(2, 1),
        };
        policy_backward(&head, &trace, &[1.0], 0.0, &mut grads, None).unwrap();
        // d surrogate / d logits = (pi - onehot_0) = [-0.5, +0.5]
        assert!((grads.bias.get(0, 0) + 0.5).abs() < 1e-12);
        assert!((grads.bias.get(1, 0) - 0.5).abs() < 1e-12);
        // w gradient is dlogits outer hidden = [[-0.5, 0], [0.5, 0]]
        assert!((grads.w.get(0, 0) + 0.5).abs() < 1e-12);
        assert!((grads.w.get(1, 0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_advantage_means_zero_gradient() {
        let trace = one_decision_trace(vec![0.3, 0.7], 1, vec![0.5, -0.5]);
        let mut grads = JumpHead {
            w: Matrix::<f64>::zeros(2, 2),
            bias: Matrix::zeros(2, 1),
        };
        let head = grads.clone();
        policy_backward(&head, &trace, &[0.0], 0.0, &mut grads, None).unwrap();
        assert!(grads.w.as_slice().iter().all(|&v| v == 0.0));
        assert!(grads.bias.as_slice().iter().all(|&v| v == 0.0));
        let s = reinforce_surrogate(&trace, 0.7, &[0.7]).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn surrogate_length_mismatch_is_error() {
        let trace = one_decision_trace(vec![0.5, 0.5], 0, vec![0.0, 0.0]);
        assert!(reinforce_surrogate(&trace, 1.0, &[]).is_err());
        assert!(reinforce_surrogate(&trace, 1.0, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn two_armed_bandit_estimator_is_unbiased() {
        // rewards: +1 for arm 0, -1 for arm 1; logits z fixed
        let logits = [0.4f64, -0.2];
        let pi = crate::numeric::softmax(&logits).unwrap();
        let rewards = [1.0f64, -1.0];
        // exact gradient by enumerating both outcomes:
        // dE/dz_j = sum_a R_a * pi_a * (onehot_a[j] - pi_j)
        let mut exact = [0.0f64; 2];
        for a in 0..2 {
            for j in 0..2 {
                let onehot = if a == j { 1.0 } else { 0.0 };
                exact[j] += rewards[a] * pi[a] * (onehot - pi[j]);
            }
        }
        // Monte Carlo mean of R * d ln pi(a) / dz over 1e5 episodes
        let n = 100_000;
        let mut rng = Rng::new(31);
        let mut sum = [0.0f64; 2];
        let mut sumsq = [0.0f64; 2];
        for _ in 0..n {
            let a = crate::numeric::sample_categorical(&pi, &mut rng).unwrap();
            for j in 0..2 {
                let onehot = if a == j { 1.0 } else { 0.0 };
                let g = rewards[a] * (onehot - pi[j]);
                sum[j] += g;
                sumsq[j] += g * g;
            }
        }
        for j in 0..2 {
            let mean = sum[j] / n as f64;
            let var = (sumsq[j] / n as f64 - mean * mean).max(0.0);
            let se = (var / n as f64).sqrt();
            assert!(
                (mean - exact[j]).abs() <= 3.0 * se + 1e-12,
                "coord {j}: mc {mean} exact {} se {se}",
                exact[j]
            );
        }
    }

    #[test]
    fn total_loss_zero_advantage_reduces_to_j1_plus_mse() {
        let lb = total_loss(0.7f64, 0.0, &[0.04, 0.09]);
        assert!((lb.total - (0.7 + 0.13)).abs() < 1e-12);
        assert_eq!(lb.j2_surrogate, 0.0);
    }

    #[test]
    fn total_loss_hand_addition() {
        let lb = total_loss(1.5f64, -0.25, &[0.5]);
        assert!((lb.total - 1.75).abs() < 1e-12);
        assert!((lb.baseline_mse - 0.5).abs() < 1e-12);
    }

    #[test]
    fn batch_mean_matches_recomputation_and_permutation() {
        let mut rng = Rng::new(12);
        let items: Vec<LossBreakdown<f64>> = (0..32)
            .map(|_| {
                total_loss(
                    rng.uniform(0.0, 3.0),
                    rng.uniform(-1.0, 1.0),
                    &[rng.uniform(0.0, 4.0), rng.uniform(0.0, 4.0)],
                )
            })
            .collect();
        let mean = batch_mean(&items);
        // independent f64 recomputation
        let t: f64 = items.iter().map(|i| i.total).sum::<f64>() / items.len() as f64;
        assert!((mean.total - t).abs() < 1e-12);
        // permutation invariance
        let mut rev = items.clone();
        rev.reverse();
        let mean_rev = batch_mean(&rev);
        assert!((mean.total - mean_rev.total).abs() < 1e-6);
    }
}

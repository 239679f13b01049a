//! Shared fixtures for the integration suites: a tiny fully-enumerable jump
//! decision process, exact policy gradients by path enumeration, and a
//! closed-form least-squares baseline fit.

use lstm_jump::jump::{rollout_scripted, JumpConfig, RolloutOptions, RolloutOutput};
use lstm_jump::model::{argmax, classify, ModelDims, ModelParams};
use lstm_jump::numeric::{Matrix, Rng};
use lstm_jump::rl::{baseline_value, BaselineParams};

/// A fixed episode environment small enough to enumerate: one token sequence,
/// one label, deterministic reward given the action sequence.
pub struct JumpMdp {
    pub params: ModelParams<f64>,
    pub tokens: Vec<u32>,
    pub label: usize,
    pub cfg: JumpConfig,
}

impl JumpMdp {
    /// `K = 3`, `N = 3`, `R = 1`, seven tokens: every path ends within three
    /// decisions, so there are at most (K+1)^3 of them.
    pub fn new(seed: u64) -> Self {
        let dims = ModelDims {
            vocab: 10,
            embed: 3,
            hidden: 4,
            layers: 1,
            classes: 4,
            max_jump: 3,
        };
        let mut rng = Rng::new(seed);
        let mut params = ModelParams::<f64>::init(&dims, &mut rng);
        // spread the jump logits a little so paths have distinct probabilities
        params.jump.w = Matrix::uniform(4, 4, -0.9, 0.9, &mut rng);
        JumpMdp {
            params,
            tokens: vec![3, 1, 4, 1, 5, 9, 2],
            label: 2,
            cfg: JumpConfig {
                n_jumps: 3,
                max_jump: 3,
                read_len: 1,
            },
        }
    }

    pub fn opts(&self) -> RolloutOptions {
        RolloutOptions::default()
    }

    pub fn reward_of(&self, out: &RolloutOutput<f64>) -> f64 {
        let probs = classify(&self.params.cls, out.state.top_h()).unwrap();
        if argmax(&probs) == self.label {
            1.0
        } else {
            -1.0
        }
    }

    /// Depth-first enumeration of every action sequence the environment
    /// admits, through the production rollout.
    pub fn enumerate(&self) -> Vec<(f64, f64, RolloutOutput<f64>)> {
        let mut paths = Vec::new();
        let mut stack: Vec<Vec<usize>> = vec![vec![]];
        while let Some(script) = stack.pop() {
            match rollout_scripted(&self.params, &self.tokens, &self.cfg, &self.opts(), &script)
                .unwrap()
            {
                Some(out) => {
                    let p: f64 = out.trace.jumps.iter().map(|j| j.dist[j.kappa]).product();
                    let r = self.reward_of(&out);
                    paths.push((p, r, out));
                }
                None => {
                    for a in 0..=self.cfg.max_jump {
                        let mut s = script.clone();
                        s.push(a);
                        stack.push(s);
                    }
                }
            }
        }
        paths
    }

    /// Exact ascent gradient of the expected reward w.r.t. the jump head:
    /// `sum_paths P(path) R(path) sum_i (onehot(a_i) - pi_i) (x) [h_i; 1]`.
    pub fn exact_expected_reward_grad(&self) -> (Matrix<f64>, Matrix<f64>) {
        let k1 = self.cfg.max_jump + 1;
        let h = self.params.lstm[0].hidden();
        let mut gw = Matrix::zeros(k1, h);
        let mut gb = Matrix::zeros(k1, 1);
        for (p, r, out) in self.enumerate() {
            for j in &out.trace.jumps {
                for a in 0..k1 {
                    let onehot = if a == j.kappa { 1.0 } else { 0.0 };
                    let d = p * r * (onehot - j.dist[a]);
                    for (col, &hv) in j.hidden.iter().enumerate() {
                        gw.set(a, col, gw.get(a, col) + d * hv);
                    }
                    gb.set(a, 0, gb.get(a, 0) + d);
                }
            }
        }
        (gw, gb)
    }

    /// Exact expected reward (sanity anchor for the enumeration).
    pub fn expected_reward(&self) -> f64 {
        self.enumerate().iter().map(|(p, r, _)| p * r).sum()
    }

    /// Weighted least-squares fit of `b = w . h + c` against the reward over
    /// the enumerated joint distribution of `(h_i, R)`.
    pub fn least_squares_baseline(&self) -> BaselineParams<f64> {
        let h = self.params.lstm[0].hidden();
        let d = h + 1;
        let mut a = vec![vec![0.0f64; d]; d];
        let mut y = vec![0.0f64; d];
        for (p, r, out) in self.enumerate() {
            for j in &out.trace.jumps {
                let mut phi = j.hidden.clone();
                phi.push(1.0);
                for i in 0..d {
                    for k in 0..d {
                        a[i][k] += p * phi[i] * phi[k];
                    }
                    y[i] += p * phi[i] * r;
                }
            }
        }
        // ridge epsilon keeps the solve stable when decisions are few
        for (i, row) in a.iter_mut().enumerate() {
            row[i] += 1e-9;
        }
        let x = solve(a, y);
        let mut w = Matrix::zeros(h, 1);
        for i in 0..h {
            w.set(i, 0, x[i]);
        }
        BaselineParams {
            w,
            c: Matrix::from_vec(1, 1, vec![x[h]]).unwrap(),
        }
    }

    /// Baseline values for one episode's decisions.
    pub fn baselines_for(&self, out: &RolloutOutput<f64>, b: &BaselineParams<f64>) -> Vec<f64> {
        out.trace
            .jumps
            .iter()
            .map(|j| baseline_value(b, &j.hidden))
            .collect()
    }
}

/// Gaussian elimination with partial pivoting for the tiny baseline solve.
pub fn solve(mut a: Vec<Vec<f64>>, mut y: Vec<f64>) -> Vec<f64> {
    let n = y.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        y.swap(col, pivot);
        let diag = a[col][col];
        for row in col + 1..n {
            let f = a[row][col] / diag;
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            y[row] -= f * y[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = y[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x
}

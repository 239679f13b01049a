//! Dense matrix/vector arithmetic, nonlinearities, categorical sampling and a
//! finite-difference gradient oracle.
//!
//! Training runs in `f32`; gradient-check tests instantiate the same code at
//! `f64`, so everything here is generic over [`Scalar`].

mod rng;

pub use rng::Rng;

use crate::error::{Error, Result};

/// Floating-point element type for tensors. Implemented for `f32` and `f64`.
pub trait Scalar:
    num_traits::Float + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

/// Row-major dense matrix. Vectors are stored as `len x 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "from_vec",
                format!("{}x{} needs {} values, got {}", rows, cols, rows * cols, data.len()),
            ));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Entries drawn i.i.d. uniform from `[lo, hi)`.
    pub fn uniform(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut Rng) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            data.push(S::from_f64(rng.uniform(lo, hi)));
        }
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> S {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: S) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [S] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn fill(&mut self, v: S) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn scale(&mut self, s: S) {
        self.data.iter_mut().for_each(|x| *x = *x * s);
    }

    /// `self += other * s`
    pub fn add_scaled(&mut self, other: &Matrix<S>, s: S) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a = *a + *b * s;
        }
    }

    pub fn sum_squares(&self) -> S {
        self.data.iter().fold(S::zero(), |acc, &x| acc + x * x)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Convert element type (used to promote `f32` models to `f64` in tests).
    pub fn cast<T: Scalar>(&self) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| T::from_f64(x.as_f64())).collect(),
        }
    }

    /// `out += self * x` for a column vector `x`; `self` is `rows x cols`.
    ///
    /// Eight independent accumulators per row break the serial dependency
    /// chain so the dot products vectorize.
    #[inline]
    pub fn matvec_add(&self, x: &[S], out: &mut [S]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (row, o) in self.data.chunks_exact(self.cols.max(1)).zip(out.iter_mut()) {
            let mut lanes = [S::zero(); 8];
            let mut cw = row.chunks_exact(8);
            let mut cx = x.chunks_exact(8);
            for (w8, x8) in (&mut cw).zip(&mut cx) {
                for k in 0..8 {
                    lanes[k] = lanes[k] + w8[k] * x8[k];
                }
            }
            let mut acc = S::zero();
            for (w, v) in cw.remainder().iter().zip(cx.remainder()) {
                acc = acc + *w * *v;
            }
            for lane in lanes {
                acc = acc + lane;
            }
            *o = *o + acc;
        }
    }

    /// `out += self^T * v`; `v` has length `rows`, `out` length `cols`.
    #[inline]
    pub fn matvec_t_add(&self, v: &[S], out: &mut [S]) {
        debug_assert_eq!(v.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (r, &vr) in v.iter().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (o, w) in out.iter_mut().zip(row.iter()) {
                *o = *o + *w * vr;
            }
        }
    }

    /// Rank-1 update `self += a * b^T`; `a` has length `rows`, `b` length `cols`.
    #[inline]
    pub fn add_outer(&mut self, a: &[S], b: &[S]) {
        debug_assert_eq!(a.len(), self.rows);
        debug_assert_eq!(b.len(), self.cols);
        for (r, &ar) in a.iter().enumerate() {
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (w, &bv) in row.iter_mut().zip(b.iter()) {
                *w = *w + ar * bv;
            }
        }
    }

    /// Batched rank-1 updates `self += sum_k a_k * b_k^T`, row-major over the
    /// accumulator so each of its rows is touched once per call rather than
    /// once per summand.
    #[inline]
    pub fn add_outer_batch(&mut self, a_list: &[&[S]], b_list: &[&[S]]) {
        debug_assert_eq!(a_list.len(), b_list.len());
        for (r, row) in self.data.chunks_exact_mut(self.cols.max(1)).enumerate() {
            for (a, b) in a_list.iter().zip(b_list.iter()) {
                let coeff = a[r];
                for (w, &bv) in row.iter_mut().zip(b.iter()) {
                    *w = *w + coeff * bv;
                }
            }
        }
    }
}

/// Standard matrix product.
pub fn matmul<S: Scalar>(a: &Matrix<S>, b: &Matrix<S>) -> Result<Matrix<S>> {
    if a.cols != b.rows {
        return Err(Error::shape(
            "matmul",
            format!("{}x{} * {}x{}", a.rows, a.cols, b.rows, b.cols),
        ));
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    // i-k-j order: streams through rows of `b`, cache-friendly for row-major data.
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a.get(i, k);
            let brow = &b.data[k * b.cols..(k + 1) * b.cols];
            let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
            for (o, &bv) in orow.iter_mut().zip(brow.iter()) {
                *o = *o + aik * bv;
            }
        }
    }
    debug_assert!(out.all_finite());
    Ok(out)
}

/// Max-subtraction-stabilized softmax.
pub fn softmax<S: Scalar>(logits: &[S]) -> Result<Vec<S>> {
    if logits.is_empty() {
        return Err(Error::shape("softmax", "empty input".to_string()));
    }
    let max = logits.iter().fold(logits[0], |m, &x| m.max(x));
    let mut out: Vec<S> = logits.iter().map(|&x| (x - max).exp()).collect();
    let sum = out.iter().fold(S::zero(), |a, &x| a + x);
    out.iter_mut().for_each(|x| *x = *x / sum);
    Ok(out)
}

/// In-place softmax over a scratch buffer, for hot paths.
pub fn softmax_in_place<S: Scalar>(v: &mut [S]) {
    let max = v.iter().fold(v[0], |m, &x| m.max(x));
    let mut sum = S::zero();
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum = sum + *x;
    }
    for x in v.iter_mut() {
        *x = *x / sum;
    }
}

/// Draw an index from a categorical distribution. `probs` must sum to 1,
/// within 1e-6 at `f64`; at `f32` the tolerance widens to what the element
/// type can represent for this many categories.
pub fn sample_categorical<S: Scalar>(probs: &[S], rng: &mut Rng) -> Result<usize> {
    if probs.is_empty() {
        return Err(Error::Contract("sample_categorical: empty distribution".into()));
    }
    let sum: f64 = probs.iter().map(|p| p.as_f64()).sum();
    let tol = 1e-6f64.max(4.0 * probs.len() as f64 * S::epsilon().as_f64());
    if (sum - 1.0).abs() > tol {
        return Err(Error::Contract(format!(
            "sample_categorical: probabilities sum to {sum}, expected 1"
        )));
    }
    let u = rng.next_f64();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p.as_f64();
        if u < acc {
            return Ok(i);
        }
    }
    // Rounding pushed the cumulative sum fractionally below u.
    Ok(probs.len() - 1)
}

/// Jointly rescale `grads` so their global L2 norm is at most `threshold`.
/// Returns the pre-clip norm.
pub fn clip_global_norm<S: Scalar>(grads: &mut [&mut Matrix<S>], threshold: S) -> S {
    let mut sq = S::zero();
    for g in grads.iter() {
        sq = sq + g.sum_squares();
    }
    let norm = sq.sqrt();
    if norm > threshold {
        let scale = threshold / norm;
        for g in grads.iter_mut() {
            g.scale(scale);
        }
    }
    norm
}

/// Central-difference gradient of `f` at `x`: `(f(x+h e) - f(x-h e)) / 2h` per entry.
///
/// This is the independent oracle the gradient tests compare hand-derived
/// backward passes against; run it at `f64`.
pub fn finite_diff_grad<S: Scalar>(
    mut f: impl FnMut(&Matrix<S>) -> S,
    x: &Matrix<S>,
    h: S,
) -> Matrix<S> {
    let mut grad = Matrix::zeros(x.rows(), x.cols());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let orig = probe.as_slice()[i];
        probe.as_mut_slice()[i] = orig + h;
        let plus = f(&probe);
        probe.as_mut_slice()[i] = orig - h;
        let minus = f(&probe);
        probe.as_mut_slice()[i] = orig;
        grad.as_mut_slice()[i] = (plus - minus) / (h + h);
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent oracle: naive i-j-k triple loop accumulating in f64.
    fn matmul_oracle(a: &Matrix<f64>, b: &Matrix<f64>) -> Matrix<f64> {
        let mut out = Matrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut acc = 0.0;
                for k in 0..a.cols() {
                    acc += a.get(i, k) * b.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    #[test]
    fn matmul_identity() {
        let id = Matrix::from_vec(2, 2, vec![1.0f64, 0.0, 0.0, 1.0]).unwrap();
        let m = Matrix::from_vec(2, 2, vec![3.0, -1.5, 2.0, 7.25]).unwrap();
        assert_eq!(matmul(&id, &m).unwrap(), m);
    }

    #[test]
    fn matmul_hand_case() {
        let a = Matrix::from_vec(2, 2, vec![1.0f64, 2.0, 3.0, 4.0]).unwrap();
        let b = Matrix::from_vec(2, 1, vec![1.0, 1.0]).unwrap();
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c.as_slice(), &[3.0, 7.0]);
    }

    #[test]
    fn matmul_matches_triple_loop_oracle() {
        let mut rng = Rng::new(11);
        let a = Matrix::<f64>::uniform(5, 7, -2.0, 2.0, &mut rng);
        let b = Matrix::<f64>::uniform(7, 3, -2.0, 2.0, &mut rng);
        let fast = matmul(&a, &b).unwrap();
        let slow = matmul_oracle(&a, &b);
        for (x, y) in fast.as_slice().iter().zip(slow.as_slice()) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn matmul_shape_error() {
        let a = Matrix::<f64>::zeros(2, 3);
        let b = Matrix::<f64>::zeros(2, 3);
        assert!(matches!(matmul(&a, &b), Err(Error::Shape { .. })));
    }

    #[test]
    fn matmul_associative_within_1e9_relative() {
        let mut rng = Rng::new(5);
        for _ in 0..10 {
            let a = Matrix::<f64>::uniform(4, 6, -1.0, 1.0, &mut rng);
            let b = Matrix::<f64>::uniform(6, 5, -1.0, 1.0, &mut rng);
            let c = Matrix::<f64>::uniform(5, 3, -1.0, 1.0, &mut rng);
            let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
            let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
            for (x, y) in left.as_slice().iter().zip(right.as_slice()) {
                let denom = x.abs().max(y.abs()).max(1.0);
                assert!((x - y).abs() / denom < 1e-9);
            }
        }
    }

    #[test]
    fn softmax_uniform() {
        let p = softmax(&[1.0f64, 1.0, 1.0, 1.0]).unwrap();
        for &x in &p {
            assert!((x - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_analytic() {
        let p = softmax(&[0.0f64, 3.0f64.ln()]).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-12);
        assert!((p[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn softmax_large_logit_no_overflow() {
        let p = softmax(&[1000.0f64, 0.0]).unwrap();
        assert!(p[0] > 1.0 - 1e-12 && p[0] <= 1.0);
        assert!(p[1] >= 0.0 && p[1] < 1e-12);
        assert!(p.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn softmax_empty_is_error() {
        assert!(softmax::<f64>(&[]).is_err());
    }

    #[test]
    fn softmax_shift_invariant() {
        let mut rng = Rng::new(3);
        for _ in 0..20 {
            let logits: Vec<f64> = (0..6).map(|_| rng.uniform(-4.0, 4.0)).collect();
            let shifted: Vec<f64> = logits.iter().map(|x| x + 123.456).collect();
            let a = softmax(&logits).unwrap();
            let b = softmax(&shifted).unwrap();
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sample_degenerate_distribution() {
        let mut rng = Rng::new(1);
        for _ in 0..100 {
            assert_eq!(sample_categorical(&[1.0f64, 0.0, 0.0], &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn sample_monte_carlo_frequency() {
        let mut rng = Rng::new(42);
        let n = 100_000;
        let mut zeros = 0usize;
        for _ in 0..n {
            if sample_categorical(&[0.5f64, 0.5], &mut rng).unwrap() == 0 {
                zeros += 1;
            }
        }
        let freq = zeros as f64 / n as f64;
        // binomial stderr at p=0.5, n=1e5 is ~0.0016; 0.01 is > 6 sigma
        assert!((freq - 0.5).abs() < 0.01, "freq {freq}");
    }

    #[test]
    fn sample_seed_reproducible() {
        let draw = |seed: u64| -> Vec<usize> {
            let mut rng = Rng::new(seed);
            (0..50)
                .map(|_| sample_categorical(&[0.1f64, 0.2, 0.7], &mut rng).unwrap())
                .collect()
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
    }

    #[test]
    fn sample_rejects_unnormalized() {
        let mut rng = Rng::new(1);
        assert!(sample_categorical(&[0.5f64, 0.6], &mut rng).is_err());
    }

    #[test]
    fn sample_chi_square_five_categories() {
        let probs = [0.1f64, 0.15, 0.2, 0.25, 0.3];
        let n = 100_000usize;
        let mut counts = [0usize; 5];
        let mut rng = Rng::new(2024);
        for _ in 0..n {
            counts[sample_categorical(&probs, &mut rng).unwrap()] += 1;
        }
        let chi2: f64 = counts
            .iter()
            .zip(probs.iter())
            .map(|(&c, &p)| {
                let e = p * n as f64;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        // chi-square critical value, df=4, upper tail p=0.001
        assert!(chi2 < 18.4668, "chi2 = {chi2}");
    }

    #[test]
    fn clip_scales_when_over_threshold() {
        let mut a = Matrix::from_vec(1, 2, vec![1.2f64, 1.6]).unwrap(); // norm 2.0
        let norm = clip_global_norm(&mut [&mut a], 1.0);
        assert!((norm - 2.0).abs() < 1e-12);
        assert_eq!(a.as_slice(), &[0.6, 0.8]);
    }

    #[test]
    fn clip_leaves_small_gradients() {
        let mut a = Matrix::from_vec(1, 2, vec![0.3f64, 0.4]).unwrap(); // norm 0.5
        let norm = clip_global_norm(&mut [&mut a], 1.0);
        assert!((norm - 0.5).abs() < 1e-12);
        assert_eq!(a.as_slice(), &[0.3, 0.4]);
    }

    #[test]
    fn clip_three_four_five() {
        let mut a = Matrix::from_vec(1, 2, vec![3.0f64, 0.0]).unwrap();
        let mut b = Matrix::from_vec(1, 2, vec![0.0f64, 4.0]).unwrap();
        let norm = clip_global_norm(&mut [&mut a, &mut b], 1.0);
        assert!((norm - 5.0).abs() < 1e-12);
        assert!((a.as_slice()[0] - 0.6).abs() < 1e-12);
        assert!((b.as_slice()[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn clip_output_norm_bounded() {
        let mut rng = Rng::new(9);
        for _ in 0..50 {
            let mut a = Matrix::<f64>::uniform(3, 4, -5.0, 5.0, &mut rng);
            let mut b = Matrix::<f64>::uniform(2, 2, -5.0, 5.0, &mut rng);
            clip_global_norm(&mut [&mut a, &mut b], 1.0);
            let norm = (a.sum_squares() + b.sum_squares()).sqrt();
            assert!(norm <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn finite_diff_sum_of_squares() {
        let x = Matrix::from_vec(1, 2, vec![1.0f64, 2.0]).unwrap();
        let g = finite_diff_grad(|m| m.as_slice().iter().map(|v| v * v).sum(), &x, 1e-5);
        assert!((g.as_slice()[0] - 2.0).abs() < 1e-6);
        assert!((g.as_slice()[1] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn finite_diff_constant_is_zero() {
        let x = Matrix::from_vec(2, 2, vec![1.0f64, -1.0, 0.5, 2.0]).unwrap();
        let g = finite_diff_grad(|_| 3.25, &x, 1e-5);
        assert!(g.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn finite_diff_softmax_cross_entropy() {
        // d(-log softmax(z)[t]) / dz = p - onehot(t)
        let logits = Matrix::from_vec(1, 4, vec![0.3f64, -0.7, 1.1, 0.0]).unwrap();
        let target = 2usize;
        let g = finite_diff_grad(
            |m| {
                let p = softmax(m.as_slice()).unwrap();
                -p[target].ln()
            },
            &logits,
            1e-6,
        );
        let p = softmax(logits.as_slice()).unwrap();
        for i in 0..4 {
            let analytic = p[i] - if i == target { 1.0 } else { 0.0 };
            assert!((g.as_slice()[i] - analytic).abs() < 1e-6);
        }
    }
}

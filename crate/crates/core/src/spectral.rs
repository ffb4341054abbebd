//! Symmetric eigenvalue and operator-norm kernels.
//!
//! Small blocks use a dense symmetric eigendecomposition. Larger blocks use
//! a two-pass Lanczos iteration without reorthogonalisation: the first pass
//! keeps only the tridiagonal coefficients and watches the residual estimate
//! of the extreme Ritz value, the second pass regenerates the Lanczos vectors
//! to assemble the Ritz vector and measure its true residual. Memory stays
//! at a few vectors regardless of the iteration count.

use std::hash::{Hash, Hasher};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::transalg::FinitePropOp;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("operator is not self-adjoint")]
    NotSymmetric,
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dense,
    Iterative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    pub value: f64,
    pub method: Method,
    pub iterations: usize,
    pub residual: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SpectralConfig {
    /// Residual bound relative to the operator norm.
    pub tol: f64,
    /// Blocks up to this size are solved densely.
    pub dense_limit: usize,
    /// Defaults to ten times the dimension.
    pub max_iter: Option<usize>,
    /// Defaults to a hash of the operator.
    pub seed: Option<u64>,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            tol: 1e-10,
            dense_limit: 512,
            max_iter: None,
            seed: None,
        }
    }
}

/// FNV-1a. Unlike the std default hasher its output is fixed across
/// toolchains, so derived seeds in reports stay put.
pub struct StableHasher(u64);

impl Default for StableHasher {
    fn default() -> Self {
        StableHasher(0xcbf2_9ce4_8422_2325)
    }
}

impl Hasher for StableHasher {
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

/// A real symmetric linear map given by its action.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;

    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// Stable hash used to derive the default start vector.
    fn fingerprint(&self) -> u64;

    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply(&e, &mut col);
            e[j] = 0.0;
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        m
    }
}

const PARALLEL_ROWS: usize = 4096;

impl SymmetricOperator for FinitePropOp<f64> {
    fn dim(&self) -> usize {
        FinitePropOp::dim(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let row_dot = |i: usize| self.row(i).iter().fold(0.0, |acc, (j, v)| acc + v * x[*j]);
        if y.len() >= PARALLEL_ROWS {
            y.par_iter_mut().enumerate().for_each(|(i, out)| *out = row_dot(i));
        } else {
            for (i, out) in y.iter_mut().enumerate() {
                *out = row_dot(i);
            }
        }
    }

    fn fingerprint(&self) -> u64 {
        let mut h = StableHasher::default();
        self.dim().hash(&mut h);
        for (x, y, v) in self.entries() {
            (x, y, v.to_bits()).hash(&mut h);
        }
        h.finish()
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let n = FinitePropOp::dim(self);
        let mut m = DMatrix::zeros(n, n);
        for (x, y, v) in self.entries() {
            m[(x, y)] = *v;
        }
        m
    }
}

/// `T − P` where `P` averages over each block: `(P x)_i` is the mean of `x`
/// over the block containing `i`. Every index must lie in exactly one block.
pub struct BlockMeanDeflated<'a, O> {
    inner: &'a O,
    blocks: Vec<Vec<usize>>,
}

impl<'a, O: SymmetricOperator> BlockMeanDeflated<'a, O> {
    pub fn new(inner: &'a O, blocks: Vec<Vec<usize>>) -> Self {
        BlockMeanDeflated { inner, blocks }
    }

    /// Single block covering the whole index range.
    pub fn whole(inner: &'a O) -> Self {
        let n = inner.dim();
        Self::new(inner, vec![(0..n).collect()])
    }
}

impl<O: SymmetricOperator> SymmetricOperator for BlockMeanDeflated<'_, O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.inner.apply(x, y);
        for block in &self.blocks {
            let mean = block.iter().map(|&i| x[i]).sum::<f64>() / block.len() as f64;
            for &i in block {
                y[i] -= mean;
            }
        }
    }

    fn fingerprint(&self) -> u64 {
        let mut h = StableHasher::default();
        self.inner.fingerprint().hash(&mut h);
        self.blocks.hash(&mut h);
        h.finish()
    }
}

/// `x ↦ Tᵀ T x`.
struct Gram<'a> {
    op: &'a FinitePropOp<f64>,
    transpose: FinitePropOp<f64>,
}

impl SymmetricOperator for Gram<'_> {
    fn dim(&self) -> usize {
        FinitePropOp::dim(self.op)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut tmp = vec![0.0; x.len()];
        SymmetricOperator::apply(self.op, x, &mut tmp);
        SymmetricOperator::apply(&self.transpose, &tmp, y);
    }

    fn fingerprint(&self) -> u64 {
        self.op.fingerprint().rotate_left(17) ^ 0x9e37_79b9_7f4a_7c15
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Largest |eigenvalue| of a self-adjoint operator, after validating
/// symmetry entrywise to `1e-12` relative.
pub fn sym_extreme_eig(t: &FinitePropOp<f64>, cfg: &SpectralConfig) -> Result<SpectralResult, SpectralError> {
    if !t.is_self_adjoint(1e-12) {
        return Err(SpectralError::NotSymmetric);
    }
    max_abs_eig(t, cfg)
}

/// Largest singular value: the square root of the top eigenvalue of `T*T`,
/// or directly the largest |eigenvalue| when `T` is self-adjoint.
pub fn op_norm(t: &FinitePropOp<f64>, cfg: &SpectralConfig) -> Result<SpectralResult, SpectralError> {
    if t.is_self_adjoint(1e-12) {
        return max_abs_eig(t, cfg);
    }
    let gram = Gram { op: t, transpose: t.adjoint() };
    let mut r = max_abs_eig(&gram, cfg)?;
    r.value = r.value.max(0.0).sqrt();
    Ok(r)
}

/// Largest |eigenvalue| of a symmetric operator whose symmetry the caller
/// guarantees.
pub fn max_abs_eig<O: SymmetricOperator + ?Sized>(
    op: &O,
    cfg: &SpectralConfig,
) -> Result<SpectralResult, SpectralError> {
    let seed = cfg.seed.unwrap_or_else(|| op.fingerprint());
    let n = op.dim();
    if n == 0 {
        return Ok(SpectralResult { value: 0.0, method: Method::Dense, iterations: 0, residual: 0.0, seed });
    }
    if n <= cfg.dense_limit {
        dense_max_abs(op, seed)
    } else {
        lanczos_max_abs(op, cfg, seed)
    }
}

/// All eigenvalues in ascending order, via the dense path.
pub fn dense_eigenvalues<O: SymmetricOperator + ?Sized>(op: &O) -> Vec<f64> {
    dense_eigenvalues_of(&op.to_dense())
}

/// Ascending eigenvalues of a symmetric dense matrix.
pub fn dense_eigenvalues_of(m: &DMatrix<f64>) -> Vec<f64> {
    let mut vals: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

fn dense_max_abs<O: SymmetricOperator + ?Sized>(op: &O, seed: u64) -> Result<SpectralResult, SpectralError> {
    let n = op.dim();
    let eig = SymmetricEigen::new(op.to_dense());
    let (idx, lambda) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .expect("nonempty");
    let v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
    let mut tv = vec![0.0; n];
    op.apply(&v, &mut tv);
    let residual = tv.iter().zip(&v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt() / norm(&v);
    Ok(SpectralResult {
        value: lambda.abs(),
        method: Method::Dense,
        iterations: 0,
        residual,
        seed,
    })
}

/// Three-term Lanczos recurrence. Both passes drive the same code, so the
/// regenerated vectors match the first pass bit for bit.
struct LanczosState {
    q_prev: Vec<f64>,
    q: Vec<f64>,
    w: Vec<f64>,
    beta_prev: f64,
}

impl LanczosState {
    fn new(start: &[f64]) -> Self {
        LanczosState {
            q_prev: vec![0.0; start.len()],
            q: start.to_vec(),
            w: vec![0.0; start.len()],
            beta_prev: 0.0,
        }
    }

    /// One step; returns `(alpha, beta)` and leaves `w` holding the unnormalised next vector.
    fn step<O: SymmetricOperator + ?Sized>(&mut self, op: &O) -> (f64, f64) {
        op.apply(&self.q, &mut self.w);
        for (w, p) in self.w.iter_mut().zip(&self.q_prev) {
            *w -= self.beta_prev * p;
        }
        let alpha = dot(&self.w, &self.q);
        for (w, q) in self.w.iter_mut().zip(&self.q) {
            *w -= alpha * q;
        }
        (alpha, norm(&self.w))
    }

    fn advance(&mut self, beta: f64) {
        std::mem::swap(&mut self.q_prev, &mut self.q);
        for (q, w) in self.q.iter_mut().zip(&self.w) {
            *q = w / beta;
        }
        self.beta_prev = beta;
    }
}

fn start_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nv = norm(&v);
    for x in &mut v {
        *x /= nv;
    }
    v
}

fn lanczos_max_abs<O: SymmetricOperator + ?Sized>(
    op: &O,
    cfg: &SpectralConfig,
    seed: u64,
) -> Result<SpectralResult, SpectralError> {
    let n = op.dim();
    let max_iter = cfg.max_iter.unwrap_or(10 * n).max(1);
    let start = start_vector(n, seed);
    let mut state = LanczosState::new(&start);
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut next_check = 8;
    let mut last_residual = f64::INFINITY;

    for m in 1..=max_iter {
        let (alpha, beta) = state.step(op);
        alphas.push(alpha);
        let scale = alphas.iter().map(|a| a.abs()).fold(beta, f64::max).max(f64::MIN_POSITIVE);
        let breakdown = beta <= 1e-14 * scale;

        if m >= next_check || breakdown || m == max_iter {
            let ritz = extreme_ritz(&alphas, &betas);
            let norm_est = ritz.spectral_radius.max(f64::MIN_POSITIVE);
            let estimate = if breakdown { 0.0 } else { beta * ritz.vector[m - 1].abs() };
            if estimate <= cfg.tol * norm_est {
                let (value, residual) = ritz_pair(op, &start, m, &ritz.vector);
                last_residual = residual;
                if residual <= cfg.tol * norm_est.max(value.abs()) || (breakdown && residual <= 1e3 * cfg.tol * norm_est) {
                    return Ok(SpectralResult {
                        value: value.abs(),
                        method: Method::Iterative,
                        iterations: m,
                        residual,
                        seed,
                    });
                }
            }
            if breakdown {
                break;
            }
            next_check = m + (m / 8).max(8);
        }
        betas.push(beta);
        state.advance(beta);
    }
    Err(SpectralError::NoConvergence { iterations: alphas.len(), residual: last_residual })
}

/// Rebuilds the Ritz vector `Σ s_j q_j` and returns its Rayleigh quotient
/// and true residual norm.
fn ritz_pair<O: SymmetricOperator + ?Sized>(op: &O, start: &[f64], m: usize, s: &[f64]) -> (f64, f64) {
    let n = start.len();
    let mut state = LanczosState::new(start);
    let mut y = vec![0.0; n];
    for (j, &sj) in s.iter().enumerate().take(m) {
        for (yi, qi) in y.iter_mut().zip(&state.q) {
            *yi += sj * qi;
        }
        if j + 1 < m {
            let (_, beta) = state.step(op);
            state.advance(beta);
        }
    }
    let ny = norm(&y);
    for v in &mut y {
        *v /= ny;
    }
    let mut ty = vec![0.0; n];
    op.apply(&y, &mut ty);
    let rq = dot(&y, &ty);
    let residual = ty.iter().zip(&y).map(|(a, b)| (a - rq * b).powi(2)).sum::<f64>().sqrt();
    (rq, residual)
}

struct Ritz {
    vector: Vec<f64>,
    spectral_radius: f64,
}

/// The Ritz value of largest magnitude for the tridiagonal matrix with
/// diagonal `alphas` and off-diagonal `betas`, and its unit eigenvector.
fn extreme_ritz(alphas: &[f64], betas: &[f64]) -> Ritz {
    let m = alphas.len();
    let top = kth_eigenvalue(alphas, betas, m - 1);
    let bottom = kth_eigenvalue(alphas, betas, 0);
    let theta = if top.abs() >= bottom.abs() { top } else { bottom };
    Ritz {
        vector: tridiagonal_eigenvector(alphas, betas, theta),
        spectral_radius: top.abs().max(bottom.abs()),
    }
}

/// Number of eigenvalues strictly below `x` (Sturm sequence).
fn count_below(alphas: &[f64], betas: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for (i, &a) in alphas.iter().enumerate() {
        let b2 = if i == 0 { 0.0 } else { betas[i - 1] * betas[i - 1] };
        d = a - x - if i == 0 { 0.0 } else { b2 / d };
        if d == 0.0 {
            d = -f64::EPSILON * (a.abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// `k`-th smallest eigenvalue by bisection on Gershgorin bounds.
fn kth_eigenvalue(alphas: &[f64], betas: &[f64], k: usize) -> f64 {
    let m = alphas.len();
    let off = |i: usize| -> f64 {
        let left = if i > 0 { betas[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < m { betas[i].abs() } else { 0.0 };
        left + right
    };
    let mut lo = (0..m).map(|i| alphas[i] - off(i)).fold(f64::INFINITY, f64::min);
    let mut hi = (0..m).map(|i| alphas[i] + off(i)).fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo).max(f64::MIN_POSITIVE);
    lo -= width * 1e-12;
    hi += width * 1e-12;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(alphas, betas, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Inverse iteration for the eigenvector of a symmetric tridiagonal matrix
/// belonging to the (approximate) eigenvalue `theta`.
fn tridiagonal_eigenvector(alphas: &[f64], betas: &[f64], theta: f64) -> Vec<f64> {
    let m = alphas.len();
    if m == 1 {
        return vec![1.0];
    }
    let scale = alphas.iter().chain(betas).map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let shift = theta + scale * 4.0 * f64::EPSILON;
    let mut v = vec![1.0 / (m as f64).sqrt(); m];
    for _ in 0..3 {
        let diag: Vec<f64> = alphas.iter().map(|a| a - shift).collect();
        solve_tridiagonal(&betas[..m - 1], &diag, &betas[..m - 1], &mut v, scale);
        let nv = norm(&v);
        if !nv.is_finite() || nv == 0.0 {
            v = vec![1.0 / (m as f64).sqrt(); m];
            break;
        }
        for x in &mut v {
            *x /= nv;
        }
    }
    v
}

/// Gaussian elimination with partial pivoting for a general tridiagonal
/// system; solves in place. Zero pivots are replaced by a tiny multiple of
/// `scale`, which is what inverse iteration wants.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], b: &mut [f64], scale: f64) {
    let n = diag.len();
    let tiny = scale * f64::EPSILON * f64::EPSILON;
    let mut dl = sub.to_vec();
    let mut d = diag.to_vec();
    let mut du = sup.to_vec();
    let guard = |x: f64| if x == 0.0 { tiny } else { x };
    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            d[i] = guard(d[i]);
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            b[i + 1] -= fact * b[i];
            dl[i] = 0.0;
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 2 < n {
                dl[i] = du[i + 1];
                du[i + 1] = -fact * dl[i];
            } else {
                dl[i] = 0.0;
            }
            du[i] = temp;
            let tb = b[i];
            b[i] = b[i + 1];
            b[i + 1] = tb - fact * b[i + 1];
        }
    }
    d[n - 1] = guard(d[n - 1]);
    b[n - 1] /= d[n - 1];
    if n > 1 {
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - dl[i] * b[i + 2]) / d[i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::FiniteSpace;
    use std::sync::Arc;

    fn cycle(n: usize) -> Arc<FiniteSpace> {
        Arc::new(FiniteSpace::from_graph("cycle", n, (0..n).map(|i| (i, (i + 1) % n))).unwrap())
    }

    /// `I/2 + Adj/4` on a cycle, the two-matching averaging operator.
    fn cycle_average(n: usize) -> FinitePropOp<f64> {
        let s = cycle(n);
        let entries = (0..n).flat_map(|x| [(x, x, 0.5), (x, (x + 1) % n, 0.25), (x, (x + n - 1) % n, 0.25)]);
        FinitePropOp::from_entries(&s, entries).unwrap()
    }

    #[test]
    fn diagonal_example() {
        let s = Arc::new(FiniteSpace::from_graph("pair", 2, [(0, 1)]).unwrap());
        let d = FinitePropOp::diagonal(&s, vec![3.0, -5.0]).unwrap();
        let r = sym_extreme_eig(&d, &SpectralConfig::default()).unwrap();
        assert_eq!(r.value, 5.0);
        assert_eq!(r.method, Method::Dense);
    }

    #[test]
    fn rejects_nonsymmetric() {
        let s = Arc::new(FiniteSpace::from_graph("pair", 2, [(0, 1)]).unwrap());
        let t = FinitePropOp::from_entries(&s, [(0, 1, 1.0)]).unwrap();
        assert_eq!(sym_extreme_eig(&t, &SpectralConfig::default()).unwrap_err(), SpectralError::NotSymmetric);
    }

    #[test]
    fn c4_deflated_average() {
        let a = cycle_average(4);
        let r = max_abs_eig(&BlockMeanDeflated::whole(&a), &SpectralConfig::default()).unwrap();
        assert!((r.value - 0.5).abs() < 1e-14);
        let eig = dense_eigenvalues(&a);
        for (got, want) in eig.iter().zip([0.0, 0.5, 0.5, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn norms_of_simple_operators() {
        let s = cycle(5);
        let cfg = SpectralConfig::default();
        let shift = FinitePropOp::from_entries(&s, (0..5).map(|x| ((x + 1) % 5, x, 1.0))).unwrap();
        assert!((op_norm(&shift, &cfg).unwrap().value - 1.0).abs() < 1e-12);
        let avg = FinitePropOp::from_entries(&s, (0..5).flat_map(|x| (0..5).map(move |y| (x, y, 0.2)))).unwrap();
        assert!((op_norm(&avg, &cfg).unwrap().value - 1.0).abs() < 1e-12);
        assert_eq!(op_norm(&FinitePropOp::zero(&s), &cfg).unwrap().value, 0.0);
    }

    #[test]
    fn lanczos_matches_dense_on_moderate_cycle() {
        let a = cycle_average(200);
        let defl = BlockMeanDeflated::whole(&a);
        let dense = max_abs_eig(&defl, &SpectralConfig::default()).unwrap();
        let iter_cfg = SpectralConfig { dense_limit: 0, ..Default::default() };
        let iterative = max_abs_eig(&defl, &iter_cfg).unwrap();
        assert_eq!(iterative.method, Method::Iterative);
        let exact = 0.5 + 0.5 * (2.0 * std::f64::consts::PI / 200.0).cos();
        assert!((dense.value - exact).abs() < 1e-12);
        assert!((iterative.value - exact).abs() < 1e-10, "{} vs {exact}", iterative.value);
        assert!(iterative.residual <= 1e-10);
    }

    #[test]
    fn large_cycle_average_gap() {
        let n = 4096;
        let a = cycle_average(n);
        let r = max_abs_eig(&BlockMeanDeflated::whole(&a), &SpectralConfig::default()).unwrap();
        assert_eq!(r.method, Method::Iterative);
        let exact = 0.5 + 0.5 * (2.0 * std::f64::consts::PI / n as f64).cos();
        assert!((r.value - exact).abs() < 1e-9, "{} vs {exact} after {} steps", r.value, r.iterations);
    }

    #[test]
    fn lanczos_on_zero_operator() {
        let s = cycle(10);
        let z = FinitePropOp::<f64>::zero(&s);
        let cfg = SpectralConfig { dense_limit: 0, ..Default::default() };
        let r = max_abs_eig(&z, &cfg).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn lanczos_is_reproducible() {
        let a = cycle_average(300);
        let defl = BlockMeanDeflated::whole(&a);
        let cfg = SpectralConfig { dense_limit: 0, ..Default::default() };
        let r1 = max_abs_eig(&defl, &cfg).unwrap();
        let r2 = max_abs_eig(&defl, &cfg).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn tridiagonal_solver_matches_dense() {
        let sub = [1.0, -2.0, 0.5];
        let diag = [0.0, 3.0, 1.0, -1.0];
        let sup = [4.0, 1.0, 2.0];
        let mut b = vec![1.0, 2.0, 3.0, 4.0];
        solve_tridiagonal(&sub, &diag, &sup, &mut b, 4.0);
        let m = DMatrix::from_row_slice(4, 4, &[0.0, 4.0, 0.0, 0.0, 1.0, 3.0, 1.0, 0.0, 0.0, -2.0, 1.0, 2.0, 0.0, 0.0, 0.5, -1.0]);
        let x = nalgebra::DVector::from_vec(b);
        let back = &m * &x;
        for (got, want) in back.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn sturm_bisection_finds_extremes() {
        // Path graph adjacency on 5 vertices: eigenvalues 2cos(kπ/6).
        let alphas = [0.0; 5];
        let betas = [1.0; 4];
        let top = kth_eigenvalue(&alphas, &betas, 4);
        let bottom = kth_eigenvalue(&alphas, &betas, 0);
        let want = 2.0 * (std::f64::consts::PI / 6.0).cos();
        assert!((top - want).abs() < 1e-14);
        assert!((bottom + want).abs() < 1e-14);
    }
}

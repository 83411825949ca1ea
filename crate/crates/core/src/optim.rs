//! Multi-restart local optimization on real parameter vectors.
//!
//! Complex matrices are packed as interleaved `(re, im)` pairs. A complex
//! "gradient" `Γ` means `∂f/∂Re z + i ∂f/∂Im z`, so `df = Re tr(Γ† dz)`.
//! Two smooth parametrizations are provided:
//!
//! * [`StateBlocks`]: `σ_k = M_k M_k† / Σ_j tr(M_j M_j†)`, covering input
//!   states and subnormalized ensemble members whose weights sum to one;
//! * [`PolarIsometry`]: `V = A (A†A)^{-1/2}`, covering isometries (Kraus
//!   rotations, POVMs, decompositions).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rand_chacha::ChaCha20Rng;

use crate::linops::{cr, eigh, identity, re_inner, rng_from_seed, ComplexMatrix};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LbfgsOptions {
    pub max_iter: usize,
    pub memory: usize,
    /// Stop when the max-norm of the gradient falls below this.
    pub grad_tol: f64,
    /// Stop when the objective improved by less than `stall_tol` over the
    /// last `stall_window` iterations.
    pub stall_tol: f64,
    pub stall_window: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            memory: 12,
            grad_tol: 1e-9,
            stall_tol: 1e-8,
            stall_window: 50,
        }
    }
}

impl LbfgsOptions {
    /// Cheaper settings for inner problems of nested optimizations.
    pub fn inner() -> Self {
        Self {
            max_iter: 300,
            memory: 8,
            grad_tol: 1e-8,
            stall_tol: 1e-11,
            stall_window: 8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Limited-memory BFGS with Armijo backtracking.
pub fn minimize<F>(mut f: F, x0: Vec<f64>, opts: &LbfgsOptions) -> Minimum
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    if n == 0 || !fx.is_finite() {
        return Minimum { x, value: fx, iterations: 0, grad_norm: 0.0, converged: n == 0 };
    }
    let mut hist_s: Vec<Vec<f64>> = Vec::new();
    let mut hist_y: Vec<Vec<f64>> = Vec::new();
    let mut hist_rho: Vec<f64> = Vec::new();
    let mut values = vec![fx];
    let mut xn = vec![0.0; n];
    let mut gn = vec![0.0; n];
    let mut converged = false;
    let mut iter = 0;

    while iter < opts.max_iter {
        if max_abs(&g) < opts.grad_tol {
            converged = true;
            break;
        }
        // two-loop recursion
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let k = hist_s.len();
        let mut alpha = vec![0.0; k];
        for i in (0..k).rev() {
            alpha[i] = hist_rho[i] * dot(&hist_s[i], &d);
            for (dj, yj) in d.iter_mut().zip(&hist_y[i]) {
                *dj -= alpha[i] * yj;
            }
        }
        if k > 0 {
            let gamma = dot(&hist_s[k - 1], &hist_y[k - 1]) / dot(&hist_y[k - 1], &hist_y[k - 1]);
            d.iter_mut().for_each(|v| *v *= gamma);
        }
        for i in 0..k {
            let beta = hist_rho[i] * dot(&hist_y[i], &d);
            for (dj, sj) in d.iter_mut().zip(&hist_s[i]) {
                *dj += (alpha[i] - beta) * sj;
            }
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) || !slope.is_finite() {
            hist_s.clear();
            hist_y.clear();
            hist_rho.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let mut step = if hist_s.is_empty() {
            (1.0 / dot(&d, &d).sqrt()).min(1.0)
        } else {
            1.0
        };
        let mut accepted = false;
        for _ in 0..50 {
            for i in 0..n {
                xn[i] = x[i] + step * d[i];
            }
            let fnew = f(&xn, &mut gn);
            if fnew.is_finite() && fnew <= fx + 1e-4 * step * slope {
                let s: Vec<f64> = (0..n).map(|i| xn[i] - x[i]).collect();
                let y: Vec<f64> = (0..n).map(|i| gn[i] - g[i]).collect();
                let sy = dot(&s, &y);
                if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
                    if hist_s.len() == opts.memory {
                        hist_s.remove(0);
                        hist_y.remove(0);
                        hist_rho.remove(0);
                    }
                    hist_s.push(s);
                    hist_y.push(y);
                    hist_rho.push(1.0 / sy);
                }
                std::mem::swap(&mut x, &mut xn);
                std::mem::swap(&mut g, &mut gn);
                fx = fnew;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        iter += 1;
        if !accepted {
            if hist_s.is_empty() {
                converged = true;
                break;
            }
            hist_s.clear();
            hist_y.clear();
            hist_rho.clear();
            continue;
        }
        values.push(fx);
        let w = opts.stall_window;
        if values.len() > w && values[values.len() - 1 - w] - fx < opts.stall_tol {
            converged = true;
            break;
        }
    }
    Minimum { grad_norm: max_abs(&g), x, value: fx, iterations: iter, converged }
}

// ---------------------------------------------------------------------------
// Complex packing

pub fn pack_into(ms: &[&ComplexMatrix], out: &mut Vec<f64>) {
    for m in ms {
        // row-major traversal for a stable layout
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.push(m[(i, j)].re);
                out.push(m[(i, j)].im);
            }
        }
    }
}

pub fn pack(ms: &[&ComplexMatrix]) -> Vec<f64> {
    let mut out = Vec::new();
    pack_into(ms, &mut out);
    out
}

/// Unpack matrices of the given shapes starting at `offset`; returns the new offset.
pub fn unpack(x: &[f64], offset: usize, shapes: &[(usize, usize)]) -> (Vec<ComplexMatrix>, usize) {
    let mut pos = offset;
    let ms = shapes
        .iter()
        .map(|&(r, c)| {
            let m = ComplexMatrix::from_fn(r, c, |i, j| {
                let k = pos + 2 * (i * c + j);
                crate::linops::c(x[k], x[k + 1])
            });
            pos += 2 * r * c;
            m
        })
        .collect();
    (ms, pos)
}

/// Write complex gradients into the real gradient slice at `offset`.
pub fn write_grad(g: &mut [f64], offset: usize, grads: &[ComplexMatrix]) -> usize {
    let mut pos = offset;
    for m in grads {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                g[pos] = m[(i, j)].re;
                g[pos + 1] = m[(i, j)].im;
                pos += 2;
            }
        }
    }
    pos
}

// ---------------------------------------------------------------------------
// Parametrizations

/// Blocks `σ_k = M_k M_k† / W` with `W = Σ tr(M_j M_j†)`, so `Σ tr σ_k = 1`.
#[derive(Clone, Debug)]
pub struct StateBlocks {
    pub dim: usize,
    pub ranks: Vec<usize>,
}

pub struct BlockEval {
    pub factors: Vec<ComplexMatrix>,
    pub sigmas: Vec<ComplexMatrix>,
    pub weight: f64,
}

impl StateBlocks {
    pub fn new(dim: usize, ranks: Vec<usize>) -> Self {
        Self { dim, ranks }
    }

    pub fn uniform(dim: usize, count: usize, rank: usize) -> Self {
        Self::new(dim, vec![rank; count])
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.ranks.iter().map(|&r| (self.dim, r)).collect()
    }

    pub fn num_params(&self) -> usize {
        self.ranks.iter().map(|r| 2 * r * self.dim).sum()
    }

    pub fn eval(&self, x: &[f64], offset: usize) -> BlockEval {
        let (factors, _) = unpack(x, offset, &self.shapes());
        let weight: f64 = factors.iter().map(|m| m.norm_squared()).sum::<f64>().max(1e-300);
        let sigmas = factors.iter().map(|m| m * m.adjoint() / cr(weight)).collect();
        BlockEval { factors, sigmas, weight }
    }

    /// Chain rule from Hermitian `G_k = ∂f/∂σ_k` to the real gradient.
    pub fn pullback(&self, ev: &BlockEval, grads: &[ComplexMatrix], g: &mut [f64], offset: usize) {
        let c: f64 = grads
            .iter()
            .zip(&ev.sigmas)
            .map(|(gk, sk)| (gk * sk).trace().re)
            .sum();
        let out: Vec<ComplexMatrix> = grads
            .iter()
            .zip(&ev.factors)
            .map(|(gk, mk)| (gk * mk - mk * cr(c)) * cr(2.0 / ev.weight))
            .collect();
        write_grad(g, offset, &out);
    }

    /// Parameters reproducing the given factors exactly.
    pub fn params_from_factors(factors: &[ComplexMatrix]) -> Vec<f64> {
        pack(&factors.iter().collect::<Vec<_>>())
    }

    /// Parameters whose blocks equal `p_k ρ_k` for the given PSD members.
    pub fn params_from_states(&self, members: &[ComplexMatrix]) -> Vec<f64> {
        let factors: Vec<ComplexMatrix> = members
            .iter()
            .zip(&self.ranks)
            .map(|(m, &r)| psd_factor(m, r))
            .collect();
        Self::params_from_factors(&factors)
    }
}

/// `F` (`d × r`) with `F F† ≈ X`, keeping the `r` largest eigenvalues.
pub fn psd_factor(x: &ComplexMatrix, r: usize) -> ComplexMatrix {
    let d = x.nrows();
    let (vals, vecs) = eigh(x);
    let mut f = ComplexMatrix::zeros(d, r);
    for k in 0..r.min(d) {
        let idx = d - 1 - k;
        let s = cr(vals[idx].max(0.0).sqrt());
        for a in 0..d {
            f[(a, k)] = vecs[(a, idx)] * s;
        }
    }
    f
}

/// Isometries `V = A (A†A)^{-1/2}` (`m × r`, `m ≥ r`).
#[derive(Clone, Copy, Debug)]
pub struct PolarIsometry {
    pub rows: usize,
    pub cols: usize,
}

pub struct PolarEval {
    pub a: ComplexMatrix,
    pub v: ComplexMatrix,
    inv_sqrt: ComplexMatrix,
    s_vals: Vec<f64>,
    s_vecs: ComplexMatrix,
}

impl PolarIsometry {
    pub fn new(rows: usize, cols: usize) -> Self {
        assert!(rows >= cols, "isometry needs rows >= cols");
        Self { rows, cols }
    }

    pub fn num_params(&self) -> usize {
        2 * self.rows * self.cols
    }

    pub fn eval(&self, x: &[f64], offset: usize) -> PolarEval {
        let (mut ms, _) = unpack(x, offset, &[(self.rows, self.cols)]);
        let a = ms.pop().expect("one matrix");
        let s = a.adjoint() * &a;
        let (vals, vecs) = eigh(&s);
        let s_vals: Vec<f64> = vals.iter().map(|&l| l.max(1e-300)).collect();
        let mut scaled = vecs.clone();
        for (k, &l) in s_vals.iter().enumerate() {
            scaled.column_mut(k).iter_mut().for_each(|z| *z *= cr(1.0 / l.sqrt()));
        }
        let inv_sqrt = scaled * vecs.adjoint();
        let v = &a * &inv_sqrt;
        PolarEval { a, v, inv_sqrt, s_vals, s_vecs: vecs }
    }

    /// Chain rule from the complex gradient with respect to `V`.
    pub fn pullback(&self, ev: &PolarEval, grad_v: &ComplexMatrix, g: &mut [f64], offset: usize) {
        let r = self.cols;
        let y = ev.a.adjoint() * grad_v;
        let yh = (&y + y.adjoint()) * cr(0.5);
        let yt = ev.s_vecs.adjoint() * yh * &ev.s_vecs;
        let mut z = ComplexMatrix::zeros(r, r);
        for i in 0..r {
            for j in 0..r {
                let (si, sj) = (ev.s_vals[i], ev.s_vals[j]);
                let l = if (si - sj).abs() <= 1e-12 * si.max(sj) {
                    -0.5 * si.powf(-1.5)
                } else {
                    (si.powf(-0.5) - sj.powf(-0.5)) / (si - sj)
                };
                z[(i, j)] = yt[(i, j)] * cr(l);
            }
        }
        let w = &ev.s_vecs * z * ev.s_vecs.adjoint();
        let grad_a = grad_v * &ev.inv_sqrt + &ev.a * w * cr(2.0);
        write_grad(g, offset, &[grad_a]);
    }

    pub fn params_from(&self, v: &ComplexMatrix) -> Vec<f64> {
        assert_eq!(v.shape(), (self.rows, self.cols));
        pack(&[v])
    }

    /// `[I; 0]` padded identity.
    pub fn identity_params(&self) -> Vec<f64> {
        let v = ComplexMatrix::from_fn(self.rows, self.cols, |i, j| if i == j { cr(1.0) } else { cr(0.0) });
        self.params_from(&v)
    }
}

pub fn random_params<R: rand::Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

// ---------------------------------------------------------------------------
// Restarts and seeds

/// Per-operation seed derived from `(master, op, index)`.
pub fn derive_seed(master: u64, op: &str, index: u64) -> u64 {
    // FNV-1a over the tag, then a SplitMix64 finalizer.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in op.bytes().chain(master.to_le_bytes()).chain(index.to_le_bytes()) {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Run `restarts` independent starts in parallel and keep the lowest value.
///
/// Ties break toward the lower restart index, so the result is deterministic.
pub fn best_of<T, F>(restarts: usize, run: F) -> (T, f64, Vec<f64>)
where
    T: Send,
    F: Fn(usize) -> (T, f64) + Sync,
{
    let results: Vec<(T, f64)> = (0..restarts.max(1)).into_par_iter().map(&run).collect();
    let values: Vec<f64> = results.iter().map(|r| r.1).collect();
    let mut best_idx = 0;
    for (i, v) in values.iter().enumerate() {
        if v.is_finite() && (!values[best_idx].is_finite() || *v < values[best_idx]) {
            best_idx = i;
        }
    }
    let best = results.into_iter().nth(best_idx).expect("at least one restart");
    (best.0, best.1, values)
}

/// How a reported number relates to the true optimum.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum BoundDirection {
    /// A feasible point was evaluated exactly; the true optimum is at least this.
    CertifiedLower,
    /// The true optimum is at most this.
    CertifiedUpper,
    /// Concave problem solved to the certificate tolerance.
    CertifiedExact,
    /// Nested or nonconvex problem without a one-sided guarantee.
    Heuristic,
}

/// Budget shared by every optimizer entry point.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SolverOptions {
    pub restarts: usize,
    pub seed: u64,
    pub lbfgs: LbfgsOptions,
    /// Outer loop of nested (max-min / min-max) problems.
    pub outer: LbfgsOptions,
    /// Inner solves of nested problems.
    pub inner: LbfgsOptions,
    pub inner_restarts: usize,
    /// Override for ensemble / decomposition sizes.
    pub ensemble_cap: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            seed: 0,
            lbfgs: LbfgsOptions::default(),
            outer: LbfgsOptions {
                max_iter: 400,
                memory: 10,
                grad_tol: 1e-7,
                stall_tol: 1e-9,
                stall_window: 20,
            },
            inner: LbfgsOptions::inner(),
            inner_restarts: 3,
            ensemble_cap: None,
        }
    }
}

impl SolverOptions {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts.max(1);
        self
    }

    pub fn rng(&self, op: &str, index: u64) -> ChaCha20Rng {
        rng_from_seed(derive_seed(self.seed, op, index))
    }

    /// Same budget, seed re-derived for a sub-task.
    pub fn child(&self, op: &str, index: u64) -> Self {
        let mut o = self.clone();
        o.seed = derive_seed(self.seed, op, index);
        o
    }
}

/// Restart statistics attached to reports.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct Diagnostics {
    pub restarts: usize,
    pub best_restart: usize,
    pub restart_values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl Diagnostics {
    pub fn from_values(values: Vec<f64>, maximize: bool) -> Self {
        let mut best = 0;
        for (i, v) in values.iter().enumerate() {
            let better = if maximize { *v > values[best] } else { *v < values[best] };
            if better {
                best = i;
            }
        }
        Self { restarts: values.len(), best_restart: best, restart_values: values, ..Default::default() }
    }
}

/// Result of maximizing a concave function of a density matrix.
#[derive(Clone, Debug)]
pub struct ConcaveMax {
    pub rho: ComplexMatrix,
    pub value: f64,
    /// `λ_max(∇f) − tr(ρ ∇f)`, an upper bound on `f* − f(ρ)`.
    pub fw_gap: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Gap below which a concave maximization counts as solved.
pub const CERTIFICATE_TOL: f64 = 1e-6;

/// Maximize a concave `f(ρ)` given as `ρ ↦ (f, ∂f/∂ρ)`.
pub fn maximize_concave<F>(d: usize, mut f: F, start: Option<&ComplexMatrix>, opts: &LbfgsOptions) -> ConcaveMax
where
    F: FnMut(&ComplexMatrix) -> (f64, ComplexMatrix),
{
    let blocks = StateBlocks::uniform(d, 1, d);
    let x0 = match start {
        Some(r) => blocks.params_from_states(std::slice::from_ref(r)),
        None => blocks.params_from_states(&[identity(d) * cr(1.0 / d as f64)]),
    };
    let m = minimize(
        |x, g| {
            let ev = blocks.eval(x, 0);
            let (v, grad) = f(&ev.sigmas[0]);
            let neg = -grad;
            blocks.pullback(&ev, std::slice::from_ref(&neg), g, 0);
            -v
        },
        x0,
        opts,
    );
    let rho = blocks.eval(&m.x, 0).sigmas.remove(0);
    let (value, grad) = f(&rho);
    let lmax = crate::linops::eigvalsh(&crate::linops::hermitize(&grad))
        .last()
        .copied()
        .unwrap_or(0.0);
    let fw_gap = (lmax - re_inner(&grad, &rho)).max(0.0);
    ConcaveMax { rho, value, fw_gap, grad_norm: m.grad_norm, iterations: m.iterations }
}

/// `I` of size `d` (convenience re-export for callers building seeds).
pub fn eye(d: usize) -> ComplexMatrix {
    identity(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{isometry_defect, rng_from_seed};

    #[test]
    fn lbfgs_solves_rosenbrock() {
        let f = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let m = minimize(f, vec![-1.2, 1.0], &LbfgsOptions::default());
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5, "{:?}", m.x);
    }

    fn fd_check<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], g: &[f64]) {
        let h = 1e-6;
        for i in 0..x.len() {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            let fd = (f(&xp) - f(&xm)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6 * (1.0 + fd.abs()), "param {i}: fd {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn block_pullback_matches_finite_differences() {
        let mut rng = rng_from_seed(3);
        let blocks = StateBlocks::new(3, vec![2, 1, 3]);
        let x = random_params(blocks.num_params(), &mut rng);
        let targets: Vec<ComplexMatrix> = (0..3)
            .map(|_| crate::linops::hermitize(&crate::linops::gaussian_matrix(3, 3, &mut rng)))
            .collect();
        let obj = |x: &[f64]| {
            let ev = blocks.eval(x, 0);
            ev.sigmas.iter().zip(&targets).map(|(s, t)| re_inner(t, s)).sum::<f64>()
        };
        let ev = blocks.eval(&x, 0);
        let mut g = vec![0.0; x.len()];
        blocks.pullback(&ev, &targets, &mut g, 0);
        fd_check(obj, &x, &g);
        let tr: f64 = ev.sigmas.iter().map(|s| s.trace().re).sum();
        assert!((tr - 1.0).abs() < 1e-12);
    }

    #[test]
    fn polar_pullback_matches_finite_differences() {
        let mut rng = rng_from_seed(4);
        let p = PolarIsometry::new(4, 2);
        let x = random_params(p.num_params(), &mut rng);
        let t = crate::linops::gaussian_matrix(4, 2, &mut rng);
        let obj = |x: &[f64]| {
            let v = p.eval(x, 0).v;
            // quartic test objective: Re tr(T† V) + |V_00|^4
            re_inner(&t, &v) + v[(0, 0)].norm_sqr().powi(2)
        };
        let ev = p.eval(&x, 0);
        assert!(isometry_defect(&ev.v) < 1e-12);
        let v00 = ev.v[(0, 0)];
        let mut gv = t.clone();
        gv[(0, 0)] += v00 * cr(4.0 * v00.norm_sqr());
        let mut g = vec![0.0; x.len()];
        p.pullback(&ev, &gv, &mut g, 0);
        fd_check(obj, &x, &g);
    }

    #[test]
    fn best_of_is_deterministic() {
        let (i, v, all) = best_of(6, |i| (i, ((i as f64) - 3.2).abs()));
        assert_eq!(i, 3);
        assert!((v - 0.2).abs() < 1e-12);
        assert_eq!(all.len(), 6);
    }

    #[test]
    fn seeds_differ_by_tag_and_index() {
        let a = derive_seed(1, "chi", 0);
        assert_eq!(a, derive_seed(1, "chi", 0));
        assert_ne!(a, derive_seed(1, "chi", 1));
        assert_ne!(a, derive_seed(1, "q1", 0));
        assert_ne!(a, derive_seed(2, "chi", 0));
    }
}

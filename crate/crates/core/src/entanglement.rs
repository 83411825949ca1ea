//! Entanglement measures on bipartite states `B ⊗ E`: entanglement of
//! formation, the one-way measured quantity `C_←`, the `G` measure and PPT
//! screening.
//!
//! Every function expects a [`DensityMatrix`] whose dims have exactly two
//! subsystems; the first is `B`, the second `E`.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::entropics::{entropy_of_matrix, homogeneous_entropy, homogeneous_entropy_grad};
use crate::error::{Error, Result};
use crate::linops::{
    cr, eigh, eigvalsh, hermitize, identity, kron, partial_transpose_second, ptrace_second,
    ComplexMatrix, ComplexVector, DensityMatrix, PureState, SystemDims, TOL_PSD,
};
use crate::optim::{
    best_of, minimize, random_params, BoundDirection, Diagnostics, LbfgsOptions, PolarIsometry,
    SolverOptions,
};

/// Reconstruction tolerance for decompositions.
pub const TOL_DECOMP: f64 = 1e-7;

pub(crate) fn bipartite(rho: &DensityMatrix) -> Result<(usize, usize)> {
    match rho.dims().dims() {
        [b, e] => Ok((*b, *e)),
        d => Err(Error::InvalidLabels(format!(
            "expected a bipartite state, got {} subsystems",
            d.len()
        ))),
    }
}

/// `{p_i, |φ_i⟩}` with `Σ p_i |φ_i⟩⟨φ_i| = ρ`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Decomposition {
    pub probs: Vec<f64>,
    #[serde(with = "crate::linops::serde_matrices")]
    pub states: Vec<ComplexMatrix>,
    pub dims: (usize, usize),
}

impl Decomposition {
    /// Build from subnormalized vectors, dropping zero-weight members.
    pub fn from_subnormalized(vectors: &[ComplexVector], dims: (usize, usize)) -> Self {
        let mut probs = Vec::new();
        let mut states = Vec::new();
        for v in vectors {
            let p = v.norm_squared();
            if p > 1e-14 {
                probs.push(p);
                states.push(ComplexMatrix::from_column_slice(v.len(), 1, (v / cr(p.sqrt())).as_slice()));
            }
        }
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        Self { probs, states, dims }
    }

    pub fn pure_states(&self) -> Result<Vec<PureState>> {
        let dims = SystemDims::pair(("B", self.dims.0), ("E", self.dims.1))?;
        self.states
            .iter()
            .map(|s| PureState::new(s.column(0).into_owned(), dims.clone()))
            .collect()
    }

    pub fn assemble(&self) -> ComplexMatrix {
        let d = self.dims.0 * self.dims.1;
        let mut out = ComplexMatrix::zeros(d, d);
        for (p, s) in self.probs.iter().zip(&self.states) {
            out += s * s.adjoint() * cr(*p);
        }
        out
    }

    /// Max-entry distance between the assembled and target matrices.
    pub fn reconstruction_error(&self, target: &ComplexMatrix) -> f64 {
        (self.assemble() - target).iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// `Σ p_i S(φ_i^B)`.
    pub fn average_entanglement(&self) -> f64 {
        self.probs
            .iter()
            .zip(&self.states)
            .map(|(p, s)| p * entropy_of_matrix(&ptrace_second(&(s * s.adjoint()), self.dims.0, self.dims.1)))
            .sum()
    }
}

/// Positive operator-valued measure on one subsystem.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Povm {
    #[serde(with = "crate::linops::serde_matrices")]
    pub elements: Vec<ComplexMatrix>,
}

impl Povm {
    /// Rank-one elements `v_j v_j†` from the rows `v_jᵀ` of an isometry.
    pub fn from_isometry_rows(y: &ComplexMatrix) -> Self {
        let elements = (0..y.nrows())
            .map(|j| {
                let v = y.row(j).transpose();
                &v * v.adjoint()
            })
            .collect();
        Self { elements }
    }

    /// Completeness deviation and the most negative element eigenvalue.
    pub fn validate(&self) -> (f64, f64) {
        let d = self.elements.first().map_or(0, |e| e.nrows());
        let mut sum = ComplexMatrix::zeros(d, d);
        let mut min_eig: f64 = 0.0;
        for e in &self.elements {
            sum += e;
            min_eig = min_eig.min(eigvalsh(e)[0]);
        }
        let dev = eigvalsh(&(sum - identity(d))).into_iter().fold(0.0, |m: f64, l| m.max(l.abs()));
        (dev, min_eig)
    }

    pub fn is_valid(&self) -> bool {
        let (dev, min_eig) = self.validate();
        dev <= 1e-8 && min_eig >= -TOL_PSD
    }
}

// ---------------------------------------------------------------------------
// Entanglement of formation

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EofResult {
    pub value: f64,
    pub best_decomposition: Decomposition,
    pub bound_direction: BoundDirection,
    pub diagnostics: Diagnostics,
}

/// Decompositions of a rank-`r` state as `ψ̃_i = Σ_k U_{ik} √λ_k |e_k⟩`.
pub(crate) struct DecompositionSpace {
    pub db: usize,
    pub de: usize,
    /// Columns `√λ_k |e_k⟩`.
    pub w: ComplexMatrix,
    pub m: usize,
    pub param: PolarIsometry,
}

impl DecompositionSpace {
    pub fn new(rho: &ComplexMatrix, db: usize, de: usize, cap: Option<usize>) -> Self {
        let (vals, vecs) = eigh(rho);
        let keep: Vec<usize> = (0..vals.len()).rev().filter(|&k| vals[k] > 1e-13).collect();
        let r = keep.len().max(1);
        let mut w = ComplexMatrix::zeros(rho.nrows(), r);
        for (col, &k) in keep.iter().enumerate() {
            let s = cr(vals[k].max(0.0).sqrt());
            for a in 0..rho.nrows() {
                w[(a, col)] = vecs[(a, k)] * s;
            }
        }
        let m = cap.unwrap_or(r * r).max(r);
        Self { db, de, w, m, param: PolarIsometry::new(m, r) }
    }

    pub fn rank(&self) -> usize {
        self.w.ncols()
    }

    /// Rows are the subnormalized vectors `ψ̃_i`.
    pub fn vectors(&self, u: &ComplexMatrix) -> ComplexMatrix {
        u * self.w.transpose()
    }

    pub fn as_matrix(&self, phi: &ComplexMatrix, i: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.db, self.de, |b, e| phi[(i, b * self.de + e)])
    }

    /// Complex gradient with respect to `U` from one with respect to the rows.
    pub fn pull_rows(&self, grad_phi: &ComplexMatrix) -> ComplexMatrix {
        grad_phi * self.w.map(|z| z.conj())
    }

    pub fn decomposition(&self, u: &ComplexMatrix) -> Decomposition {
        let phi = self.vectors(u);
        let vecs: Vec<ComplexVector> = (0..phi.nrows()).map(|i| phi.row(i).transpose()).collect();
        Decomposition::from_subnormalized(&vecs, (self.db, self.de))
    }

    /// `Σ_i H(tr_E ψ̃_i ψ̃_i†)` and its gradient with respect to `U`.
    pub fn eof_objective(&self, u: &ComplexMatrix) -> (f64, ComplexMatrix) {
        let phi = self.vectors(u);
        let mut gphi = ComplexMatrix::zeros(phi.nrows(), phi.ncols());
        let mut total = 0.0;
        for i in 0..phi.nrows() {
            let psi = self.as_matrix(&phi, i);
            let (v, g) = homogeneous_entropy_grad(&(&psi * psi.adjoint()));
            total += v;
            let gp = g * &psi * cr(2.0);
            for b in 0..self.db {
                for e in 0..self.de {
                    gphi[(i, b * self.de + e)] = gp[(b, e)];
                }
            }
        }
        (total, self.pull_rows(&gphi))
    }
}

/// Minimum average entanglement over pure-state decompositions of size
/// `≤ r²` (certified upper bound on `E_F`).
pub fn entanglement_of_formation(rho: &DensityMatrix, opts: &SolverOptions) -> Result<EofResult> {
    let (db, de) = bipartite(rho)?;
    Ok(eof_matrix(rho.matrix(), db, de, opts))
}

pub fn eof_matrix(rho: &ComplexMatrix, db: usize, de: usize, opts: &SolverOptions) -> EofResult {
    let space = DecompositionSpace::new(rho, db, de, opts.ensemble_cap);
    if space.rank() == 1 {
        let u = ComplexMatrix::from_element(1, 1, cr(1.0));
        let dec = DecompositionSpace { m: 1, param: PolarIsometry::new(1, 1), ..space }.decomposition(&u);
        return EofResult {
            value: dec.average_entanglement(),
            best_decomposition: dec,
            bound_direction: BoundDirection::CertifiedUpper,
            diagnostics: Diagnostics { restarts: 1, converged: true, ..Default::default() },
        };
    }
    let p = space.param;
    let (x, _, values) = best_of(opts.restarts, |i| {
        let x0 = if i == 0 {
            p.identity_params()
        } else {
            random_params(p.num_params(), &mut opts.rng("eof", i as u64))
        };
        let m = minimize(
            |x, g| {
                let ev = p.eval(x, 0);
                let (v, gu) = space.eof_objective(&ev.v);
                p.pullback(&ev, &gu, g, 0);
                v
            },
            x0,
            &opts.lbfgs,
        );
        let v = m.value;
        (m.x, v)
    });
    let u = p.eval(&x, 0).v;
    let dec = space.decomposition(&u);
    EofResult {
        value: dec.average_entanglement().max(0.0),
        best_decomposition: dec,
        bound_direction: BoundDirection::CertifiedUpper,
        diagnostics: Diagnostics::from_values(values, false),
    }
}

// ---------------------------------------------------------------------------
// Measured one-way quantity C_←

/// `(I ⊗ v†) σ (I ⊗ v)` on `B`.
fn contract_env(sigma: &ComplexMatrix, db: usize, de: usize, v: &ComplexVector) -> ComplexMatrix {
    let mut tmp = ComplexMatrix::zeros(db * de, db);
    // tmp = σ (I ⊗ v)
    for row in 0..db * de {
        for b in 0..db {
            let mut s = cr(0.0);
            for e in 0..de {
                s += sigma[(row, b * de + e)] * v[e];
            }
            tmp[(row, b)] = s;
        }
    }
    ComplexMatrix::from_fn(db, db, |b, b2| {
        let mut s = cr(0.0);
        for e in 0..de {
            s += v[e].conj() * tmp[(b * de + e, b2)];
        }
        s
    })
}

/// `tr_B[σ (G ⊗ I)]` on `E`.
fn env_operator(sigma: &ComplexMatrix, db: usize, de: usize, g: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(de, de, |e, e2| {
        let mut s = cr(0.0);
        for b in 0..db {
            for b2 in 0..db {
                s += sigma[(b * de + e, b2 * de + e2)] * g[(b2, b)];
            }
        }
        s
    })
}

/// Rank-one measurements on `E` with `d_E²` outcomes.
#[derive(Clone, Copy, Debug)]
pub(crate) struct MeasurementSpace {
    pub db: usize,
    pub de: usize,
    pub param: PolarIsometry,
}

impl MeasurementSpace {
    pub fn new(db: usize, de: usize) -> Self {
        Self { db, de, param: PolarIsometry::new(de * de, de) }
    }

    /// `Σ_j H(τ_j)` with `τ_j = (I ⊗ v_j†) σ (I ⊗ v_j)` and its gradient in `Y`.
    pub fn objective(&self, sigma: &ComplexMatrix, y: &ComplexMatrix) -> (f64, ComplexMatrix) {
        let mut total = 0.0;
        let mut gy = ComplexMatrix::zeros(y.nrows(), y.ncols());
        for j in 0..y.nrows() {
            let v: ComplexVector = y.row(j).transpose();
            let tau = contract_env(sigma, self.db, self.de, &v);
            let (h, g) = homogeneous_entropy_grad(&tau);
            total += h;
            let gv = env_operator(sigma, self.db, self.de, &g) * &v * cr(2.0);
            for e in 0..self.de {
                gy[(j, e)] = gv[e];
            }
        }
        (total, gy)
    }

    pub fn value(&self, sigma: &ComplexMatrix, y: &ComplexMatrix) -> f64 {
        (0..y.nrows())
            .map(|j| homogeneous_entropy(&contract_env(sigma, self.db, self.de, &y.row(j).transpose())))
            .sum()
    }

    /// `∂/∂σ Σ_j H(τ_j) = Σ_j G_j ⊗ v_j v_j†` at fixed `Y`.
    pub fn sigma_gradient(&self, sigma: &ComplexMatrix, y: &ComplexMatrix) -> (f64, ComplexMatrix) {
        let d = self.db * self.de;
        let mut out = ComplexMatrix::zeros(d, d);
        let mut total = 0.0;
        for j in 0..y.nrows() {
            let v: ComplexVector = y.row(j).transpose();
            let (h, g) = homogeneous_entropy_grad(&contract_env(sigma, self.db, self.de, &v));
            total += h;
            out += kron(&g, &(&v * v.adjoint()));
        }
        (total, out)
    }

    /// Measurement in the eigenbasis of `σ_E`, padded with zero outcomes.
    pub fn eigenbasis_start(&self, sigma: &ComplexMatrix) -> ComplexMatrix {
        let rho_e = crate::linops::ptrace_first(sigma, self.db, self.de);
        let (_, vecs) = eigh(&rho_e);
        let mut y = ComplexMatrix::zeros(self.de * self.de, self.de);
        for j in 0..self.de {
            for e in 0..self.de {
                // row j holds v_jᵀ = conj of the eigenvector
                y[(j, e)] = vecs[(e, j)].conj();
            }
        }
        y
    }

    /// Local minimization from each start; returns the best `(value, Y)`.
    pub fn solve(&self, sigma: &ComplexMatrix, starts: &[ComplexMatrix], opts: &LbfgsOptions) -> (f64, ComplexMatrix) {
        let p = self.param;
        let mut best: Option<(f64, ComplexMatrix)> = None;
        for s in starts {
            let m = minimize(
                |x, g| {
                    let ev = p.eval(x, 0);
                    let (v, gy) = self.objective(sigma, &ev.v);
                    p.pullback(&ev, &gy, g, 0);
                    v
                },
                p.params_from(s),
                opts,
            );
            let y = p.eval(&m.x, 0).v;
            let v = self.value(sigma, &y);
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, y));
            }
        }
        best.expect("at least one start")
    }

    pub fn random_start<R: rand::Rng>(&self, rng: &mut R) -> ComplexMatrix {
        self.param.eval(&random_params(self.param.num_params(), rng), 0).v
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CArrowResult {
    pub value: f64,
    /// `S(σ_B)`.
    pub entropy_b: f64,
    /// `Σ_j r_j S(σ^B_j)` at the best measurement found.
    pub residual_entropy: f64,
    /// Outcome probabilities `r_j`.
    pub outcome_probs: Vec<f64>,
    pub povm: Povm,
    pub bound_direction: BoundDirection,
}

/// `C_←(σ) = S(σ_B) − min_{P} Σ_j r_j S(σ^B_j)` over rank-one POVMs on `E`
/// with at most `d_E²` outcomes. Any measurement is feasible, so the value is
/// a certified lower bound on the true quantity.
pub fn c_arrow(sigma: &DensityMatrix, opts: &SolverOptions) -> Result<CArrowResult> {
    let (db, de) = bipartite(sigma)?;
    Ok(c_arrow_matrix(sigma.matrix(), db, de, opts))
}

pub fn c_arrow_matrix(sigma: &ComplexMatrix, db: usize, de: usize, opts: &SolverOptions) -> CArrowResult {
    let space = MeasurementSpace::new(db, de);
    let entropy_b = homogeneous_entropy(&ptrace_second(sigma, db, de));
    let mut starts = vec![space.eigenbasis_start(sigma)];
    let mut rng = opts.rng("c_arrow", 0);
    for _ in 1..opts.restarts.max(1) {
        starts.push(space.random_start(&mut rng));
    }
    let (residual, y) = space.solve(sigma, &starts, &opts.lbfgs);
    let outcome_probs = (0..y.nrows())
        .map(|j| contract_env(sigma, db, de, &y.row(j).transpose()).trace().re)
        .collect();
    CArrowResult {
        value: (entropy_b - residual).clamp(0.0, entropy_b.max(0.0)),
        entropy_b,
        residual_entropy: residual,
        outcome_probs,
        povm: Povm::from_isometry_rows(&y),
        bound_direction: BoundDirection::CertifiedLower,
    }
}

// ---------------------------------------------------------------------------
// G measure

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupingRun {
    pub groups: usize,
    pub value: f64,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GMeasureResult {
    pub value: f64,
    /// `C_←` of the undecomposed state (one group).
    pub c_arrow_value: f64,
    /// Entanglement of formation (every group a pure state).
    pub eof_value: f64,
    pub groupings: Vec<GroupingRun>,
    pub bound_direction: BoundDirection,
}

/// `Σ_g C_←(ρ_g)` over groups of a pure decomposition, minimized over the
/// decomposition with inner measurement optimization.
fn grouped_objective(
    space: &DecompositionSpace,
    meas: &MeasurementSpace,
    u: &ComplexMatrix,
    groups: usize,
    warm: &mut [ComplexMatrix],
    inner: &LbfgsOptions,
    extra_starts: &[ComplexMatrix],
) -> (f64, ComplexMatrix) {
    let phi = space.vectors(u);
    let size = phi.nrows() / groups;
    let d = space.db * space.de;
    let mut gphi = ComplexMatrix::zeros(phi.nrows(), phi.ncols());
    let mut total = 0.0;
    for g in 0..groups {
        let rows = phi.rows(g * size, size);
        let mut sigma = ComplexMatrix::zeros(d, d);
        for i in 0..size {
            let v = rows.row(i).transpose();
            sigma += &v * v.adjoint();
        }
        let mut starts = vec![warm[g].clone()];
        starts.extend_from_slice(extra_starts);
        let (_, y) = meas.solve(&sigma, &starts, inner);
        let (hb, gb) = homogeneous_entropy_grad(&ptrace_second(&sigma, space.db, space.de));
        let (hm, gm) = meas.sigma_gradient(&sigma, &y);
        warm[g] = y;
        total += hb - hm;
        let x = kron(&gb, &identity(space.de)) - gm;
        for i in 0..size {
            let v = rows.row(i).transpose();
            let gv = &x * v * cr(2.0);
            for k in 0..d {
                gphi[(g * size + i, k)] = gv[k];
            }
        }
    }
    (total, space.pull_rows(&gphi))
}

/// Heuristic `G(B:E) = min Σ_i p_i C_←(ρ_i)` over mixed-state decompositions.
///
/// Candidates: the state itself (`C_←(ρ)`), pure decompositions (`E_F`), and
/// equal-size groupings of a size-`r²` pure decomposition for every proper
/// divisor group count. The minimum over candidates is reported.
pub fn g_measure(rho: &DensityMatrix, opts: &SolverOptions) -> Result<GMeasureResult> {
    let (db, de) = bipartite(rho)?;
    Ok(g_measure_matrix(rho.matrix(), db, de, opts))
}

pub fn g_measure_matrix(rho: &ComplexMatrix, db: usize, de: usize, opts: &SolverOptions) -> GMeasureResult {
    let ca = c_arrow_matrix(rho, db, de, opts).value;
    let eof = eof_matrix(rho, db, de, opts).value;
    let space = DecompositionSpace::new(rho, db, de, opts.ensemble_cap);
    let meas = MeasurementSpace::new(db, de);
    let m = space.m;
    let mut groupings = Vec::new();
    let restarts = (opts.restarts / 4).max(2);
    for groups in (2..m).filter(|g| m % g == 0) {
        let p = space.param;
        let (_, val, values) = best_of(restarts, |i| {
            let mut rng = opts.rng(&format!("g_measure/{groups}"), i as u64);
            let x0 = if i == 0 {
                p.identity_params()
            } else {
                random_params(p.num_params(), &mut rng)
            };
            let u0 = p.eval(&x0, 0).v;
            let warm = RefCell::new(initial_warm(&space, &meas, &u0, groups));
            let extra: Vec<ComplexMatrix> = (0..opts.inner_restarts.saturating_sub(1))
                .map(|_| meas.random_start(&mut rng))
                .collect();
            let res = minimize(
                |x, g| {
                    let ev = p.eval(x, 0);
                    let (v, gu) = grouped_objective(&space, &meas, &ev.v, groups, &mut warm.borrow_mut(), &opts.inner, &[]);
                    p.pullback(&ev, &gu, g, 0);
                    v
                },
                x0,
                &opts.outer,
            );
            // final evaluation with a fuller inner search
            let u = p.eval(&res.x, 0).v;
            let (v, _) = grouped_objective(&space, &meas, &u, groups, &mut warm.borrow_mut(), &opts.lbfgs, &extra);
            ((), v)
        });
        groupings.push(GroupingRun {
            groups,
            value: val.max(0.0),
            diagnostics: Diagnostics::from_values(values, false),
        });
    }
    let value = groupings.iter().map(|g| g.value).fold(ca.min(eof), f64::min);
    GMeasureResult {
        value,
        c_arrow_value: ca,
        eof_value: eof,
        groupings,
        bound_direction: BoundDirection::Heuristic,
    }
}

fn initial_warm(space: &DecompositionSpace, meas: &MeasurementSpace, u: &ComplexMatrix, groups: usize) -> Vec<ComplexMatrix> {
    let phi = space.vectors(u);
    let size = phi.nrows() / groups;
    let d = space.db * space.de;
    (0..groups)
        .map(|g| {
            let mut sigma = ComplexMatrix::zeros(d, d);
            for i in g * size..(g + 1) * size {
                let v = phi.row(i).transpose();
                sigma += &v * v.adjoint();
            }
            meas.eigenbasis_start(&sigma)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// PPT

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PptScope {
    /// PPT is equivalent to separability at these dimensions.
    Decidable,
    /// PPT is only necessary for separability.
    PptOnly,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PptReport {
    pub is_ppt: bool,
    pub min_eigenvalue: f64,
    pub scope: PptScope,
}

/// Partial-transpose test across the two subsystems.
pub fn ppt_check(rho: &DensityMatrix) -> Result<PptReport> {
    let (db, de) = bipartite(rho)?;
    Ok(ppt_check_matrix(rho.matrix(), db, de))
}

/// PPT test for a PSD operator on `A ⊗ B` (any trace).
pub fn ppt_check_matrix(m: &ComplexMatrix, da: usize, db: usize) -> PptReport {
    let scale = m.trace().re.max(1e-300);
    let pt = hermitize(&partial_transpose_second(m, da, db)) / cr(scale);
    let min_eigenvalue = eigvalsh(&pt)[0];
    let decidable = da == 1 || db == 1 || da * db <= 6;
    PptReport {
        is_ppt: min_eigenvalue >= -1e-9,
        min_eigenvalue,
        scope: if decidable { PptScope::Decidable } else { PptScope::PptOnly },
    }
}

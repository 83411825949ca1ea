//! Single-letter capacity optimizers.
//!
//! Ensemble objectives are written with the homogeneous entropy `H`, so an
//! ensemble `{p_t, ρ_t}` is a list of subnormalized blocks `σ_t = p_t ρ_t`.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::channels::KrausChannel;
use crate::entanglement::eof_matrix;
use crate::entropics::{channel_entropy_grad, homogeneous_entropy, homogeneous_entropy_grad};
use crate::error::{Error, Result};
use crate::linops::{cr, eigh, identity, ComplexMatrix};
use crate::optim::{
    best_of, maximize_concave, minimize, random_params, BoundDirection, Diagnostics, LbfgsOptions,
    PolarIsometry, SolverOptions, StateBlocks, CERTIFICATE_TOL,
};

/// Tolerance for report invariants.
pub const REPORT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq, Hash)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Chi,
    MswChi,
    Q1,
    P1,
    CE,
    QA,
    MaxOutputEntropy,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::Chi => "chi",
            Quantity::MswChi => "msw_chi",
            Quantity::Q1 => "q1",
            Quantity::P1 => "p1",
            Quantity::CE => "c_e",
            Quantity::QA => "q_a",
            Quantity::MaxOutputEntropy => "max_output_entropy",
        }
    }
}

/// Probability-weighted list of states.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Ensemble {
    pub probs: Vec<f64>,
    #[serde(with = "crate::linops::serde_matrices")]
    pub states: Vec<ComplexMatrix>,
}

impl Ensemble {
    pub fn from_blocks(blocks: &[ComplexMatrix]) -> Self {
        let mut probs = Vec::new();
        let mut states = Vec::new();
        for b in blocks {
            let p = b.trace().re;
            if p > 1e-14 {
                probs.push(p);
                states.push(b / cr(p));
            }
        }
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        Self { probs, states }
    }

    pub fn blocks(&self) -> Vec<ComplexMatrix> {
        self.probs.iter().zip(&self.states).map(|(p, s)| s * cr(*p)).collect()
    }

    pub fn average(&self) -> ComplexMatrix {
        let d = self.states[0].nrows();
        self.blocks().into_iter().fold(ComplexMatrix::zeros(d, d), |acc, b| acc + b)
    }

    /// Ensemble `{p_t q_s, ρ_t ⊗ ω_s}`.
    pub fn product(&self, other: &Ensemble) -> Ensemble {
        let mut probs = Vec::new();
        let mut states = Vec::new();
        for (p, a) in self.probs.iter().zip(&self.states) {
            for (q, b) in other.probs.iter().zip(&other.states) {
                probs.push(p * q);
                states.push(crate::linops::kron(a, b));
            }
        }
        Self { probs, states }
    }

    /// Eigen-ensemble of a density matrix.
    pub fn spectral(rho: &ComplexMatrix) -> Self {
        let (vals, vecs) = eigh(rho);
        let blocks: Vec<ComplexMatrix> = (0..vals.len())
            .rev()
            .map(|k| {
                let v = vecs.column(k);
                &v * v.adjoint() * cr(vals[k].max(0.0))
            })
            .collect();
        Self::from_blocks(&blocks)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CapacityReport {
    pub quantity: Quantity,
    pub channel: String,
    /// Bits. For `q1` this is the clamped value `max(raw, 0)`.
    pub value: f64,
    /// Unclamped optimum where it differs in meaning from `value`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_value: Option<f64>,
    pub bound_direction: BoundDirection,
    /// Optimality gap certificate for concave problems.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_gap: Option<f64>,
    pub diagnostics: Diagnostics,
    #[serde(with = "crate::linops::serde_opt_matrix", skip_serializing_if = "Option::is_none", default)]
    pub best_input: Option<ComplexMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<Ensemble>,
}

impl CapacityReport {
    fn new(quantity: Quantity, ch: &KrausChannel, value: f64, bound_direction: BoundDirection) -> Self {
        Self {
            quantity,
            channel: ch.label(),
            value,
            raw_value: None,
            bound_direction,
            certificate_gap: None,
            diagnostics: Diagnostics::default(),
            best_input: None,
            ensemble: None,
        }
    }

    /// Range checks implied by the dimensions.
    pub fn check_invariants(&self, d_in: usize, d_out: usize) -> Result<()> {
        let log_min = (d_in.min(d_out) as f64).log2();
        let upper = match self.quantity {
            Quantity::Chi | Quantity::MswChi | Quantity::Q1 | Quantity::P1 => log_min,
            Quantity::CE => 2.0 * (d_in as f64).log2(),
            Quantity::QA => (d_in as f64).log2(),
            Quantity::MaxOutputEntropy => (d_out as f64).log2(),
        };
        if !self.value.is_finite() || self.value < -REPORT_TOL || self.value > upper + REPORT_TOL {
            return Err(Error::InvariantViolation(format!(
                "{} = {} outside [0, {upper}]",
                self.quantity.name(),
                self.value
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Shared objective pieces

/// `H(N σ) − H(N^c σ)` (or just `H(N σ)` without a complement) and gradient.
fn coherent_term(ch: &KrausChannel, comp: Option<&KrausChannel>, sigma: &ComplexMatrix) -> (f64, ComplexMatrix) {
    let (hb, gb) = channel_entropy_grad(ch, sigma);
    match comp {
        Some(c) => {
            let (he, ge) = channel_entropy_grad(c, sigma);
            (hb - he, gb - ge)
        }
        None => (hb, gb),
    }
}

/// `F(Σσ) − Σ_t F(σ_t)` for `F = coherent_term`; maximized.
fn ensemble_objective(
    ch: &KrausChannel,
    comp: Option<&KrausChannel>,
    sigmas: &[ComplexMatrix],
) -> (f64, Vec<ComplexMatrix>) {
    let d = ch.d_in;
    let total = sigmas.iter().fold(ComplexMatrix::zeros(d, d), |acc, s| acc + s);
    let (v0, g0) = coherent_term(ch, comp, &total);
    let mut value = v0;
    let grads = sigmas
        .iter()
        .map(|s| {
            let (v, g) = coherent_term(ch, comp, s);
            value -= v;
            &g0 - g
        })
        .collect();
    (value, grads)
}

fn perturb<R: rand::Rng>(x: &mut [f64], rng: &mut R) {
    let noise = random_params(x.len(), rng);
    let scale = 1e-5 * (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt().max(1e-3);
    x.iter_mut().zip(noise).for_each(|(v, n)| *v += scale * n);
}

struct EnsembleRun {
    blocks: Vec<ComplexMatrix>,
    value: f64,
    values: Vec<f64>,
    iterations: usize,
}

/// Multi-restart maximization of an ensemble objective.
fn maximize_ensemble(
    ch: &KrausChannel,
    comp: Option<&KrausChannel>,
    blocks: &StateBlocks,
    seeds: &[Vec<ComplexMatrix>],
    op: &str,
    opts: &SolverOptions,
) -> EnsembleRun {
    let restarts = opts.restarts.max(seeds.len()).max(1);
    let (best, value, values) = best_of(restarts, |i| {
        let mut rng = opts.rng(op, i as u64);
        let x0 = match seeds.get(i) {
            Some(members) => {
                let mut x = blocks.params_from_states(&pad_members(members, blocks));
                perturb(&mut x, &mut rng);
                x
            }
            None => random_params(blocks.num_params(), &mut rng),
        };
        let m = minimize(
            |x, g| {
                let ev = blocks.eval(x, 0);
                let (v, grads) = ensemble_objective(ch, comp, &ev.sigmas);
                let neg: Vec<ComplexMatrix> = grads.into_iter().map(|g| -g).collect();
                blocks.pullback(&ev, &neg, g, 0);
                -v
            },
            x0,
            &opts.lbfgs,
        );
        let sigmas = blocks.eval(&m.x, 0).sigmas;
        let v = ensemble_objective(ch, comp, &sigmas).0;
        ((sigmas, m.iterations), -v)
    });
    EnsembleRun {
        blocks: best.0,
        value: -value,
        values: values.into_iter().map(|v| -v).collect(),
        iterations: best.1,
    }
}

fn pad_members(members: &[ComplexMatrix], blocks: &StateBlocks) -> Vec<ComplexMatrix> {
    let d = blocks.dim;
    let mut out: Vec<ComplexMatrix> = members.iter().take(blocks.ranks.len()).cloned().collect();
    while out.len() < blocks.ranks.len() {
        out.push(ComplexMatrix::zeros(d, d));
    }
    out
}

fn ensemble_size(d_in: usize, opts: &SolverOptions) -> usize {
    opts.ensemble_cap.unwrap_or(d_in * d_in).max(1)
}

// ---------------------------------------------------------------------------
// Holevo quantity

/// `χ(N) = max S(Σ p_i N(φ_i)) − Σ p_i S(N(φ_i))` over pure ensembles of
/// size `≤ d_in²`. Certified lower bound.
pub fn holevo_capacity(ch: &KrausChannel, opts: &SolverOptions) -> CapacityReport {
    holevo_capacity_seeded(ch, opts, &[])
}

/// As [`holevo_capacity`], with the first restarts started from `seeds`.
pub fn holevo_capacity_seeded(ch: &KrausChannel, opts: &SolverOptions, seeds: &[Ensemble]) -> CapacityReport {
    let m = ensemble_size(ch.d_in, opts);
    let blocks = StateBlocks::uniform(ch.d_in, m, 1);
    let mut seed_blocks: Vec<Vec<ComplexMatrix>> = seeds.iter().map(|e| pure_blocks(e)).collect();
    if seeds.is_empty() {
        // uniform computational-basis ensemble
        seed_blocks.push(
            (0..ch.d_in)
                .map(|a| crate::linops::basis_projector(ch.d_in, a) * cr(1.0 / ch.d_in as f64))
                .collect(),
        );
    }
    let run = maximize_ensemble(ch, None, &blocks, &seed_blocks, "chi", opts);
    let ens = Ensemble::from_blocks(&run.blocks);
    let mut r = CapacityReport::new(Quantity::Chi, ch, run.value.max(0.0), BoundDirection::CertifiedLower);
    r.raw_value = Some(run.value);
    r.diagnostics = Diagnostics::from_values(run.values, true);
    r.diagnostics.iterations = run.iterations;
    r.best_input = Some(ens.average());
    r.ensemble = Some(ens);
    r
}

/// Pure-state seed: mixed members are split into their eigen-ensembles.
fn pure_blocks(e: &Ensemble) -> Vec<ComplexMatrix> {
    e.blocks()
        .iter()
        .flat_map(|b| Ensemble::spectral(b).blocks().into_iter().map(move |x| x * cr(b.trace().re)))
        .collect()
}

/// `χ(N) = max_ρ S(B) − E_F(B:E)` with the inner entanglement of formation
/// of `U ρ U†` minimized over decompositions of `ρ`.
pub fn msw_chi(ch: &KrausChannel, opts: &SolverOptions) -> CapacityReport {
    let d = ch.d_in;
    let m = ensemble_size(d, opts);
    let outer = StateBlocks::uniform(d, 1, d);
    let inner = PolarIsometry::new(m, d);
    let restarts = (opts.restarts / 4).max(3);
    let (best, _, values) = best_of(restarts, |i| {
        let mut rng = opts.rng("msw_chi", i as u64);
        let x0 = if i == 0 {
            outer.params_from_states(&[identity(d) * cr(1.0 / d as f64)])
        } else {
            random_params(outer.num_params(), &mut rng)
        };
        let warm = RefCell::new(inner.identity_params());
        let res = minimize(
            |x, g| {
                let ev = outer.eval(x, 0);
                let mm = &ev.factors[0];
                let w = ev.weight;
                let y = solve_msw_inner(ch, mm, w, &inner, &[warm.borrow().clone()], &opts.inner);
                let (neg_f, grad) = msw_outer_value_grad(ch, mm, w, &inner.eval(&y, 0).v);
                *warm.borrow_mut() = y;
                crate::optim::write_grad(g, 0, &[grad]);
                neg_f
            },
            x0,
            &opts.outer,
        );
        let rho = outer.eval(&res.x, 0).sigmas.remove(0);
        let value = msw_value_at(ch, &rho, opts);
        (rho, -value)
    });
    let value = msw_value_at(ch, &best, opts);
    let mut r = CapacityReport::new(Quantity::MswChi, ch, value.max(0.0), BoundDirection::Heuristic);
    r.raw_value = Some(value);
    r.diagnostics = Diagnostics::from_values(values.into_iter().map(|v| -v).collect(), true);
    r.best_input = Some(best);
    r
}

/// `S(N ρ) − E_F(U ρ U†)` with a full entanglement-of-formation solve.
pub fn msw_value_at(ch: &KrausChannel, rho: &ComplexMatrix, opts: &SolverOptions) -> f64 {
    let u = ch.stinespring();
    let be = u.apply_matrix(rho);
    let eof = eof_matrix(&be, ch.d_out, ch.num_kraus(), &opts.child("msw_chi/eof", 0)).value;
    homogeneous_entropy(&ch.map(rho)) - eof
}

/// Rows `y_iᵀ` of `Y`; members `ψ̃_i = M y_i / √W`.
fn msw_members(mm: &ComplexMatrix, w: f64, y: &ComplexMatrix) -> Vec<crate::linops::ComplexVector> {
    (0..y.nrows())
        .map(|i| mm * y.row(i).transpose() * cr(1.0 / w.sqrt()))
        .collect()
}

fn solve_msw_inner(
    ch: &KrausChannel,
    mm: &ComplexMatrix,
    w: f64,
    inner: &PolarIsometry,
    starts: &[Vec<f64>],
    opts: &LbfgsOptions,
) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for s in starts {
        let res = minimize(
            |x, g| {
                let ev = inner.eval(x, 0);
                let psis = msw_members(mm, w, &ev.v);
                let mut gy = ComplexMatrix::zeros(ev.v.nrows(), ev.v.ncols());
                let mut total = 0.0;
                for (i, psi) in psis.iter().enumerate() {
                    let (h, gsig) = channel_entropy_grad(ch, &(psi * psi.adjoint()));
                    total += h;
                    // ∂/∂y_i = 2 M† G M y_i / W
                    let gv = mm.adjoint() * gsig * psi * cr(2.0 / w.sqrt());
                    for k in 0..gv.nrows() {
                        gy[(i, k)] = gv[k];
                    }
                }
                inner.pullback(&ev, &gy, g, 0);
                total
            },
            s.clone(),
            opts,
        );
        if best.as_ref().is_none_or(|(v, _)| res.value < *v) {
            best = Some((res.value, res.x));
        }
    }
    best.expect("one start").1
}

/// Negated outer objective `−[H(Nρ) − Σ_i H(N σ_i)]` and its gradient in `M`
/// at fixed decomposition.
fn msw_outer_value_grad(ch: &KrausChannel, mm: &ComplexMatrix, w: f64, y: &ComplexMatrix) -> (f64, ComplexMatrix) {
    let rho = mm * mm.adjoint() / cr(w);
    let (h0, g0) = channel_entropy_grad(ch, &rho);
    // d/dM H(N(M P M†)/W) = (2/W)(G M P − h M)
    let mut grad = (&g0 * mm - mm * cr(h0)) * cr(2.0 / w);
    let mut value = h0;
    for i in 0..y.nrows() {
        let yi = y.row(i).transpose();
        let p = &yi * yi.adjoint();
        let sigma = mm * &p * mm.adjoint() / cr(w);
        let (h, g) = channel_entropy_grad(ch, &sigma);
        value -= h;
        grad -= (g * mm * &p - mm * cr(h)) * cr(2.0 / w);
    }
    (-value, -grad)
}

// ---------------------------------------------------------------------------
// Coherent and private information

/// `Q⁽¹⁾(N) = max_ρ S(N ρ) − S(N^c ρ)`. `value` is clamped at zero, the raw
/// maximum is kept in `raw_value`. Certified lower bound.
pub fn q1(ch: &KrausChannel, opts: &SolverOptions) -> CapacityReport {
    q1_seeded(ch, opts, &[])
}

pub fn q1_seeded(ch: &KrausChannel, opts: &SolverOptions, seeds: &[ComplexMatrix]) -> CapacityReport {
    let comp = ch.complementary();
    let blocks = StateBlocks::uniform(ch.d_in, 1, ch.d_in);
    let mut seed_blocks: Vec<Vec<ComplexMatrix>> = seeds.iter().map(|s| vec![s.clone()]).collect();
    if seeds.is_empty() {
        seed_blocks.push(vec![identity(ch.d_in) * cr(1.0 / ch.d_in as f64)]);
    }
    // a single block: the ensemble objective reduces to the coherent term
    let run = maximize_ensemble_single(ch, &comp, &blocks, &seed_blocks, opts);
    let mut r = CapacityReport::new(Quantity::Q1, ch, run.value.max(0.0), BoundDirection::CertifiedLower);
    r.raw_value = Some(run.value);
    r.diagnostics = Diagnostics::from_values(run.values, true);
    r.diagnostics.iterations = run.iterations;
    r.best_input = Some(run.blocks[0].clone());
    r
}

fn maximize_ensemble_single(
    ch: &KrausChannel,
    comp: &KrausChannel,
    blocks: &StateBlocks,
    seeds: &[Vec<ComplexMatrix>],
    opts: &SolverOptions,
) -> EnsembleRun {
    let restarts = opts.restarts.max(seeds.len()).max(1);
    let (best, value, values) = best_of(restarts, |i| {
        let mut rng = opts.rng("q1", i as u64);
        let x0 = match seeds.get(i) {
            Some(members) => {
                let mut x = blocks.params_from_states(members);
                perturb(&mut x, &mut rng);
                x
            }
            None => random_params(blocks.num_params(), &mut rng),
        };
        let m = minimize(
            |x, g| {
                let ev = blocks.eval(x, 0);
                let (v, grad) = coherent_term(ch, Some(comp), &ev.sigmas[0]);
                blocks.pullback(&ev, &[-grad], g, 0);
                -v
            },
            x0,
            &opts.lbfgs,
        );
        let sigmas = blocks.eval(&m.x, 0).sigmas;
        let v = coherent_term(ch, Some(comp), &sigmas[0]).0;
        ((sigmas, m.iterations), -v)
    });
    EnsembleRun {
        blocks: best.0,
        value: -value,
        values: values.into_iter().map(|v| -v).collect(),
        iterations: best.1,
    }
}

/// `P⁽¹⁾(N) = max I(T:B) − I(T:E)` over cq ensembles of `≤ d_in²` mixed
/// states. The first restart starts from the eigen-ensemble of the `q1`
/// optimum, so `p1 ≥ q1` holds by construction. Certified lower bound.
pub fn p1(ch: &KrausChannel, opts: &SolverOptions) -> CapacityReport {
    p1_seeded(ch, opts, &[])
}

pub fn p1_seeded(ch: &KrausChannel, opts: &SolverOptions, seeds: &[Ensemble]) -> CapacityReport {
    let comp = ch.complementary();
    let m = ensemble_size(ch.d_in, opts);
    let blocks = StateBlocks::uniform(ch.d_in, m, ch.d_in);
    let mut seed_blocks: Vec<Vec<ComplexMatrix>> = seeds.iter().map(|e| e.blocks()).collect();
    if seeds.is_empty() {
        let q = q1(ch, &opts.child("p1/q1", 0));
        seed_blocks.push(Ensemble::spectral(q.best_input.as_ref().expect("q1 input")).blocks());
    }
    let run = maximize_ensemble(ch, Some(&comp), &blocks, &seed_blocks, "p1", opts);
    let ens = Ensemble::from_blocks(&run.blocks);
    let mut r = CapacityReport::new(Quantity::P1, ch, run.value.max(0.0), BoundDirection::CertifiedLower);
    r.raw_value = Some(run.value);
    r.diagnostics = Diagnostics::from_values(run.values, true);
    r.diagnostics.iterations = run.iterations;
    r.best_input = Some(ens.average());
    r.ensemble = Some(ens);
    r
}

// ---------------------------------------------------------------------------
// Concave problems

fn concave_report(
    quantity: Quantity,
    ch: &KrausChannel,
    res: crate::optim::ConcaveMax,
) -> CapacityReport {
    let direction = if res.fw_gap < CERTIFICATE_TOL {
        BoundDirection::CertifiedExact
    } else {
        BoundDirection::CertifiedLower
    };
    let mut r = CapacityReport::new(quantity, ch, res.value.max(0.0), direction);
    r.certificate_gap = Some(res.fw_gap);
    r.diagnostics = Diagnostics {
        restarts: 1,
        best_restart: 0,
        restart_values: vec![res.value],
        iterations: res.iterations,
        converged: res.fw_gap < CERTIFICATE_TOL,
    };
    r.best_input = Some(res.rho);
    r
}

/// `C_E(N) = max_ρ I(R:B) = max_ρ S(ρ) + S(N ρ) − S(N^c ρ)`; concave.
pub fn c_e(ch: &KrausChannel, opts: &SolverOptions) -> CapacityReport {
    let comp = ch.complementary();
    let res = maximize_concave(
        ch.d_in,
        |rho| {
            let (h, g) = homogeneous_entropy_grad(rho);
            let (v, gc) = coherent_term(ch, Some(&comp), rho);
            (h + v, g + gc)
        },
        None,
        &opts.lbfgs,
    );
    concave_report(Quantity::CE, ch, res)
}

/// `max_ρ S(N ρ)`; concave.
pub fn max_output_entropy(ch: &KrausChannel, opts: &SolverOptions) -> CapacityReport {
    let res = maximize_concave(ch.d_in, |rho| channel_entropy_grad(ch, rho), None, &opts.lbfgs);
    concave_report(Quantity::MaxOutputEntropy, ch, res)
}

/// `Q_A(N) = max_ρ min{S(ρ), S(N ρ)}`.
///
/// Solved through the dual `min_λ max_ρ λ S(ρ) + (1−λ) S(N ρ)` (golden
/// section in `λ`, concave inner problems); the primal value is evaluated on
/// mixtures of the inner maximizers bracketing the optimal `λ`.
pub fn q_a(ch: &KrausChannel, opts: &SolverOptions) -> CapacityReport {
    let d = ch.d_in;
    let inner = |lam: f64, start: Option<&ComplexMatrix>| {
        maximize_concave(
            d,
            |rho| {
                let (h, g) = homogeneous_entropy_grad(rho);
                let (hn, gn) = channel_entropy_grad(ch, rho);
                (lam * h + (1.0 - lam) * hn, g * cr(lam) + gn * cr(1.0 - lam))
            },
            start,
            &opts.lbfgs,
        )
    };
    let primal = |rho: &ComplexMatrix| homogeneous_entropy(rho).min(homogeneous_entropy(&ch.map(rho)));
    let mut evaluated: Vec<(f64, crate::optim::ConcaveMax)> = Vec::new();
    let mut eval = |lam: f64| -> f64 {
        let res = inner(lam, None);
        let v = res.value + res.fw_gap;
        evaluated.push((lam, res));
        v
    };
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c1 = b - golden * (b - a);
    let mut c2 = a + golden * (b - a);
    let mut f1 = eval(c1);
    let mut f2 = eval(c2);
    let fa = eval(0.0);
    let fb = eval(1.0);
    while b - a > 1e-7 {
        if f1 <= f2 {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - golden * (b - a);
            f1 = eval(c1);
        } else {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + golden * (b - a);
            f2 = eval(c2);
        }
    }
    let dual = f1.min(f2).min(fa).min(fb);
    // primal candidates: each inner maximizer and mixtures of the two
    // maximizers closest to the optimal λ on either side
    let lam_star = 0.5 * (a + b);
    let mut best_val = f64::NEG_INFINITY;
    let mut best_rho = identity(d) * cr(1.0 / d as f64);
    for (_, r) in &evaluated {
        let v = primal(&r.rho);
        if v > best_val {
            best_val = v;
            best_rho = r.rho.clone();
        }
    }
    let below = evaluated
        .iter()
        .filter(|(l, _)| *l <= lam_star)
        .max_by(|x, y| x.0.total_cmp(&y.0));
    let above = evaluated
        .iter()
        .filter(|(l, _)| *l >= lam_star)
        .min_by(|x, y| x.0.total_cmp(&y.0));
    if let (Some((_, lo)), Some((_, hi))) = (below, above) {
        let mix = |t: f64| &lo.rho * cr(t) + &hi.rho * cr(1.0 - t);
        let (mut ta, mut tb) = (0.0f64, 1.0f64);
        while tb - ta > 1e-9 {
            let t1 = tb - golden * (tb - ta);
            let t2 = ta + golden * (tb - ta);
            if primal(&mix(t1)) >= primal(&mix(t2)) {
                tb = t2;
            } else {
                ta = t1;
            }
        }
        let rho = mix(0.5 * (ta + tb));
        let v = primal(&rho);
        if v > best_val {
            best_val = v;
            best_rho = rho;
        }
    }
    let gap = (dual - best_val).max(0.0);
    let direction = if gap < 1e-5 { BoundDirection::CertifiedExact } else { BoundDirection::CertifiedLower };
    let mut r = CapacityReport::new(Quantity::QA, ch, best_val.max(0.0), direction);
    r.certificate_gap = Some(gap);
    r.diagnostics = Diagnostics {
        restarts: 1,
        iterations: evaluated.len(),
        converged: gap < 1e-5,
        ..Default::default()
    };
    r.best_input = Some(best_rho);
    r
}

/// Every single-letter quantity for one channel.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CapacitySuite {
    pub chi: CapacityReport,
    pub q1: CapacityReport,
    pub p1: CapacityReport,
    pub c_e: CapacityReport,
    pub q_a: CapacityReport,
}

pub fn capacity_suite(ch: &KrausChannel, opts: &SolverOptions) -> CapacitySuite {
    CapacitySuite {
        chi: holevo_capacity(ch, opts),
        q1: q1(ch, opts),
        p1: p1(ch, opts),
        c_e: c_e(ch, opts),
        q_a: q_a(ch, opts),
    }
}

impl CapacitySuite {
    pub fn reports(&self) -> [&CapacityReport; 5] {
        [&self.chi, &self.q1, &self.p1, &self.c_e, &self.q_a]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropics::binary_entropy;

    fn opts() -> SolverOptions {
        SolverOptions::default().with_restarts(6).with_seed(5)
    }

    fn qubit(kraus: Vec<ComplexMatrix>, name: &str) -> KrausChannel {
        KrausChannel::new(kraus, Some(name.into())).unwrap()
    }

    fn pauli() -> [ComplexMatrix; 4] {
        let i = identity(2);
        let x = ComplexMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]);
        let y = ComplexMatrix::from_row_slice(2, 2, &[cr(0.0), crate::linops::c(0.0, -1.0), crate::linops::c(0.0, 1.0), cr(0.0)]);
        let z = ComplexMatrix::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(-1.0)]);
        [i, x, y, z]
    }

    /// `ρ ↦ (1−p)ρ + p I/2` as a Pauli channel.
    fn depolarizing(p: f64) -> KrausChannel {
        let [i, x, y, z] = pauli();
        qubit(
            vec![
                i * cr((1.0 - 0.75 * p).sqrt()),
                x * cr((p / 4.0).sqrt()),
                y * cr((p / 4.0).sqrt()),
                z * cr((p / 4.0).sqrt()),
            ],
            "depolarizing",
        )
    }

    fn dephasing(p: f64) -> KrausChannel {
        let [i, _, _, z] = pauli();
        qubit(vec![i * cr((1.0 - p).sqrt()), z * cr(p.sqrt())], "dephasing")
    }

    fn full_dephasing() -> KrausChannel {
        qubit(
            vec![crate::linops::basis_projector(2, 0), crate::linops::basis_projector(2, 1)],
            "full_dephasing",
        )
    }

    fn amplitude_damping(g: f64) -> KrausChannel {
        let k0 = ComplexMatrix::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr((1.0 - g).sqrt())]);
        let k1 = ComplexMatrix::from_row_slice(2, 2, &[cr(0.0), cr(g.sqrt()), cr(0.0), cr(0.0)]);
        qubit(vec![k0, k1], "amplitude_damping")
    }

    fn constant() -> KrausChannel {
        let k0 = ComplexMatrix::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(0.0)]);
        let k1 = ComplexMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(0.0), cr(0.0)]);
        qubit(vec![k0, k1], "constant")
    }

    #[test]
    fn identity_values() {
        let id = KrausChannel::identity(2);
        let s = capacity_suite(&id, &opts());
        for (r, want) in s.reports().iter().zip([1.0, 1.0, 1.0, 2.0, 1.0]) {
            assert!((r.value - want).abs() < 1e-4, "{:?} = {}", r.quantity, r.value);
            r.check_invariants(2, 2).unwrap();
        }
        assert_eq!(s.c_e.bound_direction, BoundDirection::CertifiedExact);
    }

    #[test]
    fn fully_depolarizing_values() {
        let ch = depolarizing(1.0);
        let s = capacity_suite(&ch, &opts());
        for r in [&s.chi, &s.q1, &s.p1, &s.c_e] {
            assert!(r.value <= 1e-4, "{:?} = {}", r.quantity, r.value);
        }
        // pure inputs give S(B) = S(E), so the raw maximum is zero, never below
        assert!(s.q1.raw_value.unwrap().abs() < 1e-6);
        // the output is I/2 for every input, so min{S(ρ), 1} peaks at ρ = I/2
        assert!((s.q_a.value - 1.0).abs() < 1e-5);
    }

    #[test]
    fn depolarizing_holevo_closed_form() {
        let r = holevo_capacity(&depolarizing(0.5), &opts());
        let want = 1.0 - binary_entropy(0.25);
        assert!((r.value - want).abs() < 1e-5, "{} vs {want}", r.value);
    }

    #[test]
    fn dephasing_q1_closed_form() {
        for p in [0.1, 0.3] {
            let r = q1(&dephasing(p), &opts());
            assert!((r.value - (1.0 - binary_entropy(p))).abs() < 1e-5, "{}", r.value);
        }
    }

    #[test]
    fn p1_examples() {
        assert!((p1(&KrausChannel::identity(2), &opts()).value - 1.0).abs() < 1e-4);
        assert!(p1(&full_dephasing(), &opts()).value < 1e-4);
        let ad = amplitude_damping(0.3);
        let a = p1(&ad, &opts()).value;
        let b = q1(&ad, &opts()).value;
        assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    }

    #[test]
    fn c_e_depolarizing_matches_grid() {
        let ch = depolarizing(0.25);
        let r = c_e(&ch, &opts());
        // unitary covariance: the optimum is diagonal, grid over the population
        let comp = ch.complementary();
        let mut best = f64::NEG_INFINITY;
        for i in 0..=2000 {
            let q = i as f64 / 2000.0;
            let mut rho = ComplexMatrix::zeros(2, 2);
            rho[(0, 0)] = cr(q);
            rho[(1, 1)] = cr(1.0 - q);
            let v = homogeneous_entropy(&rho) + homogeneous_entropy(&ch.map(&rho)) - homogeneous_entropy(&comp.map(&rho));
            best = best.max(v);
        }
        assert!((r.value - best).abs() < 1e-4, "{} vs {best}", r.value);
    }

    #[test]
    fn q_a_examples() {
        assert!((q_a(&KrausChannel::identity(2), &opts()).value - 1.0).abs() < 1e-5);
        assert!(q_a(&constant(), &opts()).value < 1e-5);
        let r = q_a(&full_dephasing(), &opts());
        assert!((r.value - 1.0).abs() < 1e-5);
        // amplitude damping: S(N ρ) < S(ρ) region makes the output entropy bind
        let ad = amplitude_damping(0.6);
        let r = q_a(&ad, &opts());
        // phase covariance: diagonal inputs suffice; the objective is concave in q
        let obj = |q: f64| {
            let mut rho = ComplexMatrix::zeros(2, 2);
            rho[(0, 0)] = cr(1.0 - q);
            rho[(1, 1)] = cr(q);
            homogeneous_entropy(&rho).min(homogeneous_entropy(&ad.map(&rho)))
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let (m1, m2) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
            if obj(m1) < obj(m2) { lo = m1 } else { hi = m2 }
        }
        let best = obj(0.5 * (lo + hi));
        assert!((r.value - best).abs() < 1e-5, "{} vs {best}", r.value);
        assert_eq!(r.bound_direction, BoundDirection::CertifiedExact);
    }

    #[test]
    fn msw_examples() {
        assert!((msw_chi(&KrausChannel::identity(2), &opts()).value - 1.0).abs() < 1e-4);
        assert!((msw_chi(&full_dephasing(), &opts()).value - 1.0).abs() < 1e-4);
        let ad = amplitude_damping(0.4);
        let a = msw_chi(&ad, &opts()).value;
        let b = holevo_capacity(&ad, &opts()).value;
        assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    }

    #[test]
    fn msw_gradient_matches_finite_differences() {
        let ch = amplitude_damping(0.3);
        let mut rng = crate::linops::rng_from_seed(2);
        let mm = crate::linops::gaussian_matrix(2, 2, &mut rng);
        let y = PolarIsometry::new(4, 2).eval(&random_params(16, &mut rng), 0).v;
        let f = |m: &ComplexMatrix| msw_outer_value_grad(&ch, m, m.norm_squared(), &y).0;
        let (_, g) = msw_outer_value_grad(&ch, &mm, mm.norm_squared(), &y);
        for k in 0..4 {
            for (dz, part) in [(cr(1e-6), g[k].re), (crate::linops::c(0.0, 1e-6), g[k].im)] {
                let mut p = mm.clone();
                let mut q = mm.clone();
                p[k] += dz;
                q[k] -= dz;
                let fd = (f(&p) - f(&q)) / 2e-6;
                assert!((fd - part).abs() < 1e-6, "{fd} vs {part}");
            }
        }
    }
}

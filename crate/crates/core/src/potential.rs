//! Potential-capacity quantities and upper bounds.
//!
//! * `(Q_A)_p(N) = max{log d_in, max_ρ S(N ρ)}` exactly, with an explicit
//!   zero-`Q_A` auxiliary channel that activates it;
//! * the canonical lifting `N↑` with Kraus operators `K_i ⊗ |i⟩` (output
//!   `B ⊗ B′`), which is always Hadamard;
//! * the channel entanglement of formation
//!   `E_F(N) = max_ρ min_u Σ_j H(K'_j ρ K'_j†) = min_u max_ρ Σ_j H(K'_j ρ K'_j†)`
//!   over Kraus rotations `K'_j = Σ_i u_{ji} K_i`, which upper-bounds the
//!   potential quantum and private capacities;
//! * `max_ρ [S(B) − G(B:E)]`, an upper bound on the potential Holevo quantity.

use std::cell::RefCell;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::capacities::{holevo_capacity, max_output_entropy, p1, q1, q_a, Ensemble};
use crate::channels::{KrausChannel, TOL_CPTP};
use crate::entanglement::{eof_matrix, ppt_check_matrix, MeasurementSpace, PptReport, PptScope};
use crate::entropics::{channel_entropy_grad, homogeneous_entropy_grad};
use crate::error::{Error, Result};
use crate::linops::{
    basis_vector, c, cr, eigh, hermitize, identity, kron, ComplexMatrix, ComplexVector,
};
use crate::optim::{
    best_of, maximize_concave, minimize, random_params, BoundDirection, Diagnostics, LbfgsOptions,
    PolarIsometry, SolverOptions, StateBlocks,
};

/// Margin separating "strictly below `log d_min`" from numerical noise.
pub const PERFECTION_MARGIN: f64 = 1e-3;

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum BoundTarget {
    QaP,
    ChiPUpper,
    QpUpper,
    PpUpper,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundReport {
    pub target: BoundTarget,
    pub channel: String,
    pub value: f64,
    pub components: BTreeMap<String, f64>,
    pub bound_direction: BoundDirection,
    pub diagnostics: Diagnostics,
}

// ---------------------------------------------------------------------------
// (Q_A)_p

/// `(Q_A)_p(N) = max{log₂ d_in, max_ρ S(N ρ)}`.
pub fn q_a_potential(ch: &KrausChannel, opts: &SolverOptions) -> BoundReport {
    let moe = max_output_entropy(ch, opts);
    let log_in = (ch.d_in as f64).log2();
    let mut components = BTreeMap::new();
    components.insert("log_d_in".into(), log_in);
    components.insert("max_output_entropy".into(), moe.value);
    components.insert("max_output_entropy_gap".into(), moe.certificate_gap.unwrap_or(f64::NAN));
    BoundReport {
        target: BoundTarget::QaP,
        channel: ch.label(),
        value: log_in.max(moe.value),
        components,
        bound_direction: if moe.bound_direction == BoundDirection::CertifiedExact {
            BoundDirection::CertifiedExact
        } else {
            BoundDirection::CertifiedLower
        },
        diagnostics: moe.diagnostics,
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ActivatorKind {
    /// One-dimensional identity; the channel needs no help.
    Trivial,
    /// No input; outputs half of a maximally entangled state on `B′E′`.
    StatePreparation,
    /// Discards its input entirely.
    TraceOut,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ActivationWitness {
    pub kind: ActivatorKind,
    pub aux_channel: KrausChannel,
    /// `Q_A` of the auxiliary channel (zero for every activator used).
    pub aux_q_a: f64,
    /// `Q_A(N ⊗ aux)`.
    pub joint_q_a: f64,
    /// `Q_A(N ⊗ aux) − Q_A(aux)`.
    pub achieved: f64,
    pub target: f64,
}

/// Channel with no input whose output is `I/d` on `B′`, purified by `E′`.
pub fn state_preparation_activator(d: usize) -> KrausChannel {
    let kraus = (0..d)
        .map(|e| ComplexMatrix::from_fn(d, 1, |b, _| if b == e { cr(1.0 / (d as f64).sqrt()) } else { cr(0.0) }))
        .collect();
    KrausChannel::new(kraus, Some(format!("prepare_maximally_entangled({d})"))).expect("valid activator")
}

/// `ρ ↦ tr ρ` on a `d`-dimensional input.
pub fn trace_out_activator(d: usize) -> KrausChannel {
    let kraus = (0..d)
        .map(|e| ComplexMatrix::from_fn(1, d, |_, a| if a == e { cr(1.0) } else { cr(0.0) }))
        .collect();
    KrausChannel::new(kraus, Some(format!("trace_out({d})"))).expect("valid activator")
}

/// Builds the auxiliary channel that attains `(Q_A)_p` and verifies it by a
/// direct `Q_A` computation on the tensor product.
pub fn activation_witness_qa(ch: &KrausChannel, opts: &SolverOptions) -> ActivationWitness {
    let target = q_a_potential(ch, opts).value;
    let own = q_a(ch, opts).value;
    let moe = max_output_entropy(ch, opts).value;
    let log_in = (ch.d_in as f64).log2();
    let (kind, aux) = if own >= target - 1e-6 {
        (ActivatorKind::Trivial, KrausChannel::identity(1).named("trivial"))
    } else if moe > log_in {
        // input entropy binds: lend the input a d_out-dimensional partner that is discarded
        (ActivatorKind::TraceOut, trace_out_activator(ch.d_out))
    } else {
        // output entropy binds: append maximally mixed output purified by the environment
        (ActivatorKind::StatePreparation, state_preparation_activator(ch.d_in))
    };
    let aux_q_a = q_a(&aux, opts).value;
    let joint = q_a(&ch.tensor(&aux), opts).value;
    ActivationWitness { kind, aux_channel: aux, aux_q_a, joint_q_a: joint, achieved: joint - aux_q_a, target }
}

// ---------------------------------------------------------------------------
// Canonical lifting

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LiftedChannel {
    pub original: KrausChannel,
    pub lifted: KrausChannel,
    /// Isometry `u` (`m × k`) applied to the Kraus operators before lifting.
    #[serde(with = "crate::linops::serde_matrix")]
    pub kraus_choice: ComplexMatrix,
}

/// `N↑` with Kraus operators `K'_i ⊗ |i⟩` (output `B ⊗ B′`), where
/// `K' = u·K` if a rotation is given.
pub fn canonical_lift(ch: &KrausChannel, u: Option<&ComplexMatrix>) -> Result<LiftedChannel> {
    let k = ch.num_kraus();
    let u = u.cloned().unwrap_or_else(|| identity(k));
    let rotated = ch.kraus_rotate(&u)?;
    let m = rotated.num_kraus();
    let kraus = rotated
        .kraus
        .iter()
        .enumerate()
        .map(|(i, ki)| {
            let e = basis_vector(m, i);
            kron(ki, &ComplexMatrix::from_column_slice(m, 1, e.as_slice()))
        })
        .collect();
    let name = format!("lift({})", ch.label());
    let lifted = KrausChannel::new(kraus, Some(name))?;
    Ok(LiftedChannel { original: ch.clone(), lifted, kraus_choice: u })
}

impl LiftedChannel {
    /// Output of the original channel recovered by discarding `B′`.
    pub fn discard_copy(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let m = self.kraus_choice.nrows();
        crate::linops::ptrace_second(&self.lifted.map(rho), self.original.d_out, m)
    }
}

// ---------------------------------------------------------------------------
// Channel entanglement of formation

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelEof {
    /// `min_u max_ρ`; an upper bound on `E_F(N)` (the inner problem is concave
    /// and solved to a certificate, which is added).
    pub min_max: f64,
    /// `max_ρ min_u`, with the inner minimum evaluated as the entanglement of
    /// formation of `(id ⊗ N)(φ_ρ)`.
    pub max_min: f64,
    /// `min_max − max_min`; zero by the minimax identity up to optimizer error.
    pub gap: f64,
    #[serde(with = "crate::linops::serde_matrix")]
    pub best_rotation: ComplexMatrix,
    #[serde(with = "crate::linops::serde_matrix")]
    pub best_input: ComplexMatrix,
    #[serde(with = "crate::linops::serde_matrix")]
    pub max_min_input: ComplexMatrix,
    pub diagnostics: Diagnostics,
}

/// `Σ_j H(K'_j ρ K'_j†)`, gradients in `ρ` and in `u`.
struct RotationObjective<'a> {
    kraus: &'a [ComplexMatrix],
}

impl RotationObjective<'_> {
    fn rotated(&self, u: &ComplexMatrix) -> Vec<ComplexMatrix> {
        crate::channels::rotate_kraus(self.kraus, u)
    }

    fn value_grad_rho(&self, kr: &[ComplexMatrix], rho: &ComplexMatrix) -> (f64, ComplexMatrix) {
        let d = rho.nrows();
        let mut g = ComplexMatrix::zeros(d, d);
        let mut v = 0.0;
        for k in kr {
            let (h, gk) = homogeneous_entropy_grad(&(k * rho * k.adjoint()));
            v += h;
            g += k.adjoint() * gk * k;
        }
        (v, g)
    }

    /// Complex gradient in `u` at fixed `ρ`: `Γ_u[j,i] = tr(K_i† Γ_j)`,
    /// `Γ_j = 2 G_j K'_j ρ`.
    fn value_grad_u(&self, u: &ComplexMatrix, rho: &ComplexMatrix) -> (f64, ComplexMatrix) {
        let kr = self.rotated(u);
        let mut gu = ComplexMatrix::zeros(u.nrows(), u.ncols());
        let mut v = 0.0;
        for (j, kj) in kr.iter().enumerate() {
            let (h, g) = homogeneous_entropy_grad(&(kj * rho * kj.adjoint()));
            v += h;
            let gamma = g * kj * rho * cr(2.0);
            for (i, ki) in self.kraus.iter().enumerate() {
                gu[(j, i)] = (ki.adjoint() * &gamma).trace();
            }
        }
        (v, gu)
    }
}

/// `(id ⊗ N)(φ_ρ)` on `R ⊗ B` for the canonical purification of `ρ`.
pub fn output_with_reference(ch: &KrausChannel, rho: &ComplexMatrix) -> ComplexMatrix {
    let d = ch.d_in;
    let (vals, vecs) = eigh(rho);
    let mut phi = ComplexVector::zeros(d * d);
    for k in 0..d {
        let s = vals[k].max(0.0).sqrt();
        for a in 0..d {
            phi[k * d + a] += vecs[(a, k)] * cr(s);
        }
    }
    let proj = &phi * phi.adjoint();
    crate::channels::map_second(&ch.kraus, &proj, d)
}

fn rotation_sizes(ch: &KrausChannel) -> Vec<usize> {
    let k = ch.num_kraus();
    let mut sizes = vec![k];
    if k * ch.d_out > k {
        sizes.push(k * ch.d_out);
    }
    sizes
}

/// Upper side of the channel entanglement of formation.
#[derive(Clone, Debug)]
pub struct MinMax {
    pub value: f64,
    pub rotation: ComplexMatrix,
    pub input: ComplexMatrix,
    pub restart_values: Vec<f64>,
}

/// `min_u max_ρ Σ_j H(K'_j ρ K'_j†)`. Rotations in `seeds` (each `m × k` for
/// one of the searched sizes `m`) start the first restarts of their size.
pub fn rotation_min_max(ch: &KrausChannel, opts: &SolverOptions, seeds: &[ComplexMatrix]) -> MinMax {
    let d = ch.d_in;
    let obj = RotationObjective { kraus: &ch.kraus };
    let inner_opts = LbfgsOptions { max_iter: 200, stall_window: 10, stall_tol: 1e-12, ..LbfgsOptions::inner() };
    let mut runs = Vec::new();
    for &m in &rotation_sizes(ch) {
        let p = PolarIsometry::new(m, ch.num_kraus());
        let sized: Vec<&ComplexMatrix> = seeds.iter().filter(|u| u.nrows() == m).collect();
        let restarts = (opts.restarts / 2).max(2).max(sized.len() + 1);
        let (best, val, values) = best_of(restarts, |i| {
            let x0 = if i < sized.len() {
                p.params_from(sized[i])
            } else if i == sized.len() {
                p.identity_params()
            } else {
                random_params(p.num_params(), &mut opts.rng(&format!("channel_eof/{m}"), i as u64))
            };
            let warm = RefCell::new(identity(d) * cr(1.0 / d as f64));
            let res = minimize(
                |x, g| {
                    let ev = p.eval(x, 0);
                    let kr = obj.rotated(&ev.v);
                    let start = warm.borrow().clone();
                    let inner = maximize_concave(d, |r| obj.value_grad_rho(&kr, r), Some(&start), &inner_opts);
                    let (v, gu) = obj.value_grad_u(&ev.v, &inner.rho);
                    *warm.borrow_mut() = inner.rho;
                    p.pullback(&ev, &gu, g, 0);
                    v
                },
                x0,
                &opts.outer,
            );
            let u = p.eval(&res.x, 0).v;
            let (v, rho) = certified_inner_max(&obj, &u, d, &opts.lbfgs);
            ((u, rho), v)
        });
        runs.push((best, val, values));
    }
    let ((rotation, input), value, restart_values) = runs
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one rotation size");
    MinMax { value, rotation, input, restart_values }
}

/// Both orderings of the channel entanglement-of-formation minimax.
pub fn channel_eof(ch: &KrausChannel, opts: &SolverOptions) -> ChannelEof {
    let d = ch.d_in;
    let obj = RotationObjective { kraus: &ch.kraus };
    let mm = rotation_min_max(ch, opts, &[]);
    let (best_u, best_rho, min_max, values) = (mm.rotation, mm.input, mm.value, mm.restart_values);

    // max over inputs of the inner entanglement of formation
    let max_min_opts = opts.child("channel_eof/max_min", 0);
    let g_at = |rho: &ComplexMatrix| eof_matrix(&output_with_reference(ch, rho), d, ch.d_out, &max_min_opts).value;
    let mut candidates = vec![best_rho.clone()];
    let m = ch.num_kraus() * ch.d_out;
    let p = PolarIsometry::new(m, ch.num_kraus());
    let ascents = (opts.restarts / 8).max(1);
    for i in 0..ascents {
        let start = if i == 0 {
            best_rho.clone()
        } else {
            let mut rng = opts.rng("channel_eof/ascent", i as u64);
            crate::linops::random_density_with(
                &crate::linops::SystemDims::single("A", d),
                d,
                &mut rng,
            )
            .into_matrix()
        };
        let mut rng = opts.rng("channel_eof/ascent_inner", i as u64);
        let warm = RefCell::new(p.identity_params());
        let inner_starts: Vec<Vec<f64>> = (0..opts.inner_restarts).map(|_| random_params(p.num_params(), &mut rng)).collect();
        let res = maximize_concave(
            d,
            |rho| {
                // inner min over rotations (warm start plus a few fresh starts)
                let mut best: Option<(f64, Vec<f64>)> = None;
                let mut starts = vec![warm.borrow().clone()];
                starts.extend(inner_starts.iter().cloned());
                for s in starts {
                    let r = minimize(
                        |x, g| {
                            let ev = p.eval(x, 0);
                            let (v, gu) = obj.value_grad_u(&ev.v, rho);
                            p.pullback(&ev, &gu, g, 0);
                            v
                        },
                        s,
                        &opts.inner,
                    );
                    if best.as_ref().is_none_or(|(v, _)| r.value < *v) {
                        best = Some((r.value, r.x));
                    }
                }
                let (_, x) = best.expect("start");
                let u = p.eval(&x, 0).v;
                *warm.borrow_mut() = x;
                obj.value_grad_rho(&obj.rotated(&u), rho)
            },
            Some(&start),
            &opts.outer,
        );
        candidates.push(res.rho);
    }
    let mut max_min = f64::NEG_INFINITY;
    let mut max_min_input = best_rho.clone();
    for cand in candidates {
        let v = g_at(&cand);
        if v > max_min {
            max_min = v;
            max_min_input = cand;
        }
    }
    ChannelEof {
        min_max,
        max_min,
        gap: min_max - max_min,
        best_rotation: best_u,
        best_input: best_rho,
        max_min_input,
        diagnostics: Diagnostics { converged: (min_max - max_min).abs() < MINIMAX_TOL, ..Diagnostics::from_values(values, false) },
    }
}

/// Inner maximum at fixed rotation with a cold start, plus its certificate.
fn certified_inner_max(obj: &RotationObjective, u: &ComplexMatrix, d: usize, opts: &LbfgsOptions) -> (f64, ComplexMatrix) {
    let kr = obj.rotated(u);
    let res = maximize_concave(d, |r| obj.value_grad_rho(&kr, r), None, opts);
    (res.value + res.fw_gap, res.rho)
}

fn eof_bound(target: BoundTarget, ch: &KrausChannel, e: &ChannelEof) -> BoundReport {
    let mut components = BTreeMap::new();
    components.insert("channel_eof_min_max".into(), e.min_max);
    components.insert("channel_eof_max_min".into(), e.max_min);
    components.insert("minimax_gap".into(), e.gap);
    BoundReport {
        target,
        channel: ch.label(),
        value: e.min_max,
        components,
        bound_direction: BoundDirection::Heuristic,
        diagnostics: e.diagnostics.clone(),
    }
}

/// Upper bound `Q_p(N) ≤ Q_p⁽¹⁾(N) ≤ E_F(N)`.
pub fn qp_upper(ch: &KrausChannel, opts: &SolverOptions) -> BoundReport {
    eof_bound(BoundTarget::QpUpper, ch, &channel_eof(ch, opts))
}

/// Upper bound `P_p(N) ≤ P_p⁽¹⁾(N) ≤ E_F(N)`.
pub fn pp_upper(ch: &KrausChannel, opts: &SolverOptions) -> BoundReport {
    eof_bound(BoundTarget::PpUpper, ch, &channel_eof(ch, opts))
}

/// Both bounds from one minimax computation.
pub fn qp_pp_upper(ch: &KrausChannel, opts: &SolverOptions) -> (BoundReport, BoundReport, ChannelEof) {
    let e = channel_eof(ch, opts);
    (eof_bound(BoundTarget::QpUpper, ch, &e), eof_bound(BoundTarget::PpUpper, ch, &e), e)
}

// ---------------------------------------------------------------------------
// Holevo-type bound through the G measure

/// `max_ρ [S(B) − G(B:E)]` for the dilated output `U ρ U†`.
///
/// Written as one maximization over mixed-state ensembles `{σ_i}` of
/// `H(N Σσ) − Σ_i [H(N σ_i) − min_P Σ_j H(tr_E (1⊗P_j) U σ_i U†)]`, with the
/// measurement minimized per member. The first start is the optimal Holevo
/// ensemble, where the bracket vanishes, so the value is at least `χ`.
pub fn chi_p_upper(ch: &KrausChannel, opts: &SolverOptions) -> BoundReport {
    let chi = holevo_capacity(ch, opts);
    let d = ch.d_in;
    let (db, de) = (ch.d_out, ch.num_kraus());
    let u = ch.stinespring().matrix;
    let meas = MeasurementSpace::new(db, de);
    let m = opts.ensemble_cap.unwrap_or(d * d);
    let blocks = StateBlocks::uniform(d, m, d);
    let seed_ens = chi.ensemble.clone().expect("holevo ensemble");
    let restarts = (opts.restarts / 4).max(2);
    let (_, value, values) = best_of(restarts, |i| {
        let mut rng = opts.rng("chi_p_upper", i as u64);
        let x0 = if i == 0 {
            let mut members = seed_ens.blocks();
            members.resize(m, ComplexMatrix::zeros(d, d));
            members.truncate(m);
            let mut x = blocks.params_from_states(&members);
            let noise = random_params(x.len(), &mut rng);
            x.iter_mut().zip(noise).for_each(|(v, n)| *v += 1e-5 * n);
            x
        } else {
            random_params(blocks.num_params(), &mut rng)
        };
        let warm: RefCell<Vec<ComplexMatrix>> = RefCell::new(Vec::new());
        let extra: Vec<ComplexMatrix> = (0..opts.inner_restarts).map(|_| meas.random_start(&mut rng)).collect();
        let objective = |sigmas: &[ComplexMatrix], full: bool, warm: &mut Vec<ComplexMatrix>| {
            let total = sigmas.iter().fold(ComplexMatrix::zeros(d, d), |a, s| a + s);
            let (h0, g0) = channel_entropy_grad(ch, &total);
            let mut value = h0;
            let mut grads = Vec::with_capacity(sigmas.len());
            for (t, s) in sigmas.iter().enumerate() {
                let (h, g) = channel_entropy_grad(ch, s);
                let be = &u * s * u.adjoint();
                let mut starts = vec![meas.eigenbasis_start(&be)];
                if let Some(w) = warm.get(t) {
                    starts.push(w.clone());
                }
                if full {
                    starts.extend(extra.iter().cloned());
                }
                let inner_opts = if full { &opts.lbfgs } else { &opts.inner };
                let (_, y) = meas.solve(&be, &starts, inner_opts);
                let (hm, gm) = meas.sigma_gradient(&be, &y);
                if t < warm.len() {
                    warm[t] = y;
                } else {
                    warm.push(y);
                }
                value += -h + hm;
                grads.push(&g0 - g + u.adjoint() * gm * &u);
            }
            (value, grads)
        };
        let res = minimize(
            |x, g| {
                let ev = blocks.eval(x, 0);
                let (v, grads) = objective(&ev.sigmas, false, &mut warm.borrow_mut());
                let neg: Vec<ComplexMatrix> = grads.into_iter().map(|g| -g).collect();
                blocks.pullback(&ev, &neg, g, 0);
                -v
            },
            x0,
            &opts.outer,
        );
        let sigmas = blocks.eval(&res.x, 0).sigmas;
        let (v, _) = objective(&sigmas, true, &mut warm.borrow_mut());
        ((), -v)
    });
    let bound = (-value).max(chi.value);
    let mut components = BTreeMap::new();
    components.insert("holevo_lower".into(), chi.value);
    components.insert("max_s_b_minus_g".into(), -value);
    BoundReport {
        target: BoundTarget::ChiPUpper,
        channel: ch.label(),
        value: bound,
        components,
        bound_direction: BoundDirection::Heuristic,
        diagnostics: Diagnostics::from_values(values.into_iter().map(|v| -v).collect(), true),
    }
}

// ---------------------------------------------------------------------------
// Classification

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Yes,
    No,
    Undecided,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EbEvidence {
    pub ppt: PptReport,
    /// Trivial input or output dimension.
    pub trivial_dimension: bool,
    /// Choi matrix is block diagonal in a basis of one side (sufficient for
    /// separability).
    pub classical_side: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EbReport {
    pub verdict: Verdict,
    pub evidence: EbEvidence,
}

/// Entanglement-breaking test on a Choi matrix over `A ⊗ X`.
pub fn entanglement_breaking_choi(choi: &ComplexMatrix, da: usize, dx: usize) -> EbReport {
    let ppt = ppt_check_matrix(choi, da, dx);
    let trivial = da == 1 || dx == 1;
    let classical_side = if commuting_slices(choi, da, dx, false) {
        Some("output".to_string())
    } else if commuting_slices(choi, da, dx, true) {
        Some("input".to_string())
    } else {
        None
    };
    let verdict = if trivial || classical_side.is_some() {
        Verdict::Yes
    } else if !ppt.is_ppt {
        Verdict::No
    } else if ppt.scope == PptScope::Decidable {
        Verdict::Yes
    } else {
        Verdict::Undecided
    };
    EbReport { verdict, evidence: EbEvidence { ppt, trivial_dimension: trivial, classical_side } }
}

/// Whether all slices `⟨a|J|a'⟩` on one factor commute with each other and
/// with their adjoints; then `J = Σ_x C_x ⊗ |f_x⟩⟨f_x|` with `C_x ⪰ 0`.
fn commuting_slices(j: &ComplexMatrix, da: usize, dx: usize, input_side: bool) -> bool {
    let (outer, inner) = if input_side { (dx, da) } else { (da, dx) };
    let entry = |o: usize, o2: usize, i: usize, i2: usize| {
        if input_side {
            j[(i * dx + o, i2 * dx + o2)]
        } else {
            j[(o * dx + i, o2 * dx + i2)]
        }
    };
    let mut herm = Vec::new();
    for o in 0..outer {
        for o2 in o..outer {
            let s = ComplexMatrix::from_fn(inner, inner, |i, i2| entry(o, o2, i, i2));
            let t = ComplexMatrix::from_fn(inner, inner, |i, i2| entry(o2, o, i, i2));
            herm.push(&s + &t);
            if o != o2 {
                herm.push((&s - &t) * c(0.0, 1.0));
            }
        }
    }
    let scale = j.norm().max(1e-300);
    for x in 0..herm.len() {
        for y in x + 1..herm.len() {
            let comm = &herm[x] * &herm[y] - &herm[y] * &herm[x];
            if comm.norm() > 1e-9 * scale * scale {
                return false;
            }
        }
    }
    true
}

pub fn is_entanglement_breaking(ch: &KrausChannel) -> EbReport {
    entanglement_breaking_choi(&ch.choi().matrix, ch.d_in, ch.d_out)
}

/// Hadamard iff the complementary channel is entanglement breaking.
pub fn is_hadamard(ch: &KrausChannel) -> EbReport {
    let comp = ch.complementary();
    entanglement_breaking_choi(&comp.choi().matrix, comp.d_in, comp.d_out)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum DegradingMethod {
    MeasurePrepare,
    Fit,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DegradabilityReport {
    /// `Yes` when a map with residual below the threshold was found; `No`
    /// means none was found across the restarts (not a certified negative).
    pub verdict: Verdict,
    /// Frobenius distance `‖J(D∘N) − J(N^c)‖`.
    pub residual: f64,
    pub method: DegradingMethod,
    pub degrading_map: Option<KrausChannel>,
    pub restart_residuals: Vec<f64>,
}

/// Minimax gap below which the two orderings count as agreeing.
pub const MINIMAX_TOL: f64 = 1e-3;
pub const DEGRADABLE_TOL: f64 = 1e-5;

fn choi_residual(ch: &KrausChannel, d: &KrausChannel) -> Result<f64> {
    let composed = d.compose_after(ch)?;
    Ok((composed.choi().matrix - ch.complementary().choi().matrix).norm())
}

/// Measure `B` in the computational basis, prepare the least-squares best
/// environment state for each outcome.
pub fn measure_prepare_degrader(ch: &KrausChannel) -> Option<(KrausChannel, f64)> {
    let (da, db) = (ch.d_in, ch.d_out);
    let comp = ch.complementary();
    let de = comp.d_out;
    let jn = ch.choi().matrix;
    let jc = comp.choi().matrix;
    // columns: vec over (a, a') of ⟨b|J_N|b⟩
    let amat = ComplexMatrix::from_fn(da * da, db, |r, b| jn[((r / da) * db + b, (r % da) * db + b)]);
    let rhs = ComplexMatrix::from_fn(da * da, de * de, |r, s| jc[((r / da) * de + s / de, (r % da) * de + s % de)]);
    let pinv = amat.clone().pseudo_inverse(1e-12).ok()?;
    let sol = pinv * rhs;
    let mut kraus = Vec::new();
    for b in 0..db {
        let weight: f64 = (0..da * da).map(|r| amat[(r, b)].norm_sqr()).sum();
        let phi = if weight < 1e-20 {
            let mut z = ComplexMatrix::zeros(de, de);
            z[(0, 0)] = cr(1.0);
            z
        } else {
            hermitize(&ComplexMatrix::from_fn(de, de, |e, e2| sol[(b, e * de + e2)]))
        };
        let (vals, vecs) = eigh(&phi);
        if vals[0] < -1e-12 || (vals.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
            return None;
        }
        for (k, &mu) in vals.iter().enumerate() {
            if mu > 1e-15 {
                let f = vecs.column(k) * cr(mu.sqrt());
                let bra = basis_vector(db, b).adjoint();
                kraus.push(&f * bra);
            }
        }
    }
    let d = KrausChannel::new(kraus, Some("measure_prepare_degrader".into())).ok()?;
    let res = choi_residual(ch, &d).ok()?;
    Some((d, res))
}

/// Fit `min ‖J(D∘N) − J(N^c)‖²` over CPTP maps `D: B → E` given by a stacked
/// Kraus isometry with `d_B·d_E` operators.
pub fn is_degradable(ch: &KrausChannel, opts: &SolverOptions) -> DegradabilityReport {
    if let Some((d, res)) = measure_prepare_degrader(ch) {
        if res < 1e-10 {
            return DegradabilityReport {
                verdict: Verdict::Yes,
                residual: res,
                method: DegradingMethod::MeasurePrepare,
                degrading_map: Some(d),
                restart_residuals: vec![res],
            };
        }
    }
    let (da, db) = (ch.d_in, ch.d_out);
    let de = ch.num_kraus();
    let n = db * de;
    let p = PolarIsometry::new(n * de, db);
    let x_mat = ch.choi().matrix;
    let jc = ch.complementary().choi().matrix;
    let fit_opts = LbfgsOptions { max_iter: 4000, memory: 15, grad_tol: 1e-13, stall_tol: 1e-16, stall_window: 50 };
    let ident_a = identity(da);
    let objective = |v: &ComplexMatrix| -> (f64, ComplexMatrix) {
        let ls: Vec<ComplexMatrix> = (0..n).map(|j| v.rows(j * de, de).into_owned()).collect();
        let lifts: Vec<ComplexMatrix> = ls.iter().map(|l| kron(&ident_a, l)).collect();
        let mut r = -&jc;
        for big in &lifts {
            r += big * &x_mat * big.adjoint();
        }
        let f = r.norm_squared();
        let mut grad = ComplexMatrix::zeros(v.nrows(), v.ncols());
        for (j, big) in lifts.iter().enumerate() {
            let y = &x_mat * big.adjoint() * &r;
            // Z[b,e] = Σ_a Y[(a,b),(a,e)], gradient 4 Z†
            for b in 0..db {
                for e in 0..de {
                    let mut z = cr(0.0);
                    for a in 0..da {
                        z += y[(a * db + b, a * de + e)];
                    }
                    grad[(j * de + e, b)] = z.conj() * cr(4.0);
                }
            }
        }
        (f, grad)
    };
    let (v, best, values) = best_of(opts.restarts, |i| {
        let x0 = random_params(p.num_params(), &mut opts.rng("degradable", i as u64));
        let res = minimize(
            |x, g| {
                let ev = p.eval(x, 0);
                let (f, gv) = objective(&ev.v);
                p.pullback(&ev, &gv, g, 0);
                f
            },
            x0,
            &fit_opts,
        );
        let v = p.eval(&res.x, 0).v;
        let f = objective(&v).0;
        (v, f)
    });
    let kraus: Vec<ComplexMatrix> = (0..n).map(|j| v.rows(j * de, de).into_owned()).collect();
    let map = KrausChannel::new(kraus, Some("degrading_map".into())).ok();
    let residual = map
        .as_ref()
        .and_then(|m| choi_residual(ch, m).ok())
        .unwrap_or(best.max(0.0).sqrt());
    DegradabilityReport {
        verdict: if residual < DEGRADABLE_TOL { Verdict::Yes } else { Verdict::No },
        residual,
        method: DegradingMethod::Fit,
        degrading_map: map,
        restart_residuals: values.into_iter().map(|f| f.max(0.0).sqrt()).collect(),
    }
}

// ---------------------------------------------------------------------------
// Perfection audit

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PerfectionVerdict {
    /// The single-letter lower bound already reaches `log₂ d_min`.
    Perfect,
    /// The potential upper bound is below `log₂ d_min − margin`: no
    /// auxiliary channel can activate it to a perfect channel.
    StrictlyBelowPerfect,
    /// The potential upper bound vanishes.
    Zero,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuditLine {
    pub lower: f64,
    pub upper: f64,
    /// `log₂ d_min − upper`.
    pub margin: f64,
    pub verdict: PerfectionVerdict,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerfectionAudit {
    pub channel: String,
    pub d_min: usize,
    pub log_d_min: f64,
    pub chi: f64,
    pub q1: f64,
    pub p1: f64,
    pub chi_p_upper: f64,
    pub qp_upper: f64,
    pub pp_upper: f64,
    pub classical: AuditLine,
    pub quantum: AuditLine,
    pub private: AuditLine,
}

fn audit_line(lower: f64, upper: f64, log_d_min: f64) -> AuditLine {
    let margin = log_d_min - upper;
    let verdict = if upper <= PERFECTION_MARGIN {
        PerfectionVerdict::Zero
    } else if lower >= log_d_min - PERFECTION_MARGIN {
        PerfectionVerdict::Perfect
    } else if margin > PERFECTION_MARGIN {
        PerfectionVerdict::StrictlyBelowPerfect
    } else {
        PerfectionVerdict::Inconclusive
    };
    AuditLine { lower, upper, margin, verdict }
}

pub fn perfection_audit(ch: &KrausChannel, opts: &SolverOptions) -> PerfectionAudit {
    potential_suite(ch, opts).audit
}

/// All potential-capacity bounds of one channel, each computed once.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PotentialSuite {
    pub qa_p: BoundReport,
    pub chi_p_upper: BoundReport,
    pub qp_upper: BoundReport,
    pub pp_upper: BoundReport,
    pub channel_eof: ChannelEof,
    pub audit: PerfectionAudit,
}

impl PotentialSuite {
    /// Violations of `q1 ≤ qp_upper`, `p1 ≤ pp_upper`, `χ ≤ chi_p_upper`.
    pub fn chain_violations(&self, tol: f64) -> Vec<String> {
        let a = &self.audit;
        let mut v = Vec::new();
        for (name, lower, upper) in [
            ("q1 <= qp_upper", a.q1, a.qp_upper),
            ("p1 <= pp_upper", a.p1, a.pp_upper),
            ("chi <= chi_p_upper", a.chi, a.chi_p_upper),
        ] {
            if lower > upper + tol {
                v.push(format!("{name} fails: {lower} > {upper}"));
            }
        }
        v
    }
}

pub fn potential_suite(ch: &KrausChannel, opts: &SolverOptions) -> PotentialSuite {
    let d_min = ch.d_in.min(ch.d_out);
    let log_d_min = (d_min as f64).log2();
    let chi = holevo_capacity(ch, opts).value;
    let q = q1(ch, opts).value;
    let p = p1(ch, opts).value;
    let chi_p = chi_p_upper(ch, opts);
    let (qp, pp, eof) = qp_pp_upper(ch, opts);
    let audit = PerfectionAudit {
        channel: ch.label(),
        d_min,
        log_d_min,
        chi,
        q1: q,
        p1: p,
        chi_p_upper: chi_p.value,
        qp_upper: qp.value,
        pp_upper: pp.value,
        classical: audit_line(chi, chi_p.value, log_d_min),
        quantum: audit_line(q, qp.value, log_d_min),
        private: audit_line(p, pp.value, log_d_min),
    };
    PotentialSuite { qa_p: q_a_potential(ch, opts), chi_p_upper: chi_p, qp_upper: qp, pp_upper: pp, channel_eof: eof, audit }
}

/// Ensemble helper shared with the additivity experiments.
pub fn holevo_ensemble(ch: &KrausChannel, opts: &SolverOptions) -> Result<Ensemble> {
    holevo_capacity(ch, opts)
        .ensemble
        .ok_or_else(|| Error::InvariantViolation("Holevo optimizer returned no ensemble".into()))
}

/// Sanity check used by the CLI: the lift must be CPTP and Hadamard.
pub fn check_lift(l: &LiftedChannel) -> Result<()> {
    let rep = l.lifted.validate();
    if rep.deviation > TOL_CPTP {
        return Err(Error::NotCptp { deviation: rep.deviation });
    }
    if is_hadamard(&l.lifted).verdict != Verdict::Yes {
        return Err(Error::InvariantViolation("lifted channel failed the Hadamard test".into()));
    }
    Ok(())
}

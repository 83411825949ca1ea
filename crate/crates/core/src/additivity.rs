//! Tensor-product experiments: additivity gaps, activation searches over an
//! auxiliary family, the `n = 2` regularization step and sub-additivity of
//! the channel entanglement of formation.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::capacities::{
    c_e, holevo_capacity_seeded, p1_seeded, q1_seeded, q_a, CapacityReport, Ensemble, Quantity,
};
use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::linops::{kron, ComplexMatrix};
use crate::optim::SolverOptions;
use crate::potential::{chi_p_upper, rotation_min_max};

/// Additivity tolerance used by the checks in this module.
pub const GAP_TOL: f64 = 5e-3;

/// Default cap on the joint input dimension.
pub const DEFAULT_MAX_DIM: usize = 16;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapRecord {
    pub quantity: Quantity,
    pub channel_a: String,
    pub channel_b: String,
    pub value_a: f64,
    pub value_b: f64,
    pub joint_value: f64,
    pub sum_of_parts: f64,
    /// `joint_value − sum_of_parts`.
    pub gap: f64,
    pub seed: u64,
}

impl GapRecord {
    /// `f(N ⊗ M) − f(M)`: how much `N` adds on top of the auxiliary channel.
    pub fn activation(&self) -> f64 {
        self.joint_value - self.value_b
    }
}

fn check_dims(a: &KrausChannel, b: &KrausChannel, max_dim: usize) -> Result<()> {
    let d = a.d_in * b.d_in;
    if d > max_dim {
        return Err(Error::DimensionCap(format!("joint input dimension {d} exceeds {max_dim}")));
    }
    Ok(())
}

/// Evaluates one quantity, optionally seeded with a product of marginal optima.
pub fn evaluate(quantity: Quantity, ch: &KrausChannel, opts: &SolverOptions, seed: Option<(&CapacityReport, &CapacityReport)>) -> Result<CapacityReport> {
    let product_input = |(a, b): (&CapacityReport, &CapacityReport)| -> Option<ComplexMatrix> {
        Some(kron(a.best_input.as_ref()?, b.best_input.as_ref()?))
    };
    let product_ensemble = |(a, b): (&CapacityReport, &CapacityReport)| -> Option<Ensemble> {
        Some(a.ensemble.as_ref()?.product(b.ensemble.as_ref()?))
    };
    Ok(match quantity {
        Quantity::Chi => holevo_capacity_seeded(ch, opts, &seed.and_then(product_ensemble).into_iter().collect::<Vec<_>>()),
        Quantity::Q1 => q1_seeded(ch, opts, &seed.and_then(product_input).into_iter().collect::<Vec<_>>()),
        Quantity::P1 => p1_seeded(ch, opts, &seed.and_then(product_ensemble).into_iter().collect::<Vec<_>>()),
        Quantity::CE => c_e(ch, opts),
        Quantity::QA => q_a(ch, opts),
        other => return Err(Error::InvalidParameter(format!("{} is not an additivity quantity", other.name()))),
    })
}

/// `f(N ⊗ M) − f(N) − f(M)` with identical budgets on all three problems;
/// the joint problem starts from the product of the marginal optima.
pub fn additivity_gap(quantity: Quantity, a: &KrausChannel, b: &KrausChannel, opts: &SolverOptions, max_dim: usize) -> Result<GapRecord> {
    check_dims(a, b, max_dim)?;
    let ra = evaluate(quantity, a, opts, None)?;
    let rb = evaluate(quantity, b, opts, None)?;
    let joint = evaluate(quantity, &a.tensor(b), opts, Some((&ra, &rb)))?;
    let sum = ra.value + rb.value;
    Ok(GapRecord {
        quantity,
        channel_a: a.label(),
        channel_b: b.label(),
        value_a: ra.value,
        value_b: rb.value,
        joint_value: joint.value,
        sum_of_parts: sum,
        gap: joint.value - sum,
        seed: opts.seed,
    })
}

/// Zoo channels of the given dimensions plus `n_random` random channels per
/// dimension.
pub fn default_aux_family(dims: &[usize], n_random: usize, seed: u64) -> Vec<KrausChannel> {
    let mut family = Vec::new();
    for &d in dims {
        family.push(KrausChannel::identity(d));
        family.push(crate::cli::zoo::full_dephasing(d));
        family.push(crate::cli::zoo::depolarizing(0.5, d).expect("valid parameters"));
        family.push(crate::cli::zoo::erasure(0.5, d).expect("valid parameters"));
        if d == 2 {
            family.push(crate::cli::zoo::dephasing(0.2).expect("valid parameters"));
            family.push(crate::cli::zoo::amplitude_damping(0.3).expect("valid parameters"));
            family.push(crate::cli::zoo::amplitude_damping(0.8).expect("valid parameters"));
        }
        for i in 0..n_random {
            let s = crate::optim::derive_seed(seed, &format!("aux_family/{d}"), i as u64);
            family.push(crate::cli::zoo::random(d, d, d, s).expect("valid dimensions"));
        }
    }
    family
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ActivationResult {
    pub quantity: Quantity,
    pub channel: String,
    /// Largest `f(N ⊗ M) − f(M)` over the family: a lower-bound witness for
    /// the potential quantity, never the supremum itself.
    pub best_activation: f64,
    pub best_aux: String,
    pub records: Vec<GapRecord>,
}

/// Maximizes `f(N ⊗ M) − f(M)` over an auxiliary family.
pub fn activation_search(quantity: Quantity, ch: &KrausChannel, family: &[KrausChannel], opts: &SolverOptions, max_dim: usize) -> Result<ActivationResult> {
    use rayon::prelude::*;
    let records: Vec<GapRecord> = family
        .par_iter()
        .filter(|m| ch.d_in * m.d_in <= max_dim)
        .map(|m| additivity_gap(quantity, ch, m, opts, max_dim))
        .collect::<Result<_>>()?;
    let best = records
        .iter()
        .max_by(|a, b| a.activation().total_cmp(&b.activation()))
        .ok_or_else(|| Error::InvalidParameter("empty auxiliary family".into()))?;
    Ok(ActivationResult {
        quantity,
        channel: ch.label(),
        best_activation: best.activation(),
        best_aux: best.channel_b.clone(),
        records: records.clone(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainEntry {
    pub quantity: Quantity,
    pub single: f64,
    /// `½ f(N ⊗ N)`.
    pub half_double: f64,
    pub upper: f64,
    pub upper_source: String,
    pub lower_step_holds: bool,
    pub upper_step_holds: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainReport {
    pub channel: String,
    pub entries: Vec<ChainEntry>,
    pub holds: bool,
}

/// `f(N) ≤ ½ f(N⊗N) ≤ upper` for `f ∈ {χ, Q⁽¹⁾, P⁽¹⁾}`, with `upper` the
/// potential bound (`χ`: `max S(B) − G`; `Q⁽¹⁾`, `P⁽¹⁾`: channel `E_F`).
pub fn chain_check(ch: &KrausChannel, opts: &SolverOptions, max_dim: usize) -> Result<ChainReport> {
    check_dims(ch, ch, max_dim)?;
    let eof = rotation_min_max(ch, opts, &[]).value;
    let chi_up = chi_p_upper(ch, opts).value;
    let double = ch.tensor(ch);
    let mut entries = Vec::new();
    for q in [Quantity::Chi, Quantity::Q1, Quantity::P1] {
        let single = evaluate(q, ch, opts, None)?;
        let joint = evaluate(q, &double, opts, Some((&single, &single)))?;
        let half = 0.5 * joint.value;
        let (upper, source) = if q == Quantity::Chi { (chi_up, "chi_p_upper") } else { (eof, "channel_eof") };
        entries.push(ChainEntry {
            quantity: q,
            single: single.value,
            half_double: half,
            upper,
            upper_source: source.into(),
            lower_step_holds: single.value <= half + GAP_TOL,
            upper_step_holds: half <= upper + GAP_TOL,
        });
    }
    let holds = entries.iter().all(|e| e.lower_step_holds && e.upper_step_holds);
    Ok(ChainReport { channel: ch.label(), entries, holds })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubadditivityReport {
    pub channel_a: String,
    pub channel_b: String,
    pub eof_a: f64,
    pub eof_b: f64,
    pub eof_joint: f64,
    pub holds: bool,
}

/// `E_F(N ⊗ M) ≤ E_F(N) + E_F(M)` on the min-max side; the joint search
/// starts from the product of the marginal optimal rotations.
pub fn subadditivity_check_potential_proxy(a: &KrausChannel, b: &KrausChannel, opts: &SolverOptions, max_dim: usize) -> Result<SubadditivityReport> {
    check_dims(a, b, max_dim)?;
    let ea = rotation_min_max(a, opts, &[]);
    let eb = rotation_min_max(b, opts, &[]);
    let seed = kron(&ea.rotation, &eb.rotation);
    let joint = rotation_min_max(&a.tensor(b), opts, &[seed]);
    Ok(SubadditivityReport {
        channel_a: a.label(),
        channel_b: b.label(),
        eof_a: ea.value,
        eof_b: eb.value,
        eof_joint: joint.value,
        holds: joint.value <= ea.value + eb.value + GAP_TOL,
    })
}

/// Writes gap records as CSV with a header row.
pub fn write_gap_csv<W: Write>(records: &[GapRecord], out: W) -> Result<()> {
    #[derive(Serialize)]
    struct Row<'a> {
        quantity: &'a str,
        channel_a: &'a str,
        channel_b: &'a str,
        value_a: f64,
        value_b: f64,
        joint_value: f64,
        sum_of_parts: f64,
        gap: f64,
        seed: u64,
    }
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(Row {
            quantity: r.quantity.name(),
            channel_a: &r.channel_a,
            channel_b: &r.channel_b,
            value_a: r.value_a,
            value_b: r.value_b,
            joint_value: r.joint_value,
            sum_of_parts: r.sum_of_parts,
            gap: r.gap,
            seed: r.seed,
        })
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes gap records as JSON lines.
pub fn write_gap_jsonl<W: Write>(records: &[GapRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

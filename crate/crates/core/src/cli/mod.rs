//! Run configurations, subcommand drivers and report files for the `qcap`
//! binary.

pub mod zoo;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use zoo::ChannelSpec;

use crate::additivity::{
    activation_search, additivity_gap, chain_check, default_aux_family, subadditivity_check_potential_proxy,
    write_gap_csv, ActivationResult, ChainReport, GapRecord, SubadditivityReport, DEFAULT_MAX_DIM,
};
use crate::capacities::{capacity_suite, q1, CapacityReport, Quantity};
use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::linops::{identity, ComplexMatrix};
use crate::optim::SolverOptions;
use crate::potential::{
    canonical_lift, is_degradable, is_entanglement_breaking, is_hadamard, potential_suite, rotation_min_max,
    DegradabilityReport, EbReport, PotentialSuite, Verdict,
};
use crate::structure::{discover_block_form, verify_block_form, verify_equality_case, BlockDecomposition, BlockFormReport, EqualityMeasure, EqualityReport};

pub const SCHEMA_VERSION: u32 = 1;

/// Exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit status when a computed report violates one of its invariants.
pub const EXIT_INVARIANT: i32 = 2;
/// Exit status for unusable configuration or input.
pub const EXIT_CONFIG: i32 = 3;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvariantViolation(_) | Error::NotCptp { .. } => EXIT_INVARIANT,
        _ => EXIT_CONFIG,
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Capacity,
    Potential,
    Lift,
    Classify,
    Additivity,
    Structure,
}

fn default_tol() -> f64 {
    2e-3
}

fn default_max_dim() -> usize {
    DEFAULT_MAX_DIM
}

fn default_quantities() -> Vec<Quantity> {
    vec![Quantity::Q1, Quantity::P1]
}

fn default_true() -> bool {
    true
}

fn default_dims() -> Vec<usize> {
    vec![2]
}

fn default_n_random() -> usize {
    50
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ActivationSettings {
    pub quantity: Quantity,
    #[serde(default = "default_dims")]
    pub dims: Vec<usize>,
    #[serde(default = "default_n_random")]
    pub n_random: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AdditivitySettings {
    #[serde(default = "default_quantities")]
    pub quantities: Vec<Quantity>,
    /// Run `f(N) ≤ ½ f(N⊗N) ≤ upper` on every channel.
    #[serde(default)]
    pub chain: bool,
    #[serde(default = "default_true")]
    pub subadditivity: bool,
    #[serde(default)]
    pub activation: Option<ActivationSettings>,
}

impl Default for AdditivitySettings {
    fn default() -> Self {
        Self { quantities: default_quantities(), chain: false, subadditivity: true, activation: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub channels: Vec<ChannelSpec>,
    #[serde(default)]
    pub solver: SolverOptions,
    /// Tolerance for the report invariants (bound chains, gap signs).
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub additivity: AdditivitySettings,
}

impl RunConfig {
    pub fn new(command: Command, channels: Vec<ChannelSpec>) -> Self {
        Self {
            command,
            channels,
            solver: SolverOptions::default(),
            tol: default_tol(),
            max_dim: default_max_dim(),
            out: None,
            csv: None,
            additivity: AdditivitySettings::default(),
        }
    }

    /// Parses a JSON config; errors carry the line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() {
            return Err(Error::Config("at least one channel is required".into()));
        }
        if self.command == Command::Additivity && self.channels.len() < 2 && self.additivity.activation.is_none() && !self.additivity.chain {
            return Err(Error::Config("additivity needs two channels, `chain` or an `activation` search".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.solver.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CapacityResult {
    pub channel: String,
    pub d_in: usize,
    pub d_out: usize,
    pub reports: Vec<CapacityReport>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LiftSummary {
    #[serde(with = "crate::linops::serde_matrix")]
    pub kraus_choice: ComplexMatrix,
    pub lifted: KrausChannel,
    pub lifted_q1: f64,
    pub hadamard: EbReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LiftResult {
    pub channel: String,
    pub q1: f64,
    /// Lift of the Kraus operators as given.
    pub given_kraus: LiftSummary,
    /// Lift after the Kraus rotation minimizing the lifted `Q⁽¹⁾`.
    pub optimal: LiftSummary,
    pub channel_eof_min_max: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassifyResult {
    pub channel: String,
    pub hadamard: EbReport,
    pub entanglement_breaking: EbReport,
    pub degradability: DegradabilityReport,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct AdditivityResult {
    pub gaps: Vec<GapRecord>,
    pub chains: Vec<ChainReport>,
    pub subadditivity: Vec<SubadditivityReport>,
    pub activation: Option<ActivationResult>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StructureResult {
    pub channel: String,
    /// The examined state is `U (I/d) U†` on `B ⊗ E`.
    pub d_b: usize,
    pub d_e: usize,
    pub equality: Vec<EqualityReport>,
    pub block_form: Option<BlockDecomposition>,
    pub block_check: Option<BlockFormReport>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Results {
    Capacity(Vec<CapacityResult>),
    Potential(Vec<PotentialSuite>),
    Lift(Vec<LiftResult>),
    Classify(Vec<ClassifyResult>),
    Additivity(AdditivityResult),
    Structure(Vec<StructureResult>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: Command,
    /// Wall-clock time of the run; the only field that differs between
    /// repeated runs of the same config.
    pub generated_unix: u64,
    pub config: RunConfig,
    pub results: Results,
    /// Failed report invariants; non-empty means exit status 2.
    pub violations: Vec<String>,
}

impl Report {
    /// JSON text with `generated_unix` zeroed, for reproducibility checks.
    pub fn payload(&self) -> Result<String> {
        let mut r = self.clone();
        r.generated_unix = 0;
        Ok(serde_json::to_string_pretty(&r)?)
    }
}

fn build_channels(specs: &[ChannelSpec]) -> Result<Vec<KrausChannel>> {
    specs.iter().map(|s| s.build()).collect()
}

/// Executes a config and returns the report; files are written by
/// [`write_outputs`].
pub fn run(config: &RunConfig) -> Result<Report> {
    config.validate()?;
    let channels = build_channels(&config.channels)?;
    for ch in &channels {
        if ch.d_in > config.max_dim {
            return Err(Error::DimensionCap(format!("{} has input dimension {} > {}", ch.label(), ch.d_in, config.max_dim)));
        }
    }
    let opts = &config.solver;
    let tol = config.tol;
    let mut violations = Vec::new();
    let results = match config.command {
        Command::Capacity => {
            let res: Vec<CapacityResult> = channels
                .par_iter()
                .map(|ch| {
                    let suite = capacity_suite(ch, opts);
                    CapacityResult {
                        channel: ch.label(),
                        d_in: ch.d_in,
                        d_out: ch.d_out,
                        reports: suite.reports().into_iter().cloned().collect(),
                    }
                })
                .collect();
            for (r, ch) in res.iter().zip(&channels) {
                for rep in &r.reports {
                    if let Err(e) = rep.check_invariants(ch.d_in, ch.d_out) {
                        violations.push(format!("{}: {e}", r.channel));
                    }
                }
            }
            Results::Capacity(res)
        }
        Command::Potential => {
            let res: Vec<PotentialSuite> = channels.par_iter().map(|ch| potential_suite(ch, opts)).collect();
            for s in &res {
                violations.extend(s.chain_violations(tol).into_iter().map(|v| format!("{}: {v}", s.audit.channel)));
            }
            Results::Potential(res)
        }
        Command::Lift => {
            let res: Vec<LiftResult> = channels.par_iter().map(|ch| lift_one(ch, opts)).collect::<Result<_>>()?;
            for r in &res {
                for (which, l) in [("given", &r.given_kraus), ("optimal", &r.optimal)] {
                    if l.hadamard.verdict != Verdict::Yes {
                        violations.push(format!("{}: {which} lift failed the Hadamard test", r.channel));
                    }
                }
                if r.q1 > r.optimal.lifted_q1 + tol {
                    violations.push(format!("{}: lifted q1 below q1 of the channel", r.channel));
                }
            }
            Results::Lift(res)
        }
        Command::Classify => Results::Classify(
            channels
                .par_iter()
                .map(|ch| ClassifyResult {
                    channel: ch.label(),
                    hadamard: is_hadamard(ch),
                    entanglement_breaking: is_entanglement_breaking(ch),
                    degradability: is_degradable(ch, opts),
                })
                .collect(),
        ),
        Command::Additivity => {
            let res = additivity(config, &channels)?;
            for g in &res.gaps {
                if matches!(g.quantity, Quantity::Chi | Quantity::Q1 | Quantity::P1) && g.gap < -tol {
                    violations.push(format!("{} ⊗ {}: negative {} gap {}", g.channel_a, g.channel_b, g.quantity.name(), g.gap));
                }
            }
            for c in &res.chains {
                if !c.holds {
                    violations.push(format!("{}: regularization chain fails", c.channel));
                }
            }
            for s in &res.subadditivity {
                if !s.holds {
                    violations.push(format!("{} ⊗ {}: channel E_F not sub-additive", s.channel_a, s.channel_b));
                }
            }
            Results::Additivity(res)
        }
        Command::Structure => {
            let res: Vec<StructureResult> = channels.par_iter().map(|ch| structure_one(ch, opts)).collect();
            for r in &res {
                let get = |m| r.equality.iter().find(|e| e.measure == m).map(|e| e.rhs);
                let lhs = r.equality[0].lhs;
                if let (Some(g), Some(ef)) = (get(EqualityMeasure::G), get(EqualityMeasure::Eof)) {
                    if lhs > g + tol || g > ef + tol {
                        violations.push(format!("{}: S(B) − S(BE) ≤ G ≤ E_F fails ({lhs}, {g}, {ef})", r.channel));
                    }
                }
            }
            Results::Structure(res)
        }
    };
    let generated_unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(Report { schema_version: SCHEMA_VERSION, command: config.command, generated_unix, config: config.clone(), results, violations })
}

fn lift_one(ch: &KrausChannel, opts: &SolverOptions) -> Result<LiftResult> {
    let summary = |u: &ComplexMatrix| -> Result<LiftSummary> {
        let l = canonical_lift(ch, Some(u))?;
        Ok(LiftSummary {
            lifted_q1: q1(&l.lifted, opts).value,
            hadamard: is_hadamard(&l.lifted),
            kraus_choice: l.kraus_choice,
            lifted: l.lifted,
        })
    };
    let mm = rotation_min_max(ch, opts, &[]);
    Ok(LiftResult {
        channel: ch.label(),
        q1: q1(ch, opts).value,
        given_kraus: summary(&identity(ch.num_kraus()))?,
        optimal: summary(&mm.rotation)?,
        channel_eof_min_max: mm.value,
    })
}

fn additivity(config: &RunConfig, channels: &[KrausChannel]) -> Result<AdditivityResult> {
    let opts = &config.solver;
    let s = &config.additivity;
    let mut res = AdditivityResult::default();
    if channels.len() >= 2 {
        let first = &channels[0];
        for other in &channels[1..] {
            for &q in &s.quantities {
                res.gaps.push(additivity_gap(q, first, other, opts, config.max_dim)?);
            }
            if s.subadditivity {
                res.subadditivity.push(subadditivity_check_potential_proxy(first, other, opts, config.max_dim)?);
            }
        }
    }
    if s.chain {
        for ch in channels {
            res.chains.push(chain_check(ch, opts, config.max_dim)?);
        }
    }
    if let Some(a) = &s.activation {
        let family = default_aux_family(&a.dims, a.n_random, a.seed);
        res.activation = Some(activation_search(a.quantity, &channels[0], &family, opts, config.max_dim)?);
    }
    Ok(res)
}

fn structure_one(ch: &KrausChannel, opts: &SolverOptions) -> StructureResult {
    let d = ch.d_in;
    let u = ch.stinespring().matrix;
    let rho = &u * identity(d) * crate::linops::cr(1.0 / d as f64) * u.adjoint();
    let (db, de) = (ch.d_out, ch.num_kraus());
    let equality = [EqualityMeasure::CArrow, EqualityMeasure::G, EqualityMeasure::Eof]
        .into_iter()
        .map(|m| verify_equality_case(&rho, db, de, m, opts))
        .collect();
    let block_form = discover_block_form(&rho, db, de, opts.seed);
    let block_check = block_form.as_ref().map(|b| verify_block_form(&rho, b));
    StructureResult { channel: ch.label(), d_b: db, d_e: de, equality, block_form, block_check }
}

/// Writes the JSON report (to `config.out`, or stdout) and the optional CSV.
pub fn write_outputs(report: &Report) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    match &report.config.out {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    if let Some(path) = &report.config.csv {
        let file = std::fs::File::create(path)?;
        write_csv(report, file)?;
    }
    Ok(())
}

/// Flat table derived from a report; never parsed back.
pub fn write_csv<W: std::io::Write>(report: &Report, out: W) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    match &report.results {
        Results::Additivity(a) => write_gap_csv(&a.gaps, out),
        Results::Capacity(rs) => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["channel", "quantity", "value", "bound_direction"]).map_err(csv_err)?;
            for r in rs {
                for rep in &r.reports {
                    let dir = serde_json::to_value(rep.bound_direction)?;
                    w.write_record([r.channel.as_str(), rep.quantity.name(), &rep.value.to_string(), dir.as_str().unwrap_or("")])
                        .map_err(csv_err)?;
                }
            }
            w.flush()?;
            Ok(())
        }
        Results::Potential(rs) => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["channel", "d_min", "chi", "q1", "p1", "qa_p", "chi_p_upper", "qp_upper", "pp_upper"])
                .map_err(csv_err)?;
            for s in rs {
                let a = &s.audit;
                let row = [a.d_min as f64, a.chi, a.q1, a.p1, s.qa_p.value, a.chi_p_upper, a.qp_upper, a.pp_upper];
                let mut rec = vec![a.channel.clone()];
                rec.extend(row.iter().map(|v| v.to_string()));
                w.write_record(&rec).map_err(csv_err)?;
            }
            w.flush()?;
            Ok(())
        }
        _ => Err(Error::Config(format!("no CSV table for the {:?} command", report.command))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(command: Command, channels: &[&str]) -> RunConfig {
        let mut c = RunConfig::new(command, channels.iter().map(|s| s.parse().unwrap()).collect());
        c.solver = SolverOptions::default().with_restarts(3).with_seed(1);
        c
    }

    #[test]
    fn capacity_identity() {
        let r = run(&quick(Command::Capacity, &["identity:2"])).unwrap();
        assert!(r.violations.is_empty());
        let Results::Capacity(rs) = &r.results else { panic!() };
        for rep in &rs[0].reports {
            let want = if rep.quantity == Quantity::CE { 2.0 } else { 1.0 };
            assert!((rep.value - want).abs() < 1e-4, "{rep:?}");
        }
    }

    #[test]
    fn config_errors_have_positions() {
        let e = RunConfig::from_json("{\n  \"command\": \"capacity\",\n  \"channels\": [\"dephasing\"]\n}").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert_eq!(exit_code(&e), EXIT_CONFIG);
        let e = RunConfig::from_json("{\"command\": \"capacity\", \"channels\": [], \"bogus\": 1}").unwrap_err();
        assert!(e.to_string().contains("bogus"));
        let c = RunConfig::from_json("{\"command\": \"capacity\", \"channels\": []}").unwrap();
        assert!(matches!(run(&c), Err(Error::Config(_))));
    }

    #[test]
    fn config_round_trip() {
        let mut c = quick(Command::Additivity, &["dephasing:0.1", "amplitude_damping:0.3"]);
        c.additivity.activation = Some(ActivationSettings { quantity: Quantity::Q1, dims: vec![2], n_random: 3, seed: 4 });
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn reports_are_reproducible() {
        let c = quick(Command::Classify, &["amplitude_damping:0.3", "full_dephasing:2"]);
        let a = run(&c).unwrap().payload().unwrap();
        let b = run(&c).unwrap().payload().unwrap();
        assert_eq!(a, b);
    }
}

//! Named channel families and the `kind:param:...` spec syntax.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::linops::{basis_vector, c, cr, identity, random_isometry_with, rng_from_seed, ComplexMatrix, ComplexVector};

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    X,
    Y,
    Z,
}

/// A zoo channel. Text form: `identity:2`, `dephasing:0.1`,
/// `depolarizing:0.5:2`, `amplitude_damping:0.3`, `erasure:0.5:2`,
/// `measure_prepare:x`, `full_dephasing:2`, `constant:2`,
/// `random:2:2:3:7` (d_in, d_out, Kraus count, seed), `custom:path.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ChannelSpec {
    Identity { d: usize },
    Dephasing { p: f64 },
    Depolarizing { p: f64, d: usize },
    AmplitudeDamping { gamma: f64 },
    Erasure { p: f64, d: usize },
    MeasurePrepare { basis: Basis },
    FullDephasing { d: usize },
    Constant { d: usize },
    Random { d_in: usize, d_out: usize, k: usize, seed: u64 },
    Custom { path: PathBuf },
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelSpec::Identity { d } => write!(f, "identity:{d}"),
            ChannelSpec::Dephasing { p } => write!(f, "dephasing:{p}"),
            ChannelSpec::Depolarizing { p, d } => write!(f, "depolarizing:{p}:{d}"),
            ChannelSpec::AmplitudeDamping { gamma } => write!(f, "amplitude_damping:{gamma}"),
            ChannelSpec::Erasure { p, d } => write!(f, "erasure:{p}:{d}"),
            ChannelSpec::MeasurePrepare { basis } => {
                let b = match basis {
                    Basis::X => "x",
                    Basis::Y => "y",
                    Basis::Z => "z",
                };
                write!(f, "measure_prepare:{b}")
            }
            ChannelSpec::FullDephasing { d } => write!(f, "full_dephasing:{d}"),
            ChannelSpec::Constant { d } => write!(f, "constant:{d}"),
            ChannelSpec::Random { d_in, d_out, k, seed } => write!(f, "random:{d_in}:{d_out}:{k}:{seed}"),
            ChannelSpec::Custom { path } => write!(f, "custom:{}", path.display()),
        }
    }
}

impl From<ChannelSpec> for String {
    fn from(s: ChannelSpec) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for ChannelSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

fn num<T: FromStr>(spec: &str, field: &str, v: Option<&str>) -> Result<T> {
    let v = v.ok_or_else(|| Error::Config(format!("`{spec}`: missing parameter `{field}`")))?;
    v.parse()
        .map_err(|_| Error::Config(format!("`{spec}`: parameter `{field}` has invalid value `{v}`")))
}

fn opt_num<T: FromStr>(spec: &str, field: &str, v: Option<&str>, default: T) -> Result<T> {
    match v {
        None => Ok(default),
        some => num(spec, field, some),
    }
}

impl FromStr for ChannelSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        if kind == "custom" {
            if rest.is_empty() {
                return Err(Error::Config(format!("`{s}`: custom channels need a file path")));
            }
            return Ok(ChannelSpec::Custom { path: PathBuf::from(rest) });
        }
        let mut parts = rest.split(':').filter(|p| !p.is_empty());
        let mut next = || parts.next();
        let spec = match kind {
            "identity" | "id" => ChannelSpec::Identity { d: opt_num(s, "d", next(), 2)? },
            "dephasing" => ChannelSpec::Dephasing { p: num(s, "p", next())? },
            "depolarizing" => ChannelSpec::Depolarizing { p: num(s, "p", next())?, d: opt_num(s, "d", next(), 2)? },
            "amplitude_damping" | "ad" => ChannelSpec::AmplitudeDamping { gamma: num(s, "gamma", next())? },
            "erasure" => ChannelSpec::Erasure { p: num(s, "p", next())?, d: opt_num(s, "d", next(), 2)? },
            "measure_prepare" => {
                let basis = match next().unwrap_or("z") {
                    "x" => Basis::X,
                    "y" => Basis::Y,
                    "z" => Basis::Z,
                    other => return Err(Error::Config(format!("`{s}`: unknown basis `{other}` (x, y or z)"))),
                };
                ChannelSpec::MeasurePrepare { basis }
            }
            "full_dephasing" => ChannelSpec::FullDephasing { d: opt_num(s, "d", next(), 2)? },
            "constant" => ChannelSpec::Constant { d: opt_num(s, "d", next(), 2)? },
            "random" => ChannelSpec::Random {
                d_in: num(s, "d_in", next())?,
                d_out: num(s, "d_out", next())?,
                k: num(s, "k", next())?,
                seed: opt_num(s, "seed", next(), 0)?,
            },
            other => return Err(Error::Config(format!("unknown channel kind `{other}`"))),
        };
        if next().is_some() {
            return Err(Error::Config(format!("`{s}`: too many parameters")));
        }
        Ok(spec)
    }
}

impl ChannelSpec {
    pub fn build(&self) -> Result<KrausChannel> {
        let ch = match self {
            ChannelSpec::Identity { d } => {
                dim(*d)?;
                KrausChannel::identity(*d)
            }
            ChannelSpec::Dephasing { p } => dephasing(*p)?,
            ChannelSpec::Depolarizing { p, d } => depolarizing(*p, *d)?,
            ChannelSpec::AmplitudeDamping { gamma } => amplitude_damping(*gamma)?,
            ChannelSpec::Erasure { p, d } => erasure(*p, *d)?,
            ChannelSpec::MeasurePrepare { basis } => measure_prepare(*basis),
            ChannelSpec::FullDephasing { d } => {
                dim(*d)?;
                full_dephasing(*d)
            }
            ChannelSpec::Constant { d } => {
                dim(*d)?;
                constant(*d)
            }
            ChannelSpec::Random { d_in, d_out, k, seed } => random(*d_in, *d_out, *k, *seed)?,
            ChannelSpec::Custom { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                KrausChannel::from_json(&text)?
            }
        };
        Ok(ch.named(self.to_string()))
    }
}

fn prob(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("{name} must lie in [0, 1], got {p}")));
    }
    Ok(())
}

fn dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimensions must be at least 1".into()));
    }
    Ok(())
}

fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(-1.0)])
}

/// `ρ ↦ (1−p) ρ + p Z ρ Z`.
pub fn dephasing(p: f64) -> Result<KrausChannel> {
    prob("p", p)?;
    KrausChannel::new(vec![identity(2) * cr((1.0 - p).sqrt()), pauli_z() * cr(p.sqrt())], Some(format!("dephasing:{p}")))
}

/// `ρ ↦ (1−p) ρ + p I/d`, Kraus operators from the Weyl basis.
pub fn depolarizing(p: f64, d: usize) -> Result<KrausChannel> {
    prob("p", p)?;
    dim(d)?;
    let omega = 2.0 * std::f64::consts::PI / d as f64;
    let mut kraus = Vec::new();
    for a in 0..d {
        for b in 0..d {
            // X^a Z^b
            let w = ComplexMatrix::from_fn(d, d, |r, col| {
                if r == (col + a) % d {
                    c(0.0, omega * (b * col) as f64).exp()
                } else {
                    cr(0.0)
                }
            });
            let weight = if a == 0 && b == 0 {
                1.0 - p + p / (d * d) as f64
            } else {
                p / (d * d) as f64
            };
            if weight > 0.0 {
                kraus.push(w * cr(weight.sqrt()));
            }
        }
    }
    KrausChannel::new(kraus, Some(format!("depolarizing:{p}:{d}")))
}

pub fn amplitude_damping(gamma: f64) -> Result<KrausChannel> {
    prob("gamma", gamma)?;
    let k0 = ComplexMatrix::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr((1.0 - gamma).sqrt())]);
    let k1 = ComplexMatrix::from_row_slice(2, 2, &[cr(0.0), cr(gamma.sqrt()), cr(0.0), cr(0.0)]);
    KrausChannel::new(vec![k0, k1], Some(format!("amplitude_damping:{gamma}")))
}

/// `d → d+1`: erased inputs are replaced by the flag state `|d⟩`.
pub fn erasure(p: f64, d: usize) -> Result<KrausChannel> {
    prob("p", p)?;
    dim(d)?;
    let mut kraus = vec![ComplexMatrix::from_fn(d + 1, d, |r, col| if r == col { cr((1.0 - p).sqrt()) } else { cr(0.0) })];
    for j in 0..d {
        let mut k = ComplexMatrix::zeros(d + 1, d);
        k[(d, j)] = cr(p.sqrt());
        kraus.push(k);
    }
    KrausChannel::new(kraus, Some(format!("erasure:{p}:{d}")))
}

/// Measures a qubit in the given basis, prepares `|0⟩` or `|+⟩`.
pub fn measure_prepare(basis: Basis) -> KrausChannel {
    let s = 1.0 / 2f64.sqrt();
    let meas: [ComplexVector; 2] = match basis {
        Basis::Z => [basis_vector(2, 0), basis_vector(2, 1)],
        Basis::X => [ComplexVector::from_vec(vec![cr(s), cr(s)]), ComplexVector::from_vec(vec![cr(s), cr(-s)])],
        Basis::Y => [ComplexVector::from_vec(vec![cr(s), c(0.0, s)]), ComplexVector::from_vec(vec![cr(s), c(0.0, -s)])],
    };
    let prep = [basis_vector(2, 0), ComplexVector::from_vec(vec![cr(s), cr(s)])];
    let kraus = meas.iter().zip(&prep).map(|(m, p)| p * m.adjoint()).collect();
    KrausChannel::new(kraus, None).expect("measure-prepare is CPTP")
}

/// Kraus operators `|i⟩⟨i|`.
pub fn full_dephasing(d: usize) -> KrausChannel {
    let kraus = (0..d).map(|i| crate::linops::basis_projector(d, i)).collect();
    KrausChannel::new(kraus, Some(format!("full_dephasing:{d}"))).expect("projective measurement is CPTP")
}

/// Every input is replaced by `|0⟩⟨0|` on a `d`-dimensional output.
pub fn constant(d: usize) -> KrausChannel {
    let kraus = (0..d)
        .map(|e| {
            let mut k = ComplexMatrix::zeros(d, d);
            k[(0, e)] = cr(1.0);
            k
        })
        .collect();
    KrausChannel::new(kraus, Some(format!("constant:{d}"))).expect("constant channel is CPTP")
}

/// Kraus operators cut from a seeded random `d_in → k·d_out` isometry.
pub fn random(d_in: usize, d_out: usize, k: usize, seed: u64) -> Result<KrausChannel> {
    dim(d_in)?;
    dim(d_out)?;
    dim(k)?;
    let mut rng = rng_from_seed(seed);
    let v = random_isometry_with(d_in, d_out * k, &mut rng)?;
    let kraus = (0..k).map(|i| v.rows(i * d_out, d_out).into_owned()).collect();
    KrausChannel::new(kraus, Some(format!("random:{d_in}:{d_out}:{k}:{seed}")))
}

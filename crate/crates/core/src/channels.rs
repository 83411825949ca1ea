//! Channel representations: Kraus (the source of truth), Stinespring and Choi.
//!
//! Environment convention: the i-th Kraus operator is attached to the
//! environment basis vector `|i⟩`, i.e. `U = Σ_i K_i ⊗ |i⟩` on `B ⊗ E`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::{
    cr, eigh, eigvalsh, hermitize, identity, isometry_defect, kron, ptrace_first, ptrace_second,
    serde_matrices, ComplexMatrix, DensityMatrix, SystemDims, ZERO,
};

/// Completeness tolerance for `Σ K†K = I`.
pub const TOL_CPTP: f64 = 1e-8;
/// Eigenvalue cutoff fixing the Kraus rank when reading a Choi matrix.
pub const CHOI_RANK_CUTOFF: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CptpReport {
    pub passes: bool,
    /// Spectral norm of `Σ K†K − I`.
    pub deviation: f64,
}

/// Completeness check for a list of Kraus operators sharing a shape.
pub fn validate_cptp(kraus: &[ComplexMatrix]) -> CptpReport {
    let Some(first) = kraus.first() else {
        return CptpReport { passes: false, deviation: f64::INFINITY };
    };
    let (d_out, d_in) = first.shape();
    if kraus.iter().any(|k| k.shape() != (d_out, d_in)) {
        return CptpReport { passes: false, deviation: f64::INFINITY };
    }
    let mut sum = ComplexMatrix::zeros(d_in, d_in);
    for k in kraus {
        sum += k.adjoint() * k;
    }
    let deviation = eigvalsh(&(sum - identity(d_in)))
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max);
    CptpReport { passes: deviation <= TOL_CPTP, deviation }
}

/// CPTP map `ρ ↦ Σ_i K_i ρ K_i†`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelJson")]
pub struct KrausChannel {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub d_in: usize,
    pub d_out: usize,
    #[serde(with = "serde_matrices")]
    pub kraus: Vec<ComplexMatrix>,
}

#[derive(Deserialize)]
struct ChannelJson {
    name: Option<String>,
    d_in: usize,
    d_out: usize,
    #[serde(with = "serde_matrices")]
    kraus: Vec<ComplexMatrix>,
}

impl TryFrom<ChannelJson> for KrausChannel {
    type Error = Error;

    fn try_from(j: ChannelJson) -> Result<Self> {
        let ch = KrausChannel::new(j.kraus, j.name)?;
        if ch.d_in != j.d_in || ch.d_out != j.d_out {
            return Err(Error::DimensionMismatch(format!(
                "declared {}->{} but Kraus operators are {}->{}",
                j.d_in, j.d_out, ch.d_in, ch.d_out
            )));
        }
        Ok(ch)
    }
}

impl KrausChannel {
    pub fn new(kraus: Vec<ComplexMatrix>, name: Option<String>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty Kraus list".into()))?;
        let (d_out, d_in) = first.shape();
        if kraus.iter().any(|k| k.shape() != (d_out, d_in)) {
            return Err(Error::DimensionMismatch("Kraus operators differ in shape".into()));
        }
        let report = validate_cptp(&kraus);
        if !report.passes {
            return Err(Error::NotCptp { deviation: report.deviation });
        }
        Ok(Self { name, d_in, d_out, kraus })
    }

    /// Parses the channel JSON format, keeping CPTP and shape errors distinct
    /// from syntax errors.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ChannelJson = serde_json::from_str(text)?;
        raw.try_into()
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| format!("channel[{}->{}]", self.d_in, self.d_out))
    }

    pub fn num_kraus(&self) -> usize {
        self.kraus.len()
    }

    pub fn identity(d: usize) -> Self {
        Self {
            name: Some(format!("identity({d})")),
            d_in: d,
            d_out: d,
            kraus: vec![identity(d)],
        }
    }

    pub fn validate(&self) -> CptpReport {
        validate_cptp(&self.kraus)
    }

    /// `Σ K X K†` on an arbitrary operator.
    pub fn map(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.d_out, self.d_out);
        for k in &self.kraus {
            out += k * x * k.adjoint();
        }
        out
    }

    /// Adjoint (Heisenberg-picture) map `Σ K† Y K`.
    pub fn adjoint_map(&self, y: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.d_in, self.d_in);
        for k in &self.kraus {
            out += k.adjoint() * y * k;
        }
        out
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.d_in {
            return Err(Error::DimensionMismatch(format!(
                "channel input {} vs state dimension {}",
                self.d_in,
                rho.dim()
            )));
        }
        DensityMatrix::new(hermitize(&self.map(rho.matrix())), SystemDims::single("B", self.d_out))
    }

    /// `(id ⊗ N)` acting on the last subsystem of `rho`.
    pub fn apply_to_half(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let dims = rho.dims();
        let n = dims.dims().len();
        let last = dims.dims()[n - 1];
        if last != self.d_in {
            return Err(Error::DimensionMismatch(format!(
                "last subsystem has dimension {last}, channel expects {}",
                self.d_in
            )));
        }
        let dr = rho.dim() / last;
        let out = map_second(&self.kraus, rho.matrix(), dr);
        let head = dims.restrict(&(0..n).map(|i| i + 1 < n).collect::<Vec<_>>());
        let out_dims = match head {
            Ok(h) => {
                let lbl = h.fresh_label("B");
                h.concat(&SystemDims::single(&lbl, self.d_out))?
            }
            Err(_) => SystemDims::single("B", self.d_out),
        };
        DensityMatrix::new(hermitize(&out), out_dims)
    }

    pub fn stinespring(&self) -> StinespringIsometry {
        let k = self.num_kraus();
        let mut u = ComplexMatrix::zeros(self.d_out * k, self.d_in);
        for (i, ki) in self.kraus.iter().enumerate() {
            for b in 0..self.d_out {
                for a in 0..self.d_in {
                    u[(b * k + i, a)] = ki[(b, a)];
                }
            }
        }
        StinespringIsometry {
            matrix: u,
            dims: SystemDims::pair(("B", self.d_out), ("E", k)).expect("distinct labels"),
        }
    }

    /// Channel `A → E`, `N^c(ρ)_{ij} = tr(K_i ρ K_j†)`.
    pub fn complementary(&self) -> KrausChannel {
        let k = self.num_kraus();
        let kraus = (0..self.d_out)
            .map(|b| ComplexMatrix::from_fn(k, self.d_in, |i, a| self.kraus[i][(b, a)]))
            .collect();
        KrausChannel {
            name: self.name.as_ref().map(|n| format!("{n}^c")),
            d_in: self.d_in,
            d_out: k,
            kraus,
        }
    }

    /// `N ⊗ M` with Kraus set `{K_i ⊗ L_j}`, `i` major.
    pub fn tensor(&self, other: &KrausChannel) -> KrausChannel {
        let kraus = self
            .kraus
            .iter()
            .flat_map(|a| other.kraus.iter().map(move |b| kron(a, b)))
            .collect();
        let name = match (&self.name, &other.name) {
            (Some(a), Some(b)) => Some(format!("{a}⊗{b}")),
            _ => None,
        };
        KrausChannel {
            name,
            d_in: self.d_in * other.d_in,
            d_out: self.d_out * other.d_out,
            kraus,
        }
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn compose_after(&self, first: &KrausChannel) -> Result<KrausChannel> {
        if first.d_out != self.d_in {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose {}->{} after {}->{}",
                self.d_in, self.d_out, first.d_in, first.d_out
            )));
        }
        let kraus = self
            .kraus
            .iter()
            .flat_map(|l| first.kraus.iter().map(move |k| l * k))
            .collect();
        Ok(KrausChannel { name: None, d_in: first.d_in, d_out: self.d_out, kraus })
    }

    /// Kraus set `K'_j = Σ_i u_{ji} K_i` for an `m × k` isometry `u`.
    pub fn kraus_rotate(&self, u: &ComplexMatrix) -> Result<KrausChannel> {
        if u.ncols() != self.num_kraus() || u.nrows() < u.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "rotation is {}x{}, need m x {} with m >= {}",
                u.nrows(),
                u.ncols(),
                self.num_kraus(),
                self.num_kraus()
            )));
        }
        let defect = isometry_defect(u);
        if defect > TOL_CPTP {
            return Err(Error::InvalidParameter(format!(
                "rotation is not an isometry (defect {defect:.3e})"
            )));
        }
        Ok(KrausChannel {
            name: self.name.clone(),
            d_in: self.d_in,
            d_out: self.d_out,
            kraus: rotate_kraus(&self.kraus, u),
        })
    }

    pub fn choi(&self) -> ChoiMatrix {
        let (di, dout) = (self.d_in, self.d_out);
        let mut j = ComplexMatrix::zeros(di * dout, di * dout);
        for k in &self.kraus {
            // vec_k[a*dout + b] = K[b, a]
            let v = ComplexMatrix::from_fn(di * dout, 1, |r, _| k[(r % dout, r / dout)]);
            j += &v * v.adjoint();
        }
        ChoiMatrix { matrix: j, d_in: di, d_out: dout, normalized: false }
    }

    /// Choi matrix of the complementary channel (on `A ⊗ E`).
    pub fn complementary_choi(&self) -> ChoiMatrix {
        self.complementary().choi()
    }
}

/// `K'_j = Σ_i u_{ji} K_i`.
pub fn rotate_kraus(kraus: &[ComplexMatrix], u: &ComplexMatrix) -> Vec<ComplexMatrix> {
    let (rows, cols) = kraus[0].shape();
    (0..u.nrows())
        .map(|j| {
            let mut kj = ComplexMatrix::zeros(rows, cols);
            for (i, ki) in kraus.iter().enumerate() {
                let w = u[(j, i)];
                if w != ZERO {
                    kj += ki * w;
                }
            }
            kj
        })
        .collect()
}

/// `(id_R ⊗ Σ K·K†)` on an operator over `R ⊗ A` with `dim R = dr`.
pub fn map_second(kraus: &[ComplexMatrix], x: &ComplexMatrix, dr: usize) -> ComplexMatrix {
    let id = identity(dr);
    let (dout, _) = kraus[0].shape();
    let mut out = ComplexMatrix::zeros(dr * dout, dr * dout);
    for k in kraus {
        let big = kron(&id, k);
        out += &big * x * big.adjoint();
    }
    out
}

/// Isometry `U: A → B ⊗ E` housing both `N` and `N^c`.
#[derive(Clone, Debug, PartialEq)]
pub struct StinespringIsometry {
    pub matrix: ComplexMatrix,
    pub dims: SystemDims,
}

impl StinespringIsometry {
    pub fn d_out(&self) -> usize {
        self.dims.dims()[0]
    }

    pub fn d_env(&self) -> usize {
        self.dims.dims()[1]
    }

    pub fn apply_matrix(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        &self.matrix * rho * self.matrix.adjoint()
    }

    /// `U ρ U†` as a state on `B ⊗ E`.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.matrix.ncols() {
            return Err(Error::DimensionMismatch("input dimension".into()));
        }
        DensityMatrix::new(hermitize(&self.apply_matrix(rho.matrix())), self.dims.clone())
    }

    /// Reassemble the Kraus form (`K_i = (I ⊗ ⟨i|) U`).
    pub fn to_kraus(&self) -> Result<KrausChannel> {
        let (db, de) = (self.d_out(), self.d_env());
        let kraus = (0..de)
            .map(|i| ComplexMatrix::from_fn(db, self.matrix.ncols(), |b, a| self.matrix[(b * de + i, a)]))
            .collect();
        KrausChannel::new(kraus, None)
    }
}

/// Choi operator `J = Σ |a⟩⟨a'| ⊗ N(|a⟩⟨a'|)` on `A ⊗ B`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    pub matrix: ComplexMatrix,
    pub d_in: usize,
    pub d_out: usize,
    /// `true` when scaled to unit trace, `false` for trace `d_in`.
    pub normalized: bool,
}

impl ChoiMatrix {
    pub fn to_normalized(&self) -> ChoiMatrix {
        if self.normalized {
            return self.clone();
        }
        ChoiMatrix {
            matrix: &self.matrix / cr(self.d_in as f64),
            normalized: true,
            ..*self
        }
    }

    pub fn to_unnormalized(&self) -> ChoiMatrix {
        if !self.normalized {
            return self.clone();
        }
        ChoiMatrix {
            matrix: &self.matrix * cr(self.d_in as f64),
            normalized: false,
            ..*self
        }
    }

    pub fn as_state(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(
            self.to_normalized().matrix,
            SystemDims::pair(("A", self.d_in), ("B", self.d_out))?,
        )
    }

    pub fn spectrum(&self) -> Vec<f64> {
        eigvalsh(&self.matrix)
    }

    pub fn distance(&self, other: &ChoiMatrix) -> f64 {
        (&self.to_unnormalized().matrix - &other.to_unnormalized().matrix).norm()
    }

    /// `tr_B J`, equal to `I` (unnormalized) for trace-preserving maps.
    pub fn input_marginal(&self) -> ComplexMatrix {
        ptrace_second(&self.to_unnormalized().matrix, self.d_in, self.d_out)
    }

    pub fn output_marginal(&self) -> ComplexMatrix {
        ptrace_first(&self.to_unnormalized().matrix, self.d_in, self.d_out)
    }
}

/// Minimal Kraus representation from the Choi eigendecomposition.
pub fn kraus_from_choi(choi: &ChoiMatrix) -> Result<KrausChannel> {
    let j = choi.to_unnormalized();
    let (di, dout) = (j.d_in, j.d_out);
    if j.matrix.nrows() != di * dout {
        return Err(Error::DimensionMismatch("Choi size".into()));
    }
    let (vals, vecs) = eigh(&j.matrix);
    let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if vals[0] < -1e-8 * scale {
        return Err(Error::InvariantViolation(format!(
            "Choi matrix not PSD (eigenvalue {:.3e})",
            vals[0]
        )));
    }
    let mut kraus = Vec::new();
    for (k, &l) in vals.iter().enumerate().rev() {
        if l <= CHOI_RANK_CUTOFF {
            continue;
        }
        let s = cr(l.sqrt());
        kraus.push(ComplexMatrix::from_fn(dout, di, |b, a| vecs[(a * dout + b, k)] * s));
    }
    if kraus.is_empty() {
        return Err(Error::InvariantViolation("Choi matrix is zero".into()));
    }
    KrausChannel::new(kraus, None)
}

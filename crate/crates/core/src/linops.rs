//! Complex linear-operator primitives on labeled multipartite systems.
//!
//! Composite systems are ordered: in `A ⊗ B` the first label is the most
//! significant index. No operation here reorders labels.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

pub const TOL_HERM: f64 = 1e-8;
pub const TOL_TRACE: f64 = 1e-8;
pub const TOL_NORM: f64 = 1e-8;
/// Eigenvalues in `[-TOL_PSD, 0)` are clipped to zero; anything below is invalid.
pub const TOL_PSD: f64 = 1e-10;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Ordered subsystem labels with their dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemDims {
    labels: Vec<String>,
    dims: Vec<usize>,
}

impl SystemDims {
    pub fn new<S: Into<String>>(parts: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let (labels, dims): (Vec<String>, Vec<usize>) =
            parts.into_iter().map(|(l, d)| (l.into(), d)).unzip();
        if labels.is_empty() {
            return Err(Error::InvalidLabels("no subsystems".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d == 0) {
            return Err(Error::InvalidLabels(format!("dimension {d} is not positive")));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidLabels(format!("duplicate label `{l}`")));
            }
        }
        Ok(Self { labels, dims })
    }

    /// Single subsystem.
    pub fn single(label: &str, dim: usize) -> Self {
        Self::new([(label, dim)]).expect("single subsystem with positive dimension")
    }

    pub fn pair(a: (&str, usize), b: (&str, usize)) -> Result<Self> {
        Self::new([a, b])
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.dims[self.index_of(label)?])
    }

    pub fn concat(&self, other: &SystemDims) -> Result<Self> {
        Self::new(
            self.labels
                .iter()
                .cloned()
                .zip(self.dims.iter().copied())
                .chain(other.labels.iter().cloned().zip(other.dims.iter().copied())),
        )
    }

    /// Sub-system list restricted to `keep`, in the original order.
    pub fn restrict(&self, keep: &[bool]) -> Result<Self> {
        Self::new(
            self.labels
                .iter()
                .zip(&self.dims)
                .zip(keep)
                .filter(|(_, &k)| k)
                .map(|((l, &d), _)| (l.clone(), d)),
        )
    }

    /// A label not present in this list, built from `base` by appending primes.
    pub fn fresh_label(&self, base: &str) -> String {
        let mut l = base.to_string();
        while self.labels.contains(&l) {
            l.push('\'');
        }
        l
    }
}

// ---------------------------------------------------------------------------
// Dense helpers

pub fn dagger(m: &ComplexMatrix) -> ComplexMatrix {
    m.adjoint()
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.trace()
}

pub fn hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * cr(0.5)
}

pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// Frobenius inner product `Re tr(A† B)`.
pub fn re_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// `|ψ⟩⟨ψ|`.
pub fn outer(v: &ComplexVector) -> ComplexMatrix {
    v * v.adjoint()
}

/// Computational-basis projector `|i⟩⟨i|` in dimension `d`.
pub fn basis_projector(d: usize, i: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    m[(i, i)] = ONE;
    m
}

pub fn basis_vector(d: usize, i: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(d);
    v[i] = ONE;
    v
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = m.nrows();
    if n == 1 {
        return (vec![m[(0, 0)].re], identity(1));
    }
    if n == 2 {
        return eigh2(m);
    }
    let eig = hermitize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = ComplexMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

fn eigh2(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = (m[(0, 1)] + m[(1, 0)].conj()) * 0.5;
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let r = (half * half + b.norm_sqr()).sqrt();
    let (l0, l1) = (mean - r, mean + r);
    if b.norm() <= 1e-300 {
        return if a <= d {
            (vec![a, d], identity(2))
        } else {
            let mut v = ComplexMatrix::zeros(2, 2);
            v[(1, 0)] = ONE;
            v[(0, 1)] = ONE;
            (vec![d, a], v)
        };
    }
    // (A - l0 I) v = 0 with v = (b, l0 - a) or (l0 - d, b̄); pick the larger
    // form, then complete to a unitary so near-degenerate spectra stay orthonormal.
    let (x, y) = if half >= 0.0 { (b, cr(-half - r)) } else { (cr(half - r), b.conj()) };
    let n = (x.norm_sqr() + y.norm_sqr()).sqrt();
    let (x0, y0) = (x / n, y / n);
    let v = ComplexMatrix::from_row_slice(2, 2, &[x0, -y0.conj(), y0, x0.conj()]);
    (vec![l0, l1], v)
}

pub fn eigvalsh(m: &ComplexMatrix) -> Vec<f64> {
    let n = m.nrows();
    match n {
        1 => vec![m[(0, 0)].re],
        2 => {
            let a = m[(0, 0)].re;
            let d = m[(1, 1)].re;
            let b = (m[(0, 1)] + m[(1, 0)].conj()) * 0.5;
            let half = 0.5 * (a - d);
            let r = (half * half + b.norm_sqr()).sqrt();
            vec![0.5 * (a + d) - r, 0.5 * (a + d) + r]
        }
        _ => {
            let mut v: Vec<f64> = hermitize(m).symmetric_eigenvalues().iter().copied().collect();
            v.sort_by(f64::total_cmp);
            v
        }
    }
}

/// `f(H)` for Hermitian `H` via its spectrum.
pub fn hermitian_fn(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let (vals, vecs) = eigh(m);
    let mut scaled = vecs.clone();
    for (k, &l) in vals.iter().enumerate() {
        let fl = cr(f(l));
        scaled.column_mut(k).iter_mut().for_each(|z| *z *= fl);
    }
    scaled * vecs.adjoint()
}

/// Orthonormalize the columns of `m` (thin QR, phases fixed so `diag(R) > 0`).
pub fn orthonormalize_columns(m: &ComplexMatrix) -> ComplexMatrix {
    let k = m.ncols();
    let qr = m.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let mut out = q.columns(0, k).into_owned();
    for j in 0..k {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let ph = d / d.norm();
            out.column_mut(j).iter_mut().for_each(|z| *z *= ph);
        }
    }
    out
}

/// Deviation `‖V†V − I‖_F`.
pub fn isometry_defect(v: &ComplexMatrix) -> f64 {
    (v.adjoint() * v - identity(v.ncols())).norm()
}

// ---------------------------------------------------------------------------
// Partial trace / partial transpose on raw matrices

/// Partial trace keeping the subsystems flagged in `keep`.
pub fn partial_trace_matrix(m: &ComplexMatrix, dims: &[usize], keep: &[bool]) -> ComplexMatrix {
    let total: usize = dims.iter().product();
    assert_eq!(m.nrows(), total);
    assert_eq!(dims.len(), keep.len());
    let kept_dim: usize = dims.iter().zip(keep).filter(|(_, &k)| k).map(|(d, _)| d).product();
    let split: Vec<(usize, usize)> = (0..total)
        .map(|mut idx| {
            let (mut kidx, mut tidx) = (0usize, 0usize);
            let (mut kmul, mut tmul) = (1usize, 1usize);
            for (&d, &k) in dims.iter().zip(keep).rev() {
                let digit = idx % d;
                idx /= d;
                if k {
                    kidx += digit * kmul;
                    kmul *= d;
                } else {
                    tidx += digit * tmul;
                    tmul *= d;
                }
            }
            (kidx, tidx)
        })
        .collect();
    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    for i in 0..total {
        let (ki, ti) = split[i];
        for j in 0..total {
            let (kj, tj) = split[j];
            if ti == tj {
                out[(ki, kj)] += m[(i, j)];
            }
        }
    }
    out
}

/// `tr_B X` for `X` on `A ⊗ B`.
pub fn ptrace_second(m: &ComplexMatrix, da: usize, db: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(da, da);
    for i in 0..da {
        for j in 0..da {
            let mut s = ZERO;
            for k in 0..db {
                s += m[(i * db + k, j * db + k)];
            }
            out[(i, j)] = s;
        }
    }
    out
}

/// `tr_A X` for `X` on `A ⊗ B`.
pub fn ptrace_first(m: &ComplexMatrix, da: usize, db: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(db, db);
    for k in 0..da {
        for i in 0..db {
            for j in 0..db {
                out[(i, j)] += m[(k * db + i, k * db + j)];
            }
        }
    }
    out
}

/// Transpose of the second factor of an operator on `A ⊗ B`.
pub fn partial_transpose_second(m: &ComplexMatrix, da: usize, db: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(da * db, da * db);
    for a in 0..da {
        for b in 0..db {
            for a2 in 0..da {
                for b2 in 0..db {
                    out[(a * db + b2, a2 * db + b)] = m[(a * db + b, a2 * db + b2)];
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// States

/// Hermitian, PSD, unit-trace operator on a labeled composite system.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    dims: SystemDims,
}

impl DensityMatrix {
    /// Validates the state invariants (Hermitian, unit trace, PSD up to clipping).
    pub fn new(matrix: ComplexMatrix, dims: SystemDims) -> Result<Self> {
        let d = dims.total();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for total dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvariantViolation("non-finite entry".into()));
        }
        let herm = hermiticity_defect(&matrix);
        if herm > TOL_HERM {
            return Err(Error::InvariantViolation(format!("not Hermitian (defect {herm:.3e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TOL_TRACE || tr.im.abs() > TOL_TRACE {
            return Err(Error::InvariantViolation(format!("trace {tr} != 1")));
        }
        let matrix = hermitize(&matrix);
        let min = eigvalsh(&matrix)[0];
        if min < -TOL_PSD {
            return Err(Error::InvariantViolation(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self { matrix, dims })
    }

    /// Single-system state labeled `label`.
    pub fn on(label: &str, matrix: ComplexMatrix) -> Result<Self> {
        let d = matrix.nrows();
        Self::new(matrix, SystemDims::single(label, d))
    }

    /// Rescale a PSD matrix to unit trace.
    pub fn normalized(matrix: &ComplexMatrix, dims: SystemDims) -> Result<Self> {
        let tr = matrix.trace().re;
        if tr <= 0.0 {
            return Err(Error::InvariantViolation("non-positive trace".into()));
        }
        Self::new(matrix / cr(tr), dims)
    }

    pub fn maximally_mixed(label: &str, d: usize) -> Self {
        Self {
            matrix: identity(d) / cr(d as f64),
            dims: SystemDims::single(label, d),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dims(&self) -> &SystemDims {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Spectrum with tiny negative eigenvalues clipped to zero.
    pub fn spectrum(&self) -> Vec<f64> {
        eigvalsh(&self.matrix).into_iter().map(|l| l.max(0.0)).collect()
    }

    pub fn relabel(self, dims: SystemDims) -> Result<Self> {
        if dims.total() != self.dim() {
            return Err(Error::DimensionMismatch("relabel changes total dimension".into()));
        }
        Ok(Self { matrix: self.matrix, dims })
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        Ok(DensityMatrix {
            matrix: kron(&self.matrix, &other.matrix),
            dims: self.dims.concat(&other.dims)?,
        })
    }

    /// Reduced state on the labels in `keep`, which stay in their original order.
    pub fn partial_trace(&self, keep: &[&str]) -> Result<DensityMatrix> {
        for l in keep {
            self.dims.index_of(l)?;
        }
        let mask: Vec<bool> = self
            .dims
            .labels()
            .iter()
            .map(|l| keep.contains(&l.as_str()))
            .collect();
        if mask.iter().all(|&k| k) {
            return Ok(self.clone());
        }
        let matrix = partial_trace_matrix(&self.matrix, self.dims.dims(), &mask);
        Ok(DensityMatrix {
            matrix,
            dims: self.dims.restrict(&mask)?,
        })
    }

    /// Purification on `R ⊗ (labels of self)` with `dim R = rank(ρ)`.
    pub fn purify(&self) -> PureState {
        let (vals, vecs) = eigh(&self.matrix);
        let support: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > TOL_PSD).collect();
        let r = support.len().max(1);
        let d = self.dim();
        let mut v = ComplexVector::zeros(r * d);
        for (ri, &k) in support.iter().enumerate() {
            let s = cr(vals[k].sqrt());
            for a in 0..d {
                v[ri * d + a] += s * vecs[(a, k)];
            }
        }
        let n = v.norm();
        v /= cr(n);
        let rlabel = self.dims.fresh_label("R");
        let dims = SystemDims::single(&rlabel, r)
            .concat(&self.dims)
            .expect("fresh reference label");
        PureState { vector: v, dims }
    }
}

/// Unit vector on a labeled composite system.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    vector: ComplexVector,
    dims: SystemDims,
}

impl PureState {
    pub fn new(vector: ComplexVector, dims: SystemDims) -> Result<Self> {
        if vector.len() != dims.total() {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for total dimension {}",
                vector.len(),
                dims.total()
            )));
        }
        let n = vector.norm();
        if (n - 1.0).abs() > TOL_NORM {
            return Err(Error::InvariantViolation(format!("norm {n} != 1")));
        }
        Ok(Self { vector, dims })
    }

    pub fn vector(&self) -> &ComplexVector {
        &self.vector
    }

    pub fn dims(&self) -> &SystemDims {
        &self.dims
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            matrix: outer(&self.vector),
            dims: self.dims.clone(),
        }
    }

    /// `(|00⟩ + ... + |d-1,d-1⟩)/√d` on `a ⊗ b`.
    pub fn maximally_entangled(a: &str, b: &str, d: usize) -> Self {
        let mut v = ComplexVector::zeros(d * d);
        for i in 0..d {
            v[i * d + i] = cr(1.0 / (d as f64).sqrt());
        }
        Self {
            vector: v,
            dims: SystemDims::pair((a, d), (b, d)).expect("distinct labels"),
        }
    }
}

// ---------------------------------------------------------------------------
// Seeded random generation

pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix<R: rand::Rng>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    })
}

/// Random state from the normalized Ginibre ensemble `MM†/tr(MM†)`.
pub fn random_density(dims: &SystemDims, seed: u64) -> DensityMatrix {
    let mut rng = rng_from_seed(seed);
    random_density_with(dims, dims.total(), &mut rng)
}

/// Random state of rank at most `rank`.
pub fn random_density_with<R: rand::Rng>(
    dims: &SystemDims,
    rank: usize,
    rng: &mut R,
) -> DensityMatrix {
    let d = dims.total();
    let m = gaussian_matrix(d, rank.max(1), rng);
    let rho = &m * m.adjoint();
    let tr = rho.trace().re;
    DensityMatrix {
        matrix: hermitize(&(rho / cr(tr))),
        dims: dims.clone(),
    }
}

pub fn random_pure<R: rand::Rng>(dims: &SystemDims, rng: &mut R) -> PureState {
    let v = gaussian_matrix(dims.total(), 1, rng).column(0).into_owned();
    let n = v.norm();
    PureState {
        vector: v / cr(n),
        dims: dims.clone(),
    }
}

/// Random isometry `C^{d_in} → C^{d_out}` by orthonormalizing a Gaussian matrix.
pub fn random_isometry(d_in: usize, d_out: usize, seed: u64) -> Result<ComplexMatrix> {
    let mut rng = rng_from_seed(seed);
    random_isometry_with(d_in, d_out, &mut rng)
}

pub fn random_isometry_with<R: rand::Rng>(
    d_in: usize,
    d_out: usize,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    if d_in == 0 || d_out < d_in {
        return Err(Error::DimensionMismatch(format!(
            "isometry needs 0 < d_in <= d_out (got {d_in} -> {d_out})"
        )));
    }
    Ok(orthonormalize_columns(&gaussian_matrix(d_out, d_in, rng)))
}

pub fn random_unitary<R: rand::Rng>(d: usize, rng: &mut R) -> ComplexMatrix {
    random_isometry_with(d, d, rng).expect("square unitary")
}

// ---------------------------------------------------------------------------
// JSON matrix format {rows, cols, real[][], imag[][]}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub real: Vec<Vec<f64>>,
    pub imag: Vec<Vec<f64>>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        let rows = m.nrows();
        let cols = m.ncols();
        let real = (0..rows).map(|i| (0..cols).map(|j| m[(i, j)].re).collect()).collect();
        let imag = (0..rows).map(|i| (0..cols).map(|j| m[(i, j)].im).collect()).collect();
        Self { rows, cols, real, imag }
    }
}

impl TryFrom<&MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(j: &MatrixJson) -> Result<Self> {
        let shape_ok = j.real.len() == j.rows
            && j.imag.len() == j.rows
            && j.real.iter().chain(&j.imag).all(|r| r.len() == j.cols);
        if !shape_ok || j.rows == 0 || j.cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix JSON does not match declared shape {}x{}",
                j.rows, j.cols
            )));
        }
        let m = ComplexMatrix::from_fn(j.rows, j.cols, |r, c_| c(j.real[r][c_], j.imag[r][c_]));
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvariantViolation("non-finite matrix entry".into()));
        }
        Ok(m)
    }
}

/// `serde(with = ...)` adapter for a single matrix.
pub mod serde_matrix {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &ComplexMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ComplexMatrix, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        ComplexMatrix::try_from(&j).map_err(serde::de::Error::custom)
    }
}

/// `serde(with = ...)` adapter for a list of matrices.
pub mod serde_matrices {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        ms: &[ComplexMatrix],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        ms.iter().map(MatrixJson::from).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<ComplexMatrix>, D::Error> {
        Vec::<MatrixJson>::deserialize(d)?
            .iter()
            .map(|j| ComplexMatrix::try_from(j).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// `serde(with = ...)` adapter for an optional matrix.
pub mod serde_opt_matrix {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        m: &Option<ComplexMatrix>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        m.as_ref().map(MatrixJson::from).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<ComplexMatrix>, D::Error> {
        Option::<MatrixJson>::deserialize(d)?
            .map(|j| ComplexMatrix::try_from(&j).map_err(serde::de::Error::custom))
            .transpose()
    }
}

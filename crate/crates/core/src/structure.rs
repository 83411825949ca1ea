//! Equality cases of `S(B) − S(BE) ≤ G(B:E) ≤ E_F(B:E)`: states of the form
//! `ρ^{BE} = ⊕_i p_i ρ_i^{B_i^L} ⊗ φ_i^{B_i^R E}`, a constructor, a verifier
//! and a commutant-based heuristic that proposes the block form.

use serde::{Deserialize, Serialize};

use crate::entanglement::{c_arrow_matrix, eof_matrix, g_measure_matrix};
use crate::entropics::entropy_of_matrix;
use crate::error::{Error, Result};
use crate::linops::{
    cr, eigh, hermitize, identity, kron, ptrace_first, ptrace_second, rng_from_seed, ComplexMatrix,
    DensityMatrix, SystemDims,
};
use crate::optim::{BoundDirection, SolverOptions};

/// Flag threshold for equality candidates (both sides are optimizer output).
pub const EQUALITY_TOL: f64 = 1e-3;
/// Reconstruction tolerance of the block-form verifier.
pub const BLOCK_TOL: f64 = 1e-7;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Block {
    pub prob: f64,
    /// `ρ_i` on `B_i^L`.
    #[serde(with = "crate::linops::serde_matrix")]
    pub left_state: ComplexMatrix,
    /// `φ_i` on `B_i^R ⊗ E`, stored as a density matrix.
    #[serde(with = "crate::linops::serde_matrix")]
    pub pure_state: ComplexMatrix,
    pub d_left: usize,
    pub d_right: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockDecomposition {
    pub blocks: Vec<Block>,
    pub d_env: usize,
    /// Isometry from `⊕_i B_i^L ⊗ B_i^R` into `B`; columns of block `i` are
    /// consecutive.
    #[serde(with = "crate::linops::serde_matrix")]
    pub embedding: ComplexMatrix,
}

impl BlockDecomposition {
    /// Blocks embedded into `B = ⊕_i B_i^L ⊗ B_i^R` by the identity.
    pub fn direct(blocks: Vec<Block>, d_env: usize) -> Self {
        let n: usize = blocks.iter().map(|b| b.d_left * b.d_right).sum();
        Self { blocks, d_env, embedding: identity(n) }
    }

    pub fn d_b(&self) -> usize {
        self.embedding.nrows()
    }

    /// `Σ_i p_i S(φ_i^{B_i^R})`.
    pub fn predicted_entanglement(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.prob * entropy_of_matrix(&ptrace_second(&b.pure_state, b.d_right, self.d_env)))
            .sum()
    }

    /// Violations of the block invariants (empty when valid).
    pub fn invariant_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let total: f64 = self.blocks.iter().map(|b| b.prob).sum();
        if (total - 1.0).abs() > 1e-8 {
            errs.push(format!("probabilities sum to {total}"));
        }
        let n: usize = self.blocks.iter().map(|b| b.d_left * b.d_right).sum();
        if self.embedding.ncols() != n {
            errs.push(format!("embedding has {} columns, blocks need {n}", self.embedding.ncols()));
        } else if (self.embedding.adjoint() * &self.embedding - identity(n)).norm() > 1e-8 {
            errs.push("embedding is not an isometry".into());
        }
        for (i, b) in self.blocks.iter().enumerate() {
            if b.prob < 0.0 {
                errs.push(format!("block {i}: negative probability"));
            }
            if b.left_state.nrows() != b.d_left || b.pure_state.nrows() != b.d_right * self.d_env {
                errs.push(format!("block {i}: dimension mismatch"));
                continue;
            }
            for (name, m) in [("left", &b.left_state), ("pure", &b.pure_state)] {
                if let Err(e) = DensityMatrix::on("X", m.clone()) {
                    errs.push(format!("block {i}: {name} state invalid ({e})"));
                }
            }
            let purity = (&b.pure_state * &b.pure_state).trace().re;
            if (purity - 1.0).abs() > 1e-8 {
                errs.push(format!("block {i}: φ is not pure (purity {purity:.6})"));
            }
        }
        errs
    }
}

/// Assembles `⊕_i p_i ρ_i ⊗ φ_i` on `B ⊗ E`.
pub fn construct_block_state(decomp: &BlockDecomposition) -> Result<DensityMatrix> {
    let errs = decomp.invariant_errors();
    if !errs.is_empty() {
        return Err(Error::InvariantViolation(errs.join("; ")));
    }
    let de = decomp.d_env;
    let n = decomp.embedding.ncols();
    let mut inner = ComplexMatrix::zeros(n * de, n * de);
    let mut offset = 0;
    for b in &decomp.blocks {
        let k = b.d_left * b.d_right;
        let piece = kron(&b.left_state, &b.pure_state) * cr(b.prob);
        inner.view_mut((offset * de, offset * de), (k * de, k * de)).copy_from(&piece);
        offset += k;
    }
    let w = kron(&decomp.embedding, &identity(de));
    let dims = SystemDims::pair(("B", decomp.d_b()), ("E", de))?;
    DensityMatrix::new(hermitize(&(&w * inner * w.adjoint())), dims)
}

/// `S(B) − S(BE)` of a state on `B ⊗ E`.
pub fn entropy_difference(rho: &ComplexMatrix, db: usize, de: usize) -> f64 {
    entropy_of_matrix(&ptrace_second(rho, db, de)) - entropy_of_matrix(rho)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum EqualityMeasure {
    /// `C_←(B:E)` (product-form equality).
    CArrow,
    /// The `G` measure.
    G,
    /// Entanglement of formation (block-form equality).
    Eof,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EqualityReport {
    pub measure: EqualityMeasure,
    /// `S(B) − S(BE)`.
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub gap: f64,
    pub equality_candidate: bool,
    pub bound_direction: BoundDirection,
}

pub fn verify_equality_case(rho: &ComplexMatrix, db: usize, de: usize, which: EqualityMeasure, opts: &SolverOptions) -> EqualityReport {
    let lhs = entropy_difference(rho, db, de);
    let (rhs, direction) = match which {
        EqualityMeasure::CArrow => {
            let r = c_arrow_matrix(rho, db, de, opts);
            (r.value, r.bound_direction)
        }
        EqualityMeasure::G => {
            let r = g_measure_matrix(rho, db, de, opts);
            (r.value, r.bound_direction)
        }
        EqualityMeasure::Eof => {
            let r = eof_matrix(rho, db, de, opts);
            (r.value, r.bound_direction)
        }
    };
    let gap = rhs - lhs;
    EqualityReport { measure: which, lhs, rhs, gap, equality_candidate: gap.abs() < EQUALITY_TOL, bound_direction: direction }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockFormReport {
    pub passed: bool,
    /// Frobenius distance between the assembled candidate and the state.
    pub distance: f64,
    pub invariant_errors: Vec<String>,
}

/// Checks that `candidate` is a valid block decomposition assembling to `rho`.
pub fn verify_block_form(rho: &ComplexMatrix, candidate: &BlockDecomposition) -> BlockFormReport {
    let mut errs = candidate.invariant_errors();
    if candidate.d_b() * candidate.d_env != rho.nrows() {
        errs.push(format!(
            "candidate acts on dimension {}, state has {}",
            candidate.d_b() * candidate.d_env,
            rho.nrows()
        ));
    }
    let distance = if errs.is_empty() {
        match construct_block_state(candidate) {
            Ok(s) => (s.matrix() - rho).norm(),
            Err(e) => {
                errs.push(e.to_string());
                f64::INFINITY
            }
        }
    } else {
        f64::INFINITY
    };
    BlockFormReport { passed: errs.is_empty() && distance < BLOCK_TOL, distance, invariant_errors: errs }
}

/// Hermitian basis of the commutant of `{tr_E[(1 ⊗ |e⟩⟨e'|) ρ]}` on `B`.
fn commutant_basis(rho: &ComplexMatrix, db: usize, de: usize) -> Vec<ComplexMatrix> {
    let n = db * db;
    let mut gram = ComplexMatrix::zeros(n, n);
    let id = identity(db);
    for e in 0..de {
        for e2 in 0..de {
            let a = ComplexMatrix::from_fn(db, db, |b, b2| rho[(b * de + e, b2 * de + e2)]);
            // vec(AY − YA) = (I ⊗ A − Aᵀ ⊗ I) vec(Y), column-major vec
            let m = kron(&id, &a) - kron(&a.transpose(), &id);
            gram += m.adjoint() * m;
        }
    }
    let (vals, vecs) = eigh(&hermitize(&gram));
    let scale = vals.last().copied().unwrap_or(0.0).max(1.0);
    (0..n)
        .filter(|&k| vals[k] < 1e-10 * scale)
        .map(|k| {
            let y = ComplexMatrix::from_column_slice(db, db, vecs.column(k).as_slice());
            hermitize(&(&y + y.adjoint()))
        })
        .collect()
}

/// Proposes a block form: eigenspaces of a random Hermitian element of the
/// commutant split `B` into pieces on which the state is `q_j · φ_j` with
/// `φ_j` pure. Returns `None` when a piece is not pure (the state is not in
/// block form, or the heuristic failed to separate it).
pub fn discover_block_form(rho: &ComplexMatrix, db: usize, de: usize, seed: u64) -> Option<BlockDecomposition> {
    use rand_distr::{Distribution, StandardNormal};
    let basis = commutant_basis(rho, db, de);
    let mut rng = rng_from_seed(seed);
    let mut h = ComplexMatrix::zeros(db, db);
    for y in &basis {
        let c: f64 = StandardNormal.sample(&mut rng);
        h += y * cr(c);
    }
    let (vals, vecs) = eigh(&h);
    let spread = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for k in 0..db {
        match groups.last_mut() {
            Some(g) if (vals[k] - vals[g[g.len() - 1]]).abs() < 1e-6 * spread => g.push(k),
            _ => groups.push(vec![k]),
        }
    }
    let mut blocks = Vec::new();
    let mut columns: Vec<ComplexMatrix> = Vec::new();
    for g in groups {
        let q = ComplexMatrix::from_fn(db, g.len(), |r, c| vecs[(r, g[c])]);
        let w = kron(&q, &identity(de));
        let restricted = hermitize(&(w.adjoint() * rho * &w));
        let weight = restricted.trace().re;
        if weight < 1e-12 {
            continue;
        }
        let phi = &restricted / cr(weight);
        let purity = (&phi * &phi).trace().re;
        if (purity - 1.0).abs() > 1e-7 {
            return None;
        }
        blocks.push(Block {
            prob: weight,
            left_state: ComplexMatrix::from_element(1, 1, cr(1.0)),
            pure_state: phi,
            d_left: 1,
            d_right: g.len(),
        });
        columns.push(q);
    }
    let total: f64 = blocks.iter().map(|b| b.prob).sum();
    blocks.iter_mut().for_each(|b| b.prob /= total);
    let n: usize = columns.iter().map(|c| c.ncols()).sum();
    let mut embedding = ComplexMatrix::zeros(db, n);
    let mut off = 0;
    for c in columns {
        embedding.columns_mut(off, c.ncols()).copy_from(&c);
        off += c.ncols();
    }
    Some(BlockDecomposition { blocks, d_env: de, embedding })
}

/// Marginal on `B` of a block state, used by tests and examples.
pub fn marginal_b(rho: &ComplexMatrix, db: usize, de: usize) -> ComplexMatrix {
    ptrace_second(rho, db, de)
}

/// Marginal on `E`.
pub fn marginal_e(rho: &ComplexMatrix, db: usize, de: usize) -> ComplexMatrix {
    ptrace_first(rho, db, de)
}

//! Entropy functionals, all in bits.
//!
//! Entropies come from Hermitian eigenvalues (never a matrix logarithm), with
//! eigenvalues in `[-1e-10, 0)` clipped to zero.

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::linops::{cr, eigh, eigvalsh, ComplexMatrix, DensityMatrix, TOL_PSD};

const LN2: f64 = std::f64::consts::LN_2;
/// Eigenvalue floor used only inside entropy gradients.
const GRAD_FLOOR: f64 = 1e-30;

/// `-x log₂ x` with `0 log 0 = 0`.
#[inline]
pub fn eta(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

pub fn binary_entropy(p: f64) -> f64 {
    eta(p) + eta(1.0 - p)
}

/// Shannon entropy of a probability vector (clipping tiny negatives).
pub fn shannon(p: &[f64]) -> f64 {
    p.iter().map(|&x| eta(x.max(0.0))).sum()
}

fn clip_spectrum(vals: &[f64]) -> Result<Vec<f64>> {
    vals.iter()
        .map(|&l| {
            if l < -TOL_PSD {
                Err(Error::InvariantViolation(format!("negative eigenvalue {l:.3e}")))
            } else {
                Ok(l.max(0.0))
            }
        })
        .collect()
}

/// von Neumann entropy `S(ρ) = -tr ρ log₂ ρ`.
pub fn entropy(rho: &DensityMatrix) -> Result<f64> {
    Ok(shannon(&clip_spectrum(&eigvalsh(rho.matrix()))?))
}

/// Entropy of a raw PSD matrix assumed to have unit trace.
pub fn entropy_of_matrix(m: &ComplexMatrix) -> f64 {
    shannon(&eigvalsh(m))
}

/// Degree-one homogeneous extension `H(X) = tr(X) S(X / tr X)` for PSD `X`.
///
/// `p·S(ρ) = H(pρ)`, so ensemble averages become sums of `H` over
/// subnormalized members.
pub fn homogeneous_entropy(x: &ComplexMatrix) -> f64 {
    let vals = eigvalsh(x);
    let t: f64 = vals.iter().map(|l| l.max(0.0)).sum();
    if t <= 0.0 {
        return 0.0;
    }
    vals.iter().map(|&l| eta(l.max(0.0))).sum::<f64>() - eta(t)
}

/// `H(X)` and its gradient `-log₂(X / tr X)` (Hermitian).
pub fn homogeneous_entropy_grad(x: &ComplexMatrix) -> (f64, ComplexMatrix) {
    let n = x.nrows();
    let (vals, vecs) = eigh(x);
    let t: f64 = vals.iter().map(|l| l.max(0.0)).sum();
    if t <= 0.0 {
        return (0.0, ComplexMatrix::zeros(n, n));
    }
    let value = vals.iter().map(|&l| eta(l.max(0.0))).sum::<f64>() - eta(t);
    let mut scaled = vecs.clone();
    for (k, &l) in vals.iter().enumerate() {
        let g = -((l.max(0.0) / t).max(GRAD_FLOOR)).ln() / LN2;
        scaled.column_mut(k).iter_mut().for_each(|z| *z *= cr(g));
    }
    (value, scaled * vecs.adjoint())
}

/// `H(N(X))` and its gradient pulled back through `N` (adjoint map).
pub fn channel_entropy_grad(ch: &KrausChannel, x: &ComplexMatrix) -> (f64, ComplexMatrix) {
    let (v, g) = homogeneous_entropy_grad(&ch.map(x));
    (v, ch.adjoint_map(&g))
}

fn reduced_entropy(rho: &DensityMatrix, labels: &[&str]) -> Result<f64> {
    if labels.is_empty() {
        return Ok(0.0);
    }
    entropy(&rho.partial_trace(labels)?)
}

fn check_disjoint(groups: &[&[&str]]) -> Result<()> {
    for (i, g) in groups.iter().enumerate() {
        for l in g.iter() {
            if groups[i + 1..].iter().any(|h| h.contains(l)) {
                return Err(Error::InvalidLabels(format!("label `{l}` appears twice")));
            }
        }
    }
    Ok(())
}

fn union<'a>(a: &[&'a str], b: &[&'a str]) -> Vec<&'a str> {
    a.iter().chain(b.iter()).copied().collect()
}

/// `S(A|B) = S(AB) − S(B)`.
pub fn conditional_entropy(rho: &DensityMatrix, a: &[&str], b: &[&str]) -> Result<f64> {
    check_disjoint(&[a, b])?;
    Ok(reduced_entropy(rho, &union(a, b))? - reduced_entropy(rho, b)?)
}

/// `I(A:B) = S(A) + S(B) − S(AB)`.
pub fn mutual_information(rho: &DensityMatrix, a: &[&str], b: &[&str]) -> Result<f64> {
    check_disjoint(&[a, b])?;
    Ok(reduced_entropy(rho, a)? + reduced_entropy(rho, b)? - reduced_entropy(rho, &union(a, b))?)
}

/// `I(A:B|C) = S(AC) + S(BC) − S(ABC) − S(C)`.
pub fn conditional_mutual_information(
    rho: &DensityMatrix,
    a: &[&str],
    b: &[&str],
    c: &[&str],
) -> Result<f64> {
    check_disjoint(&[a, b, c])?;
    let ac = union(a, c);
    let bc = union(b, c);
    let abc = union(&ac, b);
    Ok(reduced_entropy(rho, &ac)? + reduced_entropy(rho, &bc)?
        - reduced_entropy(rho, &abc)?
        - reduced_entropy(rho, c)?)
}

/// Coherent information `S(B) − S(E)` of the dilated output `U ρ U†`.
pub fn coherent_information(ch: &KrausChannel, rho: &DensityMatrix) -> Result<f64> {
    let be = ch.stinespring().apply(rho)?;
    Ok(entropy(&be.partial_trace(&["B"])?)? - entropy(&be.partial_trace(&["E"])?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{
        basis_projector, identity, random_density, random_unitary, rng_from_seed, ComplexVector,
        PureState, SystemDims,
    };

    fn dm(label: &str, m: ComplexMatrix) -> DensityMatrix {
        DensityMatrix::on(label, m).unwrap()
    }

    fn two_qubit(seed: u64) -> DensityMatrix {
        random_density(&SystemDims::pair(("A", 2), ("B", 2)).unwrap(), seed)
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy(&DensityMatrix::maximally_mixed("A", 2)).unwrap() - 1.0).abs() < 1e-14);
        assert!(entropy(&dm("A", basis_projector(2, 0))).unwrap().abs() < 1e-14);
        let d = ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![cr(0.25), cr(0.75)]));
        let expect = -(0.25f64 * 0.25f64.log2() + 0.75 * 0.75f64.log2());
        assert!((entropy(&dm("A", d)).unwrap() - expect).abs() < 1e-14);
        assert!((expect - 0.811278).abs() < 1e-6);
    }

    #[test]
    fn conditional_entropy_examples() {
        let bell = PureState::maximally_entangled("A", "B", 2).density();
        assert!((conditional_entropy(&bell, &["A"], &["B"]).unwrap() + 1.0).abs() < 1e-12);
        let prod = DensityMatrix::maximally_mixed("A", 2)
            .tensor(&DensityMatrix::maximally_mixed("B", 2))
            .unwrap();
        assert!((conditional_entropy(&prod, &["A"], &["B"]).unwrap() - 1.0).abs() < 1e-12);
        let r = two_qubit(3);
        let s_ab = entropy(&r).unwrap();
        let s_b = entropy(&r.partial_trace(&["B"]).unwrap()).unwrap();
        assert!((conditional_entropy(&r, &["A"], &["B"]).unwrap() - (s_ab - s_b)).abs() < 1e-12);
        assert!(conditional_entropy(&r, &["A"], &["A"]).is_err());
        assert!(conditional_entropy(&r, &["A"], &["Q"]).is_err());
    }

    #[test]
    fn mutual_information_examples() {
        let bell = PureState::maximally_entangled("A", "B", 2).density();
        assert!((mutual_information(&bell, &["A"], &["B"]).unwrap() - 2.0).abs() < 1e-12);
        let prod = random_density(&SystemDims::single("A", 2), 1)
            .tensor(&random_density(&SystemDims::single("B", 2), 2))
            .unwrap();
        assert!(mutual_information(&prod, &["A"], &["B"]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn strong_subadditivity_on_random_tripartite_states() {
        let dims = SystemDims::new([("A", 2), ("B", 2), ("C", 2)]).unwrap();
        for seed in 0..20 {
            let r = random_density(&dims, seed);
            assert!(conditional_mutual_information(&r, &["A"], &["B"], &["C"]).unwrap() >= -1e-9);
            assert!(mutual_information(&r, &["A"], &["B"]).unwrap() >= -1e-9);
        }
    }

    #[test]
    fn unitary_invariance_and_concavity() {
        let mut rng = rng_from_seed(7);
        for seed in 0..10 {
            let r = random_density(&SystemDims::single("A", 3), seed);
            let u = random_unitary(3, &mut rng);
            let rot = dm("A", &u * r.matrix() * u.adjoint());
            assert!((entropy(&rot).unwrap() - entropy(&r).unwrap()).abs() < 1e-9);
            let s = random_density(&SystemDims::single("A", 3), seed + 100);
            let lam = 0.3;
            let mix = dm("A", r.matrix() * cr(lam) + s.matrix() * cr(1.0 - lam));
            let lhs = entropy(&mix).unwrap();
            let rhs = lam * entropy(&r).unwrap() + (1.0 - lam) * entropy(&s).unwrap();
            assert!(lhs >= rhs - 1e-9);
        }
    }

    #[test]
    fn homogeneous_entropy_scales() {
        let r = random_density(&SystemDims::single("A", 3), 4);
        let s = entropy(&r).unwrap();
        let h = homogeneous_entropy(&(r.matrix() * cr(0.3)));
        assert!((h - 0.3 * s).abs() < 1e-12);
    }

    #[test]
    fn homogeneous_entropy_gradient_matches_finite_differences() {
        let mut rng = rng_from_seed(2);
        let x = random_density(&SystemDims::single("A", 3), 5).matrix() * cr(0.7);
        let (_, g) = homogeneous_entropy_grad(&x);
        for _ in 0..5 {
            let dir = crate::linops::hermitize(&crate::linops::gaussian_matrix(3, 3, &mut rng));
            let h = 1e-6;
            let fp = homogeneous_entropy(&(&x + &dir * cr(h)));
            let fm = homogeneous_entropy(&(&x - &dir * cr(h)));
            let fd = (fp - fm) / (2.0 * h);
            let an = crate::linops::re_inner(&g, &dir);
            assert!((fd - an).abs() < 1e-6, "fd {fd} analytic {an}");
        }
    }

    fn dephasing(p: f64) -> KrausChannel {
        let z = ComplexMatrix::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(-1.0)]);
        KrausChannel::new(vec![identity(2) * cr((1.0 - p).sqrt()), z * cr(p.sqrt())], None).unwrap()
    }

    #[test]
    fn coherent_information_examples() {
        let mm = DensityMatrix::maximally_mixed("A", 2);
        let ci = coherent_information(&KrausChannel::identity(2), &mm).unwrap();
        assert!((ci - 1.0).abs() < 1e-12);

        let fd = KrausChannel::new(vec![basis_projector(2, 0), basis_projector(2, 1)], None).unwrap();
        let diag = ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![cr(0.3), cr(0.7)]));
        assert!(coherent_information(&fd, &dm("A", diag)).unwrap().abs() < 1e-12);

        // Amplitude damping γ=0.3 at I/2: B = diag(0.65, 0.35), E = diag(0.85, 0.15).
        let g: f64 = 0.3;
        let k0 = ComplexMatrix::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr((1.0 - g).sqrt())]);
        let k1 = ComplexMatrix::from_row_slice(2, 2, &[cr(0.0), cr(g.sqrt()), cr(0.0), cr(0.0)]);
        let ad = KrausChannel::new(vec![k0, k1], None).unwrap();
        let ci = coherent_information(&ad, &mm).unwrap();
        let oracle = binary_entropy(0.5 * (1.0 + g)) - binary_entropy(0.5 * g);
        assert!(ci > 0.0);
        assert!((ci - oracle).abs() < 1e-12);
    }

    #[test]
    fn coherent_information_equals_minus_conditional_entropy() {
        let ch = dephasing(0.2);
        for seed in 0..5 {
            let rho = random_density(&SystemDims::single("A", 2), seed);
            let ci = coherent_information(&ch, &rho).unwrap();
            let rb = ch.apply_to_half(&rho.purify().density()).unwrap();
            let r_label = rb.dims().labels()[0].clone();
            let b_label = rb.dims().labels()[1].clone();
            let ce = conditional_entropy(&rb, &[r_label.as_str()], &[b_label.as_str()]).unwrap();
            assert!((ci + ce).abs() < 1e-9);
            let s_b = entropy(&rb.partial_trace(&[b_label.as_str()]).unwrap()).unwrap();
            assert!((ci - (s_b - entropy(&rb).unwrap())).abs() < 1e-9);
        }
    }
}

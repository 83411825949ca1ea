use proptest::prelude::*;

use qcap::channels::KrausChannel;
use qcap::cli::zoo;
use qcap::entropics::{entropy_of_matrix, homogeneous_entropy};
use qcap::linops::{
    cr, dagger, eigh, eigvalsh, identity, isometry_defect, kron, partial_trace_matrix, ptrace_first, ptrace_second,
    random_density, random_pure, random_unitary, rng_from_seed, trace, ComplexMatrix, SystemDims,
};
use qcap::potential::{canonical_lift, is_hadamard, Verdict};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 24, ..ProptestConfig::default() }
}

fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn sorted_positive(mut v: Vec<f64>) -> Vec<f64> {
    v.retain(|x| *x > 1e-9);
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn eigh_reconstructs_near_degenerate_matrices(seed in any::<u64>(), split in 0.0f64..1e-9, d in 2usize..6) {
        let mut rng = rng_from_seed(seed);
        let u = random_unitary(d, &mut rng);
        let mut diag = ComplexMatrix::zeros(d, d);
        for i in 0..d {
            diag[(i, i)] = cr(if i < 2 { 0.5 + split * i as f64 } else { i as f64 });
        }
        let m = &u * diag * dagger(&u);
        let (vals, vecs) = eigh(&m);
        prop_assert!(isometry_defect(&vecs) < 1e-9);
        let mut lam = ComplexMatrix::zeros(d, d);
        for i in 0..d {
            lam[(i, i)] = cr(vals[i]);
        }
        prop_assert!(max_abs(&(&vecs * lam * dagger(&vecs) - &m)) < 1e-9);
    }

    #[test]
    fn purification_traces_back_to_the_state(seed in any::<u64>(), d in 1usize..5) {
        let rho = random_density(&SystemDims::single("A", d), seed);
        let psi = rho.purify();
        let back = psi.density().partial_trace(&["A"]).unwrap();
        prop_assert!(max_abs(&(back.matrix() - rho.matrix())) < 1e-10);
    }

    #[test]
    fn partial_traces_agree(seed in any::<u64>(), da in 1usize..4, db in 1usize..4) {
        let rho = random_density(&SystemDims::pair(("A", da), ("B", db)).unwrap(), seed).into_matrix();
        let a = partial_trace_matrix(&rho, &[da, db], &[true, false]);
        let b = partial_trace_matrix(&rho, &[da, db], &[false, true]);
        prop_assert!(max_abs(&(a - ptrace_second(&rho, da, db))) < 1e-12);
        prop_assert!(max_abs(&(b - ptrace_first(&rho, da, db))) < 1e-12);
    }

    #[test]
    fn entropy_is_unitarily_invariant(seed in any::<u64>(), d in 1usize..6) {
        let rho = random_density(&SystemDims::single("A", d), seed).into_matrix();
        let u = random_unitary(d, &mut rng_from_seed(seed ^ 1));
        let s0 = entropy_of_matrix(&rho);
        let s1 = entropy_of_matrix(&(&u * &rho * dagger(&u)));
        prop_assert!((s0 - s1).abs() < 1e-9);
        prop_assert!(s0 >= -1e-12 && s0 <= (d as f64).log2() + 1e-9);
    }

    #[test]
    fn entropy_is_concave(seed in any::<u64>(), t in 0.0f64..1.0, d in 2usize..5) {
        let dims = SystemDims::single("A", d);
        let a = random_density(&dims, seed).into_matrix();
        let b = random_density(&dims, seed.wrapping_add(1)).into_matrix();
        let mix = &a * cr(t) + &b * cr(1.0 - t);
        prop_assert!(entropy_of_matrix(&mix) + 1e-10 >= t * entropy_of_matrix(&a) + (1.0 - t) * entropy_of_matrix(&b));
    }

    #[test]
    fn homogeneous_entropy_scales_linearly(seed in any::<u64>(), s in 0.01f64..10.0) {
        let rho = random_density(&SystemDims::single("A", 3), seed).into_matrix();
        prop_assert!((homogeneous_entropy(&(&rho * cr(s))) - s * entropy_of_matrix(&rho)).abs() < 1e-9 * s.max(1.0));
    }

    #[test]
    fn kraus_rotation_preserves_the_channel(seed in any::<u64>(), k in 1usize..4) {
        let ch = zoo::random(2, 3, k, seed).unwrap();
        let u = random_unitary(k, &mut rng_from_seed(seed ^ 7));
        let rotated = ch.kraus_rotate(&u).unwrap();
        prop_assert!(ch.choi().distance(&rotated.choi()) < 1e-10);
    }

    #[test]
    fn double_complement_preserves_output_spectra(seed in any::<u64>()) {
        let ch = zoo::random(2, 2, 3, seed).unwrap();
        let cc = ch.complementary().complementary();
        let rho = random_density(&SystemDims::single("A", 2), seed ^ 3).into_matrix();
        let b = sorted_positive(eigvalsh(&ch.map(&rho)));
        let bb = sorted_positive(eigvalsh(&cc.map(&rho)));
        prop_assert_eq!(b.len(), bb.len());
        prop_assert!(b.iter().zip(&bb).all(|(x, y)| (x - y).abs() < 1e-9));
    }

    #[test]
    fn pure_inputs_give_equal_output_and_environment_entropy(seed in any::<u64>()) {
        let ch = zoo::random(2, 3, 3, seed).unwrap();
        let pure = random_pure(&SystemDims::single("A", 2), &mut rng_from_seed(seed ^ 5)).density().into_matrix();
        let sb = entropy_of_matrix(&ch.map(&pure));
        let se = entropy_of_matrix(&ch.complementary().map(&pure));
        prop_assert!((sb - se).abs() < 1e-9);
    }

    #[test]
    fn channels_are_trace_preserving(seed in any::<u64>(), din in 1usize..4, dout in 1usize..4, k in 1usize..4) {
        prop_assume!(din <= dout * k);
        let ch = zoo::random(din, dout, k, seed).unwrap();
        prop_assert!(ch.validate().deviation < 1e-10);
        let rho = random_density(&SystemDims::single("A", din), seed ^ 5).into_matrix();
        prop_assert!((trace(&ch.map(&rho)).re - 1.0).abs() < 1e-10);
        let choi = ch.choi().to_unnormalized();
        prop_assert!(max_abs(&(choi.input_marginal() - identity(din))) < 1e-10);
    }

    #[test]
    fn tensor_channel_acts_on_products(seed in any::<u64>()) {
        let a = zoo::random(2, 2, 2, seed).unwrap();
        let b = zoo::random(2, 3, 2, seed ^ 9).unwrap();
        let ra = random_density(&SystemDims::single("A", 2), seed ^ 11).into_matrix();
        let rb = random_density(&SystemDims::single("B", 2), seed ^ 13).into_matrix();
        let joint = a.tensor(&b).map(&kron(&ra, &rb));
        prop_assert!(max_abs(&(joint - kron(&a.map(&ra), &b.map(&rb)))) < 1e-10);
    }

    #[test]
    fn canonical_lifts_are_hadamard(seed in any::<u64>(), k in 1usize..4) {
        let ch = zoo::random(2, 2, k, seed).unwrap();
        let lift = canonical_lift(&ch, None).unwrap();
        prop_assert_eq!(is_hadamard(&lift.lifted).verdict, Verdict::Yes);
        let rho = random_density(&SystemDims::single("A", 2), seed ^ 17).into_matrix();
        prop_assert!(max_abs(&(lift.discard_copy(&rho) - ch.map(&rho))) < 1e-10);
    }
}

#[test]
fn zoo_channels_are_cptp() {
    for spec in [
        "identity:3",
        "dephasing:0.2",
        "depolarizing:0.4:3",
        "amplitude_damping:0.6",
        "erasure:0.3:3",
        "measure_prepare:y",
        "full_dephasing:4",
        "constant:3",
        "random:3:2:4:1",
    ] {
        let ch: KrausChannel = spec.parse::<zoo::ChannelSpec>().unwrap().build().unwrap();
        assert!(ch.validate().deviation < 1e-12, "{spec}");
    }
}

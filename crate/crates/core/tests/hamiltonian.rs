use basisgate::hamiltonian::*;
use basisgate::linalg::{self, Mat4, C64};
use basisgate::weyl::{canonical_coordinate, WeylPoint};
use basisgate::Error;
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

/// exp(-i h t) by scaling and squaring a truncated Taylor series.
fn taylor_expm(h: &Mat4, t: f64) -> Mat4 {
    let a = h * C64::new(0.0, -t);
    let squarings = (a.norm().max(1.0).log2().ceil() as i32 + 4).max(0);
    let a = a / C64::new(2f64.powi(squarings), 0.0);
    let mut term = Mat4::identity();
    let mut sum = Mat4::identity();
    for k in 1..30 {
        term = term * a / C64::new(k as f64, 0.0);
        sum += term;
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

/// Eq-level assembly of the coupler Hamiltonian from ladder operators.
fn assembled(g_c: f64, g_g: f64, phi_c: f64, phi_g: f64, e1: f64, e2: f64) -> Mat4 {
    let lower = nalgebra::Matrix2::new(
        C64::new(0.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
    );
    let id = nalgebra::Matrix2::identity();
    let a = linalg::kron(&lower, &id);
    let b = linalg::kron(&id, &lower);
    let conv = C64::from_polar(g_c, phi_c);
    let gain = C64::from_polar(g_g, phi_g);
    let ad = a.adjoint();
    let bd = b.adjoint();
    let mut h = ad * b * conv + a * bd * conv.conj() + a * b * gain + ad * bd * gain.conj();
    h += linalg::kron(&linalg::pauli_x(), &id) * C64::new(e1, 0.0);
    h += linalg::kron(&id, &linalg::pauli_x()) * C64::new(e2, 0.0);
    h
}

fn coord(p: &ConversionGainParams) -> WeylPoint {
    canonical_coordinate(&conversion_gain_unitary(p))
}

#[test]
fn named_pulses_land_on_named_classes() {
    let iswap = ConversionGainParams::new(FRAC_PI_2, 0.0, 1.0);
    let u = conversion_gain_unitary(&iswap);
    let m = u.matrix();
    assert!((m[(1, 2)] - C64::new(0.0, -1.0)).norm() < 1e-12);
    assert!((m[(2, 1)] - C64::new(0.0, -1.0)).norm() < 1e-12);
    assert!((m[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-12);
    assert!((m[(3, 3)] - C64::new(1.0, 0.0)).norm() < 1e-12);
    assert!(coord(&iswap).distance(WeylPoint::ISWAP) < 1e-9);

    let cnot = ConversionGainParams::new(FRAC_PI_4, FRAC_PI_4, 1.0);
    assert!(coord(&cnot).distance(WeylPoint::CNOT) < 1e-9);

    let idle = ConversionGainParams::new(0.0, 0.0, 1.0).with_phases(0.3, 1.2);
    assert!((conversion_gain_unitary(&idle).matrix() - Mat4::identity()).norm() < 1e-14);
}

#[test]
fn zero_hamiltonian_exponentiates_to_identity() {
    assert!((linalg::expm_hermitian(&Mat4::zeros(), 3.7) - Mat4::identity()).norm() < 1e-14);
}

#[test]
fn hamiltonian_matches_ladder_operator_assembly() {
    let p = ConversionGainParams::new(0.7, 0.4, 1.0).with_phases(0.3, -0.8);
    let h = hamiltonian(&p, 1.1, -0.6);
    assert!((h - assembled(0.7, 0.4, 0.3, -0.8, 1.1, -0.6)).norm() < 1e-14);
    assert!((h[(2, 1)] - C64::from_polar(0.7, 0.3)).norm() < 1e-14);
    assert!((h[(0, 3)] - C64::from_polar(0.4, -0.8)).norm() < 1e-14);
}

#[test]
fn epsilon_three_seed_is_near_cnot() {
    let p = ParallelDriveParams::constant(ConversionGainParams::new(FRAC_PI_2, 0.0, 1.0), 3.0, 0.0, 4);
    let q = canonical_coordinate(&parallel_drive_unitary(&p).unwrap());
    assert!(q.class_distance(WeylPoint::CNOT) < 0.05, "{q:?}");
}

#[test]
fn undriven_schedule_reduces_to_closed_form() {
    let base = ConversionGainParams::new(0.9, 0.2, 1.4).with_phases(0.5, 2.0);
    let p = ParallelDriveParams::constant(base, 0.0, 0.0, 4);
    let u = parallel_drive_unitary(&p).unwrap();
    assert!((u.matrix() - conversion_gain_unitary(&base).matrix()).norm() < 1e-10);
}

#[test]
fn mismatched_drive_lengths_are_rejected() {
    let base = ConversionGainParams::new(1.0, 0.0, 1.0);
    assert!(matches!(
        ParallelDriveParams::new(base, vec![1.0, 2.0], vec![0.0]),
        Err(Error::DimensionMismatch { .. })
    ));
    assert!(matches!(
        ParallelDriveParams::new(base, vec![], vec![]),
        Err(Error::EmptyInput(_))
    ));
}

#[test]
fn drive_ratio_cases() {
    assert_eq!(drive_ratio(FRAC_PI_4, FRAC_PI_4).unwrap(), DriveRatio::Finite(1.0));
    assert_eq!(drive_ratio(1.0, 0.0).unwrap(), DriveRatio::Finite(0.0));
    assert_eq!(drive_ratio(0.0, 1.0).unwrap(), DriveRatio::Infinite);
    assert!(matches!(drive_ratio(0.0, 0.0), Err(Error::BothZero)));
}

fn pulse() -> impl Strategy<Value = ConversionGainParams> {
    (0.0..2.0f64, 0.0..2.0f64, -PI..PI, -PI..PI, 0.0..2.0f64)
        .prop_map(|(gc, gg, pc, pg, t)| ConversionGainParams::new(gc, gg, t).with_phases(pc, pg))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn closed_form_agrees_with_taylor_oracle(p in pulse()) {
        let h = assembled(p.g_c, p.g_g, p.phi_c, p.phi_g, 0.0, 0.0);
        let oracle = taylor_expm(&h, p.duration);
        prop_assert!((conversion_gain_unitary(&p).matrix() - oracle).norm() < 1e-9);
    }

    #[test]
    fn driven_output_is_unitary(
        p in pulse(),
        eps in prop::collection::vec((-7.0..7.0f64, -7.0..7.0f64), 1..6),
    ) {
        let (e1, e2): (Vec<f64>, Vec<f64>) = eps.into_iter().unzip();
        let u = parallel_drive_unitary(&ParallelDriveParams::new(p, e1, e2).unwrap()).unwrap();
        prop_assert!(linalg::unitarity_error(u.matrix()) < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn driven_steps_match_taylor_oracle(
        p in pulse(),
        eps in prop::collection::vec((-4.0..4.0f64, -4.0..4.0f64), 1..5),
    ) {
        let n = eps.len();
        let dt = p.duration / n as f64;
        let mut oracle = Mat4::identity();
        for &(a, b) in &eps {
            oracle = taylor_expm(&assembled(p.g_c, p.g_g, p.phi_c, p.phi_g, a, b), dt) * oracle;
        }
        let (e1, e2): (Vec<f64>, Vec<f64>) = eps.into_iter().unzip();
        let u = parallel_drive_unitary(&ParallelDriveParams::new(p, e1, e2).unwrap()).unwrap();
        prop_assert!((u.matrix() - oracle).norm() < 1e-9);
    }

    #[test]
    fn expm_semigroup(p in pulse(), a in 0.0..2.0f64, b in 0.0..2.0f64) {
        let h = hamiltonian(&p, 0.4, -0.9);
        let lhs = linalg::expm_hermitian(&h, a) * linalg::expm_hermitian(&h, b);
        prop_assert!((lhs - linalg::expm_hermitian(&h, a + b)).norm() < 1e-9);
    }

    #[test]
    fn conversion_phase_does_not_change_class(g in 0.0..2.0f64, t in 0.0..2.0f64, phi in -PI..PI) {
        let a = coord(&ConversionGainParams::new(g, 0.0, t));
        let b = coord(&ConversionGainParams::new(g, 0.0, t).with_phases(phi, 0.0));
        prop_assert!(a.class_distance(b) < 1e-7);
    }

    #[test]
    fn undriven_family_lies_in_base_plane(tc in 0.0..PI, tg in 0.0..PI) {
        let q = coord(&ConversionGainParams::new(tc, tg, 1.0));
        prop_assert!(q.c3.abs() < 1e-7, "{:?}", q);
    }

    #[test]
    fn refining_constant_steps_is_exact(
        p in pulse(),
        eps in prop::collection::vec((-4.0..4.0f64, -4.0..4.0f64), 1..5),
    ) {
        let (e1, e2): (Vec<f64>, Vec<f64>) = eps.iter().copied().unzip();
        let coarse = parallel_drive_unitary(&ParallelDriveParams::new(p, e1.clone(), e2.clone()).unwrap()).unwrap();
        let double = |v: &[f64]| v.iter().flat_map(|&x| [x, x]).collect::<Vec<_>>();
        let fine = parallel_drive_unitary(&ParallelDriveParams::new(p, double(&e1), double(&e2)).unwrap()).unwrap();
        prop_assert!((coarse.matrix() - fine.matrix()).norm() < 1e-9);
    }
}

use basisgate::linalg::{self, kron, pauli_x, pauli_y, pauli_z, Mat4, C64};
use basisgate::weyl::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Independent construction of CAN(c) by exponentiating the Pauli sum directly.
fn can_by_expm(p: [f64; 3]) -> Mat4 {
    let h = (kron(&pauli_x(), &pauli_x()) * c(p[0], 0.0)
        + kron(&pauli_y(), &pauli_y()) * c(p[1], 0.0)
        + kron(&pauli_z(), &pauli_z()) * c(p[2], 0.0))
        * c(0.5, 0.0);
    linalg::expm_hermitian(&h, 1.0)
}

fn named(rows: [[(f64, f64); 4]; 4]) -> Unitary4 {
    let mut m = Mat4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            m[(i, j)] = c(rows[i][j].0, rows[i][j].1);
        }
    }
    Unitary4::new(m).unwrap()
}

const O: (f64, f64) = (0.0, 0.0);
const L: (f64, f64) = (1.0, 0.0);
const J: (f64, f64) = (0.0, 1.0);

fn assert_point(p: WeylPoint, q: WeylPoint, tol: f64) {
    assert!(p.distance(q) < tol, "{p:?} vs {q:?}");
}

#[test]
fn named_gates_land_on_chamber_corners() {
    let cnot = named([[L, O, O, O], [O, L, O, O], [O, O, O, L], [O, O, L, O]]);
    let cz = named([[L, O, O, O], [O, L, O, O], [O, O, L, O], [O, O, O, (-1.0, 0.0)]]);
    let swap = named([[L, O, O, O], [O, O, L, O], [O, L, O, O], [O, O, O, L]]);
    let iswap = named([[L, O, O, O], [O, O, J, O], [O, J, O, O], [O, O, O, L]]);
    assert_point(canonical_coordinate(&cnot), WeylPoint::CNOT, 1e-10);
    assert_point(canonical_coordinate(&cz), WeylPoint::CNOT, 1e-10);
    assert_point(canonical_coordinate(&swap), WeylPoint::SWAP, 1e-10);
    assert_point(canonical_coordinate(&iswap), WeylPoint::ISWAP, 1e-10);
    assert_point(canonical_coordinate(&Unitary4::identity()), WeylPoint::IDENTITY, 1e-10);

    let inv = makhlin_invariants(&cnot);
    assert!(inv.g1_re.abs() < 1e-12 && inv.g1_im.abs() < 1e-12 && (inv.g2 - 1.0).abs() < 1e-12);
    let inv = makhlin_invariants(&swap);
    assert!((inv.g1_re + 1.0).abs() < 1e-12 && (inv.g2 + 3.0).abs() < 1e-12);
    let inv = makhlin_invariants(&Unitary4::identity());
    assert!((inv.g1_re - 1.0).abs() < 1e-12 && (inv.g2 - 3.0).abs() < 1e-12);
}

#[test]
fn canonical_gate_matches_pauli_exponential() {
    for p in [[0.3, 0.2, 0.1], [2.0, 0.5, 0.2], [FRAC_PI_2, FRAC_PI_4, 0.0]] {
        let a = canonical_gate(WeylPoint::from_array(p));
        assert!((a.matrix() - can_by_expm(p)).norm() < 1e-12);
    }
}

#[test]
fn non_unitary_is_rejected() {
    let m = Mat4::identity() * c(1.1, 0.0);
    assert!(matches!(Unitary4::new(m), Err(basisgate::Error::NonUnitaryInput { .. })));
}

#[test]
fn conjugation_mirrors_interior_points() {
    let u = Unitary4::new(can_by_expm([0.9, 0.4, 0.2])).unwrap();
    let p = canonical_coordinate(&u);
    let q = canonical_coordinate(&u.conjugate());
    assert_point(q, p.mirrored(), 1e-10);
}

#[test]
fn haar_samples_are_unitary_and_in_chamber() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let u = haar_random_unitary(&mut rng);
        assert!(linalg::unitarity_error(u.matrix()) < 1e-12);
        let p = canonical_coordinate(&u);
        assert!(p.c3 >= 0.0 && p.c2 >= p.c3 - 1e-12);
        assert!(p.c2 <= p.c1.min(PI - p.c1) + 1e-12);
    }
}

fn chamber_point() -> impl Strategy<Value = WeylPoint> {
    (0.0..PI, 0.0..1.0f64, 0.0..1.0f64).prop_map(|(c1, a, b)| {
        let c2 = a * c1.min(PI - c1);
        WeylPoint::new(c1, c2, b * c2)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn coordinate_round_trips_through_canonical_gate(p in chamber_point(), seed in any::<u64>()) {
        prop_assume!(p.c3 > 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k1 = haar_random_local(&mut rng);
        let k2 = haar_random_local(&mut rng);
        let u = k1.unitary().then(&canonical_gate(p)).then(&k2.unitary());
        let q = canonical_coordinate(&u);
        prop_assert!(q.distance(p) < 1e-7, "{:?} vs {:?}", q, p);
    }

    #[test]
    fn invariants_closed_form_agrees(p in chamber_point()) {
        let a = MakhlinInvariants::of_point(p);
        let b = makhlin_invariants(&Unitary4::new(can_by_expm(p.to_array())).unwrap());
        prop_assert!(a.distance_sq(&b).sqrt() < 1e-10);
    }

    #[test]
    fn local_invariance(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = haar_random_unitary(&mut rng);
        let k1 = haar_random_local(&mut rng);
        let k2 = haar_random_local(&mut rng);
        let v = k1.unitary().then(&u).then(&k2.unitary());
        let (a, b) = (makhlin_invariants(&u), makhlin_invariants(&v));
        prop_assert!(a.distance_sq(&b).sqrt() < 1e-9);
        prop_assert!(canonical_coordinate(&u).distance(canonical_coordinate(&v)) < 1e-7);
    }

    #[test]
    fn fold_is_idempotent(raw in prop::array::uniform3(-10.0..10.0f64)) {
        let p = fold_coordinate(raw);
        let q = fold_coordinate(p.to_array());
        prop_assert!(p.distance(q) < 1e-12);
        prop_assert!(p.c3 >= 0.0 && p.c2 >= p.c3 && p.c2 <= p.c1.min(PI - p.c1) + 1e-12);
    }

    #[test]
    fn folded_coordinate_is_locally_equivalent(raw in prop::array::uniform3(-6.0..6.0f64)) {
        let a = Unitary4::new(can_by_expm(raw)).unwrap();
        let b = canonical_gate(fold_coordinate(raw));
        let (ia, ib) = (makhlin_invariants(&a), makhlin_invariants(&b));
        prop_assert!(ia.distance_sq(&ib).sqrt() < 1e-9);
    }
}

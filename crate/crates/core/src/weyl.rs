//! Local invariants and canonical (Weyl chamber) coordinates of two-qubit gates.
//!
//! Coordinates follow the convention `CAN(c) = exp(-i/2 (c1 XX + c2 YY + c3 ZZ))`
//! and are reported in radians inside the chamber
//! `0 ≤ c3 ≤ c2 ≤ min(c1, π − c1)`. Points with `c3 = 0` are reported on the
//! left half (`c1 ≤ π/2`), since their mirror images are locally equivalent.

use crate::error::{Error, Result};
use crate::linalg::{self, c, kron, Mat2, Mat4, C64};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

/// Maximum Frobenius deviation of `UU†` from identity accepted as unitary.
pub const UNITARITY_TOL: f64 = 1e-10;

/// Coordinates this close to zero are treated as lying on the base plane.
pub const PLANE_TOL: f64 = 1e-9;

/// A validated 4x4 unitary acting on two qubits (first qubit most significant).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Unitary4(Mat4);

impl Unitary4 {
    pub fn new(m: Mat4) -> Result<Self> {
        let deviation = linalg::unitarity_error(&m);
        if !deviation.is_finite() || deviation > UNITARITY_TOL {
            return Err(Error::NonUnitaryInput { deviation });
        }
        Ok(Self(m))
    }

    /// Wraps a matrix known to be unitary by construction.
    pub fn from_trusted(m: Mat4) -> Self {
        debug_assert!(linalg::unitarity_error(&m) < 1e-8);
        Self(m)
    }

    pub fn identity() -> Self {
        Self(Mat4::identity())
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.0
    }

    pub fn into_matrix(self) -> Mat4 {
        self.0
    }

    /// `self` followed by `next`, i.e. the matrix product `next · self`.
    pub fn then(&self, next: &Unitary4) -> Unitary4 {
        Self(next.0 * self.0)
    }

    pub fn adjoint(&self) -> Unitary4 {
        Self(self.0.adjoint())
    }

    pub fn conjugate(&self) -> Unitary4 {
        Self(self.0.conjugate())
    }
}

/// Canonical coordinate of a two-qubit gate, in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylPoint {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl WeylPoint {
    pub const IDENTITY: WeylPoint = WeylPoint::new(0.0, 0.0, 0.0);
    pub const CNOT: WeylPoint = WeylPoint::new(FRAC_PI_2, 0.0, 0.0);
    pub const ISWAP: WeylPoint = WeylPoint::new(FRAC_PI_2, FRAC_PI_2, 0.0);
    pub const SWAP: WeylPoint = WeylPoint::new(FRAC_PI_2, FRAC_PI_2, FRAC_PI_2);
    pub const SQRT_ISWAP: WeylPoint = WeylPoint::new(FRAC_PI_4, FRAC_PI_4, 0.0);
    pub const B: WeylPoint = WeylPoint::new(FRAC_PI_2, FRAC_PI_4, 0.0);

    pub const fn new(c1: f64, c2: f64, c3: f64) -> Self {
        Self { c1, c2, c3 }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.c1, self.c2, self.c3]
    }

    /// Reflection `c1 → π − c1`, which maps the chamber onto itself.
    pub fn mirrored(self) -> Self {
        Self::new(PI - self.c1, self.c2, self.c3)
    }

    pub fn is_left(self) -> bool {
        self.c1 <= FRAC_PI_2
    }

    pub fn distance(self, other: WeylPoint) -> f64 {
        let d = [self.c1 - other.c1, self.c2 - other.c2, self.c3 - other.c3];
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }

    /// Distance that also accepts the mirror image for points on the base plane.
    pub fn class_distance(self, other: WeylPoint) -> f64 {
        let d = self.distance(other);
        if self.c3.abs() < 1e-6 || other.c3.abs() < 1e-6 {
            d.min(self.distance(other.mirrored()))
        } else {
            d
        }
    }

    /// Sum `c1 + c2 + c3`.
    pub fn total(self) -> f64 {
        self.c1 + self.c2 + self.c3
    }
}

/// Real triple `(Re G1, Im G1, Re G2)` of Makhlin local invariants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MakhlinInvariants {
    pub g1_re: f64,
    pub g1_im: f64,
    pub g2: f64,
}

impl MakhlinInvariants {
    /// Closed form of the invariants of `CAN(p)`.
    pub fn of_point(p: WeylPoint) -> Self {
        let (s1, c1) = p.c1.sin_cos();
        let (s2, c2) = p.c2.sin_cos();
        let (s3, c3) = p.c3.sin_cos();
        let cc = (c1 * c2 * c3).powi(2);
        let ss = (s1 * s2 * s3).powi(2);
        let prod_sin2 = (2.0 * p.c1).sin() * (2.0 * p.c2).sin() * (2.0 * p.c3).sin();
        let prod_cos2 = (2.0 * p.c1).cos() * (2.0 * p.c2).cos() * (2.0 * p.c3).cos();
        Self {
            g1_re: cc - ss,
            g1_im: -0.25 * prod_sin2,
            g2: 4.0 * cc - 4.0 * ss - prod_cos2,
        }
    }

    pub fn distance_sq(&self, other: &MakhlinInvariants) -> f64 {
        (self.g1_re - other.g1_re).powi(2)
            + (self.g1_im - other.g1_im).powi(2)
            + (self.g2 - other.g2).powi(2)
    }
}

/// Makhlin invariants of an arbitrary two-qubit unitary.
pub fn makhlin_invariants(u: &Unitary4) -> MakhlinInvariants {
    invariants_of_matrix(u.matrix())
}

pub(crate) fn invariants_of_matrix(u: &Mat4) -> MakhlinInvariants {
    let ub = linalg::to_magic(u);
    let m = ub.transpose() * ub;
    let det = u.determinant();
    let tr = m.trace();
    let tr2 = (m * m).trace();
    let g1 = tr * tr / (det * 16.0);
    let g2 = (tr * tr - tr2) / (det * 4.0);
    MakhlinInvariants {
        g1_re: g1.re,
        g1_im: g1.im,
        g2: g2.re,
    }
}

/// Squared Euclidean distance between the invariants of `u` and `target`.
pub fn makhlin_loss(u: &Unitary4, target: &MakhlinInvariants) -> f64 {
    invariants_of_matrix(u.matrix()).distance_sq(target)
}

/// Eigenphases `λ` of `M = U_Bᵀ U_B` for the determinant-normalized gate,
/// arranged so that they sum to zero.
pub(crate) fn spectral_phases(u: &Mat4) -> [f64; 4] {
    let us = linalg::special_unitary(u);
    let ub = linalg::to_magic(&us);
    let m = ub.transpose() * ub;
    let (_, d) = linalg::diagonalize_symmetric_unitary(&m);
    let t1 = -d[0].arg();
    let t2 = -d[1].arg();
    let t3 = -d[2].arg();
    [t1, t2, t3, -t1 - t2 - t3]
}

/// Canonical coordinate of `u` inside the Weyl chamber.
pub fn canonical_coordinate(u: &Unitary4) -> WeylPoint {
    coordinate_of_matrix(u.matrix())
}

pub(crate) fn coordinate_of_matrix(u: &Mat4) -> WeylPoint {
    let t = spectral_phases(u);
    fold_coordinate([(t[0] + t[2]) / 2.0, (t[1] + t[2]) / 2.0, (t[0] + t[1]) / 2.0])
}

/// Maps any coordinate triple onto its representative in the chamber.
///
/// Uses the Weyl-group moves: shifts by π, pairwise sign flips and
/// permutations.
pub fn fold_coordinate(raw: [f64; 3]) -> WeylPoint {
    let mut f = [0.0; 3];
    let mut parity = 0;
    for j in 0..3 {
        let x = raw[j].rem_euclid(PI);
        let x = if PI - x < 1e-13 { 0.0 } else { x };
        if x > FRAC_PI_2 {
            parity ^= 1;
            f[j] = PI - x;
        } else {
            f[j] = x;
        }
    }
    f.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if f[2] < PLANE_TOL {
        parity = 0;
    }
    let c1 = if parity == 1 { PI - f[0] } else { f[0] };
    WeylPoint::new(c1, f[1], f[2].max(0.0))
}

/// `exp(-i/2 (c1 XX + c2 YY + c3 ZZ))`.
pub fn canonical_gate(p: WeylPoint) -> Unitary4 {
    let l = [
        p.c1 - p.c2 + p.c3,
        -p.c1 + p.c2 + p.c3,
        p.c1 + p.c2 - p.c3,
        -p.c1 - p.c2 - p.c3,
    ];
    let mut d = Mat4::zeros();
    for j in 0..4 {
        d[(j, j)] = C64::from_polar(1.0, -l[j] / 2.0);
    }
    Unitary4(linalg::from_magic(&d))
}

/// A pair of single-qubit gates applied in parallel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalGate {
    pub first: Mat2,
    pub second: Mat2,
}

impl LocalGate {
    pub fn new(first: Mat2, second: Mat2) -> Self {
        Self { first, second }
    }

    pub fn identity() -> Self {
        Self::new(Mat2::identity(), Mat2::identity())
    }

    pub fn matrix(&self) -> Mat4 {
        kron(&self.first, &self.second)
    }

    pub fn unitary(&self) -> Unitary4 {
        Unitary4(self.matrix())
    }
}

/// Single-qubit layers placing one gate onto another locally equivalent gate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalDressing {
    pub before: LocalGate,
    pub after: LocalGate,
}

impl LocalDressing {
    /// `after · source · before`.
    pub fn apply(&self, source: &Mat4) -> Mat4 {
        self.after.matrix() * source * self.before.matrix()
    }
}

/// Finds local layers with `target ≅ after · source · before` up to phase.
///
/// Both gates are split as `O₁ D O₂` in the magic basis; the diagonal parts
/// are matched over all orderings and the four admissible global phases.
/// Returns the dressing and the spectral distance it leaves, which is
/// tiny exactly when the two gates are locally equivalent.
pub fn match_locally(target: &Mat4, source: &Mat4) -> (LocalDressing, f64) {
    let u = linalg::to_magic(&linalg::special_unitary(target));
    let v = linalg::to_magic(&linalg::special_unitary(source));
    let (pu, lu) = linalg::diagonalize_symmetric_unitary(&(u.transpose() * u));
    let (pv, lv) = linalg::diagonalize_symmetric_unitary(&(v.transpose() * v));
    let mut dv: [C64; 4] = lv.map(|z| z.sqrt());
    if (dv[0] * dv[1] * dv[2] * dv[3]).re < 0.0 {
        dv[0] = -dv[0];
    }
    let pvc = pv.map(|x| c(x, 0.0));
    let puc = pu.map(|x| c(x, 0.0));
    let q1 = v * pvc * Mat4::from_diagonal(&dv.map(|z| z.inv()).into());
    let omegas = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
    let mut best: Option<(f64, [usize; 4], C64)> = None;
    for perm in permutations4() {
        for &w in &omegas {
            let err: f64 = (0..4).map(|i| (w * w * lv[perm[i]] - lu[i]).norm_sqr()).sum();
            if best.as_ref().is_none_or(|b| err < b.0) {
                best = Some((err, perm, w));
            }
        }
    }
    let (_, perm, w) = best.expect("24 orderings tried");
    let du: [C64; 4] = std::array::from_fn(|i| w * dv[perm[i]]);
    let o1 = u * puc * Mat4::from_diagonal(&du.map(|z| z.inv()).into());
    let mut pi = Mat4::zeros();
    for i in 0..4 {
        pi[(i, perm[i])] = c(1.0, 0.0);
    }
    if pi.determinant().re < 0.0 {
        for j in 0..4 {
            pi[(0, j)] = -pi[(0, j)];
        }
    }
    let after = linalg::from_magic(&(o1 * pi * q1.transpose()));
    let before = linalg::from_magic(&(pvc * pi.transpose() * puc.transpose()));
    let (a1, b1, _) = linalg::decompose_product(&after);
    let (a2, b2, _) = linalg::decompose_product(&before);
    let dressing = LocalDressing {
        before: LocalGate::new(a2, b2),
        after: LocalGate::new(a1, b1),
    };
    let residual = linalg::phase_insensitive_distance(target, &dressing.apply(source));
    (dressing, residual)
}

fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    let mut seen = [false; 4];
                    p.iter().for_each(|&i| seen[i] = true);
                    if seen.iter().all(|&s| s) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

/// Haar-random element of U(4) (QR of a complex Ginibre matrix).
pub fn haar_random_unitary<R: Rng + ?Sized>(rng: &mut R) -> Unitary4 {
    let mut z = Mat4::zeros();
    for v in z.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v = c(re, im) * std::f64::consts::FRAC_1_SQRT_2;
    }
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..4 {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..4 {
            q[(i, j)] *= ph;
        }
    }
    Unitary4(q)
}

/// Haar-random element of SU(2).
pub fn haar_random_su2<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    let (a, b, g) = haar_euler_angles(rng);
    linalg::zyz(a, b, g)
}

/// ZYZ Euler angles distributed so that `zyz(a, b, g)` is Haar on SU(2).
pub fn haar_euler_angles<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64, f64) {
    let a = rng.random::<f64>() * 2.0 * PI;
    let g = rng.random::<f64>() * 2.0 * PI;
    let u: f64 = rng.random();
    let b = (1.0 - 2.0 * u).clamp(-1.0, 1.0).acos();
    (a, b, g)
}

pub fn haar_random_local<R: Rng + ?Sized>(rng: &mut R) -> LocalGate {
    LocalGate::new(haar_random_su2(rng), haar_random_su2(rng))
}

//! Small fixed-size complex linear algebra shared by the rest of the crate.

use nalgebra::{Complex, Matrix2, Matrix4, SymmetricEigen};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub type C64 = Complex<f64>;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;

#[inline]
pub(crate) const fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub(crate) const ZERO: C64 = c(0.0, 0.0);
pub(crate) const ONE: C64 = c(1.0, 0.0);
pub(crate) const I: C64 = c(0.0, 1.0);

pub fn pauli_x() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

pub fn pauli_y() -> Mat2 {
    Mat2::new(ZERO, -I, I, ZERO)
}

pub fn pauli_z() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, -ONE)
}

/// Kronecker product; `a` acts on the first (most significant) qubit.
pub fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut out = Mat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Columns are the magic-basis states; in this basis local gates are real orthogonal.
pub fn magic_basis() -> Mat4 {
    let s = FRAC_1_SQRT_2;
    Mat4::new(
        c(s, 0.0),
        c(0.0, s),
        ZERO,
        ZERO,
        ZERO,
        ZERO,
        c(0.0, s),
        c(s, 0.0),
        ZERO,
        ZERO,
        c(0.0, s),
        c(-s, 0.0),
        c(s, 0.0),
        c(0.0, -s),
        ZERO,
        ZERO,
    )
}

pub fn to_magic(u: &Mat4) -> Mat4 {
    let b = magic_basis();
    b.adjoint() * u * b
}

pub fn from_magic(m: &Mat4) -> Mat4 {
    let b = magic_basis();
    b * m * b.adjoint()
}

/// Frobenius norm of `U U† - I`.
pub fn unitarity_error(u: &Mat4) -> f64 {
    (u * u.adjoint() - Mat4::identity()).norm()
}

pub fn hermiticity_error(h: &Mat4) -> f64 {
    (h - h.adjoint()).norm()
}

/// `exp(-i H t)` for Hermitian `H` through its eigendecomposition.
pub fn expm_hermitian(h: &Mat4, t: f64) -> Mat4 {
    let eig = SymmetricEigen::new(*h);
    let v = eig.eigenvectors;
    let mut d = Mat4::zeros();
    for j in 0..4 {
        d[(j, j)] = C64::from_polar(1.0, -eig.eigenvalues[j] * t);
    }
    v * d * v.adjoint()
}

/// Divides out `det(U)^{1/4}` (principal branch) so the result has unit determinant.
pub fn special_unitary(u: &Mat4) -> Mat4 {
    let det = u.determinant();
    u * C64::from_polar(1.0, -det.arg() / 4.0)
}

/// Diagonalizes a complex symmetric unitary `m` with a real orthogonal matrix.
///
/// Returns `(p, d)` with `pᵀ m p = diag(d)` and `det(p) = +1`. The real and
/// imaginary parts of such a matrix commute, so a random real combination of
/// them shares their eigenvectors; a few deterministic mixtures are tried in
/// case one of them happens to be degenerate where `m` is not.
pub fn diagonalize_symmetric_unitary(m: &Mat4) -> (Matrix4<f64>, [C64; 4]) {
    let re = m.map(|z| z.re);
    let im = m.map(|z| z.im);
    const MIX: [(f64, f64); 6] = [
        (0.7147218760, 0.6994076518),
        (0.3961537428, 0.9181789631),
        (0.9479837421, 0.3183106219),
        (0.1209847239, 0.9926544412),
        (0.8333417713, 0.5527569904),
        (0.5560283361, 0.8311634512),
    ];
    let mut best: Option<(f64, Matrix4<f64>, [C64; 4])> = None;
    for &(a, b) in MIX.iter() {
        let mixed = re * a + im * b;
        let sym = (mixed + mixed.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let mut p = eig.eigenvectors;
        if p.determinant() < 0.0 {
            for r in 0..4 {
                p[(r, 0)] = -p[(r, 0)];
            }
        }
        let pc = p.map(|x| c(x, 0.0));
        let dm = pc.transpose() * m * pc;
        let mut d = [ZERO; 4];
        let mut off = 0.0;
        for i in 0..4 {
            d[i] = dm[(i, i)];
            for j in 0..4 {
                if i != j {
                    off += dm[(i, j)].norm_sqr();
                }
            }
        }
        if off < 1e-26 {
            return (p, d);
        }
        if best.as_ref().is_none_or(|(o, _, _)| off < *o) {
            best = Some((off, p, d));
        }
    }
    let (_, p, d) = best.expect("at least one mixture tried");
    (p, d)
}

/// Splits a 4x4 matrix that is (up to phase) a tensor product into `a ⊗ b`.
///
/// Both factors are returned in SU(2) along with the global phase so that
/// `u ≈ e^{iφ} a ⊗ b`.
pub fn decompose_product(u: &Mat4) -> (Mat2, Mat2, f64) {
    // Pick the 2x2 sub-block with the largest norm to read off `b`.
    let mut best = (0, 0, -1.0);
    for i in 0..2 {
        for j in 0..2 {
            let n: f64 = (0..2)
                .flat_map(|k| (0..2).map(move |l| (k, l)))
                .map(|(k, l)| u[(2 * i + k, 2 * j + l)].norm_sqr())
                .sum();
            if n > best.2 {
                best = (i, j, n);
            }
        }
    }
    let (bi, bj, _) = best;
    let mut b = Mat2::zeros();
    for k in 0..2 {
        for l in 0..2 {
            b[(k, l)] = u[(2 * bi + k, 2 * bj + l)];
        }
    }
    let b = to_su2(&b);
    let mut a = Mat2::zeros();
    let bd = b.adjoint();
    for i in 0..2 {
        for j in 0..2 {
            let mut blk = Mat2::zeros();
            for k in 0..2 {
                for l in 0..2 {
                    blk[(k, l)] = u[(2 * i + k, 2 * j + l)];
                }
            }
            a[(i, j)] = (blk * bd).trace() / 2.0;
        }
    }
    let det = a.determinant();
    let phase = det.arg() / 2.0;
    let a = a * C64::from_polar(1.0 / det.norm().sqrt(), -phase);
    (a, b, phase)
}

/// Rescales a matrix proportional to an SU(2) element onto SU(2).
pub fn to_su2(m: &Mat2) -> Mat2 {
    let det = m.determinant();
    m * C64::from_polar(1.0 / det.norm().sqrt(), -det.arg() / 2.0)
}

/// Spectral norm of `u - e^{iφ} v` with `φ = arg tr(v† u)`.
///
/// The phase is the Frobenius-optimal one, so the value is an upper bound
/// on the phase-minimized spectral distance.
pub fn phase_insensitive_distance(u: &Mat4, v: &Mat4) -> f64 {
    let phase = (v.adjoint() * u).trace().arg();
    let diff = u - v * C64::from_polar(1.0, phase);
    spectral_norm(&diff)
}

pub fn spectral_norm(m: &Mat4) -> f64 {
    let g = m.adjoint() * m;
    let eig = SymmetricEigen::new(g);
    eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max).max(0.0).sqrt()
}

pub fn phase_insensitive_distance2(u: &Mat2, v: &Mat2) -> f64 {
    let phase = (v.adjoint() * u).trace().arg();
    (u - v * C64::from_polar(1.0, phase)).norm()
}

pub fn rz(theta: f64) -> Mat2 {
    Mat2::new(
        C64::from_polar(1.0, -theta / 2.0),
        ZERO,
        ZERO,
        C64::from_polar(1.0, theta / 2.0),
    )
}

pub fn ry(theta: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    Mat2::new(c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0))
}

pub fn rx(theta: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    Mat2::new(c(co, 0.0), c(0.0, -s), c(0.0, -s), c(co, 0.0))
}

/// `Rz(a) Ry(b) Rz(g)`.
pub fn zyz(a: f64, b: f64, g: f64) -> Mat2 {
    let (s, co) = (b / 2.0).sin_cos();
    let p = (a + g) / 2.0;
    let m = (a - g) / 2.0;
    Mat2::new(
        C64::from_polar(co, -p),
        C64::from_polar(-s, -m),
        C64::from_polar(s, m),
        C64::from_polar(co, p),
    )
}

/// `u3(θ, φ, λ)` in the usual circuit-library convention.
pub fn u3(theta: f64, phi: f64, lam: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    Mat2::new(
        c(co, 0.0),
        -C64::from_polar(s, lam),
        C64::from_polar(s, phi),
        C64::from_polar(co, phi + lam),
    )
}

/// Angles `(θ, φ, λ)` with `u3(θ, φ, λ) ≅ u` up to global phase.
pub fn u3_angles(u: &Mat2) -> (f64, f64, f64) {
    let su = to_su2(u);
    let a = su[(0, 0)];
    let b = su[(1, 0)];
    let theta = 2.0 * b.norm().atan2(a.norm());
    let (phi, lam) = if b.norm() < 1e-14 {
        (0.0, 2.0 * (su[(1, 1)].arg()))
    } else if a.norm() < 1e-14 {
        (2.0 * b.arg(), 0.0)
    } else {
        // su = e^{iδ} u3 with δ = -(φ+λ)/2.
        let sum = 2.0 * su[(1, 1)].arg();
        let diff = 2.0 * b.arg();
        ((sum + diff) / 2.0, (sum - diff) / 2.0)
    };
    (wrap_angle(theta), wrap_angle(phi), wrap_angle(lam))
}

/// Maps an angle into `(-π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

pub fn is_identity_up_to_phase2(u: &Mat2, tol: f64) -> bool {
    phase_insensitive_distance2(u, &Mat2::identity()) < tol
}

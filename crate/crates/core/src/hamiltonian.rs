//! Conversion/gain coupler Hamiltonian with optional parallel single-qubit drives.

use crate::error::{Error, Result};
use crate::linalg::{self, c, Mat4, C64};
use crate::weyl::Unitary4;
use serde::{Deserialize, Serialize};

/// Coupler pulse with constant conversion and gain strengths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConversionGainParams {
    pub g_c: f64,
    pub g_g: f64,
    pub phi_c: f64,
    pub phi_g: f64,
    /// Pulse length in normalized time units.
    pub duration: f64,
}

impl ConversionGainParams {
    pub fn new(g_c: f64, g_g: f64, duration: f64) -> Self {
        Self {
            g_c,
            g_g,
            phi_c: 0.0,
            phi_g: 0.0,
            duration,
        }
    }

    pub fn with_phases(mut self, phi_c: f64, phi_g: f64) -> Self {
        self.phi_c = phi_c;
        self.phi_g = phi_g;
        self
    }

    /// Accumulated conversion angle `g_c · t`.
    pub fn conversion_angle(&self) -> f64 {
        self.g_c * self.duration
    }

    /// Accumulated gain angle `g_g · t`.
    pub fn gain_angle(&self) -> f64 {
        self.g_g * self.duration
    }
}

/// Coupler pulse with piecewise-constant drives `ε1 X⊗I + ε2 I⊗X`.
///
/// The pulse is split into `eps1.len()` equal steps; step `j` uses `eps1[j]`
/// and `eps2[j]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParallelDriveParams {
    pub pulse: ConversionGainParams,
    pub eps1: Vec<f64>,
    pub eps2: Vec<f64>,
}

impl ParallelDriveParams {
    pub fn new(pulse: ConversionGainParams, eps1: Vec<f64>, eps2: Vec<f64>) -> Result<Self> {
        if eps1.is_empty() {
            return Err(Error::EmptyInput("drive schedule"));
        }
        if eps1.len() != eps2.len() {
            return Err(Error::DimensionMismatch {
                expected: eps1.len(),
                got: eps2.len(),
            });
        }
        Ok(Self { pulse, eps1, eps2 })
    }

    /// Same drive amplitude on every step.
    pub fn constant(pulse: ConversionGainParams, eps1: f64, eps2: f64, n_steps: usize) -> Self {
        Self {
            pulse,
            eps1: vec![eps1; n_steps.max(1)],
            eps2: vec![eps2; n_steps.max(1)],
        }
    }

    pub fn n_steps(&self) -> usize {
        self.eps1.len()
    }
}

/// Hamiltonian matrix for one piecewise-constant step.
pub fn hamiltonian(p: &ConversionGainParams, eps1: f64, eps2: f64) -> Mat4 {
    let mut h = Mat4::zeros();
    let conv = C64::from_polar(p.g_c, p.phi_c);
    let gain = C64::from_polar(p.g_g, p.phi_g);
    h[(2, 1)] = conv;
    h[(1, 2)] = conv.conj();
    h[(0, 3)] = gain;
    h[(3, 0)] = gain.conj();
    let e1 = c(eps1, 0.0);
    let e2 = c(eps2, 0.0);
    // ε1 X⊗I couples |0x> and |1x>; ε2 I⊗X couples |x0> and |x1>.
    h[(0, 2)] += e1;
    h[(2, 0)] += e1;
    h[(1, 3)] += e1;
    h[(3, 1)] += e1;
    h[(0, 1)] += e2;
    h[(1, 0)] += e2;
    h[(2, 3)] += e2;
    h[(3, 2)] += e2;
    h
}

/// Closed-form propagator of an undriven pulse.
///
/// The conversion term acts only on `{|01>, |10>}` and the gain term only on
/// `{|00>, |11>}`, so each block is a 2x2 rotation.
pub fn conversion_gain_unitary(p: &ConversionGainParams) -> Unitary4 {
    Unitary4::from_trusted(conversion_gain_matrix(p))
}

pub(crate) fn conversion_gain_matrix(p: &ConversionGainParams) -> Mat4 {
    let (sc, cc) = (p.g_c * p.duration).sin_cos();
    let (sg, cg) = (p.g_g * p.duration).sin_cos();
    let mut u = Mat4::zeros();
    u[(1, 1)] = c(cc, 0.0);
    u[(2, 2)] = c(cc, 0.0);
    // -i sin θ (cos φ X + sin φ Y) on the conversion block.
    u[(1, 2)] = c(0.0, -sc) * C64::from_polar(1.0, -p.phi_c);
    u[(2, 1)] = c(0.0, -sc) * C64::from_polar(1.0, p.phi_c);
    u[(0, 0)] = c(cg, 0.0);
    u[(3, 3)] = c(cg, 0.0);
    u[(0, 3)] = c(0.0, -sg) * C64::from_polar(1.0, p.phi_g);
    u[(3, 0)] = c(0.0, -sg) * C64::from_polar(1.0, -p.phi_g);
    u
}

/// Time-ordered propagator of a driven pulse (first step applied first).
pub fn parallel_drive_unitary(p: &ParallelDriveParams) -> Result<Unitary4> {
    if p.eps1.is_empty() {
        return Err(Error::EmptyInput("drive schedule"));
    }
    if p.eps1.len() != p.eps2.len() {
        return Err(Error::DimensionMismatch {
            expected: p.eps1.len(),
            got: p.eps2.len(),
        });
    }
    let h0 = hamiltonian(&p.pulse, 0.0, 0.0);
    let dev = linalg::hermiticity_error(&h0);
    if dev > 1e-10 || !dev.is_finite() {
        return Err(Error::NonHermitianInput { deviation: dev });
    }
    Ok(Unitary4::from_trusted(parallel_drive_matrix(
        &p.pulse, &p.eps1, &p.eps2,
    )))
}

pub(crate) fn parallel_drive_matrix(p: &ConversionGainParams, eps1: &[f64], eps2: &[f64]) -> Mat4 {
    let n = eps1.len();
    let dt = p.duration / n as f64;
    let mut u = Mat4::identity();
    for j in 0..n {
        let h = hamiltonian(p, eps1[j], eps2[j]);
        u = linalg::expm_hermitian(&h, dt) * u;
    }
    u
}

/// Ratio of gain to conversion strength.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DriveRatio {
    Finite(f64),
    /// Pure gain (`g_c = 0`).
    Infinite,
}

pub fn drive_ratio(g_c: f64, g_g: f64) -> Result<DriveRatio> {
    if g_c < 0.0 || g_g < 0.0 || !g_c.is_finite() || !g_g.is_finite() {
        return Err(Error::InvalidSpeedLimit(format!(
            "strengths must be finite and non-negative, got ({g_c}, {g_g})"
        )));
    }
    if g_c == 0.0 && g_g == 0.0 {
        return Err(Error::BothZero);
    }
    if g_c == 0.0 {
        Ok(DriveRatio::Infinite)
    } else {
        Ok(DriveRatio::Finite(g_g / g_c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn closed_form_matches_expm() {
        let p = ConversionGainParams::new(0.7, 0.3, 1.3).with_phases(0.4, -1.1);
        let h = hamiltonian(&p, 0.0, 0.0);
        let num = linalg::expm_hermitian(&h, p.duration);
        assert!((num - conversion_gain_matrix(&p)).norm() < 1e-12);
    }

    #[test]
    fn iswap_matrix() {
        let u = conversion_gain_matrix(&ConversionGainParams::new(FRAC_PI_2, 0.0, 1.0));
        assert!((u[(1, 2)] - c(0.0, -1.0)).norm() < 1e-12);
        assert!((u[(2, 1)] - c(0.0, -1.0)).norm() < 1e-12);
        assert!((u[(0, 0)] - c(1.0, 0.0)).norm() < 1e-12);
    }
}

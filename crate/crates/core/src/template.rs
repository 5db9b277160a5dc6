//! Basis gates and parametrized templates built from repeated basis pulses.

use crate::error::{Error, Result};
use crate::hamiltonian::{self, ConversionGainParams};
use crate::linalg::{self, kron, Mat4};
use crate::speedlimit::{min_time, SpeedLimit};
use crate::weyl::{self, haar_euler_angles, LocalGate, Unitary4, WeylPoint};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI};

/// A calibrated coupler pulse: the strengths sit on the speed-limit boundary
/// and the duration is the shortest one producing the requested angles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisGate {
    pub name: String,
    pub pulse: ConversionGainParams,
}

impl BasisGate {
    /// Basis gate accumulating conversion angle `theta_c` and gain angle
    /// `theta_g`, run as fast as `limit` allows.
    pub fn from_angles(name: &str, theta_c: f64, theta_g: f64, limit: &SpeedLimit) -> Result<Self> {
        let t = min_time(limit, theta_c, theta_g)?;
        Ok(Self {
            name: name.to_string(),
            pulse: ConversionGainParams::new(theta_c / t, theta_g / t, t),
        })
    }

    pub fn theta_c(&self) -> f64 {
        self.pulse.conversion_angle()
    }

    pub fn theta_g(&self) -> f64 {
        self.pulse.gain_angle()
    }

    /// Pulse length in normalized units (an iSWAP at the speed limit takes 1).
    pub fn duration(&self) -> f64 {
        self.pulse.duration
    }

    pub fn unitary(&self) -> Unitary4 {
        hamiltonian::conversion_gain_unitary(&self.pulse)
    }

    pub fn coordinate(&self) -> WeylPoint {
        weyl::canonical_coordinate(&self.unitary())
    }

    /// The same pulse applied for a fraction of its duration.
    pub fn scaled(&self, name: &str, fraction: f64) -> Self {
        let mut pulse = self.pulse;
        pulse.duration *= fraction;
        Self {
            name: name.to_string(),
            pulse,
        }
    }
}

/// The six bases compared throughout: iSWAP, CNOT and B families with
/// their square roots.
pub fn standard_bases(limit: &SpeedLimit) -> Result<Vec<BasisGate>> {
    let limit = limit.normalized();
    let defs: [(&str, f64, f64); 6] = [
        ("iSWAP", FRAC_PI_2, 0.0),
        ("sqrt_iSWAP", FRAC_PI_4, 0.0),
        ("CNOT", FRAC_PI_4, FRAC_PI_4),
        ("sqrt_CNOT", FRAC_PI_8, FRAC_PI_8),
        ("B", 3.0 * FRAC_PI_8, FRAC_PI_8),
        ("sqrt_B", 3.0 * PI / 16.0, PI / 16.0),
    ];
    defs.iter()
        .map(|&(n, c, g)| BasisGate::from_angles(n, c, g, &limit))
        .collect()
}

pub fn standard_basis(name: &str, limit: &SpeedLimit) -> Result<BasisGate> {
    standard_bases(limit)?
        .into_iter()
        .find(|b| b.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::UnknownBasis(name.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateBlock {
    pub basis: BasisGate,
    pub parallel: bool,
}

/// `B_k · L_{k-1} · … · L_1 · B_1`: basis pulses separated by single-qubit
/// layers. Exterior layers are omitted since they never change the
/// canonical coordinate.
///
/// Parameter layout, block by block: the six ZYZ angles of the layer in
/// front of the block (absent for the first block), then for driven blocks
/// `φ_c, φ_g`, the `n_steps` values of `ε1` and the `n_steps` values of `ε2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Template {
    pub blocks: Vec<TemplateBlock>,
    pub n_steps: usize,
}

/// A driven or undriven pulse as it appears in a realized template.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizedPulse {
    pub pulse: ConversionGainParams,
    pub eps1: Vec<f64>,
    pub eps2: Vec<f64>,
}

impl RealizedPulse {
    pub fn matrix(&self) -> Mat4 {
        if self.eps1.is_empty() {
            hamiltonian::conversion_gain_matrix(&self.pulse)
        } else {
            hamiltonian::parallel_drive_matrix(&self.pulse, &self.eps1, &self.eps2)
        }
    }
}

impl Template {
    pub fn repeated(basis: &BasisGate, k: usize, parallel: bool, n_steps: usize) -> Self {
        Self {
            blocks: (0..k)
                .map(|_| TemplateBlock {
                    basis: basis.clone(),
                    parallel,
                })
                .collect(),
            n_steps: n_steps.max(1),
        }
    }

    pub fn from_blocks(blocks: Vec<TemplateBlock>, n_steps: usize) -> Self {
        Self {
            blocks,
            n_steps: n_steps.max(1),
        }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    fn drive_params(&self, b: &TemplateBlock) -> usize {
        if b.parallel {
            2 + 2 * self.n_steps
        } else {
            0
        }
    }

    pub fn param_count(&self) -> usize {
        self.blocks
            .iter()
            .enumerate()
            .map(|(i, b)| if i > 0 { 6 } else { 0 } + self.drive_params(b))
            .sum()
    }

    /// Total two-qubit pulse time.
    pub fn duration(&self) -> f64 {
        self.blocks.iter().map(|b| b.basis.duration()).sum()
    }

    /// Interior single-qubit layers and pulses encoded by `params`.
    pub fn realize(&self, params: &[f64]) -> Result<(Vec<RealizedPulse>, Vec<LocalGate>)> {
        self.check_len(params)?;
        let mut pulses = Vec::with_capacity(self.blocks.len());
        let mut layers = Vec::with_capacity(self.blocks.len().saturating_sub(1));
        let mut at = 0;
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                let p = &params[at..at + 6];
                layers.push(LocalGate::new(
                    linalg::zyz(p[0], p[1], p[2]),
                    linalg::zyz(p[3], p[4], p[5]),
                ));
                at += 6;
            }
            let mut pulse = b.basis.pulse;
            if b.parallel {
                let n = self.n_steps;
                pulse.phi_c = params[at];
                pulse.phi_g = params[at + 1];
                pulses.push(RealizedPulse {
                    pulse,
                    eps1: params[at + 2..at + 2 + n].to_vec(),
                    eps2: params[at + 2 + n..at + 2 + 2 * n].to_vec(),
                });
                at += 2 + 2 * n;
            } else {
                pulses.push(RealizedPulse {
                    pulse,
                    eps1: Vec::new(),
                    eps2: Vec::new(),
                });
            }
        }
        Ok((pulses, layers))
    }

    fn check_len(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        Ok(())
    }

    pub fn unitary(&self, params: &[f64]) -> Result<Unitary4> {
        if self.blocks.is_empty() {
            return Err(Error::EmptyInput("template"));
        }
        self.check_len(params)?;
        Ok(Unitary4::from_trusted(self.evaluator().matrix(params)))
    }

    pub fn coordinate(&self, params: &[f64]) -> Result<WeylPoint> {
        Ok(weyl::canonical_coordinate(&self.unitary(params)?))
    }

    /// Uniform drives and phases, Haar-distributed single-qubit layers.
    pub fn random_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                for _ in 0..2 {
                    let (a, be, g) = haar_euler_angles(rng);
                    out.extend_from_slice(&[a, be, g]);
                }
            }
            for _ in 0..self.drive_params(b) {
                out.push(rng.random::<f64>() * 2.0 * PI);
            }
        }
        out
    }

    /// Evaluator that caches the fixed (undriven) pulse matrices.
    pub fn evaluator(&self) -> TemplateEvaluator<'_> {
        let fixed = self
            .blocks
            .iter()
            .map(|b| {
                if b.parallel {
                    None
                } else {
                    Some(hamiltonian::conversion_gain_matrix(&b.basis.pulse))
                }
            })
            .collect();
        TemplateEvaluator {
            template: self,
            fixed,
        }
    }
}

pub struct TemplateEvaluator<'a> {
    template: &'a Template,
    fixed: Vec<Option<Mat4>>,
}

impl TemplateEvaluator<'_> {
    /// Template unitary; `params` must have the template's length.
    pub fn matrix(&self, params: &[f64]) -> Mat4 {
        let t = self.template;
        let n = t.n_steps;
        let mut u = Mat4::identity();
        let mut at = 0;
        for (i, b) in t.blocks.iter().enumerate() {
            if i > 0 {
                let p = &params[at..at + 6];
                let layer = kron(&linalg::zyz(p[0], p[1], p[2]), &linalg::zyz(p[3], p[4], p[5]));
                u = layer * u;
                at += 6;
            }
            let blk = match &self.fixed[i] {
                Some(m) => *m,
                None => {
                    let mut pulse = b.basis.pulse;
                    pulse.phi_c = params[at];
                    pulse.phi_g = params[at + 1];
                    let m = hamiltonian::parallel_drive_matrix(
                        &pulse,
                        &params[at + 2..at + 2 + n],
                        &params[at + 2 + n..at + 2 + 2 * n],
                    );
                    at += 2 + 2 * n;
                    m
                }
            };
            u = blk * u;
        }
        u
    }
}

/// Coordinate reached by `k` applications of `basis` with the given parameters.
pub fn template_coordinate(
    basis: &BasisGate,
    k: usize,
    params: &[f64],
    parallel: bool,
    n_steps: usize,
) -> Result<WeylPoint> {
    if k == 0 {
        return Err(Error::EmptyInput("template"));
    }
    Template::repeated(basis, k, parallel, n_steps).coordinate(params)
}

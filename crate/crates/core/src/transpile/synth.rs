//! Two-qubit synthesis onto conversion/gain pulses.

use super::circuit::{Gate, GateOp};
use crate::coverage::{derive_seed, polish_coordinate, CornerTarget, CoverageSet, JointCoverage, JointSource};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat2, Mat4};
use crate::optimize::{nelder_mead_restarting, OptimizerConfig};
use crate::template::{BasisGate, RealizedPulse, Template};
use crate::weyl::{self, LocalGate, MakhlinInvariants, WeylPoint};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Coordinates closer than this to a named class are treated as that class.
pub const CLASS_TOL: f64 = 1e-7;
/// Largest accepted spectral distance between a block and its synthesis.
pub const SYNTHESIS_TOL: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Undriven fractional-iSWAP templates with a full single-qubit layer
    /// between pulses.
    Baseline,
    /// Joint full/fractional coverage with parallel drives.
    Optimized,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    pub restarts: usize,
    pub optimizer: OptimizerConfig,
    /// Makhlin loss at which a fit counts as converged.
    pub accept_loss: f64,
    /// Iteration budget of the coordinate polish.
    pub polish_iters: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            restarts: 8,
            optimizer: OptimizerConfig {
                max_iters: 4000,
                loss_tol: 1e-22,
                ..OptimizerConfig::default()
            },
            accept_loss: 1e-8,
            polish_iters: 4000,
        }
    }
}

/// One element of a synthesized block, in time order.
#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    Pulse(RealizedPulse),
    Layer(LocalGate),
}

/// How a Weyl class is realized, up to the exterior single-qubit layers.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassPlan {
    pub steps: Vec<Step>,
    /// Human-readable origin, e.g. `iSWAP x1 driven`.
    pub source: String,
}

impl ClassPlan {
    fn local() -> Self {
        Self {
            steps: Vec::new(),
            source: "local".into(),
        }
    }

    pub fn matrix(&self) -> Mat4 {
        self.steps.iter().fold(Mat4::identity(), |u, s| match s {
            Step::Pulse(p) => p.matrix() * u,
            Step::Layer(l) => l.matrix() * u,
        })
    }

    pub fn pulse_time(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| match s {
                Step::Pulse(p) => p.pulse.duration,
                Step::Layer(_) => 0.0,
            })
            .sum()
    }

    fn from_template(template: &Template, params: &[f64], source: String) -> Result<Self> {
        let (pulses, layers) = template.realize(params)?;
        let mut steps = Vec::with_capacity(pulses.len() + layers.len());
        for (i, p) in pulses.into_iter().enumerate() {
            if i > 0 {
                steps.push(Step::Layer(layers[i - 1]));
            }
            steps.push(Step::Pulse(p));
        }
        Ok(Self { steps, source })
    }
}

struct Candidate {
    template: Template,
    starts: Vec<Vec<f64>>,
    source: String,
}

/// Decomposes two-qubit unitaries into calibrated pulses and single-qubit gates.
pub struct Synthesizer {
    pub strategy: Strategy,
    /// Single-qubit layer duration in pulse units.
    pub d1q: f64,
    pub fit: FitConfig,
    joint: Option<JointCoverage>,
    undriven: CoverageSet,
}

impl Synthesizer {
    /// Undriven synthesis from `undriven`, the coverage of a fractional iSWAP.
    pub fn baseline(undriven: CoverageSet, d1q: f64) -> Result<Self> {
        check_iswap_family(&undriven.basis)?;
        Ok(Self {
            strategy: Strategy::Baseline,
            d1q,
            fit: FitConfig::default(),
            joint: None,
            undriven,
        })
    }

    /// Driven synthesis from `joint`, falling back to `undriven` templates.
    pub fn optimized(joint: JointCoverage, undriven: CoverageSet, d1q: f64) -> Result<Self> {
        check_iswap_family(&undriven.basis)?;
        check_iswap_family(&joint.fraction.basis)?;
        Ok(Self {
            strategy: Strategy::Optimized,
            d1q,
            fit: FitConfig::default(),
            joint: Some(joint),
            undriven,
        })
    }

    pub fn with_fit(mut self, fit: FitConfig) -> Self {
        self.fit = fit;
        self
    }

    fn fraction(&self) -> &BasisGate {
        &self.undriven.basis
    }

    fn n_steps(&self) -> usize {
        self.undriven.config.n_steps
    }

    /// Finds pulses and interior layers realizing the class of `p`.
    ///
    /// Candidates are tried cheapest first. Each start is fitted on the
    /// Makhlin loss, then promising fits are polished on the coordinate
    /// distance and accepted once the class representative is matched to
    /// within a hundredth of [`SYNTHESIS_TOL`].
    pub fn plan_class(&self, p: WeylPoint, seed: u64) -> Result<ClassPlan> {
        if p.class_distance(WeylPoint::IDENTITY) < CLASS_TOL {
            return Ok(ClassPlan::local());
        }
        if let Some(copies) = self.fractional_copies(p) {
            let pulse = RealizedPulse {
                pulse: self.fraction().pulse,
                eps1: Vec::new(),
                eps2: Vec::new(),
            };
            return Ok(ClassPlan {
                steps: vec![Step::Pulse(pulse); copies],
                source: format!("{} x{} back to back", self.fraction().name, copies),
            });
        }
        let target = weyl::canonical_gate(p).into_matrix();
        let inv = MakhlinInvariants::of_point(p);
        let mut best = f64::INFINITY;
        for (ci, cand) in self.candidates(p).into_iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[ci as u64]));
            let mut starts = cand.starts;
            while starts.len() < self.fit.restarts {
                starts.push(cand.template.random_params(&mut rng));
            }
            let eval = cand.template.evaluator();
            let mut cand_best = f64::INFINITY;
            for x0 in &starts {
                let r = nelder_mead_restarting(
                    |x| weyl::makhlin_loss(&weyl::Unitary4::from_trusted(eval.matrix(x)), &inv),
                    x0,
                    &self.fit.optimizer,
                )?;
                cand_best = cand_best.min(r.loss);
                if r.loss > self.fit.accept_loss {
                    continue;
                }
                let (x, _) = polish_coordinate(&eval, p, &r.x, self.fit.polish_iters)?;
                let plan = ClassPlan::from_template(&cand.template, &x, cand.source.clone())?;
                let (_, residual) = weyl::match_locally(&target, &plan.matrix());
                if residual < SYNTHESIS_TOL * 1e-2 {
                    check_resource_floor(p, plan.pulse_time())?;
                    log::debug!("{p:?} via {} (residual {residual:.1e})", plan.source);
                    return Ok(plan);
                }
            }
            log::debug!("{p:?}: {} stalled at loss {cand_best:.2e}", cand.source);
            best = best.min(cand_best);
        }
        Err(Error::SynthesisFailure {
            qubits: [0, 1],
            reason: format!("no template reached {p:?}; best Makhlin loss {best:.3e}"),
        })
    }

    /// Copies of the fractional pulse whose product already is `p`.
    fn fractional_copies(&self, p: WeylPoint) -> Option<usize> {
        let step = self.fraction().theta_c();
        (1..)
            .map(|m| (m, m as f64 * step))
            .take_while(|&(_, c)| c <= std::f64::consts::FRAC_PI_2 + 1e-12)
            .find(|&(_, c)| p.class_distance(WeylPoint::new(c, c, 0.0)) < CLASS_TOL)
            .map(|(m, _)| m)
    }

    fn candidates(&self, p: WeylPoint) -> Vec<Candidate> {
        let mut out = Vec::new();
        let n = self.n_steps();
        let corner = CornerTarget::matching(p);
        if let Some(joint) = &self.joint {
            for choice in joint.choices(p, self.d1q) {
                let (template, mut starts, source) = match choice.source {
                    JointSource::Full(k) => (
                        Template::repeated(&joint.full.basis, k, true, n),
                        Vec::new(),
                        format!("{} x{k} driven", joint.full.basis.name),
                    ),
                    JointSource::Fraction(k) => (
                        Template::repeated(&joint.fraction.basis, k, true, n),
                        Vec::new(),
                        format!("{} x{k} driven", joint.fraction.basis.name),
                    ),
                    JointSource::Rule(i) => {
                        let r = &joint.rules[i];
                        let names: Vec<&str> = r.template.blocks.iter().map(|b| b.basis.name.as_str()).collect();
                        (r.template.clone(), vec![r.params.clone()], format!("{} driven", names.join("+")))
                    }
                };
                if let Some(seed) = drive_seed(&template, corner) {
                    starts.insert(0, seed);
                }
                if template.n_steps > 1 && !matches!(choice.source, JointSource::Rule(_)) {
                    let constant = Template::from_blocks(template.blocks.clone(), 1);
                    let seeds = drive_seed(&constant, corner).into_iter().collect();
                    out.push(Candidate {
                        template: constant,
                        starts: seeds,
                        source: format!("{source}, constant drives"),
                    });
                }
                out.push(Candidate {
                    template,
                    starts,
                    source,
                });
            }
        }
        let k0 = match corner {
            Some(c) => self.undriven.levels.iter().find(|l| l.reached(c)).map(|l| l.k),
            None => self.undriven.min_k(p),
        }
        .unwrap_or(self.undriven.max_k());
        for k in k0..=k0 + 1 {
            out.push(Candidate {
                template: Template::repeated(self.fraction(), k, false, n),
                starts: Vec::new(),
                source: format!("{} x{k}", self.fraction().name),
            });
        }
        out
    }

    /// Synthesizes `target` on `wires`, returning ops in time order.
    pub fn decompose(&self, target: &Mat4, wires: [usize; 2], plan: &ClassPlan) -> Result<Vec<GateOp>> {
        let source = plan.matrix();
        let (dressing, residual) = weyl::match_locally(target, &source);
        if residual > SYNTHESIS_TOL {
            return Err(Error::SynthesisFailure {
                qubits: wires,
                reason: format!("synthesized block is {residual:.2e} from its target"),
            });
        }
        let mut ops = Vec::with_capacity(plan.steps.len() * 2 + 4);
        push_layer(&mut ops, &dressing.before, wires);
        for s in &plan.steps {
            match s {
                Step::Pulse(p) => ops.push(GateOp::new(Gate::Pulse(p.clone()), &wires)),
                Step::Layer(l) => push_layer(&mut ops, l, wires),
            }
        }
        push_layer(&mut ops, &dressing.after, wires);
        Ok(ops)
    }
}

fn push_layer(ops: &mut Vec<GateOp>, layer: &LocalGate, wires: [usize; 2]) {
    for (m, q) in [(&layer.first, wires[0]), (&layer.second, wires[1])] {
        ops.push(GateOp::new(u3_of(m), &[q]));
    }
}

pub(crate) fn u3_of(m: &Mat2) -> Gate {
    let (t, p, l) = linalg::u3_angles(m);
    Gate::U3(t, p, l)
}

/// Known good parallel-drive starting points for corner targets: a constant
/// drive of 3 on the first qubit turns a full iSWAP into a CNOT, and equal
/// drives of π on a full iSWAP lead into SWAP.
fn drive_seed(template: &Template, corner: Option<CornerTarget>) -> Option<Vec<f64>> {
    let n = template.n_steps;
    let first = template.blocks.first()?;
    if !first.parallel || (first.basis.theta_c() - std::f64::consts::FRAC_PI_2).abs() > 1e-9 {
        return None;
    }
    let (e1, e2) = match (corner?, template.len()) {
        (CornerTarget::Cnot, 1) => (3.0, 0.0),
        (CornerTarget::Swap, 2) => (std::f64::consts::PI, std::f64::consts::PI),
        _ => return None,
    };
    let mut x = vec![0.0, 0.0];
    x.extend(std::iter::repeat_n(e1, n));
    x.extend(std::iter::repeat_n(e2, n));
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let rest = template.random_params(&mut rng);
    x.extend_from_slice(&rest[x.len()..]);
    Some(x)
}

fn check_iswap_family(b: &BasisGate) -> Result<()> {
    if b.theta_g().abs() > 1e-12 || b.theta_c() <= 0.0 {
        return Err(Error::IncompatibleBases(format!(
            "`{}` is not a fractional iSWAP pulse",
            b.name
        )));
    }
    Ok(())
}

/// Smallest total pulse time able to reach `p`, per the chamber-wide bound
/// for conversion/gain pulses: CNOT needs a full iSWAP worth of pulse and
/// SWAP one and a half.
pub fn pulse_time_floor(p: WeylPoint) -> f64 {
    if p.class_distance(WeylPoint::SWAP) < CLASS_TOL {
        1.5
    } else if p.class_distance(WeylPoint::CNOT) < CLASS_TOL {
        1.0
    } else {
        0.0
    }
}

fn check_resource_floor(p: WeylPoint, pulse_time: f64) -> Result<()> {
    let floor = pulse_time_floor(p);
    if pulse_time < floor - 1e-9 {
        return Err(Error::SynthesisFailure {
            qubits: [0, 1],
            reason: format!("pulse time {pulse_time} below the floor {floor} for {p:?}"),
        });
    }
    Ok(())
}

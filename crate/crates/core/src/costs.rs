//! Gate-count and duration scores of basis gates over target distributions.

use crate::coverage::{haar_sample_points, CoverageBuilder, CoverageSet, JointCoverage};
use crate::error::{Error, Result};
use crate::speedlimit::{min_time, scaled_duration, SpeedLimit};
use crate::template::BasisGate;
use crate::weyl::WeylPoint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

/// Share of CNOT-like gates among CNOT- and SWAP-like gates in typical
/// benchmark circuits.
pub const DEFAULT_LAMBDA: f64 = 0.47;

const IDENTITY_TOL: f64 = 1e-9;

/// Cost of realizing one target, or an expectation of such costs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetScore {
    /// Basis applications (fractional for expectations).
    pub applications: f64,
    /// Total two-qubit pulse time.
    pub pulse_time: f64,
    /// Pulse time plus one single-qubit layer per gap and end.
    pub duration: f64,
}

impl TargetScore {
    pub fn new(applications: usize, pulse_time: f64, d1q: f64) -> Self {
        Self {
            applications: applications as f64,
            pulse_time,
            duration: pulse_time + (applications + 1) as f64 * d1q,
        }
    }

    fn scaled(self, w: f64) -> Self {
        Self {
            applications: self.applications * w,
            pulse_time: self.pulse_time * w,
            duration: self.duration * w,
        }
    }

    fn plus(self, o: Self) -> Self {
        Self {
            applications: self.applications + o.applications,
            pulse_time: self.pulse_time + o.pulse_time,
            duration: self.duration + o.duration,
        }
    }

    const ZERO: Self = Self {
        applications: 0.0,
        pulse_time: 0.0,
        duration: 0.0,
    };
}

/// Anything that can price the cheapest decomposition of a target.
pub trait CostModel: Sync {
    fn label(&self) -> String;
    /// Pulse time of one application of the (shortest) basis gate.
    fn basis_time(&self) -> f64;
    fn cost(&self, target: WeylPoint, d1q: f64) -> TargetScore;
}

/// A single basis gate priced through its coverage set.
#[derive(Clone, Copy, Debug)]
pub struct BasisCost<'a> {
    pub set: &'a CoverageSet,
    pub t_min: f64,
}

impl<'a> BasisCost<'a> {
    /// Prices `set`'s basis under `limit`. The coverage geometry does not
    /// depend on the speed limit, only the pulse time does.
    pub fn new(set: &'a CoverageSet, limit: &SpeedLimit) -> Result<Self> {
        if !set.complete {
            return Err(incomplete(set));
        }
        let t_min = min_time(&limit.normalized(), set.basis.theta_c(), set.basis.theta_g())?;
        Ok(Self { set, t_min })
    }

    /// Applications needed for `target`. Samples that slip between the
    /// hulls of a complete set are charged its top level.
    pub fn applications(&self, target: WeylPoint) -> usize {
        if target.class_distance(WeylPoint::IDENTITY) < IDENTITY_TOL {
            return 0;
        }
        self.set.min_k(target).unwrap_or(self.set.max_k())
    }
}

impl CostModel for BasisCost<'_> {
    fn label(&self) -> String {
        let b = &self.set.basis.name;
        if self.set.parallel {
            format!("{b} (driven)")
        } else {
            b.clone()
        }
    }

    fn basis_time(&self) -> f64 {
        self.t_min
    }

    fn cost(&self, target: WeylPoint, d1q: f64) -> TargetScore {
        let k = self.applications(target);
        TargetScore::new(k, k as f64 * self.t_min, d1q)
    }
}

impl CostModel for JointCoverage {
    fn label(&self) -> String {
        format!("{} + {} (driven)", self.fraction.basis.name, self.full.basis.name)
    }

    fn basis_time(&self) -> f64 {
        self.fraction.basis.duration()
    }

    fn cost(&self, target: WeylPoint, d1q: f64) -> TargetScore {
        if target.class_distance(WeylPoint::IDENTITY) < IDENTITY_TOL {
            return TargetScore::new(0, 0.0, d1q);
        }
        if let Some(c) = self.best(target, d1q) {
            return TargetScore::new(c.applications, c.pulse_time, d1q);
        }
        [&self.full, &self.fraction]
            .iter()
            .map(|s| {
                let k = s.max_k();
                TargetScore::new(k, k as f64 * s.basis.duration(), d1q)
            })
            .min_by(|a, b| a.duration.total_cmp(&b.duration))
            .expect("two candidates")
    }
}

fn incomplete(set: &CoverageSet) -> Error {
    Error::IncompleteCoverage {
        basis: set.basis.name.clone(),
        k_max: set.max_k(),
        detail: "top level does not cover the chamber".into(),
    }
}

/// Minimal number of applications of `set`'s basis reaching `target`.
pub fn k_cost(set: &CoverageSet, target: WeylPoint) -> Result<usize> {
    if !set.complete {
        return Err(incomplete(set));
    }
    if target.class_distance(WeylPoint::IDENTITY) < IDENTITY_TOL {
        return Ok(0);
    }
    set.min_k(target).ok_or_else(|| incomplete(set))
}

/// Duration of the cheapest template for `target` under `limit`.
pub fn d_cost(set: &CoverageSet, target: WeylPoint, limit: &SpeedLimit, d1q: f64) -> Result<f64> {
    let k = k_cost(set, target)?;
    let t = min_time(&limit.normalized(), set.basis.theta_c(), set.basis.theta_g())?;
    Ok(scaled_duration(k, t, d1q))
}

/// Distribution of target gates a basis is scored against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TargetDistribution {
    /// Weighted named targets; weights are normalized on use.
    Named(Vec<(WeylPoint, f64)>),
    /// `n` Haar-random gates.
    Haar(usize),
    /// `λ·CNOT + (1 − λ)·SWAP`.
    WLambda(f64),
}

impl TargetDistribution {
    /// Weighted target list; Haar draws use `seed`.
    pub fn targets(&self, seed: u64) -> Result<Vec<(WeylPoint, f64)>> {
        match self {
            Self::Named(list) => {
                if list.is_empty() {
                    return Err(Error::EmptyInput("target distribution"));
                }
                if list.iter().any(|(_, w)| !(w.is_finite() && *w >= 0.0)) {
                    return Err(Error::Schema {
                        location: "target distribution".into(),
                        message: "weights must be finite and nonnegative".into(),
                    });
                }
                let total: f64 = list.iter().map(|(_, w)| w).sum();
                if total <= 0.0 {
                    return Err(Error::Schema {
                        location: "target distribution".into(),
                        message: "weights sum to zero".into(),
                    });
                }
                Ok(list.iter().map(|&(p, w)| (p, w / total)).collect())
            }
            Self::Haar(n) => {
                if *n == 0 {
                    return Err(Error::EmptyInput("Haar sample count"));
                }
                let w = 1.0 / *n as f64;
                Ok(haar_sample_points(*n, seed).into_iter().map(|p| (p, w)).collect())
            }
            Self::WLambda(l) => {
                check_lambda(*l)?;
                Ok(vec![(WeylPoint::CNOT, *l), (WeylPoint::SWAP, 1.0 - l)])
            }
        }
    }
}

fn check_lambda(l: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&l) {
        return Err(Error::Schema {
            location: "lambda".into(),
            message: format!("{l} is outside [0, 1]"),
        });
    }
    Ok(())
}

/// Weighted mean cost over already-weighted targets.
pub fn expected_cost<M: CostModel + ?Sized>(model: &M, targets: &[(WeylPoint, f64)], d1q: f64) -> TargetScore {
    let parts: Vec<TargetScore> = targets
        .par_iter()
        .map(|&(p, w)| model.cost(p, d1q).scaled(w))
        .collect();
    parts.into_iter().fold(TargetScore::ZERO, TargetScore::plus)
}

/// Mean cost over Haar-random gates given as coordinates.
pub fn haar_score<M: CostModel + ?Sized>(model: &M, samples: &[WeylPoint], d1q: f64) -> Result<TargetScore> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("Haar samples"));
    }
    let w = 1.0 / samples.len() as f64;
    let weighted: Vec<(WeylPoint, f64)> = samples.iter().map(|&p| (p, w)).collect();
    Ok(expected_cost(model, &weighted, d1q))
}

/// `λ·D[CNOT] + (1 − λ)·D[SWAP]`.
pub fn w_score<M: CostModel + ?Sized>(model: &M, d1q: f64, lambda: f64) -> Result<f64> {
    let t = TargetDistribution::WLambda(lambda).targets(0)?;
    Ok(expected_cost(model, &t, d1q).duration)
}

/// Frequency-weighted duration over named targets.
pub fn v_score<M: CostModel + ?Sized>(model: &M, d1q: f64, targets: &[(WeylPoint, f64)]) -> Result<f64> {
    let t = TargetDistribution::Named(targets.to_vec()).targets(0)?;
    Ok(expected_cost(model, &t, d1q).duration)
}

/// One row of a score table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub basis: String,
    pub t_min: f64,
    pub d1q: f64,
    pub lambda: f64,
    pub cnot: TargetScore,
    pub swap: TargetScore,
    pub haar: TargetScore,
    pub w: TargetScore,
    pub v: Option<TargetScore>,
}

impl ScoreReport {
    pub fn e_k_haar(&self) -> f64 {
        self.haar.applications
    }

    pub fn e_d_haar(&self) -> f64 {
        self.haar.duration
    }

    pub fn w_score(&self) -> f64 {
        self.w.duration
    }
}

pub fn score_report<M: CostModel + ?Sized>(
    model: &M,
    d1q: f64,
    lambda: f64,
    haar: &[WeylPoint],
    named: Option<&[(WeylPoint, f64)]>,
) -> Result<ScoreReport> {
    check_lambda(lambda)?;
    let cnot = model.cost(WeylPoint::CNOT, d1q);
    let swap = model.cost(WeylPoint::SWAP, d1q);
    let v = match named {
        Some(n) => Some(expected_cost(
            model,
            &TargetDistribution::Named(n.to_vec()).targets(0)?,
            d1q,
        )),
        None => None,
    };
    Ok(ScoreReport {
        basis: model.label(),
        t_min: model.basis_time(),
        d1q,
        lambda,
        cnot,
        swap,
        haar: haar_score(model, haar, d1q)?,
        w: cnot.scaled(lambda).plus(swap.scaled(1.0 - lambda)),
        v,
    })
}

/// Speed-limit independent gate counts of one basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountProfile {
    pub k_cnot: f64,
    pub k_swap: f64,
    pub e_k_haar: f64,
}

impl CountProfile {
    pub fn from_coverage(set: &CoverageSet, haar: &[WeylPoint]) -> Result<Self> {
        let m = BasisCost {
            set,
            t_min: 1.0,
        };
        if !set.complete {
            return Err(incomplete(set));
        }
        Ok(Self {
            k_cnot: m.applications(WeylPoint::CNOT) as f64,
            k_swap: m.applications(WeylPoint::SWAP) as f64,
            e_k_haar: haar_score(&m, haar, 0.0)?.applications,
        })
    }

    fn scaled(self, f: f64) -> Self {
        Self {
            k_cnot: (self.k_cnot * f).max(1.0),
            k_swap: (self.k_swap * f).max(1.0),
            e_k_haar: (self.e_k_haar * f).max(1.0),
        }
    }

    fn lerp(self, o: Self, s: f64) -> Self {
        Self {
            k_cnot: self.k_cnot + s * (o.k_cnot - self.k_cnot),
            k_swap: self.k_swap + s * (o.k_swap - self.k_swap),
            e_k_haar: self.e_k_haar + s * (o.e_k_haar - self.e_k_haar),
        }
    }
}

/// Score a sweep minimizes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Metric {
    Haar,
    Cnot,
    Swap,
    Weighted(f64),
}

impl Metric {
    /// `(duration, applications)` for a basis with pulse time `t`.
    /// Durations are affine in the count, so expectations pass through.
    pub fn evaluate(self, p: &CountProfile, t: f64, d1q: f64) -> (f64, f64) {
        let k = match self {
            Metric::Haar => p.e_k_haar,
            Metric::Cnot => p.k_cnot,
            Metric::Swap => p.k_swap,
            Metric::Weighted(l) => l * p.k_cnot + (1.0 - l) * p.k_swap,
        };
        (k * t + (k + 1.0) * d1q, k)
    }
}

/// Rays × total angles over the quarter plane of drive angles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub rays: usize,
    pub steps: usize,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self { rays: 64, steps: 64 }
    }
}

impl SweepGrid {
    /// `(θ_c, θ_g)` pairs: ray angles from pure conversion to pure gain,
    /// total angles `θ_c + θ_g` in `(0, π/2]`. The rays of the standard
    /// CNOT and B families are always included.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        let mut shares: Vec<f64> = (0..self.rays)
            .map(|r| {
                let a = if self.rays > 1 {
                    FRAC_PI_2 * r as f64 / (self.rays - 1) as f64
                } else {
                    0.0
                };
                let (s, c) = a.sin_cos();
                s / (s + c)
            })
            .collect();
        if self.rays > 1 {
            shares.extend([0.25, 0.5, 0.75]);
        }
        shares.sort_by(f64::total_cmp);
        shares.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let mut out = Vec::with_capacity(shares.len() * self.steps);
        for gain_share in shares {
            for j in 1..=self.steps {
                let total = FRAC_PI_2 * j as f64 / self.steps as f64;
                let tg = total * gain_share;
                out.push((total - tg, tg));
            }
        }
        out
    }
}

/// Supplies count profiles for arbitrary drive angles.
pub trait ProfileSource: Sync {
    /// `None` when the basis cannot cover the chamber within the budget.
    fn profile(&self, theta_c: f64, theta_g: f64) -> Result<Option<CountProfile>>;
}

/// Builds (or loads) undriven coverage for every cell.
pub struct ExactProfiles<'a> {
    pub builder: &'a CoverageBuilder,
    pub haar: Vec<WeylPoint>,
}

impl ProfileSource for ExactProfiles<'_> {
    fn profile(&self, theta_c: f64, theta_g: f64) -> Result<Option<CountProfile>> {
        let limit = SpeedLimit::linear(FRAC_PI_2)?;
        let name = format!("cg({theta_c:.6},{theta_g:.6})");
        let basis = BasisGate::from_angles(&name, theta_c, theta_g, &limit)?;
        match self.builder.build(&basis, false) {
            Ok(set) => CountProfile::from_coverage(&set, &self.haar).map(Some),
            Err(Error::IncompleteCoverage { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

/// Approximates profiles from a few anchor bases: along each anchor ray,
/// counts scale inversely with the total angle; between rays they are
/// interpolated linearly in the ray angle.
#[derive(Clone, Debug)]
pub struct InterpolatedProfiles {
    /// `(ray angle in [0, π/4], total angle, profile)`.
    anchors: Vec<(f64, f64, CountProfile)>,
}

impl InterpolatedProfiles {
    pub fn new(anchors: &[(f64, f64, CountProfile)]) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::EmptyInput("interpolation anchors"));
        }
        let anchors = anchors
            .iter()
            .map(|&(tc, tg, p)| (fold_ray(tc, tg), tc + tg, p))
            .collect();
        Ok(Self { anchors })
    }

    fn along_ray(&self, ray: f64, total: f64) -> CountProfile {
        let (_, s_ref, p) = self
            .anchors
            .iter()
            .filter(|a| (a.0 - ray).abs() < 1e-9)
            .min_by(|a, b| {
                (a.1.ln() - total.ln())
                    .abs()
                    .total_cmp(&(b.1.ln() - total.ln()).abs())
            })
            .copied()
            .expect("ray taken from the anchors");
        p.scaled(s_ref / total)
    }
}

fn fold_ray(theta_c: f64, theta_g: f64) -> f64 {
    let a = theta_g.atan2(theta_c);
    a.min(FRAC_PI_2 - a)
}

impl ProfileSource for InterpolatedProfiles {
    fn profile(&self, theta_c: f64, theta_g: f64) -> Result<Option<CountProfile>> {
        let ray = fold_ray(theta_c, theta_g);
        let total = theta_c + theta_g;
        let mut rays: Vec<f64> = self.anchors.iter().map(|a| a.0).collect();
        rays.sort_by(f64::total_cmp);
        rays.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let below = rays.iter().rev().find(|&&r| r <= ray + 1e-12).copied();
        let above = rays.iter().find(|&&r| r >= ray - 1e-12).copied();
        let p = match (below, above) {
            (Some(a), Some(b)) if (b - a).abs() > 1e-12 => {
                let s = (ray - a) / (b - a);
                self.along_ray(a, total).lerp(self.along_ray(b, total), s)
            }
            (Some(a), _) | (None, Some(a)) => self.along_ray(a, total),
            (None, None) => unreachable!("anchors are nonempty"),
        };
        Ok(Some(p))
    }
}

/// Anchor list for [`InterpolatedProfiles`] from canonical coverage sets.
pub fn anchors_from_sets(sets: &[CoverageSet], haar: &[WeylPoint]) -> Result<Vec<(f64, f64, CountProfile)>> {
    sets.iter()
        .map(|s| {
            Ok((
                s.basis.theta_c(),
                s.basis.theta_g(),
                CountProfile::from_coverage(s, haar)?,
            ))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub theta_c: f64,
    pub theta_g: f64,
    pub t_min: f64,
    /// Metric value, absent where the basis could not be scored.
    pub score: Option<f64>,
    pub applications: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub metric: Metric,
    pub d1q: f64,
    pub cells: Vec<SweepCell>,
    pub best: SweepCell,
}

/// Scores every grid cell and returns the surface with its minimizer.
/// Ties (relative 1e-9) go to the basis needing fewer applications.
pub fn best_basis_sweep<P: ProfileSource + ?Sized>(
    limit: &SpeedLimit,
    d1q: f64,
    metric: Metric,
    grid: &[(f64, f64)],
    profiles: &P,
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::EmptyInput("sweep grid"));
    }
    if let Metric::Weighted(l) = metric {
        check_lambda(l)?;
    }
    let limit = limit.normalized();
    let mut cells = Vec::with_capacity(grid.len());
    for &(tc, tg) in grid {
        let t = min_time(&limit, tc, tg)?;
        let (score, applications) = match profiles.profile(tc, tg)? {
            Some(p) => {
                let (s, k) = metric.evaluate(&p, t, d1q);
                (Some(s), Some(k))
            }
            None => (None, None),
        };
        cells.push(SweepCell {
            theta_c: tc,
            theta_g: tg,
            t_min: t,
            score,
            applications,
        });
    }
    let best = *cells
        .iter()
        .filter(|c| c.score.is_some())
        .reduce(|a, b| if better(b, a) { b } else { a })
        .ok_or(Error::EmptyInput("scorable sweep cells"))?;
    Ok(SweepResult {
        metric,
        d1q,
        cells,
        best,
    })
}

fn better(a: &SweepCell, b: &SweepCell) -> bool {
    let (sa, sb) = (a.score.unwrap(), b.score.unwrap());
    let tol = 1e-9 * sa.abs().max(sb.abs());
    if (sa - sb).abs() > tol {
        return sa < sb;
    }
    a.applications.unwrap() < b.applications.unwrap() - 1e-9
}

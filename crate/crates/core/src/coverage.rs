//! Coverage sets: which canonical coordinates `k` applications of a basis
//! gate can reach.
//!
//! Each level is approximated by the convex hull of coordinates collected
//! from random template parameters, from optimizer runs aimed at the chamber
//! corners, and from optimizer runs aimed at Haar samples the current hull
//! misses. Hulls are built on the left half of the chamber; the right half
//! is its mirror image.

use crate::error::{Error, Result};
use crate::hull::ConvexPolytope3;
use crate::optimize::{nelder_mead_restarting, OptimizerConfig};
use crate::speedlimit::SpeedLimit;
use crate::template::{BasisGate, Template, TemplateBlock, TemplateEvaluator};
use crate::weyl::{self, MakhlinInvariants, WeylPoint};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::FRAC_PI_2;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Bumped whenever the build procedure changes in a way that affects results.
const FORMAT_VERSION: u32 = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageConfig {
    pub seed: u64,
    /// Random template draws per level.
    pub n_random: usize,
    /// Optimizer starts per corner target and level.
    pub restarts: usize,
    /// Optimizer settings for corner targets. Runs continue past
    /// `reach_tol` so that recorded paths hug the region boundary.
    pub optimizer: OptimizerConfig,
    /// A target counts as reached when the Makhlin loss drops below this.
    pub reach_tol: f64,
    /// Rounds of steering toward Haar samples still outside the hull.
    /// Only applied to undriven sets: their regions are convex, while
    /// driven regions are not and refinement would chase their convex
    /// closure instead.
    pub refine_rounds: usize,
    pub refine_targets: usize,
    pub refine_restarts: usize,
    pub refine_iters: usize,
    /// Haar samples used for the per-level completeness check.
    pub check_samples: usize,
    /// Haar fraction at which a level counts as covering everything.
    pub completeness: f64,
    pub k_max: usize,
    pub n_steps: usize,
    pub contain_tol: f64,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_random: 3000,
            restarts: 8,
            optimizer: OptimizerConfig {
                max_iters: 3000,
                loss_tol: 1e-13,
                ..OptimizerConfig::default()
            },
            reach_tol: 1e-6,
            refine_rounds: 2,
            refine_targets: 24,
            refine_restarts: 2,
            refine_iters: 800,
            check_samples: 4000,
            completeness: 0.995,
            k_max: 8,
            n_steps: 4,
            contain_tol: 1e-8,
        }
    }
}

impl CoverageConfig {
    /// Lighter settings for large sweeps.
    pub fn quick(seed: u64) -> Self {
        Self {
            seed,
            n_random: 800,
            restarts: 4,
            optimizer: OptimizerConfig {
                max_iters: 1500,
                loss_tol: 1e-13,
                ..OptimizerConfig::default()
            },
            refine_rounds: 1,
            refine_targets: 12,
            refine_restarts: 1,
            refine_iters: 400,
            check_samples: 2000,
            ..Self::default()
        }
    }
}

/// Chamber corners every coverage build aims for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CornerTarget {
    Identity,
    Cnot,
    Iswap,
    Swap,
}

impl CornerTarget {
    pub const ALL: [CornerTarget; 4] = [Self::Identity, Self::Cnot, Self::Iswap, Self::Swap];

    pub fn point(self) -> WeylPoint {
        match self {
            Self::Identity => WeylPoint::IDENTITY,
            Self::Cnot => WeylPoint::CNOT,
            Self::Iswap => WeylPoint::ISWAP,
            Self::Swap => WeylPoint::SWAP,
        }
    }

    pub fn matching(p: WeylPoint) -> Option<CornerTarget> {
        Self::ALL
            .into_iter()
            .find(|t| t.point().class_distance(p) < 1e-9)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetOutcome {
    pub target: CornerTarget,
    pub best_loss: f64,
    pub reached: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverageLevel {
    pub k: usize,
    pub left: ConvexPolytope3,
    pub right: ConvexPolytope3,
    pub targets: Vec<TargetOutcome>,
    pub n_points: usize,
    /// Haar fraction inside the hull, from the completeness check.
    pub haar_fraction: f64,
}

impl CoverageLevel {
    fn from_left(k: usize, left: ConvexPolytope3) -> Self {
        let right = left.mirrored();
        Self {
            k,
            left,
            right,
            targets: Vec::new(),
            n_points: 0,
            haar_fraction: 0.0,
        }
    }

    pub fn contains(&self, p: WeylPoint, tol: f64) -> bool {
        (p.c1 <= FRAC_PI_2 + tol && self.left.contains(p, tol))
            || (p.c1 >= FRAC_PI_2 - tol && self.right.contains(p, tol))
    }

    pub fn reached(&self, t: CornerTarget) -> bool {
        self.targets.iter().any(|o| o.target == t && o.reached)
    }
}

/// Nested hulls for `k = 1..=K` applications of one basis gate.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverageSet {
    pub basis: BasisGate,
    pub parallel: bool,
    pub config: CoverageConfig,
    pub levels: Vec<CoverageLevel>,
    /// Whether the top level covers the chamber.
    pub complete: bool,
}

impl CoverageSet {
    pub fn max_k(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, k: usize) -> Option<&CoverageLevel> {
        self.levels.get(k.checked_sub(1)?)
    }

    /// Smallest `k` whose region holds `p`. Chamber corners use the
    /// optimizer outcome rather than the hull.
    pub fn min_k(&self, p: WeylPoint) -> Option<usize> {
        if let Some(t) = CornerTarget::matching(p) {
            return self.levels.iter().find(|l| l.reached(t)).map(|l| l.k);
        }
        let tol = self.config.contain_tol;
        self.levels.iter().find(|l| l.contains(p, tol)).map(|l| l.k)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&CoverageFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: CoverageFile = serde_json::from_str(s)?;
        f.into_set()
    }

    /// Stable identifier of the build inputs.
    pub fn content_hash(basis: &BasisGate, parallel: bool, cfg: &CoverageConfig) -> String {
        let key = serde_json::json!({
            "version": FORMAT_VERSION,
            "basis": basis,
            "parallel": parallel,
            "config": cfg,
        });
        hex::encode(Sha256::digest(key.to_string().as_bytes()))
    }
}

#[derive(Serialize, Deserialize)]
struct LevelFile {
    k: usize,
    hull: ConvexPolytope3,
    targets: Vec<TargetOutcome>,
    n_points: usize,
    haar_fraction: f64,
}

#[derive(Serialize, Deserialize)]
struct CoverageFile {
    version: u32,
    basis: BasisGate,
    parallel: bool,
    config: CoverageConfig,
    complete: bool,
    levels: Vec<LevelFile>,
}

impl From<&CoverageSet> for CoverageFile {
    fn from(s: &CoverageSet) -> Self {
        Self {
            version: FORMAT_VERSION,
            basis: s.basis.clone(),
            parallel: s.parallel,
            config: s.config.clone(),
            complete: s.complete,
            levels: s
                .levels
                .iter()
                .map(|l| LevelFile {
                    k: l.k,
                    hull: l.left.clone(),
                    targets: l.targets.clone(),
                    n_points: l.n_points,
                    haar_fraction: l.haar_fraction,
                })
                .collect(),
        }
    }
}

impl CoverageFile {
    fn into_set(self) -> Result<CoverageSet> {
        let mut levels = Vec::with_capacity(self.levels.len());
        for l in self.levels {
            let mut lvl = CoverageLevel::from_left(l.k, l.hull);
            lvl.targets = l.targets;
            lvl.n_points = l.n_points;
            lvl.haar_fraction = l.haar_fraction;
            levels.push(lvl);
        }
        Ok(CoverageSet {
            basis: self.basis,
            parallel: self.parallel,
            config: self.config,
            levels,
            complete: self.complete,
        })
    }
}

/// Mixes a base seed with a path of tags (splitmix64 finalizer).
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    let mut z = seed ^ 0x9E37_79B9_7F4A_7C15;
    for &t in tags {
        z = z.wrapping_add(t.wrapping_mul(0xBF58_476D_1CE4_E5B9)).wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

/// Coordinates of Haar-random gates, computed in parallel but deterministic.
pub fn haar_sample_points(n: usize, seed: u64) -> Vec<WeylPoint> {
    const CHUNK: usize = 1024;
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x4841_4152, c as u64]));
            let m = CHUNK.min(n - c * CHUNK);
            (0..m)
                .map(|_| weyl::canonical_coordinate(&weyl::haar_random_unitary(&mut rng)))
                .collect::<Vec<_>>()
        })
        .collect()
}

fn fold_left(p: WeylPoint) -> WeylPoint {
    if p.c1 > FRAC_PI_2 {
        p.mirrored()
    } else {
        p
    }
}

/// Result of steering a template toward one target.
#[derive(Clone, Debug)]
pub struct TrainingRun {
    pub params: Vec<f64>,
    pub loss: f64,
    pub iterations: usize,
    /// Coordinates visited on the way, spaced out geometrically in loss.
    pub path: Vec<WeylPoint>,
}

/// Minimizes the Makhlin loss of `template` against `target` from `x0`.
pub fn train_template(
    eval: &TemplateEvaluator<'_>,
    target: &MakhlinInvariants,
    x0: &[f64],
    cfg: &OptimizerConfig,
) -> Result<TrainingRun> {
    let mut path = Vec::new();
    let mut last_recorded = f64::INFINITY;
    let r = nelder_mead_restarting(
        |x| {
            let u = eval.matrix(x);
            let loss = weyl::invariants_of_matrix(&u).distance_sq(target);
            if loss < 0.7 * last_recorded {
                last_recorded = loss;
                path.push(weyl::coordinate_of_matrix(&u));
            }
            loss
        },
        x0,
        cfg,
    )?;
    path.push(weyl::coordinate_of_matrix(&eval.matrix(&r.x)));
    Ok(TrainingRun {
        params: r.x,
        loss: r.loss,
        iterations: r.iterations,
        path,
    })
}

/// Coordinates and losses of a batch of parameter vectors.
fn evaluate_draws(template: &Template, draws: &[Vec<f64>]) -> Vec<(WeylPoint, MakhlinInvariants)> {
    draws
        .par_iter()
        .map(|x| {
            let u = template.evaluator().matrix(x);
            (weyl::coordinate_of_matrix(&u), weyl::invariants_of_matrix(&u))
        })
        .collect()
}

/// Picks starting points for a target: the closest random draws first,
/// then fresh draws.
fn starts_for(
    template: &Template,
    draws: &[Vec<f64>],
    invs: &[MakhlinInvariants],
    target: &MakhlinInvariants,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f64>> {
    let mut order: Vec<usize> = (0..draws.len()).collect();
    order.sort_by(|&a, &b| {
        invs[a]
            .distance_sq(target)
            .partial_cmp(&invs[b].distance_sq(target))
            .unwrap()
    });
    let near = n.div_ceil(2).min(order.len());
    let mut out: Vec<Vec<f64>> = order[..near].iter().map(|&i| draws[i].clone()).collect();
    while out.len() < n {
        out.push(template.random_params(rng));
    }
    out
}

/// Builds coverage sets, optionally caching them on disk by content hash.
#[derive(Clone, Debug)]
pub struct CoverageBuilder {
    pub config: CoverageConfig,
    pub cache_dir: Option<PathBuf>,
}

impl CoverageBuilder {
    pub fn new(config: CoverageConfig) -> Self {
        Self {
            config,
            cache_dir: None,
        }
    }

    pub fn with_cache(mut self, dir: impl AsRef<Path>) -> Self {
        self.cache_dir = Some(dir.as_ref().to_path_buf());
        self
    }

    fn cache_path(&self, name: &str) -> Option<PathBuf> {
        self.cache_dir.as_ref().map(|d| d.join(format!("{name}.json")))
    }

    fn load<T, F: FnOnce(&str) -> Result<T>>(&self, key: &str, parse: F) -> Option<T> {
        let path = self.cache_path(key)?;
        let text = std::fs::read_to_string(&path).ok()?;
        match parse(&text) {
            Ok(v) => Some(v),
            Err(e) => {
                log::warn!("ignoring unreadable cache entry {}: {e}", path.display());
                None
            }
        }
    }

    fn store(&self, key: &str, json: &str) -> Result<()> {
        if let Some(path) = self.cache_path(key) {
            let dir = path.parent().unwrap_or(Path::new("."));
            std::fs::create_dir_all(dir)?;
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(json.as_bytes())?;
            tmp.persist(&path).map_err(|e| e.error)?;
        }
        Ok(())
    }

    /// Coverage of `k = 1, 2, …` applications of `basis`.
    ///
    /// Driven sets start from the undriven set built with the same seed, so
    /// every undriven vertex is also a driven point.
    pub fn build(&self, basis: &BasisGate, parallel: bool) -> Result<CoverageSet> {
        let key = CoverageSet::content_hash(basis, parallel, &self.config);
        if let Some(set) = self.load(&key, CoverageSet::from_json) {
            return if set.complete { Ok(set) } else { Err(incomplete(&set)) };
        }
        let undriven = if parallel {
            Some(self.build(basis, false)?)
        } else {
            None
        };
        let set = build_levels(basis, parallel, &self.config, undriven.as_ref())?;
        self.store(&key, &set.to_json()?)?;
        if !set.complete {
            return Err(incomplete(&set));
        }
        Ok(set)
    }

    /// Like [`build`](Self::build) but also returns incomplete sets.
    pub fn build_partial(&self, basis: &BasisGate, parallel: bool) -> Result<CoverageSet> {
        match self.build(basis, parallel) {
            Ok(s) => Ok(s),
            Err(Error::IncompleteCoverage { .. }) => {
                let key = CoverageSet::content_hash(basis, parallel, &self.config);
                if let Some(s) = self.load(&key, CoverageSet::from_json) {
                    return Ok(s);
                }
                let undriven = if parallel {
                    Some(self.build_partial(basis, false)?)
                } else {
                    None
                };
                build_levels(basis, parallel, &self.config, undriven.as_ref())
            }
            Err(e) => Err(e),
        }
    }

    /// Joint coverage of a full basis pulse and a fraction of it, both driven.
    pub fn joint(&self, full: &BasisGate, fraction: &BasisGate) -> Result<JointCoverage> {
        let full_set = self.build(full, true)?;
        let frac_set = self.build(fraction, true)?;
        let key = format!(
            "joint-v2-{}",
            hex::encode(Sha256::digest(
                format!(
                    "{}{}",
                    CoverageSet::content_hash(full, true, &self.config),
                    CoverageSet::content_hash(fraction, true, &self.config)
                )
                .as_bytes()
            ))
        );
        let rules = match self.load(&key, |s| Ok(serde_json::from_str::<Vec<JointRule>>(s)?)) {
            Some(r) => r,
            None => {
                let r = find_joint_rules(full, fraction, &self.config)?;
                self.store(&key, &serde_json::to_string_pretty(&r)?)?;
                r
            }
        };
        JointCoverage::new(full_set, frac_set, rules)
    }
}

fn incomplete(set: &CoverageSet) -> Error {
    let top = set.levels.last();
    Error::IncompleteCoverage {
        basis: set.basis.name.clone(),
        k_max: set.config.k_max,
        detail: format!(
            "top level covers {:.1}% of Haar samples",
            100.0 * top.map_or(0.0, |l| l.haar_fraction)
        ),
    }
}

/// Free-function form of [`CoverageBuilder::build`] without a cache.
pub fn build_coverage(basis: &BasisGate, parallel: bool, cfg: &CoverageConfig) -> Result<CoverageSet> {
    CoverageBuilder::new(cfg.clone()).build(basis, parallel)
}

fn build_levels(
    basis: &BasisGate,
    parallel: bool,
    cfg: &CoverageConfig,
    undriven: Option<&CoverageSet>,
) -> Result<CoverageSet> {
    if cfg.k_max == 0 {
        return Err(Error::EmptyInput("k_max"));
    }
    let check = haar_sample_points(cfg.check_samples, derive_seed(cfg.seed, &[0xC4EC]));
    let mut levels: Vec<CoverageLevel> = Vec::new();
    let mut carried: Vec<WeylPoint> = Vec::new();
    let mut complete = false;
    for k in 1..=cfg.k_max {
        let template = Template::repeated(basis, k, parallel, cfg.n_steps);
        let mut seeds = carried.clone();
        let mut known: Vec<CornerTarget> = levels
            .last()
            .map(|l| CornerTarget::ALL.into_iter().filter(|&t| l.reached(t)).collect())
            .unwrap_or_default();
        if let Some(l) = undriven.and_then(|u| u.level(k).or(u.levels.last())) {
            seeds.extend(l.left.vertices.iter().copied());
            known.extend(CornerTarget::ALL.into_iter().filter(|&t| l.reached(t)));
        }
        let level = build_level(&template, k, cfg, &seeds, &known, !parallel, &check)?;
        log::info!(
            "{}{} k={k}: {} points, Haar fraction {:.4}, corners {:?}",
            basis.name,
            if parallel { " (driven)" } else { "" },
            level.n_points,
            level.haar_fraction,
            level
                .targets
                .iter()
                .map(|t| (t.target, t.best_loss))
                .collect::<Vec<_>>()
        );
        let done = level.haar_fraction >= cfg.completeness
            && CornerTarget::ALL.iter().all(|&t| level.reached(t));
        carried = level.left.vertices.clone();
        levels.push(level);
        if done {
            complete = true;
            break;
        }
    }
    Ok(CoverageSet {
        basis: basis.clone(),
        parallel,
        config: cfg.clone(),
        levels,
        complete,
    })
}

fn build_level(
    template: &Template,
    k: usize,
    cfg: &CoverageConfig,
    seeds: &[WeylPoint],
    known: &[CornerTarget],
    refine: bool,
    check: &[WeylPoint],
) -> Result<CoverageLevel> {
    let level_seed = derive_seed(cfg.seed, &[k as u64]);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(level_seed, &[1]));
    let mut points: Vec<WeylPoint> = seeds.to_vec();
    let dim = template.param_count();

    let draws: Vec<Vec<f64>> = if dim == 0 {
        vec![Vec::new()]
    } else {
        (0..cfg.n_random).map(|_| template.random_params(&mut rng)).collect()
    };
    let evaluated = evaluate_draws(template, &draws);
    points.extend(evaluated.iter().map(|e| e.0));
    let invs: Vec<MakhlinInvariants> = evaluated.iter().map(|e| e.1).collect();

    let mut outcomes = Vec::new();
    if dim == 0 {
        for t in CornerTarget::ALL {
            let loss = invs[0].distance_sq(&MakhlinInvariants::of_point(t.point()));
            let reached = loss < cfg.reach_tol;
            if reached {
                points.push(t.point());
            }
            outcomes.push(TargetOutcome {
                target: t,
                best_loss: loss,
                reached,
            });
        }
    } else {
        // One task per (target, restart), each with its own seed.
        let mut tasks = Vec::new();
        for (ti, t) in CornerTarget::ALL.iter().enumerate() {
            if known.contains(t) {
                continue;
            }
            let inv = MakhlinInvariants::of_point(t.point());
            let mut trng = ChaCha8Rng::seed_from_u64(derive_seed(level_seed, &[2, ti as u64]));
            for x0 in starts_for(template, &draws, &invs, &inv, cfg.restarts, &mut trng) {
                tasks.push((*t, inv, x0));
            }
        }
        let runs: Vec<(CornerTarget, TrainingRun)> = tasks
            .par_iter()
            .map(|(t, inv, x0)| {
                let eval = template.evaluator();
                train_template(&eval, inv, x0, &cfg.optimizer).map(|r| (*t, r))
            })
            .collect::<Result<_>>()?;
        for t in CornerTarget::ALL {
            if known.contains(&t) {
                outcomes.push(TargetOutcome {
                    target: t,
                    best_loss: 0.0,
                    reached: true,
                });
                points.push(t.point());
                continue;
            }
            let best = runs
                .iter()
                .filter(|(tt, _)| *tt == t)
                .map(|(_, r)| r.loss)
                .fold(f64::INFINITY, f64::min);
            let reached = best < cfg.reach_tol;
            if reached {
                points.push(t.point());
            }
            outcomes.push(TargetOutcome {
                target: t,
                best_loss: best,
                reached,
            });
        }
        for (_, r) in &runs {
            points.extend(r.path.iter().copied());
        }
    }

    let mut left_pts: Vec<WeylPoint> = points.iter().map(|&p| fold_left(p)).collect();
    let mut hull = ConvexPolytope3::from_points(&left_pts)?;

    if dim > 0 && refine {
        for round in 0..cfg.refine_rounds {
            let mut rrng = ChaCha8Rng::seed_from_u64(derive_seed(level_seed, &[3, round as u64]));
            let pool = haar_sample_points(
                cfg.refine_targets * 20,
                derive_seed(level_seed, &[4, round as u64]),
            );
            let outside: Vec<WeylPoint> = pool
                .into_iter()
                .map(fold_left)
                .filter(|p| !hull.contains(*p, cfg.contain_tol))
                .take(cfg.refine_targets)
                .collect();
            if outside.is_empty() {
                break;
            }
            let mut tasks = Vec::new();
            for p in &outside {
                let inv = MakhlinInvariants::of_point(*p);
                for x0 in starts_for(template, &draws, &invs, &inv, cfg.refine_restarts, &mut rrng) {
                    tasks.push((*p, inv, x0));
                }
            }
            let opt = OptimizerConfig {
                max_iters: cfg.refine_iters,
                ..cfg.optimizer.clone()
            };
            let runs: Vec<(WeylPoint, TrainingRun)> = tasks
                .par_iter()
                .map(|(p, inv, x0)| {
                    let eval = template.evaluator();
                    train_template(&eval, inv, x0, &opt).map(|r| (*p, r))
                })
                .collect::<Result<_>>()?;
            for (p, r) in runs {
                left_pts.extend(r.path.iter().map(|&q| fold_left(q)));
                if r.loss < cfg.reach_tol {
                    left_pts.push(p);
                }
            }
            hull = ConvexPolytope3::from_points(&left_pts)?;
        }
    }

    let mut level = CoverageLevel::from_left(k, hull);
    level.n_points = left_pts.len();
    level.targets = outcomes;
    let inside = check
        .iter()
        .filter(|p| level.contains(**p, cfg.contain_tol))
        .count();
    level.haar_fraction = inside as f64 / check.len().max(1) as f64;
    Ok(level)
}

/// Fraction of Haar-random gates inside level `k`.
pub fn haar_volume(set: &CoverageSet, k: usize, samples: &[WeylPoint]) -> f64 {
    let Some(level) = set.level(k) else { return 0.0 };
    let tol = set.config.contain_tol;
    let n = samples.iter().filter(|p| level.contains(**p, tol)).count();
    n as f64 / samples.len().max(1) as f64
}

/// A heterogeneous template verified to reach a specific corner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointRule {
    pub target: CornerTarget,
    pub template: Template,
    pub params: Vec<f64>,
    pub loss: f64,
}

impl JointRule {
    pub fn applications(&self) -> usize {
        self.template.len()
    }
}

/// Where the cheapest realization of a target comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum JointSource {
    Full(usize),
    Fraction(usize),
    Rule(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointChoice {
    pub source: JointSource,
    /// Two-qubit pulse time.
    pub pulse_time: f64,
    /// Number of basis applications, hence `applications + 1` layers of
    /// single-qubit gates.
    pub applications: usize,
}

impl JointChoice {
    pub fn duration(&self, d1q: f64) -> f64 {
        self.pulse_time + (self.applications + 1) as f64 * d1q
    }
}

/// Union of the driven coverage of a full pulse and of a fraction of it,
/// plus verified mixed templates for chamber corners.
#[derive(Clone, Debug, PartialEq)]
pub struct JointCoverage {
    pub full: CoverageSet,
    pub fraction: CoverageSet,
    pub rules: Vec<JointRule>,
}

impl JointCoverage {
    pub fn new(full: CoverageSet, fraction: CoverageSet, rules: Vec<JointRule>) -> Result<Self> {
        check_family(&full.basis, &fraction.basis)?;
        Ok(Self {
            full,
            fraction,
            rules,
        })
    }

    /// Every way of realizing `p`, cheapest first under `d1q`.
    pub fn choices(&self, p: WeylPoint, d1q: f64) -> Vec<JointChoice> {
        let mut out = Vec::new();
        let tf = self.full.basis.duration();
        let tq = self.fraction.basis.duration();
        let corner = CornerTarget::matching(p);
        for (set, t, is_full) in [(&self.full, tf, true), (&self.fraction, tq, false)] {
            for l in &set.levels {
                let ok = match corner {
                    Some(c) => l.reached(c),
                    None => l.contains(p, set.config.contain_tol),
                };
                if ok {
                    out.push(JointChoice {
                        source: if is_full {
                            JointSource::Full(l.k)
                        } else {
                            JointSource::Fraction(l.k)
                        },
                        pulse_time: l.k as f64 * t,
                        applications: l.k,
                    });
                }
            }
        }
        for (i, r) in self.rules.iter().enumerate() {
            if corner == Some(r.target) {
                out.push(JointChoice {
                    source: JointSource::Rule(i),
                    pulse_time: r.template.duration(),
                    applications: r.applications(),
                });
            }
        }
        out.sort_by(|a, b| a.duration(d1q).partial_cmp(&b.duration(d1q)).unwrap());
        out
    }

    pub fn best(&self, p: WeylPoint, d1q: f64) -> Option<JointChoice> {
        self.choices(p, d1q).into_iter().next()
    }

    /// The same coverage with every pulse re-timed for `limit`, for pricing.
    /// Regions only depend on the pulse angles, so nothing is rebuilt; rule
    /// parameters keep the drive timing they were fitted with.
    pub fn rescaled(&self, limit: &SpeedLimit) -> Result<Self> {
        let limit = limit.normalized();
        let retime = |b: &BasisGate| BasisGate::from_angles(&b.name, b.theta_c(), b.theta_g(), &limit);
        let mut out = self.clone();
        out.full.basis = retime(&self.full.basis)?;
        out.fraction.basis = retime(&self.fraction.basis)?;
        for r in &mut out.rules {
            for b in &mut r.template.blocks {
                b.basis = retime(&b.basis)?;
            }
        }
        Ok(out)
    }
}

fn check_family(full: &BasisGate, frac: &BasisGate) -> Result<()> {
    let r_full = full.theta_g() * frac.theta_c();
    let r_frac = frac.theta_g() * full.theta_c();
    if (r_full - r_frac).abs() > 1e-9 || frac.duration() >= full.duration() {
        return Err(Error::IncompatibleBases(format!(
            "`{}` is not a shorter pulse of the same kind as `{}`",
            frac.name, full.name
        )));
    }
    Ok(())
}

/// Refines `x0` by minimizing the squared distance from the template's
/// coordinate to `target`. Near chamber corners the Makhlin loss only grows
/// with the fourth power of that distance, so it stalls well before this
/// one does. Returns the parameters and the remaining distance.
pub fn polish_coordinate(
    eval: &TemplateEvaluator<'_>,
    target: WeylPoint,
    x0: &[f64],
    max_iters: usize,
) -> Result<(Vec<f64>, f64)> {
    let dist = |x: &[f64]| weyl::coordinate_of_matrix(&eval.matrix(x)).class_distance(target);
    let cfg = OptimizerConfig {
        max_iters,
        loss_tol: 1e-26,
        initial_step: 1e-3,
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
        adaptive: true,
    };
    let r = nelder_mead_restarting(|x| dist(x).powi(2), x0, &cfg)?;
    let d = dist(&r.x);
    Ok((r.x, d))
}

/// Searches for a full-then-fraction template reaching SWAP, trying
/// constant drives first.
fn find_joint_rules(full: &BasisGate, frac: &BasisGate, cfg: &CoverageConfig) -> Result<Vec<JointRule>> {
    check_family(full, frac)?;
    let target = CornerTarget::Swap;
    let inv = MakhlinInvariants::of_point(target.point());
    let mut steps = vec![1, cfg.n_steps];
    steps.dedup();
    for n_steps in steps {
        let template = Template::from_blocks(
            vec![
                TemplateBlock {
                    basis: full.clone(),
                    parallel: true,
                },
                TemplateBlock {
                    basis: frac.clone(),
                    parallel: true,
                },
            ],
            n_steps,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[0x4A01, n_steps as u64]));
        let draws: Vec<Vec<f64>> = (0..cfg.n_random).map(|_| template.random_params(&mut rng)).collect();
        let invs: Vec<MakhlinInvariants> = evaluate_draws(&template, &draws).into_iter().map(|e| e.1).collect();
        let mut starts = starts_for(&template, &draws, &invs, &inv, cfg.restarts, &mut rng);
        // Equal drives of π on the full pulse.
        for s in starts.iter_mut().step_by(2) {
            s[0] = 0.0;
            s[1] = 0.0;
            s[2..2 + 2 * n_steps].fill(std::f64::consts::PI);
        }
        let runs: Vec<TrainingRun> = starts
            .par_iter()
            .map(|x0| train_template(&template.evaluator(), &inv, x0, &cfg.optimizer))
            .collect::<Result<_>>()?;
        let best = runs
            .into_iter()
            .min_by(|a, b| a.loss.partial_cmp(&b.loss).unwrap())
            .expect("restarts > 0");
        let eval = template.evaluator();
        let (params, dist) = polish_coordinate(&eval, target.point(), &best.params, cfg.optimizer.max_iters)?;
        let loss = weyl::invariants_of_matrix(&eval.matrix(&params)).distance_sq(&inv);
        log::info!(
            "joint {}+{} ({n_steps} drive steps) toward SWAP: loss {loss:.3e}, distance {dist:.2e}",
            full.name,
            frac.name
        );
        if loss < cfg.reach_tol {
            return Ok(vec![JointRule {
                target,
                template,
                params,
                loss,
            }]);
        }
    }
    Ok(Vec::new())
}

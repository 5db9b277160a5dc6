//! Box-constrained Nelder–Mead simplex minimizer.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// Stop as soon as the best value falls below this.
    pub loss_tol: f64,
    pub lower: f64,
    pub upper: f64,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    /// Use dimension-dependent coefficients (Gao & Han), which behave much
    /// better than the textbook ones beyond a handful of parameters.
    pub adaptive: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            loss_tol: 1e-6,
            lower: 0.0,
            upper: 2.0 * PI,
            initial_step: 0.6,
            adaptive: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub x: Vec<f64>,
    pub loss: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Best value at the start of every iteration, then the final value.
    pub trace: Vec<f64>,
    pub converged: bool,
}

/// Minimizes `f` starting from `x0`. Every trial point is clipped into
/// `[cfg.lower, cfg.upper]`; non-finite values are treated as `+∞`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], cfg: &OptimizerConfig) -> Result<OptimizeResult>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    if n == 0 {
        return Err(Error::EmptyInput("initial point"));
    }
    let (alpha, gamma, rho, sigma) = if cfg.adaptive && n > 1 {
        let nf = n as f64;
        (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };
    let clip = |v: &mut [f64]| {
        for x in v.iter_mut() {
            *x = x.clamp(cfg.lower, cfg.upper);
        }
    };
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let y = f(x);
        if y.is_finite() {
            y
        } else {
            f64::INFINITY
        }
    };

    let mut start = x0.to_vec();
    clip(&mut start);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(&start, &mut evals);
    simplex.push((start.clone(), f0));
    for i in 0..n {
        let mut v = start.clone();
        let step = if v[i] + cfg.initial_step <= cfg.upper {
            cfg.initial_step
        } else {
            -cfg.initial_step
        };
        v[i] += step;
        clip(&mut v);
        let fv = eval(&v, &mut evals);
        simplex.push((v, fv));
    }

    let mut trace = Vec::with_capacity(cfg.max_iters + 1);
    let mut iterations = 0;
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    while iterations < cfg.max_iters {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        trace.push(simplex[0].1);
        if simplex[0].1 < cfg.loss_tol {
            break;
        }
        if simplex[n].1 == simplex[0].1 && diameter(&simplex) < 1e-14 {
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let worst = simplex[n].0.clone();
        let f_worst = simplex[n].1;
        let f_second = simplex[n - 1].1;
        let f_best = simplex[0].1;

        for j in 0..n {
            trial[j] = centroid[j] + alpha * (centroid[j] - worst[j]);
        }
        clip(&mut trial);
        let reflected = trial.clone();
        let fr = eval(&reflected, &mut evals);

        if fr < f_best {
            for j in 0..n {
                trial[j] = centroid[j] + gamma * (reflected[j] - centroid[j]);
            }
            clip(&mut trial);
            let fe = eval(&trial, &mut evals);
            simplex[n] = if fe < fr {
                (trial.clone(), fe)
            } else {
                (reflected, fr)
            };
            continue;
        }
        if fr < f_second {
            simplex[n] = (reflected, fr);
            continue;
        }
        let (contracted, fc, accept) = if fr < f_worst {
            for j in 0..n {
                trial[j] = centroid[j] + rho * (reflected[j] - centroid[j]);
            }
            clip(&mut trial);
            let fc = eval(&trial, &mut evals);
            (trial.clone(), fc, fc <= fr)
        } else {
            for j in 0..n {
                trial[j] = centroid[j] - rho * (centroid[j] - worst[j]);
            }
            clip(&mut trial);
            let fc = eval(&trial, &mut evals);
            (trial.clone(), fc, fc < f_worst)
        };
        if accept {
            simplex[n] = (contracted, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for (v, fv) in simplex.iter_mut().skip(1) {
            for j in 0..n {
                v[j] = best[j] + sigma * (v[j] - best[j]);
            }
            clip(v);
            *fv = eval(v, &mut evals);
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    let (x, loss) = simplex.swap_remove(0);
    if trace.last() != Some(&loss) {
        trace.push(loss);
    }
    Ok(OptimizeResult {
        converged: loss < cfg.loss_tol,
        x,
        loss,
        iterations,
        evaluations: evals,
        trace,
    })
}

fn diameter(simplex: &[(Vec<f64>, f64)]) -> f64 {
    let x0 = &simplex[0].0;
    simplex
        .iter()
        .skip(1)
        .map(|(v, _)| {
            v.iter()
                .zip(x0)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Runs Nelder–Mead repeatedly, restarting the simplex around the incumbent
/// whenever a run stalls, until the combined iteration budget is spent or
/// the tolerance is met.
pub fn nelder_mead_restarting<F>(
    mut f: F,
    x0: &[f64],
    cfg: &OptimizerConfig,
) -> Result<OptimizeResult>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut budget = cfg.max_iters;
    let mut x = x0.to_vec();
    let mut trace = Vec::new();
    let mut evaluations = 0;
    let mut iterations = 0;
    let mut best_loss = f64::INFINITY;
    let mut step = cfg.initial_step;
    loop {
        let sub = OptimizerConfig {
            max_iters: budget,
            initial_step: step,
            ..cfg.clone()
        };
        let r = nelder_mead(&mut f, &x, &sub)?;
        evaluations += r.evaluations;
        iterations += r.iterations;
        budget = budget.saturating_sub(r.iterations.max(1));
        trace.extend(r.trace.iter().copied());
        let improved = r.loss < best_loss * (1.0 - 1e-3);
        if r.loss < best_loss {
            best_loss = r.loss;
            x = r.x;
        }
        if best_loss < cfg.loss_tol || budget == 0 {
            break;
        }
        step = if improved { step.max(1e-3) * 0.5 } else { step * 0.1 };
        if step < 1e-9 {
            break;
        }
    }
    Ok(OptimizeResult {
        converged: best_loss < cfg.loss_tol,
        x,
        loss: best_loss,
        iterations,
        evaluations,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_converges() {
        let cfg = OptimizerConfig {
            loss_tol: 1e-12,
            max_iters: 2000,
            ..Default::default()
        };
        let r = nelder_mead(|x| (x[0] - 1.0).powi(2) + (x[1] - 2.0).powi(2), &[3.0, 3.0], &cfg).unwrap();
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 2.0).abs() < 1e-5);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn constant_function_keeps_start() {
        let cfg = OptimizerConfig::default();
        let r = nelder_mead(|_| 1.0, &[0.5, 0.5, 0.5], &cfg).unwrap();
        assert_eq!(r.x, vec![0.5, 0.5, 0.5]);
        assert!(r.trace.iter().all(|&v| v == 1.0));
    }
}

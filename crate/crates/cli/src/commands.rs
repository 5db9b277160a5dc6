use crate::output::{emit, num, opt, Table};
use crate::{BuildArgs, CoverageArgs, FidelityArgs, FidelityParamArgs, Format, MetricArg, ScoresArgs, SweepArgs, TranspileArgs};
use basisgate::costs::{
    anchors_from_sets, best_basis_sweep, score_report, BasisCost, ExactProfiles, InterpolatedProfiles, Metric,
    ProfileSource, ScoreReport, SweepGrid,
};
use basisgate::coverage::{derive_seed, haar_sample_points, haar_volume, CoverageBuilder, CoverageConfig, CoverageSet};
use basisgate::speedlimit::SpeedLimit;
use basisgate::template::{standard_basis, standard_bases, BasisGate};
use basisgate::transpile::{
    fidelity as circuit_fidelity, parse_circuit, schedule, transpile_best, Comparison, FidelityParams, Synthesizer,
};
use basisgate::{Error, Result};
use serde::Serialize;
use std::path::Path;

const HAAR_TAG: u64 = 0x4841_4152;

const FAMILIES: [(&str, &str); 3] = [("iSWAP", "sqrt_iSWAP"), ("CNOT", "sqrt_CNOT"), ("B", "sqrt_B")];

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn speed_limit(spec: &str) -> Result<SpeedLimit> {
    match spec {
        "linear" => SpeedLimit::linear(1.0),
        "squared" => SpeedLimit::squared(1.0),
        path => SpeedLimit::from_csv(open(Path::new(path))?, false),
    }
}

fn check_d1q(d1q: f64) -> Result<()> {
    if d1q.is_finite() && d1q >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("d1q must be a nonnegative number, got {d1q}")))
    }
}

fn builder(b: &BuildArgs) -> CoverageBuilder {
    let mut cfg = if b.quick {
        CoverageConfig::quick(b.seed)
    } else {
        CoverageConfig {
            seed: b.seed,
            ..CoverageConfig::default()
        }
    };
    if let Some(n) = b.n {
        cfg.n_random = n;
    }
    if let Some(k) = b.kmax {
        cfg.k_max = k;
    }
    let builder = CoverageBuilder::new(cfg);
    if b.no_cache {
        builder
    } else {
        builder.with_cache(&b.cache_dir)
    }
}

fn haar_points(n: usize, seed: u64) -> Result<Vec<basisgate::weyl::WeylPoint>> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one Haar sample".into()));
    }
    Ok(haar_sample_points(n, derive_seed(seed, &[HAAR_TAG])))
}

fn json<T: Serialize + ?Sized>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn basis_by_alias(alias: &str, limit: &SpeedLimit) -> Result<BasisGate> {
    let name = match alias.to_ascii_lowercase().as_str() {
        "iswap" => "iSWAP",
        "sqiswap" | "sqrt_iswap" => "sqrt_iSWAP",
        "cnot" => "CNOT",
        "sqcnot" | "sqrt_cnot" => "sqrt_CNOT",
        "b" => "B",
        "sqb" | "sqrt_b" => "sqrt_B",
        _ => return Err(Error::UnknownBasis(alias.to_string())),
    };
    standard_basis(name, limit)
}

fn score_row(r: &ScoreReport, driven: bool) -> Vec<String> {
    vec![
        r.basis.clone(),
        driven.to_string(),
        num(r.t_min),
        num(r.cnot.applications),
        num(r.swap.applications),
        num(r.e_k_haar()),
        num(r.cnot.duration),
        num(r.swap.duration),
        num(r.e_d_haar()),
        num(r.w_score()),
    ]
}

pub fn scores(a: &ScoresArgs) -> Result<()> {
    let limit = speed_limit(&a.slf)?;
    check_d1q(a.d1q)?;
    let haar = haar_points(a.haar, a.build.seed)?;
    let b = builder(&a.build);
    let canonical = SpeedLimit::linear(1.0)?;
    let bases = standard_bases(&canonical)?;

    let mut reports: Vec<(ScoreReport, bool)> = Vec::new();
    let drives: &[bool] = if a.parallel { &[false, true] } else { &[false] };
    for &driven in drives {
        for basis in &bases {
            let set = b.build(basis, driven)?;
            let model = BasisCost::new(&set, &limit)?;
            reports.push((score_report(&model, a.d1q, a.lambda, &haar, None)?, driven));
        }
    }
    if a.parallel {
        for (full, frac) in FAMILIES {
            let joint = b
                .joint(&standard_basis(full, &canonical)?, &standard_basis(frac, &canonical)?)?
                .rescaled(&limit)?;
            reports.push((score_report(&joint, a.d1q, a.lambda, &haar, None)?, true));
        }
    }

    let text = match a.output.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut t = Table::new(&[
                "basis", "driven", "t_min", "k_cnot", "k_swap", "e_k_haar", "d_cnot", "d_swap", "e_d_haar", "d_w",
            ]);
            for (r, driven) in &reports {
                t.push(score_row(r, *driven));
            }
            t.to_csv()
        }
        Format::Json => json(&reports.iter().map(|(r, _)| r).collect::<Vec<_>>())?,
    };
    emit(a.output.out.as_deref(), &text)
}

fn vertices_csv(set: &CoverageSet) -> String {
    let mut t = Table::new(&["k", "side", "c1", "c2", "c3"]);
    for level in &set.levels {
        for (side, poly) in [("left", &level.left), ("right", &level.right)] {
            for v in &poly.vertices {
                let [c1, c2, c3] = v.to_array();
                t.push(vec![level.k.to_string(), side.into(), num(c1), num(c2), num(c3)]);
            }
        }
    }
    t.to_csv()
}

pub fn coverage(a: &CoverageArgs) -> Result<()> {
    let basis = basis_by_alias(&a.basis, &SpeedLimit::linear(1.0)?)?;
    let haar = haar_points(a.haar, a.build.seed)?;
    let set = builder(&a.build).build_partial(&basis, a.parallel)?;

    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir)?;
        let stem = if a.parallel {
            format!("{}-driven", a.basis.to_ascii_lowercase())
        } else {
            a.basis.to_ascii_lowercase()
        };
        std::fs::write(dir.join(format!("{stem}.json")), set.to_json()?)?;
        std::fs::write(dir.join(format!("{stem}-vertices.csv")), vertices_csv(&set))?;
    }

    let mut t = Table::new(&["k", "vertices", "volume", "haar_fraction", "reached"]);
    for level in &set.levels {
        let reached: Vec<String> = level
            .targets
            .iter()
            .filter(|o| o.reached)
            .map(|o| format!("{:?}", o.target).to_ascii_lowercase())
            .collect();
        t.push(vec![
            level.k.to_string(),
            (level.left.vertices.len() + level.right.vertices.len()).to_string(),
            num(level.left.volume() + level.right.volume()),
            num(haar_volume(&set, level.k, &haar)),
            reached.join(" "),
        ]);
    }
    emit(None, &t.to_csv())?;
    if set.complete {
        Ok(())
    } else {
        Err(Error::IncompleteCoverage {
            basis: set.basis.name.clone(),
            k_max: set.config.k_max,
            detail: "the top level leaves part of the chamber uncovered".into(),
        })
    }
}

pub fn sweep(a: &SweepArgs) -> Result<()> {
    let limit = speed_limit(&a.slf)?;
    check_d1q(a.d1q)?;
    if a.grid == 0 {
        return Err(Error::InvalidParameter("grid must be positive".into()));
    }
    let haar = haar_points(a.haar, a.build.seed)?;
    let metric = match a.metric {
        MetricArg::Haar => Metric::Haar,
        MetricArg::Cnot => Metric::Cnot,
        MetricArg::Swap => Metric::Swap,
        MetricArg::W => Metric::Weighted(a.lambda),
    };
    let b = builder(&a.build);
    let grid = SweepGrid {
        rays: a.grid,
        steps: a.grid,
    }
    .cells();
    let profiles: Box<dyn ProfileSource + '_> = if !a.fast {
        Box::new(ExactProfiles { builder: &b, haar })
    } else {
        let sets = standard_bases(&SpeedLimit::linear(1.0)?)?
            .iter()
            .map(|basis| b.build(basis, false))
            .collect::<Result<Vec<_>>>()?;
        Box::new(InterpolatedProfiles::new(&anchors_from_sets(&sets, &haar)?)?)
    };
    let result = best_basis_sweep(&limit, a.d1q, metric, &grid, profiles.as_ref())?;
    eprintln!(
        "best: theta_c={} theta_g={} score={}",
        num(result.best.theta_c),
        num(result.best.theta_g),
        opt(result.best.score)
    );

    let text = match a.output.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut t = Table::new(&["theta_c", "theta_g", "t_min", "score", "applications"]);
            for c in &result.cells {
                t.push(vec![
                    num(c.theta_c),
                    num(c.theta_g),
                    num(c.t_min),
                    opt(c.score),
                    opt(c.applications),
                ]);
            }
            t.to_csv()
        }
        Format::Json => json(&result)?,
    };
    emit(a.output.out.as_deref(), &text)
}

fn fidelity_params(f: &FidelityParamArgs) -> Result<FidelityParams> {
    FidelityParams::new(f.d_iswap, f.d_1q, f.t1)
}

fn read_circuit(path: &Path) -> Result<basisgate::transpile::Circuit> {
    parse_circuit(&std::io::read_to_string(open(path)?)?).map_err(|e| match e {
        Error::Schema { location, message } => Error::Schema {
            location: format!("{}: {location}", path.display()),
            message,
        },
        e => e,
    })
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "circuit".into())
}

pub fn transpile(a: &TranspileArgs) -> Result<()> {
    let fp = fidelity_params(&a.fidelity)?;
    let circuits = a
        .circuits
        .iter()
        .map(|p| Ok((stem(p), read_circuit(p)?)))
        .collect::<Result<Vec<_>>>()?;

    let b = builder(&a.build);
    let limit = SpeedLimit::linear(1.0)?;
    let full = standard_basis("iSWAP", &limit)?;
    let frac = standard_basis("sqrt_iSWAP", &limit)?;
    let undriven = b.build(&frac, false)?;
    let joint = b.joint(&full, &frac)?;
    let d1q = fp.d1q_pulses();
    let baseline = Synthesizer::baseline(undriven.clone(), d1q)?;
    let optimized = Synthesizer::optimized(joint, undriven, d1q)?;

    let mut report = Vec::with_capacity(circuits.len());
    for (name, c) in &circuits {
        let base = transpile_best(c, &baseline, &fp, a.build.seed, a.runs)?;
        let best = transpile_best(c, &optimized, &fp, a.build.seed, a.runs)?;
        if let Some(dir) = &a.emit {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(format!("{name}.baseline.json")), base.circuit.to_json())?;
            std::fs::write(dir.join(format!("{name}.optimized.json")), best.circuit.to_json())?;
        }
        report.push(Comparison::from_runs(name, c.n_qubits, base.summary, best.summary));
    }

    let text = match a.output.format.unwrap_or(Format::Json) {
        Format::Json => json(&report)?,
        Format::Csv => {
            let mut t = Table::new(&[
                "circuit",
                "n_qubits",
                "baseline_ns",
                "optimized_ns",
                "duration_improvement",
                "f_t_baseline",
                "f_t_optimized",
                "f_q_improvement",
                "f_t_improvement",
            ]);
            for r in &report {
                t.push(vec![
                    r.name.clone(),
                    r.n_qubits.to_string(),
                    num(r.baseline.duration_ns),
                    num(r.optimized.duration_ns),
                    num(r.duration_improvement),
                    num(r.baseline.f_t),
                    num(r.optimized.f_t),
                    num(r.f_q_improvement),
                    num(r.f_t_improvement),
                ]);
            }
            t.to_csv()
        }
    };
    emit(a.output.out.as_deref(), &text)
}

#[derive(Serialize)]
struct FidelityReport {
    makespan_ns: f64,
    wire_durations: Vec<f64>,
    f_q: Vec<f64>,
    f_t: f64,
}

pub fn fidelity(a: &FidelityArgs) -> Result<()> {
    let fp = fidelity_params(&a.fidelity)?;
    let (makespan, wires) = match (&a.circuit, a.duration_ns) {
        (Some(path), _) => {
            let s = schedule(&read_circuit(path)?, &fp)?;
            (s.makespan, s.wire_durations)
        }
        (None, Some(d)) if d.is_finite() && d >= 0.0 => (d, vec![d; a.qubits]),
        (None, Some(d)) => return Err(Error::InvalidParameter(format!("duration must be nonnegative, got {d}"))),
        (None, None) => {
            return Err(Error::InvalidParameter("give a circuit file or --duration-ns".into()));
        }
    };
    let sched = basisgate::transpile::Schedule {
        ops: Vec::new(),
        wire_durations: wires,
        makespan,
    };
    let f = circuit_fidelity(&sched, &fp);
    let report = FidelityReport {
        makespan_ns: makespan,
        wire_durations: sched.wire_durations,
        f_q: f.per_qubit,
        f_t: f.total,
    };
    let text = match a.output.format.unwrap_or(Format::Json) {
        Format::Json => json(&report)?,
        Format::Csv => {
            let mut t = Table::new(&["qubit", "duration_ns", "f_q"]);
            for (q, (d, f)) in report.wire_durations.iter().zip(&report.f_q).enumerate() {
                t.push(vec![q.to_string(), num(*d), num(*f)]);
            }
            t.push(vec!["total".into(), num(report.makespan_ns), num(report.f_t)]);
            t.to_csv()
        }
    };
    emit(a.output.out.as_deref(), &text)
}

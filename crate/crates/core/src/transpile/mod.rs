//! Circuit transpilation onto conversion/gain pulses.
//!
//! Adjacent gates are gathered into two-qubit blocks, each block is
//! synthesized from basis pulses and single-qubit layers, neighbouring
//! single-qubit gates are merged, and the result is scheduled to estimate
//! decoherence-limited fidelity.

mod blocks;
mod circuit;
mod schedule;
mod synth;

pub use blocks::{consolidate_blocks, Block, Item};
pub use circuit::{circuit_from_value, parse_circuit, Circuit, Gate, GateMatrix, GateOp};
pub use schedule::{consolidate_1q, fidelity, op_duration, schedule, Fidelity, FidelityParams, Schedule, ScheduledOp};
pub use synth::{pulse_time_floor, ClassPlan, FitConfig, Step, Strategy, Synthesizer, CLASS_TOL, SYNTHESIS_TOL};

use crate::coverage::derive_seed;
use crate::error::{Error, Result};
use crate::weyl::{self, Unitary4, WeylPoint};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;

/// What one transpiler run produced.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub strategy: Strategy,
    pub seed: u64,
    pub duration_pulses: f64,
    pub duration_ns: f64,
    pub f_q: Vec<f64>,
    pub f_t: f64,
    pub blocks: usize,
    pub pulses: usize,
    pub single_qubit_gates: usize,
    /// Largest distance between a block and its synthesis.
    pub max_block_error: f64,
}

#[derive(Clone, Debug)]
pub struct TranspileOutput {
    pub circuit: Circuit,
    pub schedule: Schedule,
    pub fidelity: Fidelity,
    pub summary: RunSummary,
    /// Two-qubit pulse time and class of every synthesized block.
    pub block_pulse_times: Vec<(WeylPoint, f64)>,
}

fn class_key(p: WeylPoint) -> [i64; 3] {
    p.to_array().map(|x| (x * 1e8).round() as i64)
}

/// Runs the whole pipeline on `c`. Blocks sharing a Weyl class reuse one
/// fitted template.
pub fn transpile(c: &Circuit, synth: &Synthesizer, fp: &FidelityParams, seed: u64) -> Result<TranspileOutput> {
    let items = consolidate_blocks(c);
    let blocks: Vec<(usize, &Block, WeylPoint)> = items
        .iter()
        .enumerate()
        .filter_map(|(i, it)| match it {
            Item::Block(b) => Some((i, b, weyl::canonical_coordinate(&Unitary4::from_trusted(b.matrix)))),
            Item::Single(_) => None,
        })
        .collect();

    let mut classes: Vec<WeylPoint> = Vec::new();
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    for (_, _, p) in &blocks {
        index.entry(class_key(*p)).or_insert_with(|| {
            classes.push(*p);
            classes.len() - 1
        });
    }
    let plans: Vec<ClassPlan> = classes
        .par_iter()
        .enumerate()
        .map(|(i, p)| synth.plan_class(*p, derive_seed(seed, &[i as u64])))
        .collect::<Result<_>>()?;

    let decomposed: Vec<(usize, Vec<GateOp>, f64)> = blocks
        .par_iter()
        .enumerate()
        .map(|(bi, (item, b, p))| {
            let plan = &plans[index[&class_key(*p)]];
            let ops = synth.decompose(&b.matrix, b.wires, plan).map_err(|e| match e {
                Error::SynthesisFailure { qubits, reason } => Error::SynthesisFailure {
                    qubits,
                    reason: format!("block {bi}: {reason}"),
                },
                e => e,
            })?;
            let err = weyl::match_locally(&b.matrix, &plan.matrix()).1;
            Ok((*item, ops, err))
        })
        .collect::<Result<_>>()?;

    let mut by_item: HashMap<usize, &Vec<GateOp>> = HashMap::new();
    let mut max_block_error: f64 = 0.0;
    for (item, ops, err) in &decomposed {
        by_item.insert(*item, ops);
        max_block_error = max_block_error.max(*err);
    }
    let mut raw = Circuit::new(c.n_qubits);
    for (i, it) in items.iter().enumerate() {
        match it {
            Item::Single(op) => raw.ops.push(op.clone()),
            Item::Block(_) => raw.ops.extend(by_item[&i].iter().cloned()),
        }
    }
    let out = consolidate_1q(&raw);
    let sched = schedule(&out, fp)?;
    let fid = fidelity(&sched, fp);
    let pulses = out.ops.iter().filter(|o| o.gate.pulse_time().is_some()).count();
    let summary = RunSummary {
        strategy: synth.strategy,
        seed,
        duration_pulses: sched.makespan / fp.d_iswap,
        duration_ns: sched.makespan,
        f_q: fid.per_qubit.clone(),
        f_t: fid.total,
        blocks: blocks.len(),
        pulses,
        single_qubit_gates: out.ops.len() - pulses,
        max_block_error,
    };
    let block_pulse_times = blocks
        .iter()
        .map(|(_, _, p)| (*p, plans[index[&class_key(*p)]].pulse_time()))
        .collect();
    Ok(TranspileOutput {
        circuit: out,
        schedule: sched,
        fidelity: fid,
        summary,
        block_pulse_times,
    })
}

/// Best of `runs` seeded runs, by makespan.
pub fn transpile_best(
    c: &Circuit,
    synth: &Synthesizer,
    fp: &FidelityParams,
    seed: u64,
    runs: usize,
) -> Result<TranspileOutput> {
    let mut best: Option<TranspileOutput> = None;
    for r in 0..runs.max(1) {
        let out = transpile(c, synth, fp, derive_seed(seed, &[0x7255, r as u64]))?;
        if best.as_ref().is_none_or(|b| out.schedule.makespan < b.schedule.makespan - 1e-9) {
            best = Some(out);
        }
    }
    Ok(best.expect("at least one run"))
}

/// Baseline against optimized transpilation of one circuit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub name: String,
    pub n_qubits: usize,
    pub baseline: RunSummary,
    pub optimized: RunSummary,
    /// Relative reductions and gains, in percent.
    pub duration_improvement: f64,
    pub f_q_improvement: f64,
    pub f_t_improvement: f64,
}

pub fn compare(
    name: &str,
    c: &Circuit,
    baseline: &Synthesizer,
    optimized: &Synthesizer,
    fp: &FidelityParams,
    seed: u64,
    runs: usize,
) -> Result<Comparison> {
    let b = transpile_best(c, baseline, fp, seed, runs)?.summary;
    let o = transpile_best(c, optimized, fp, seed, runs)?.summary;
    Ok(Comparison::from_runs(name, c.n_qubits, b, o))
}

impl Comparison {
    pub fn from_runs(name: &str, n_qubits: usize, b: RunSummary, o: RunSummary) -> Self {
        let gain = |new: f64, old: f64| if old > 0.0 { 100.0 * (new - old) / old } else { 0.0 };
        let mean = |v: &[f64]| if v.is_empty() { 1.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
        Self {
            name: name.to_string(),
            n_qubits,
            duration_improvement: -gain(o.duration_ns, b.duration_ns),
            f_q_improvement: gain(mean(&o.f_q), mean(&b.f_q)),
            f_t_improvement: gain(o.f_t, b.f_t),
            baseline: b,
            optimized: o,
        }
    }
}

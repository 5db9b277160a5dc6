//! Single-qubit merging, as-soon-as-possible scheduling and decoherence fidelity.

use super::circuit::{Circuit, Gate, GateMatrix, GateOp};
use super::synth::u3_of;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat2};
use serde::{Deserialize, Serialize};

/// Gate durations and qubit lifetime.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityParams {
    /// Full iSWAP pulse, ns.
    pub d_iswap: f64,
    /// Any single-qubit gate, ns.
    pub d_1q: f64,
    /// Lifetime, µs.
    pub t1: f64,
}

impl Default for FidelityParams {
    fn default() -> Self {
        Self {
            d_iswap: 100.0,
            d_1q: 25.0,
            t1: 100.0,
        }
    }
}

impl FidelityParams {
    pub fn new(d_iswap: f64, d_1q: f64, t1: f64) -> Result<Self> {
        let p = Self { d_iswap, d_1q, t1 };
        if [d_iswap, d_1q, t1].iter().all(|x| x.is_finite() && *x > 0.0) {
            Ok(p)
        } else {
            Err(Error::InvalidParameter(format!("fidelity parameters must be positive: {p:?}")))
        }
    }

    /// Single-qubit duration in pulse units.
    pub fn d1q_pulses(&self) -> f64 {
        self.d_1q / self.d_iswap
    }

    /// Infidelity of an `n`-qubit circuit that takes `duration_ns`.
    pub fn infidelity(&self, duration_ns: f64, n_qubits: usize) -> f64 {
        1.0 - (-(n_qubits as f64) * duration_ns / (self.t1 * 1e3)).exp()
    }
}

/// Merges every run of single-qubit ops on a wire into one `u3`, dropping
/// runs that amount to the identity.
pub fn consolidate_1q(c: &Circuit) -> Circuit {
    let mut out = Circuit::new(c.n_qubits);
    let mut pending: Vec<Option<Mat2>> = vec![None; c.n_qubits];
    let flush = |out: &mut Circuit, pending: &mut Vec<Option<Mat2>>, q: usize| {
        if let Some(m) = pending[q].take() {
            if !linalg::is_identity_up_to_phase2(&m, 1e-9) {
                out.ops.push(GateOp::new(u3_of(&m), &[q]));
            }
        }
    };
    for op in &c.ops {
        match op.gate.matrix() {
            GateMatrix::One(m) => {
                let q = op.qubits[0];
                pending[q] = Some(m * pending[q].unwrap_or_else(Mat2::identity));
            }
            GateMatrix::Two(_) => {
                for &q in &op.qubits {
                    flush(&mut out, &mut pending, q);
                }
                out.ops.push(op.clone());
            }
        }
    }
    for q in 0..c.n_qubits {
        flush(&mut out, &mut pending, q);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScheduledOp {
    pub start: f64,
    pub end: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Schedule {
    /// Start and end of every op, ns, in circuit order.
    pub ops: Vec<ScheduledOp>,
    /// Per-qubit decoherence window, ns. Idle time counts, so every wire
    /// lasts the whole makespan.
    pub wire_durations: Vec<f64>,
    pub makespan: f64,
}

/// Duration of one op in ns: single-qubit gates take `d_1q`, pulses their
/// normalized length times `d_iswap`. Other two-qubit gates have no
/// calibrated duration.
pub fn op_duration(op: &GateOp, fp: &FidelityParams) -> Option<f64> {
    match &op.gate {
        g if g.arity() == 1 => Some(fp.d_1q),
        Gate::Pulse(p) => Some(p.pulse.duration * fp.d_iswap),
        _ => None,
    }
}

/// As-soon-as-possible schedule of `c`.
pub fn schedule(c: &Circuit, fp: &FidelityParams) -> Result<Schedule> {
    let mut ready = vec![0.0_f64; c.n_qubits];
    let mut ops = Vec::with_capacity(c.ops.len());
    for (i, op) in c.ops.iter().enumerate() {
        let d = op_duration(op, fp).ok_or_else(|| Error::Schema {
            location: format!("ops[{i}]"),
            message: format!("`{}` has no calibrated duration; transpile first", op.gate.name()),
        })?;
        let start = op.qubits.iter().map(|&q| ready[q]).fold(0.0, f64::max);
        let end = start + d;
        for &q in &op.qubits {
            ready[q] = end;
        }
        ops.push(ScheduledOp { start, end });
    }
    let makespan = ready.iter().copied().fold(0.0, f64::max);
    Ok(Schedule {
        ops,
        wire_durations: vec![makespan; c.n_qubits],
        makespan,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fidelity {
    /// `exp(-D/T1)` per wire.
    pub per_qubit: Vec<f64>,
    /// Product over wires.
    pub total: f64,
}

pub fn fidelity(s: &Schedule, fp: &FidelityParams) -> Fidelity {
    let t1_ns = fp.t1 * 1e3;
    let per_qubit: Vec<f64> = s.wire_durations.iter().map(|d| (-d / t1_ns).exp()).collect();
    let total = per_qubit.iter().product();
    Fidelity { per_qubit, total }
}

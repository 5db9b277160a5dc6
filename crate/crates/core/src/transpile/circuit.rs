//! Gate-level circuits and their JSON form.

use crate::error::{Error, Result};
use crate::hamiltonian::ConversionGainParams;
use crate::linalg::{self, c, kron, Mat2, Mat4};
use crate::template::RealizedPulse;
use crate::weyl::{self, WeylPoint};
use nalgebra::DMatrix;
use serde_json::{json, Value};

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    Rz(f64),
    Rx(f64),
    Ry(f64),
    Sx,
    X,
    H,
    U3(f64, f64, f64),
    Cx,
    Cz,
    Swap,
    Iswap,
    Rzz(f64),
    /// Controlled phase.
    Cp(f64),
    Canonical(WeylPoint),
    Pulse(RealizedPulse),
}

pub enum GateMatrix {
    One(Mat2),
    Two(Mat4),
}

impl Gate {
    pub fn name(&self) -> &'static str {
        match self {
            Gate::Rz(_) => "rz",
            Gate::Rx(_) => "rx",
            Gate::Ry(_) => "ry",
            Gate::Sx => "sx",
            Gate::X => "x",
            Gate::H => "h",
            Gate::U3(..) => "u3",
            Gate::Cx => "cx",
            Gate::Cz => "cz",
            Gate::Swap => "swap",
            Gate::Iswap => "iswap",
            Gate::Rzz(_) => "rzz",
            Gate::Cp(_) => "cp",
            Gate::Canonical(_) => "canonical",
            Gate::Pulse(_) => "pulse",
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Gate::Rz(_) | Gate::Rx(_) | Gate::Ry(_) | Gate::Sx | Gate::X | Gate::H | Gate::U3(..) => 1,
            _ => 2,
        }
    }

    /// Parameters in their JSON order. Pulses are written as
    /// `[g_c, g_g, φ_c, φ_g, duration, ε1…, ε2…]`.
    pub fn params(&self) -> Vec<f64> {
        match self {
            Gate::Rz(t) | Gate::Rx(t) | Gate::Ry(t) | Gate::Rzz(t) | Gate::Cp(t) => vec![*t],
            Gate::U3(a, b, l) => vec![*a, *b, *l],
            Gate::Canonical(p) => p.to_array().to_vec(),
            Gate::Pulse(p) => {
                let q = &p.pulse;
                let mut v = vec![q.g_c, q.g_g, q.phi_c, q.phi_g, q.duration];
                v.extend_from_slice(&p.eps1);
                v.extend_from_slice(&p.eps2);
                v
            }
            _ => Vec::new(),
        }
    }

    pub fn from_parts(name: &str, p: &[f64]) -> std::result::Result<Gate, String> {
        let want = |n: usize| -> std::result::Result<(), String> {
            if p.len() == n {
                Ok(())
            } else {
                Err(format!("`{name}` takes {n} parameters, got {}", p.len()))
            }
        };
        let g = match name {
            "rz" => want(1).map(|_| Gate::Rz(p[0]))?,
            "rx" => want(1).map(|_| Gate::Rx(p[0]))?,
            "ry" => want(1).map(|_| Gate::Ry(p[0]))?,
            "sx" => want(0).map(|_| Gate::Sx)?,
            "x" => want(0).map(|_| Gate::X)?,
            "h" => want(0).map(|_| Gate::H)?,
            "u3" => want(3).map(|_| Gate::U3(p[0], p[1], p[2]))?,
            "cx" => want(0).map(|_| Gate::Cx)?,
            "cz" => want(0).map(|_| Gate::Cz)?,
            "swap" => want(0).map(|_| Gate::Swap)?,
            "iswap" => want(0).map(|_| Gate::Iswap)?,
            "rzz" => want(1).map(|_| Gate::Rzz(p[0]))?,
            "cp" => want(1).map(|_| Gate::Cp(p[0]))?,
            "canonical" => {
                want(3)?;
                let pt = WeylPoint::new(p[0], p[1], p[2]);
                if weyl::fold_coordinate(pt.to_array()).class_distance(pt) > 1e-4 {
                    return Err(format!("coordinate {:?} lies outside the Weyl chamber", p));
                }
                Gate::Canonical(pt)
            }
            "pulse" => {
                if p.len() < 5 || !(p.len() - 5).is_multiple_of(2) {
                    return Err("`pulse` takes g_c, g_g, φ_c, φ_g, duration and two equal drive lists".into());
                }
                let n = (p.len() - 5) / 2;
                let pulse = ConversionGainParams::new(p[0], p[1], p[4]).with_phases(p[2], p[3]);
                if pulse.duration < 0.0 {
                    return Err("pulse duration is negative".into());
                }
                Gate::Pulse(RealizedPulse {
                    pulse,
                    eps1: p[5..5 + n].to_vec(),
                    eps2: p[5 + n..].to_vec(),
                })
            }
            other => return Err(format!("unknown gate `{other}`")),
        };
        if p.iter().any(|x| !x.is_finite()) {
            return Err("parameters must be finite".into());
        }
        Ok(g)
    }

    pub fn matrix(&self) -> GateMatrix {
        let one = |m: Mat2| GateMatrix::One(m);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Gate::Rz(t) => one(linalg::rz(*t)),
            Gate::Rx(t) => one(linalg::rx(*t)),
            Gate::Ry(t) => one(linalg::ry(*t)),
            Gate::Sx => one(Mat2::new(c(0.5, 0.5), c(0.5, -0.5), c(0.5, -0.5), c(0.5, 0.5))),
            Gate::X => one(linalg::pauli_x()),
            Gate::H => one(Mat2::new(c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0))),
            Gate::U3(a, b, l) => one(linalg::u3(*a, *b, *l)),
            Gate::Cx => GateMatrix::Two(permutation(&[0, 1, 3, 2])),
            Gate::Swap => GateMatrix::Two(permutation(&[0, 2, 1, 3])),
            Gate::Cz => GateMatrix::Two(diagonal([0.0, 0.0, 0.0, std::f64::consts::PI])),
            Gate::Cp(t) => GateMatrix::Two(diagonal([0.0, 0.0, 0.0, *t])),
            Gate::Rzz(t) => GateMatrix::Two(diagonal([-t / 2.0, t / 2.0, t / 2.0, -t / 2.0])),
            Gate::Iswap => {
                let mut m = Mat4::zeros();
                m[(0, 0)] = c(1.0, 0.0);
                m[(3, 3)] = c(1.0, 0.0);
                m[(1, 2)] = c(0.0, 1.0);
                m[(2, 1)] = c(0.0, 1.0);
                GateMatrix::Two(m)
            }
            Gate::Canonical(p) => GateMatrix::Two(weyl::canonical_gate(*p).into_matrix()),
            Gate::Pulse(p) => GateMatrix::Two(p.matrix()),
        }
    }

    /// Length of a pulse in normalized units; `None` for ordinary gates.
    pub fn pulse_time(&self) -> Option<f64> {
        match self {
            Gate::Pulse(p) => Some(p.pulse.duration),
            _ => None,
        }
    }
}

fn permutation(map: &[usize; 4]) -> Mat4 {
    let mut m = Mat4::zeros();
    for (col, &row) in map.iter().enumerate() {
        m[(row, col)] = c(1.0, 0.0);
    }
    m
}

fn diagonal(phases: [f64; 4]) -> Mat4 {
    let mut m = Mat4::zeros();
    for (i, p) in phases.iter().enumerate() {
        m[(i, i)] = linalg::C64::from_polar(1.0, *p);
    }
    m
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateOp {
    pub gate: Gate,
    pub qubits: Vec<usize>,
}

impl GateOp {
    pub fn new(gate: Gate, qubits: &[usize]) -> Self {
        Self {
            gate,
            qubits: qubits.to_vec(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    pub ops: Vec<GateOp>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            ops: Vec::new(),
        }
    }

    /// Appends `gate`, checking its wires.
    pub fn push(&mut self, gate: Gate, qubits: &[usize]) -> Result<()> {
        let at = format!("ops[{}]", self.ops.len());
        check_wires(&gate, qubits, self.n_qubits).map_err(|message| Error::Schema {
            location: format!("{at}.q"),
            message,
        })?;
        self.ops.push(GateOp::new(gate, qubits));
        Ok(())
    }

    pub fn two_qubit_count(&self) -> usize {
        self.ops.iter().filter(|o| o.qubits.len() == 2).count()
    }

    pub fn to_json_value(&self) -> Value {
        let ops: Vec<Value> = self
            .ops
            .iter()
            .map(|o| {
                let p = o.gate.params();
                if p.is_empty() {
                    json!({"g": o.gate.name(), "q": o.qubits})
                } else {
                    json!({"g": o.gate.name(), "q": o.qubits, "p": p})
                }
            })
            .collect();
        json!({"n": self.n_qubits, "ops": ops})
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("circuit serializes")
    }

    /// Dense unitary with qubit 0 as the most significant tensor factor.
    pub fn unitary(&self) -> Result<DMatrix<linalg::C64>> {
        if self.n_qubits > 10 {
            return Err(Error::Schema {
                location: "n".into(),
                message: "dense unitaries are limited to 10 qubits".into(),
            });
        }
        let dim = 1usize << self.n_qubits;
        let mut u = DMatrix::<linalg::C64>::identity(dim, dim);
        for op in &self.ops {
            u = embed(&op.gate.matrix(), &op.qubits, self.n_qubits) * u;
        }
        Ok(u)
    }
}

fn embed(m: &GateMatrix, qubits: &[usize], n: usize) -> DMatrix<linalg::C64> {
    let dim = 1usize << n;
    let bit = |q: usize| n - 1 - q;
    let mut out = DMatrix::<linalg::C64>::zeros(dim, dim);
    for col in 0..dim {
        match m {
            GateMatrix::One(g) => {
                let b = bit(qubits[0]);
                let x = (col >> b) & 1;
                for y in 0..2 {
                    let row = (col & !(1 << b)) | (y << b);
                    out[(row, col)] += g[(y, x)];
                }
            }
            GateMatrix::Two(g) => {
                let (ba, bb) = (bit(qubits[0]), bit(qubits[1]));
                let x = (((col >> ba) & 1) << 1) | ((col >> bb) & 1);
                for y in 0..4 {
                    let row = (col & !(1 << ba) & !(1 << bb)) | ((y >> 1) << ba) | ((y & 1) << bb);
                    out[(row, col)] += g[(y, x)];
                }
            }
        }
    }
    out
}

fn check_wires(gate: &Gate, q: &[usize], n: usize) -> std::result::Result<(), String> {
    if q.len() != gate.arity() {
        return Err(format!("`{}` acts on {} qubits, got {}", gate.name(), gate.arity(), q.len()));
    }
    if let Some(bad) = q.iter().find(|&&x| x >= n) {
        return Err(format!("qubit {bad} out of range for a {n}-qubit circuit"));
    }
    if q.len() == 2 && q[0] == q[1] {
        return Err("two-qubit gate on a single wire".into());
    }
    Ok(())
}

/// Parses `{"n": int, "ops": [{"g": name, "q": [ints], "p": [floats]?}]}`.
pub fn parse_circuit(document: &str) -> Result<Circuit> {
    let v: Value = serde_json::from_str(document).map_err(|e| Error::Schema {
        location: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    circuit_from_value(&v)
}

pub fn circuit_from_value(v: &Value) -> Result<Circuit> {
    let schema = |location: String, message: String| Error::Schema { location, message };
    let obj = v
        .as_object()
        .ok_or_else(|| schema("document".into(), "expected an object".into()))?;
    if let Some(k) = obj.keys().find(|k| !["n", "ops", "name"].contains(&k.as_str())) {
        return Err(schema(k.clone(), "unexpected field".into()));
    }
    let n = obj
        .get("n")
        .and_then(Value::as_u64)
        .ok_or_else(|| schema("n".into(), "expected a non-negative integer".into()))? as usize;
    let ops = obj
        .get("ops")
        .and_then(Value::as_array)
        .ok_or_else(|| schema("ops".into(), "expected an array".into()))?;
    let mut circuit = Circuit::new(n);
    for (i, op) in ops.iter().enumerate() {
        let at = |f: &str| format!("ops[{i}]{f}");
        let o = op
            .as_object()
            .ok_or_else(|| schema(at(""), "expected an object".into()))?;
        if let Some(k) = o.keys().find(|k| !["g", "q", "p"].contains(&k.as_str())) {
            return Err(schema(at(&format!(".{k}")), "unexpected field".into()));
        }
        let name = o
            .get("g")
            .and_then(Value::as_str)
            .ok_or_else(|| schema(at(".g"), "expected a gate name".into()))?;
        let q = o
            .get("q")
            .and_then(Value::as_array)
            .ok_or_else(|| schema(at(".q"), "expected an array of qubit indices".into()))?
            .iter()
            .map(|x| x.as_u64().map(|x| x as usize))
            .collect::<Option<Vec<usize>>>()
            .ok_or_else(|| schema(at(".q"), "qubit indices must be non-negative integers".into()))?;
        let p = match o.get("p") {
            None => Vec::new(),
            Some(p) => p
                .as_array()
                .and_then(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<f64>>>())
                .ok_or_else(|| schema(at(".p"), "expected an array of numbers".into()))?,
        };
        let gate = Gate::from_parts(name, &p).map_err(|m| schema(at(if m.contains("unknown") { ".g" } else { ".p" }), m))?;
        check_wires(&gate, &q, n).map_err(|m| schema(at(".q"), m))?;
        circuit.ops.push(GateOp::new(gate, &q));
    }
    Ok(circuit)
}

/// Matrix of a two-qubit op seen on the ordered wire pair `wires`.
pub(crate) fn op_on_pair(op: &GateOp, wires: [usize; 2]) -> Mat4 {
    match op.gate.matrix() {
        GateMatrix::One(m) => {
            if op.qubits[0] == wires[0] {
                kron(&m, &Mat2::identity())
            } else {
                kron(&Mat2::identity(), &m)
            }
        }
        GateMatrix::Two(m) => {
            if op.qubits[0] == wires[0] {
                m
            } else {
                let s = permutation(&[0, 2, 1, 3]);
                s * m * s
            }
        }
    }
}

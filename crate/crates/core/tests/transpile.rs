use basisgate::coverage::{CoverageBuilder, CoverageConfig, CoverageSet, JointCoverage};
use basisgate::speedlimit::SpeedLimit;
use basisgate::template::standard_basis;
use basisgate::transpile::*;
use basisgate::weyl::WeylPoint;
use basisgate::Error;
use nalgebra::DMatrix;
use basisgate::linalg::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::OnceLock;

fn sets() -> &'static (CoverageSet, JointCoverage) {
    static SETS: OnceLock<(CoverageSet, JointCoverage)> = OnceLock::new();
    SETS.get_or_init(|| {
        let b = CoverageBuilder::new(CoverageConfig {
            n_random: 400,
            ..CoverageConfig::quick(11)
        })
        .with_cache(concat!(env!("CARGO_TARGET_TMPDIR"), "/coverage-tests"));
        let limit = SpeedLimit::linear(1.0).unwrap();
        let full = standard_basis("iSWAP", &limit).unwrap();
        let frac = standard_basis("sqrt_iSWAP", &limit).unwrap();
        (b.build(&frac, false).unwrap(), b.joint(&full, &frac).unwrap())
    })
}

fn synthesizers() -> [Synthesizer; 2] {
    let (undriven, joint) = sets().clone();
    let d1q = FidelityParams::default().d1q_pulses();
    [
        Synthesizer::baseline(undriven.clone(), d1q).unwrap(),
        Synthesizer::optimized(joint, undriven, d1q).unwrap(),
    ]
}

/// `1 − |tr(U†V)|/dim`, zero iff equal up to global phase.
fn phase_infidelity(u: &DMatrix<C64>, v: &DMatrix<C64>) -> f64 {
    1.0 - (u.adjoint() * v).trace().norm() / u.nrows() as f64
}

fn circuit(doc: &str) -> Circuit {
    parse_circuit(doc).unwrap()
}

#[test]
fn parses_documents() {
    let c = circuit(r#"{"n": 3, "name": "demo", "ops": [{"g": "h", "q": [0]}, {"g": "rz", "q": [2], "p": [0.5]}, {"g": "cx", "q": [0, 2]}]}"#);
    assert_eq!(c.n_qubits, 3);
    assert_eq!(c.ops.len(), 3);
    assert_eq!(c.ops[1].gate, Gate::Rz(0.5));
    assert_eq!(c.two_qubit_count(), 1);
    assert_eq!(parse_circuit(&c.to_json()).unwrap(), c);
}

#[test]
fn schema_errors_name_their_location() {
    let cases = [
        (r#"{"n": 2, "ops": [{"g": "cx", "q": [0, 2]}]}"#, "ops[0].q"),
        (r#"{"n": 2, "ops": [{"g": "frob", "q": [0]}]}"#, "ops[0].g"),
        (r#"{"n": 2, "ops": [{"g": "rz", "q": [0]}]}"#, "ops[0].p"),
        (r#"{"n": 2, "ops": [{"g": "cx", "q": [1, 1]}]}"#, "ops[0].q"),
        (r#"{"n": 2, "ops": [{"g": "h", "q": [0], "x": 1}]}"#, "ops[0].x"),
        (r#"{"n": -1, "ops": []}"#, "n"),
        (r#"{"n": 2}"#, "ops"),
        (r#"[1, 2]"#, "document"),
    ];
    for (doc, loc) in cases {
        match parse_circuit(doc) {
            Err(Error::Schema { location, .. }) => assert_eq!(location, loc, "{doc}"),
            other => panic!("{doc}: {other:?}"),
        }
    }
    assert!(matches!(parse_circuit("{"), Err(Error::Schema { .. })));
}

#[test]
fn merges_single_qubit_runs() {
    let c = circuit(r#"{"n": 2, "ops": [{"g": "rz", "q": [0], "p": [0.3]}, {"g": "rz", "q": [0], "p": [0.4]}]}"#);
    let m = consolidate_1q(&c);
    assert_eq!(m.ops.len(), 1);
    assert!(phase_infidelity(&m.unitary().unwrap(), &c.unitary().unwrap()) < 1e-12);

    let c = circuit(r#"{"n": 1, "ops": [{"g": "h", "q": [0]}, {"g": "h", "q": [0]}]}"#);
    assert!(consolidate_1q(&c).ops.is_empty());

    let c = circuit(r#"{"n": 2, "ops": [{"g": "h", "q": [0]}, {"g": "cx", "q": [0, 1]}, {"g": "h", "q": [0]}]}"#);
    assert_eq!(consolidate_1q(&c).ops.len(), 3);
}

#[test]
fn schedules_in_parallel() {
    let fp = FidelityParams::default();
    let s = schedule(&Circuit::new(3), &fp).unwrap();
    assert_eq!(s.makespan, 0.0);
    assert_eq!(fidelity(&s, &fp).total, 1.0);

    let c = circuit(r#"{"n": 3, "ops": [{"g": "h", "q": [0]}, {"g": "h", "q": [1]}, {"g": "rx", "q": [0], "p": [1.0]}]}"#);
    let s = schedule(&c, &fp).unwrap();
    assert_eq!(s.makespan, 50.0);
    assert_eq!(s.ops[1].start, 0.0);
    assert_eq!(s.wire_durations, vec![50.0; 3]);

    let c = circuit(r#"{"n": 2, "ops": [{"g": "cx", "q": [0, 1]}]}"#);
    assert!(matches!(schedule(&c, &fp), Err(Error::Schema { .. })));
    assert!(FidelityParams::new(100.0, 0.0, 100.0).is_err());
}

#[test]
fn cnot_takes_175_ns() {
    let [baseline, optimized] = synthesizers();
    let fp = FidelityParams::default();
    let c = circuit(r#"{"n": 2, "ops": [{"g": "cx", "q": [0, 1]}]}"#);
    let b = transpile(&c, &baseline, &fp, 0).unwrap();
    let o = transpile(&c, &optimized, &fp, 0).unwrap();
    assert!((b.schedule.makespan - 175.0).abs() < 1e-9, "{}", b.schedule.makespan);
    assert!(o.schedule.makespan <= b.schedule.makespan + 1e-9);
    assert!((o.block_pulse_times[0].1 - 1.0).abs() < 1e-9);
}

#[test]
fn fidelity_decays_with_duration() {
    let fp = FidelityParams::default();
    let mut last = 1.0;
    for n in 1..6 {
        let mut c = Circuit::new(2);
        for _ in 0..n {
            c.push(Gate::Sx, &[0]).unwrap();
        }
        let f = fidelity(&schedule(&c, &fp).unwrap(), &fp);
        assert!(f.total < last);
        assert!((f.total - f.per_qubit.iter().product::<f64>()).abs() < 1e-15);
        assert!((f.per_qubit[1] - (-(n as f64) * 25.0 / 1e5).exp()).abs() < 1e-15);
        last = f.total;
    }
}

#[test]
fn one_qubit_circuits_have_no_blocks() {
    let [baseline, _] = synthesizers();
    let c = circuit(r#"{"n": 2, "ops": [{"g": "h", "q": [0]}, {"g": "x", "q": [1]}, {"g": "h", "q": [0]}]}"#);
    let out = transpile(&c, &baseline, &FidelityParams::default(), 0).unwrap();
    assert_eq!(out.summary.blocks, 0);
    assert_eq!(out.summary.pulses, 0);
    assert_eq!(out.circuit.ops.len(), 1);
    assert_eq!(out.schedule.makespan, 25.0);
}

#[test]
fn identity_blocks_cost_nothing() {
    let [baseline, optimized] = synthesizers();
    let c = circuit(r#"{"n": 2, "ops": [{"g": "cx", "q": [0, 1]}, {"g": "cx", "q": [0, 1]}]}"#);
    for s in [&baseline, &optimized] {
        let out = transpile(&c, s, &FidelityParams::default(), 0).unwrap();
        assert_eq!(out.summary.pulses, 0);
        assert_eq!(out.schedule.makespan, 0.0);
    }
}

#[test]
fn fractional_iswap_is_one_pulse() {
    let [baseline, _] = synthesizers();
    let c = circuit(r#"{"n": 2, "ops": [{"g": "canonical", "q": [0, 1], "p": [0.7853981633974483, 0.7853981633974483, 0.0]}]}"#);
    let out = transpile(&c, &baseline, &FidelityParams::default(), 0).unwrap();
    assert_eq!(out.summary.pulses, 1);
    assert!((out.block_pulse_times[0].1 - 0.5).abs() < 1e-12);
}

fn random_circuit(n: usize, len: usize, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::new(n);
    for _ in 0..len {
        let a = rng.random_range(0..n);
        let b = (a + rng.random_range(1..n)) % n;
        let x = rng.random_range(-PI..PI);
        match rng.random_range(0..6) {
            0 => c.push(Gate::Cx, &[a, b]),
            1 => c.push(Gate::Swap, &[a, b]),
            2 => c.push(Gate::Rzz(x), &[a, b]),
            3 => c.push(Gate::Ry(x), &[a]),
            4 => c.push(Gate::Rz(x), &[a]),
            _ => c.push(Gate::Cp(x), &[a, b]),
        }
        .unwrap();
    }
    c
}

#[test]
fn transpiled_circuits_keep_their_unitary() {
    let fp = FidelityParams::default();
    for s in synthesizers() {
        for seed in 0..3 {
            let c = random_circuit(3, 14, seed);
            let out = transpile(&c, &s, &fp, seed).unwrap();
            assert!(out.summary.max_block_error < SYNTHESIS_TOL);
            assert!(out.circuit.ops.iter().all(|o| o.qubits.len() == 1 || matches!(o.gate, Gate::Pulse(_))));
            let loss = phase_infidelity(&c.unitary().unwrap(), &out.circuit.unitary().unwrap());
            assert!(loss < 1e-6, "{:?} seed {seed}: {loss}", s.strategy);
        }
    }
}

#[test]
fn pulse_time_respects_floor() {
    assert_eq!(pulse_time_floor(WeylPoint::CNOT), 1.0);
    assert_eq!(pulse_time_floor(WeylPoint::SWAP), 1.5);
    let fp = FidelityParams::default();
    let c = circuit(r#"{"n": 3, "ops": [{"g": "cx", "q": [0, 1]}, {"g": "swap", "q": [1, 2]}, {"g": "cz", "q": [0, 2]}]}"#);
    for s in synthesizers() {
        let out = transpile(&c, &s, &fp, 0).unwrap();
        for (p, t) in &out.block_pulse_times {
            assert!(*t >= pulse_time_floor(*p) - 1e-9, "{p:?} in {t}");
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let fp = FidelityParams::default();
    let c = random_circuit(4, 20, 9);
    let [_, optimized] = synthesizers();
    let a = transpile_best(&c, &optimized, &fp, 5, 2).unwrap();
    let b = transpile_best(&c, &optimized, &fp, 5, 2).unwrap();
    assert_eq!(a.circuit, b.circuit);
    assert_eq!(a.summary, b.summary);
}

#[test]
fn comparison_reports_relative_change() {
    let fp = FidelityParams::default();
    let c = circuit(r#"{"n": 3, "ops": [{"g": "cx", "q": [0, 1]}, {"g": "swap", "q": [1, 2]}]}"#);
    let [baseline, optimized] = synthesizers();
    let r = compare("demo", &c, &baseline, &optimized, &fp, 0, 1).unwrap();
    assert!(r.optimized.duration_ns <= r.baseline.duration_ns + 1e-9);
    let expected = 100.0 * (r.baseline.duration_ns - r.optimized.duration_ns) / r.baseline.duration_ns;
    assert!((r.duration_improvement - expected).abs() < 1e-9);
    assert!(r.f_t_improvement >= 0.0);
}

//! The bundled example and benchmark programs.

use crate::value::Value;

pub const QUARTER: &str = include_str!("../../../corpus/quarter.dsp");
pub const FOR: &str = include_str!("../../../corpus/for.dsp");
pub const NQUEENS: &str = include_str!("../../../corpus/nqueens.dsp");
pub const ACK: &str = include_str!("../../../corpus/ack.dsp");
pub const ACK_NOCUT: &str = include_str!("../../../corpus/ack_nocut.dsp");
pub const TARAI: &str = include_str!("../../../corpus/tarai.dsp");
pub const TARAI_NOCUT: &str = include_str!("../../../corpus/tarai_nocut.dsp");
pub const PLAN: &str = include_str!("../../../corpus/plan.dsp");

/// `(file name, source)` for every corpus program.
pub const ALL: &[(&str, &str)] = &[
    ("quarter.dsp", QUARTER),
    ("for.dsp", FOR),
    ("nqueens.dsp", NQUEENS),
    ("ack.dsp", ACK),
    ("ack_nocut.dsp", ACK_NOCUT),
    ("tarai.dsp", TARAI),
    ("tarai_nocut.dsp", TARAI_NOCUT),
    ("plan.dsp", PLAN),
];

/// A corpus program together with one query against it.
#[derive(Debug, Clone)]
pub struct Case {
    pub label: &'static str,
    pub source: &'static str,
    pub module: &'static str,
    pub inputs: Vec<Value>,
}

fn case(label: &'static str, source: &'static str, module: &'static str, inputs: Vec<Value>) -> Case {
    Case { label, source, module, inputs }
}

fn ints(xs: &[i64]) -> Vec<Value> {
    xs.iter().map(|&x| Value::Int(x)).collect()
}

/// Queries small enough to enumerate completely on both engines.
pub fn cases() -> Vec<Case> {
    vec![
        case("quarter(2.0)", QUARTER, "pointInQuarterCircle", vec![Value::Real(2.0)]),
        case("quarter(10.0)", QUARTER, "pointInQuarterCircle", vec![Value::Real(10.0)]),
        case("for(0,2,1)", FOR, "for", vec![Value::Real(0.0), Value::Real(2.0), Value::Real(1.0)]),
        case("for(0.5,3,0.25)", FOR, "for", vec![Value::Real(0.5), Value::Real(3.0), Value::Real(0.25)]),
        case("plan(48,60,3)", PLAN, "plan", ints(&[48, 60, 3])),
        case("plan(240,180,4)", PLAN, "plan", ints(&[240, 180, 4])),
        case("nqueens(4)", NQUEENS, "nqueens", ints(&[4])),
        case("nqueens(6)", NQUEENS, "nqueens", ints(&[6])),
        case("ack(2,3)", ACK, "ack", ints(&[2, 3])),
        case("ack_nocut(2,3)", ACK_NOCUT, "ack_nocut", ints(&[2, 3])),
        case("tarai(6,3,0)", TARAI, "tarai", ints(&[6, 3, 0])),
        case("tarai_nocut(6,3,0)", TARAI_NOCUT, "tarai_nocut", ints(&[6, 3, 0])),
    ]
}

/// The benchmark suites, by name.
pub fn bench_suites() -> Vec<Case> {
    vec![
        case("plan", PLAN, "plan", ints(&[240, 180, 4])),
        case("nqueens", NQUEENS, "nqueens", ints(&[8])),
        case("ack", ACK, "ack", ints(&[3, 3])),
        case("tarai", TARAI, "tarai", ints(&[10, 5, 0])),
        case("ack_nocut", ACK_NOCUT, "ack_nocut", ints(&[3, 3])),
        case("tarai_nocut", TARAI_NOCUT, "tarai_nocut", ints(&[10, 5, 0])),
    ]
}

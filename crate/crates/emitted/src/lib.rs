//! The corpus programs, compiled to Rust by the emitter during the build.
//!
//! Each module mirrors one corpus file and exposes `MODULES`, `goal` and
//! `solve` over the modules it defines.

macro_rules! program {
    ($name:ident, $file:literal) => {
        pub mod $name {
            include!(concat!(env!("OUT_DIR"), "/", $file));
        }
    };
}

program!(quarter, "quarter.rs");
program!(for_module, "for.rs");
program!(nqueens, "nqueens.rs");
program!(ack, "ack.rs");
program!(ack_nocut, "ack_nocut.rs");
program!(tarai, "tarai.rs");
program!(tarai_nocut, "tarai_nocut.rs");
program!(plan, "plan.rs");

use dsp_core::runtime::Vm;
use dsp_core::solution::{QueryError, VmSolutions};
use dsp_core::value::Value;

/// Solve `module` of corpus file `file` (for example `nqueens.dsp`) with emitted code.
pub fn solve(file: &str, module: &str, ins: Vec<Value>, vm: Vm) -> Result<VmSolutions, QueryError> {
    let f = match file.trim_end_matches(".dsp") {
        "quarter" => quarter::solve,
        "for" => for_module::solve,
        "nqueens" => nqueens::solve,
        "ack" => ack::solve,
        "ack_nocut" => ack_nocut::solve,
        "tarai" => tarai::solve,
        "tarai_nocut" => tarai_nocut::solve,
        "plan" => plan::solve,
        _ => return Err(QueryError::UnknownModule(format!("{file}:{module}"))),
    };
    f(module, ins, vm)
}

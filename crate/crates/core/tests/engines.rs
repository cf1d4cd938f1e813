use std::sync::Arc;
use std::thread;

use dsp_core::corpus::{self, cases};
use dsp_core::oracle::Oracle;
use dsp_core::pipeline::compile;
use dsp_core::runtime::Vm;
use dsp_core::solution::{solve, streams_match, Solution};
use dsp_core::value::Value;

fn vm_run(src: &str, module: &str, ins: Vec<Value>, vm: Vm) -> (Vec<Solution>, Vm) {
    let c = compile(src).unwrap();
    let mut it = solve(&c.program, module, ins, vm).unwrap();
    let sols = it.by_ref().collect::<Result<Vec<_>, _>>().unwrap();
    (sols, it.into_vm())
}

fn oracle_run(src: &str, module: &str, ins: Vec<Value>) -> Vec<Solution> {
    let c = compile(src).unwrap();
    let o = Oracle::new(&c.scheduled);
    o.solve(module, ins).unwrap().collect::<Result<Vec<_>, _>>().unwrap()
}

#[test]
fn vm_agrees_with_oracle_on_corpus() {
    for c in cases() {
        let (vm, _) = vm_run(c.source, c.module, c.inputs.clone(), Vm::new());
        let or = oracle_run(c.source, c.module, c.inputs.clone());
        assert!(!vm.is_empty(), "{}", c.label);
        assert!(streams_match(&vm, &or, 1e-9), "{}: vm {} vs oracle {}", c.label, vm.len(), or.len());
    }
}

#[test]
fn stale_read_checks_pass_on_corpus() {
    for c in cases() {
        let (sols, vm) = vm_run(c.source, c.module, c.inputs.clone(), Vm::with_checks());
        let (plain, _) = vm_run(c.source, c.module, c.inputs.clone(), Vm::new());
        assert_eq!(sols, plain, "{}", c.label);
        assert_eq!(vm.depth(), 0, "{}", c.label);
    }
}

#[test]
fn runs_are_deterministic() {
    for c in cases() {
        let a: Vec<String> =
            vm_run(c.source, c.module, c.inputs.clone(), Vm::new()).0.iter().map(Solution::to_jsonl).collect();
        let b: Vec<String> =
            vm_run(c.source, c.module, c.inputs.clone(), Vm::new()).0.iter().map(Solution::to_jsonl).collect();
        assert_eq!(a, b, "{}", c.label);
    }
}

#[test]
fn known_answers() {
    let one = |src, m, ins: &[i64]| {
        let sols = vm_run(src, m, ins.iter().map(|&x| Value::Int(x)).collect(), Vm::new()).0;
        assert_eq!(sols.len(), 1);
        sols[0].outputs[0].1.as_int().unwrap()
    };
    assert_eq!(one(corpus::ACK, "ack", &[2, 3]), 9);
    assert_eq!(one(corpus::ACK, "ack", &[3, 3]), 61);
    assert_eq!(one(corpus::TARAI, "tarai", &[10, 5, 0]), 10);
    for (n, k) in [(4, 2), (6, 4), (8, 92)] {
        assert_eq!(vm_run(corpus::NQUEENS, "nqueens", vec![Value::Int(n)], Vm::new()).0.len(), k);
    }
}

/// Independent ackermann for comparison.
fn ack(m: i64, n: i64) -> i64 {
    match (m, n) {
        (0, n) => n + 1,
        (m, 0) => ack(m - 1, 1),
        (m, n) => ack(m - 1, ack(m, n - 1)),
    }
}

#[test]
fn ack_nocut_matches_recursion_and_grows_the_stack() {
    let mut peaks = Vec::new();
    for n in 0..5 {
        let (sols, vm) = vm_run(corpus::ACK_NOCUT, "ack_nocut", vec![Value::Int(2), Value::Int(n)], Vm::new());
        assert_eq!(sols[0].outputs[0].1, Value::Int(ack(2, n)));
        peaks.push(vm.stats().peak_depth);
    }
    assert!(peaks.windows(2).all(|w| w[0] < w[1]), "{peaks:?}");
}

#[test]
fn dcall_restores_depth_and_bounds_the_stack() {
    let mut peaks = Vec::new();
    for n in 0..6 {
        let mut vm = Vm::new();
        vm.trace_commits();
        let (sols, vm) = vm_run(corpus::ACK, "ack", vec![Value::Int(2), Value::Int(n)], vm);
        assert_eq!(sols[0].outputs[0].1, Value::Int(ack(2, n)));
        for e in vm.commit_events() {
            assert_eq!(e.depth_after, e.entry_depth);
            assert!(e.depth_before >= e.depth_after);
        }
        peaks.push(vm.stats().peak_depth);
    }
    assert!(peaks.iter().all(|&p| p == peaks[1]), "{peaks:?}");
}

#[test]
fn linked_program_is_shared_across_threads() {
    let c = compile(corpus::NQUEENS).unwrap();
    let prog = c.program.clone();
    let handles: Vec<_> = (4..8)
        .map(|n| {
            let prog = Arc::clone(&prog);
            thread::spawn(move || solve(&prog, "nqueens", vec![Value::Int(n)], Vm::new()).unwrap().count())
        })
        .collect();
    let counts: Vec<usize> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert_eq!(counts, [2, 10, 4, 40]);
}

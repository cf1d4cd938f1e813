use super::*;
use crate::corpus;
use crate::pipeline::{compile, front};
use crate::runtime::Vm;
use crate::solution::{solve, Solution};

fn run(src: &str, module: &str, ins: Vec<Value>) -> (Vec<Solution>, Vm) {
    let c = compile(src).unwrap_or_else(|ds| panic!("{ds:?}"));
    let mut it = solve(&c.program, module, ins, Vm::with_checks()).unwrap();
    let sols = it.by_ref().collect::<Result<Vec<_>, _>>().unwrap();
    let vm = it.into_vm();
    (sols, vm)
}

fn reals(s: &Solution) -> Vec<f64> {
    s.outputs.iter().map(|(_, v)| v.as_real().unwrap()).collect()
}

/// Integer grid points with sqrt(x^2 + y^2) <= r, x outer and y inner.
fn quarter_oracle(r: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut x = 0.0;
    while x <= r {
        let mut y = 0.0;
        while y <= r {
            if (x * x + y * y).sqrt() <= r {
                out.push((x, y));
            }
            y += 1.0;
        }
        x += 1.0;
    }
    out
}

/// Count n-queens placements by checking every permutation.
fn queens_oracle(n: usize) -> Vec<Vec<i64>> {
    fn perms(rest: &mut Vec<i64>, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if rest.is_empty() {
            let ok =
                (0..cur.len()).all(|i| (i + 1..cur.len()).all(|j| (cur[i] - cur[j]).unsigned_abs() as usize != j - i));
            if ok {
                out.push(cur.clone());
            }
            return;
        }
        for k in 0..rest.len() {
            let c = rest.remove(k);
            cur.push(c);
            perms(rest, cur, out);
            cur.pop();
            rest.insert(k, c);
        }
    }
    let mut out = Vec::new();
    perms(&mut (1..=n as i64).collect(), &mut Vec::new(), &mut out);
    out
}

#[test]
fn quarter_circle_has_three_unit_nodes() {
    let c = compile(corpus::QUARTER).unwrap();
    let g = c.program.module(0);
    let labels: Vec<_> = g.methods[0].units.iter().map(|u| u.label.as_str()).collect();
    assert_eq!(labels, ["Method_1_cu1", "Method_1_cu2", "Method_1_cu3"]);
    let u = &g.methods[0].units;
    assert!(matches!(u[0].generator, Some(GenOp::For { slot: 1, .. })));
    assert!(matches!(u[1].generator, Some(GenOp::For { slot: 2, .. })));
    assert!(u[2].generator.is_none());
    assert!(matches!(u[2].ops[..], [Op::Assign { slot: 3, .. }, Op::Guard { .. }]));
}

#[test]
fn quarter_circle_solutions_match_brute_force() {
    let (sols, _) = run(corpus::QUARTER, "pointInQuarterCircle", vec![Value::Real(2.0)]);
    let got: Vec<(f64, f64)> = sols.iter().map(|s| (reals(s)[0], reals(s)[1])).collect();
    assert_eq!(got, quarter_oracle(2.0));
    assert_eq!(got, [(0.0, 0.0), (0.0, 1.0), (0.0, 2.0), (1.0, 0.0), (1.0, 1.0), (2.0, 0.0)]);

    let (sols, _) = run(corpus::QUARTER, "pointInQuarterCircle", vec![Value::Real(10.0)]);
    assert_eq!((reals(&sols[0])[0], reals(&sols[0])[1]), (0.0, 0.0));
    assert_eq!(sols.len(), quarter_oracle(10.0).len());
}

#[test]
fn verify_flags_instead_of_pruning() {
    let src = corpus::QUARTER.replace("test(D =< R)", "verify(D =< R)");
    let (sols, _) = run(&src, "pointInQuarterCircle", vec![Value::Real(2.0)]);
    assert_eq!(sols.len(), 9);
    let flagged: Vec<_> = sols.iter().filter(|s| !s.violations.is_empty()).collect();
    assert_eq!(flagged.len(), 3);
    for s in flagged {
        assert_eq!(s.violations.len(), 1);
        let v = &s.violations[0];
        assert_eq!(v.condition, "D =< R");
        assert_eq!(v.method, "pointInQuarterCircle/1");
        assert_eq!(v.bindings.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>(), ["D", "R"]);
    }
}

#[test]
fn single_calculator_is_one_node_without_choice_points() {
    let src = "double({A : int}, {B : int}) method B : int = A * 2; end method; end;";
    let c = compile(src).unwrap();
    assert_eq!(c.program.module(0).methods[0].units.len(), 1);
    let (sols, vm) = run(src, "double", vec![Value::Int(21)]);
    assert_eq!(sols[0].get("B"), Some(&Value::Int(42)));
    assert_eq!(vm.stats().pushes, 0);
}

#[test]
fn for_module_enumerates_through_both_methods() {
    let c = compile(corpus::FOR).unwrap();
    assert_eq!(c.program.module(0).methods.len(), 2);
    let (sols, vm) = run(corpus::FOR, "for", vec![Value::Real(0.0), Value::Real(2.0), Value::Real(1.0)]);
    let ns: Vec<f64> = sols.iter().map(|s| reals(s)[0]).collect();
    assert_eq!(ns, [0.0, 1.0, 2.0]);
    assert_eq!(vm.depth(), 0);
    // every activation pushes its second method
    assert_eq!(vm.stats().pushes, 3);
}

#[test]
fn all_guards_closed_fails() {
    let src = "m({A : int}, {B : int})
                 method when(A > 0); B : int = A; end method;
                 method when(A > 5); B : int = A; end method;
               end;";
    assert!(run(src, "m", vec![Value::Int(-1)]).0.is_empty());
}

#[test]
fn nqueens_matches_permutation_brute_force() {
    for n in [4usize, 5, 6] {
        let (sols, vm) = run(corpus::NQUEENS, "nqueens", vec![Value::Int(n as i64)]);
        let boards: Vec<Vec<i64>> = sols
            .iter()
            .map(|s| s.get("Board").unwrap().as_list().unwrap().iter().map(|v| v.as_int().unwrap()).collect())
            .collect();
        let mut expected = queens_oracle(n);
        let mut sorted = boards.clone();
        sorted.sort();
        expected.sort();
        assert_eq!(sorted, expected, "n = {n}");
        assert_eq!(vm.depth(), 0);
    }
}

#[test]
fn call_outputs_widen_from_int_to_real() {
    let src = "inc({A : int}, {B : int}) method B : int = A + 1; end method; end;
               top({}, {R : real}) method call(inc, {1}, {R}); end method; end;";
    let (sols, _) = run(src, "top", vec![]);
    assert_eq!(sols[0].get("R"), Some(&Value::Real(2.0)));
}

#[test]
fn find_over_select_keeps_elements() {
    let src = "m({}, {L : list}) method find(select, {[1, 2.5, true]}, L); end method; end;";
    let (sols, _) = run(src, "m", vec![]);
    assert_eq!(sols[0].get("L"), Some(&Value::list(vec![Value::Int(1), Value::Real(2.5), Value::Bool(true)])));
}

#[test]
fn link_resolves_builtins_and_self_recursion() {
    assert!(compile(corpus::QUARTER).is_ok());
    let c = compile(corpus::FOR).unwrap();
    let GenOp::Call(site) = c.program.module(0).methods[1].units[0].generator.as_ref().unwrap() else { panic!() };
    assert_eq!(site.callee, Callee::Module(0));
}

#[test]
fn link_reports_every_missing_module() {
    let scheduled = front(
        "a({}, {}) method call(b, {}, {}); end method; end;
         b({}, {}) method call(c, {}, {}); dcall(d, {}, {}); end method; end;
         c({}, {}) method test(true); end method; end;
         d({}, {}) method test(true); end method; end;",
    )
    .unwrap();
    // link without the graphs of c and d, then without b as well
    let graphs: Vec<_> = scheduled[..2].iter().map(|m| lower(m).unwrap()).collect();
    assert_eq!(link(graphs).unwrap_err(), LinkError::UnresolvedModule(vec!["c".into(), "d".into()]));
    let only_a = vec![lower(&scheduled[0]).unwrap()];
    assert_eq!(link(only_a).unwrap_err(), LinkError::UnresolvedModule(vec!["b".into()]));
}

#[test]
fn dump_shows_units_and_continuations() {
    let c = compile(corpus::QUARTER).unwrap();
    let dump = dump_graph(&c.program);
    let expected = "\
module pointInQuarterCircle({R : real}, {X : real, Y : real})
  method 1
    cells 0:R:real in1 1:X:real out1 2:Y:real out2 3:D:real
    Method_1_cu1 (entry)
      s1 X : real = for(0.0, R, 1.0)  [generator, builtin for (real)]
      then Method_1_cu2
    Method_1_cu2
      s2 Y : real = for(0.0, R, 1.0)  [generator, builtin for (real)]
      then Method_1_cu3
    Method_1_cu3
      s3 D : real = sqrt(X^2 + Y^2)
      s4 test(D =< R)
      then caller
";
    assert_eq!(dump, expected);
}

//! Statement ordering and continuation-unit partitioning.
//!
//! The order is built by repeatedly picking among the statements whose
//! dependencies are already placed:
//!
//! 1. the source-earliest ready calculator or tester (other than `verify`),
//!    so deterministic work and pruning happen as early as possible;
//! 2. otherwise the source-earliest ready generator, which keeps generators in
//!    source order wherever the dependencies allow it;
//! 3. otherwise the source-earliest ready `verify`, so checks that never prune
//!    run as late as possible.

use std::fmt::Write;

use crate::analyzer::{AnalyzedModule, DepGraph, StmtClass};
use crate::frontend::ast::{Stmt, StmtKind};
use crate::frontend::pretty::stmt_to_string;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TotalOrder(pub Vec<usize>);

impl TotalOrder {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// A run of deterministic statements closed by at most one generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContinuationUnit {
    pub stmts: Vec<usize>,
    pub trailing_generator: Option<usize>,
}

impl ContinuationUnit {
    /// Statements before the trailing generator.
    pub fn prefix(&self) -> &[usize] {
        match self.trailing_generator {
            Some(_) => &self.stmts[..self.stmts.len() - 1],
            None => &self.stmts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Priority {
    Deterministic,
    Generator,
    Deferred,
}

fn priority(class: StmtClass, stmt: &Stmt) -> Priority {
    match (class, &stmt.kind) {
        (_, StmtKind::Verify(_)) => Priority::Deferred,
        (StmtClass::Generator, _) => Priority::Generator,
        _ => Priority::Deterministic,
    }
}

/// Stable topological order of one method's statements.
///
/// `stmts` are the method's statements in source order; the graph must be acyclic.
pub fn total_order(graph: &DepGraph, stmts: &[Stmt]) -> TotalOrder {
    let n = graph.len();
    assert_eq!(n, stmts.len(), "graph and statement list disagree");
    let prio: Vec<Priority> = (0..n).map(|i| priority(graph.classes[i], &stmts[i])).collect();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);

    while order.len() < n {
        let next = (0..n)
            .filter(|&i| !placed[i] && graph.preds(i).iter().all(|&p| placed[p]))
            .min_by_key(|&i| (prio[i], i))
            .expect("dependency graph has a cycle");
        placed[next] = true;
        order.push(next);
    }
    TotalOrder(order)
}

/// Greedy split: every generator closes a unit; leftover deterministic
/// statements form a final unit without a generator.
pub fn partition_units(order: &TotalOrder, classes: &[StmtClass]) -> Vec<ContinuationUnit> {
    let mut units = Vec::new();
    let mut current = Vec::new();
    for &s in order.as_slice() {
        current.push(s);
        if classes[s] == StmtClass::Generator {
            units.push(ContinuationUnit { stmts: std::mem::take(&mut current), trailing_generator: Some(s) });
        }
    }
    if !current.is_empty() {
        units.push(ContinuationUnit { stmts: current, trailing_generator: None });
    }
    units
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSchedule {
    pub order: TotalOrder,
    pub units: Vec<ContinuationUnit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledModule {
    pub analyzed: AnalyzedModule,
    pub methods: Vec<MethodSchedule>,
}

impl ScheduledModule {
    pub fn name(&self) -> &str {
        self.analyzed.name()
    }
}

pub fn schedule(analyzed: AnalyzedModule) -> ScheduledModule {
    let methods = analyzed
        .methods
        .iter()
        .zip(&analyzed.decl.methods)
        .map(|(am, decl)| {
            let order = total_order(&am.graph, &decl.statements);
            let units = partition_units(&order, &am.graph.classes);
            MethodSchedule { order, units }
        })
        .collect();
    ScheduledModule { analyzed, methods }
}

/// Human-readable order and unit boundaries, one block per method.
pub fn dump_schedule(m: &ScheduledModule) -> String {
    let mut out = String::new();
    for (mi, (sched, decl)) in m.methods.iter().zip(&m.analyzed.decl.methods).enumerate() {
        let order: Vec<String> = sched.order.as_slice().iter().map(|s| format!("s{}", s + 1)).collect();
        let _ = writeln!(out, "{} method {}: order {}", m.name(), mi + 1, order.join(" "));
        for (ui, unit) in sched.units.iter().enumerate() {
            let _ = writeln!(out, "  cu{}:", ui + 1);
            for &s in &unit.stmts {
                let tag = if unit.trailing_generator == Some(s) { " [generator]" } else { "" };
                let _ = writeln!(out, "    s{} {}{}", s + 1, stmt_to_string(&decl.statements[s]), tag);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyzer::analyze_all;
    use crate::corpus::QUARTER;
    use crate::frontend::parse_source;

    fn scheduled(src: &str) -> Vec<ScheduledModule> {
        analyze_all(&parse_source(src).unwrap()).unwrap().into_iter().map(schedule).collect()
    }

    const QUARTER_REVERSED: &str = "
        pointInQuarterCircle({R : real}, {X : real, Y : real})
          method
            test(D =< R);                 -- (f)
            D : real = sqrt(X^2 + Y^2);   -- (e)
            Y : real = for(0.0, R, 1.0);  -- (d)
            X : real = for(0.0, R, 1.0);  -- (c)
          end method;
        end module;";

    /// All topological orders of the graph, by brute-force permutation.
    fn all_topological_orders(graph: &DepGraph) -> Vec<Vec<usize>> {
        fn permute(rest: &mut Vec<usize>, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if rest.is_empty() {
                out.push(prefix.clone());
                return;
            }
            for k in 0..rest.len() {
                let x = rest.remove(k);
                prefix.push(x);
                permute(rest, prefix, out);
                prefix.pop();
                rest.insert(k, x);
            }
        }
        let mut all = Vec::new();
        permute(&mut (0..graph.len()).collect(), &mut Vec::new(), &mut all);
        all.retain(|perm| {
            graph
                .edges
                .iter()
                .all(|&(a, b)| perm.iter().position(|&x| x == a).unwrap() < perm.iter().position(|&x| x == b).unwrap())
        });
        all
    }

    fn generators_in_source_order(perm: &[usize], classes: &[StmtClass]) -> bool {
        let gens: Vec<usize> = perm.iter().copied().filter(|&s| classes[s] == StmtClass::Generator).collect();
        gens.windows(2).all(|w| w[0] < w[1])
    }

    #[test]
    fn quarter_circle_order_is_source_order() {
        let m = &scheduled(QUARTER)[0];
        assert_eq!(m.methods[0].order.0, vec![0, 1, 2, 3]);
    }

    #[test]
    fn quarter_circle_has_three_units() {
        let m = &scheduled(QUARTER)[0];
        let units = &m.methods[0].units;
        assert_eq!(units.len(), 3);
        assert_eq!(units[0], ContinuationUnit { stmts: vec![0], trailing_generator: Some(0) });
        assert_eq!(units[1], ContinuationUnit { stmts: vec![1], trailing_generator: Some(1) });
        assert_eq!(units[2], ContinuationUnit { stmts: vec![2, 3], trailing_generator: None });
    }

    #[test]
    fn reversed_source_keeps_generator_source_order() {
        let m = &scheduled(QUARTER_REVERSED)[0];
        let am = &m.analyzed.methods[0];
        let order = &m.methods[0].order.0;
        // source indices: (f)=0 (e)=1 (d)=2 (c)=3; expected (d),(c),(e),(f)
        assert_eq!(order, &vec![2, 3, 1, 0]);

        let candidates: Vec<_> = all_topological_orders(&am.graph)
            .into_iter()
            .filter(|p| generators_in_source_order(p, &am.graph.classes))
            .collect();
        assert_eq!(candidates, vec![order.clone()], "the chosen order is the only stable one");
    }

    #[test]
    fn brute_force_agrees_on_every_quarter_permutation() {
        // Every one of the 4! source orders: the chosen order must be a valid
        // topological order that keeps generator source order.
        let lines = [
            "X : real = for(0.0, R, 1.0);",
            "Y : real = for(0.0, R, 1.0);",
            "D : real = sqrt(X^2 + Y^2);",
            "test(D =< R);",
        ];
        let mut perm = [0usize, 1, 2, 3];
        let mut count = 0;
        permutohedron(&mut perm, &mut |p| {
            let body: Vec<&str> = p.iter().map(|&i| lines[i]).collect();
            let src = format!(
                "pointInQuarterCircle({{R : real}}, {{X : real, Y : real}}) method {} end method; end;",
                body.join(" ")
            );
            let m = &scheduled(&src)[0];
            let am = &m.analyzed.methods[0];
            let order = &m.methods[0].order.0;
            let valid = all_topological_orders(&am.graph);
            assert!(valid.contains(order));
            assert!(generators_in_source_order(order, &am.graph.classes));
            count += 1;
        });
        assert_eq!(count, 24);
    }

    fn permutohedron(items: &mut [usize; 4], f: &mut dyn FnMut(&[usize])) {
        fn heap(k: usize, a: &mut [usize; 4], f: &mut dyn FnMut(&[usize])) {
            if k == 1 {
                f(a);
                return;
            }
            heap(k - 1, a, f);
            for i in 0..k - 1 {
                if k.is_multiple_of(2) {
                    a.swap(i, k - 1);
                } else {
                    a.swap(0, k - 1);
                }
                heap(k - 1, a, f);
            }
        }
        heap(4, items, f);
    }

    #[test]
    fn no_edges_keeps_source_order() {
        let g = DepGraph::new(vec![StmtClass::Calculator; 3], vec![]);
        let stmts = parse_source("m({}, {}) method test(true); test(false); test(true); end method; end;").unwrap();
        assert_eq!(total_order(&g, &stmts[0].methods[0].statements).0, vec![0, 1, 2]);
    }

    #[test]
    fn testers_move_ahead_of_unrelated_generators() {
        let m = &scheduled(
            "m({R : real}, {X : real})
               method
                 X : real = for(0.0, R, 1.0);
                 test(R > 0.0);
               end method;
             end;",
        )[0];
        assert_eq!(m.methods[0].order.0, vec![1, 0]);
    }

    #[test]
    fn verify_runs_last() {
        let m = &scheduled(
            "m({R : real}, {X : real})
               method
                 verify(R > 0.0);
                 X : real = for(0.0, R, 1.0);
                 test(X >= 0.0);
               end method;
             end;",
        )[0];
        assert_eq!(m.methods[0].order.0, vec![1, 2, 0]);
    }

    #[test]
    fn all_deterministic_is_one_open_unit() {
        let order = TotalOrder(vec![0, 1]);
        let units = partition_units(&order, &[StmtClass::Calculator, StmtClass::Calculator]);
        assert_eq!(units, vec![ContinuationUnit { stmts: vec![0, 1], trailing_generator: None }]);
    }

    #[test]
    fn gen_calc_gen() {
        use StmtClass::*;
        let classes = [Generator, Calculator, Generator];
        let units = partition_units(&TotalOrder(vec![0, 1, 2]), &classes);
        assert_eq!(
            units,
            vec![
                ContinuationUnit { stmts: vec![0], trailing_generator: Some(0) },
                ContinuationUnit { stmts: vec![1, 2], trailing_generator: Some(2) },
            ]
        );
        // ends with a generator: one unit per generator
        assert_eq!(units.len(), classes.iter().filter(|c| **c == Generator).count());
    }

    #[test]
    fn dump_lists_units() {
        let dump = dump_schedule(&scheduled(QUARTER)[0]);
        assert!(dump.starts_with("pointInQuarterCircle method 1: order s1 s2 s3 s4\n"), "{dump}");
        assert!(dump.contains("  cu3:\n    s3 D : real = sqrt(X^2 + Y^2)\n    s4 test(D =< R)\n"), "{dump}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        /// Random acyclic graphs: edges only go from a lower to a higher label,
        /// then labels are shuffled into source positions.
        fn dag() -> impl Strategy<Value = DepGraph> {
            (1usize..9)
                .prop_flat_map(|n| {
                    (
                        Just(n),
                        prop::collection::vec(
                            prop::sample::select(vec![StmtClass::Generator, StmtClass::Calculator, StmtClass::Tester]),
                            n,
                        ),
                        prop::collection::vec((0..n, 0..n), 0..(n * 2)),
                        Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
                    )
                })
                .prop_map(|(_, classes, raw, pos)| {
                    let edges = raw.into_iter().filter(|(a, b)| a < b).map(|(a, b)| (pos[a], pos[b])).collect();
                    DepGraph::new(classes, edges)
                })
        }

        fn fake_stmts(n: usize) -> Vec<Stmt> {
            let src = format!("m({{}}, {{}}) method {} end method; end;", "test(true); ".repeat(n));
            parse_source(&src).unwrap().remove(0).methods.remove(0).statements
        }

        proptest! {
            #[test]
            fn order_respects_edges_and_units_flatten(g in dag()) {
                let order = total_order(&g, &fake_stmts(g.len()));
                let pos = |s: usize| order.0.iter().position(|&x| x == s).unwrap();
                let mut sorted = order.0.clone();
                sorted.sort_unstable();
                prop_assert_eq!(sorted, (0..g.len()).collect::<Vec<_>>());
                for &(a, b) in &g.edges {
                    prop_assert!(pos(a) < pos(b));
                }

                let units = partition_units(&order, &g.classes);
                let flat: Vec<usize> = units.iter().flat_map(|u| u.stmts.clone()).collect();
                prop_assert_eq!(&flat, &order.0);

                let generators = g.classes.iter().filter(|c| **c == StmtClass::Generator).count();
                let ends_open = order.0.last().is_some_and(|&s| g.classes[s] != StmtClass::Generator);
                prop_assert_eq!(units.len(), generators + usize::from(ends_open));
                for (i, u) in units.iter().enumerate() {
                    prop_assert!(u.prefix().iter().all(|&s| g.classes[s].is_deterministic()));
                    if u.trailing_generator.is_none() {
                        prop_assert_eq!(i, units.len() - 1);
                    }
                }
            }

            #[test]
            fn generators_keep_source_order_without_cross_dependencies(
                classes in prop::collection::vec(prop::sample::select(vec![
                    StmtClass::Generator, StmtClass::Calculator, StmtClass::Tester,
                ]), 1..8)
            ) {
                // With no edges the generator subsequence must be in source order.
                let g = DepGraph::new(classes.clone(), vec![]);
                let order = total_order(&g, &fake_stmts(g.len()));
                prop_assert!(generators_in_source_order(&order.0, &classes));
                // and every deterministic statement comes before every generator
                let first_gen = order.0.iter().position(|&s| classes[s] == StmtClass::Generator);
                if let Some(fg) = first_gen {
                    prop_assert!(order.0[fg..].iter().all(|&s| classes[s] == StmtClass::Generator));
                }
            }
        }
    }
}

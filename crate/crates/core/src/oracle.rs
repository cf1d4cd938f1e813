//! Reference interpreter.
//!
//! Walks each method's statements in scheduled order and produces solutions as
//! a lazy stream: sequencing is `flat_map`, a module call chains the streams
//! of its methods, `dcall` takes the first element and `find` collects them
//! all. Nothing here touches the VM, its cells or its choice points, and the
//! expression evaluator is separate from the runtime's, so agreement between
//! the two engines means something.

use std::collections::HashMap;
use std::iter;
use std::rc::Rc;

use crate::frontend::ast::*;
use crate::frontend::pretty::expr_to_string;
use crate::runtime::{RuntimeFault, VerifyViolation};
use crate::scheduler::ScheduledModule;
use crate::solution::{QueryError, Solution};
use crate::value::{Dtype, Value};

type Fault = RuntimeFault;
type Stream<T> = Box<dyn Iterator<Item = Result<T, Fault>>>;

/// Persistent variable environment; extending shares the tail.
#[derive(Clone, Default)]
struct Env(Option<Rc<Binding>>);

struct Binding {
    name: Rc<str>,
    value: Value,
    next: Env,
}

impl Env {
    fn bind(&self, name: &str, value: Value) -> Env {
        Env(Some(Rc::new(Binding { name: name.into(), value, next: self.clone() })))
    }

    fn lookup(&self, name: &str) -> Result<Value, Fault> {
        let mut cur = &self.0;
        while let Some(b) = cur {
            if &*b.name == name {
                return Ok(b.value.clone());
            }
            cur = &b.next.0;
        }
        Err(Fault::UnboundRead(name.to_string()))
    }
}

#[derive(Clone)]
struct State {
    env: Env,
    violations: Vec<VerifyViolation>,
}

struct Method {
    id: String,
    /// In scheduled order.
    stmts: Vec<Stmt>,
    types: HashMap<String, Dtype>,
}

struct Module {
    inputs: Vec<(String, Dtype)>,
    outputs: Vec<(String, Dtype)>,
    methods: Vec<Rc<Method>>,
}

/// One callee solution: output values and the violations raised inside.
type Answer = (Vec<Value>, Vec<VerifyViolation>);

pub struct Oracle {
    modules: HashMap<String, Rc<Module>>,
}

fn once<T: 'static>(r: Result<T, Fault>) -> Stream<T> {
    Box::new(iter::once(r))
}

fn none<T: 'static>() -> Stream<T> {
    Box::new(iter::empty())
}

fn fail_with<T: 'static>(e: Fault) -> Stream<T> {
    once(Err(e))
}

/// `flat_map` that passes errors through.
fn then<T: 'static, U: 'static>(src: Stream<T>, mut f: impl FnMut(T) -> Stream<U> + 'static) -> Stream<U> {
    Box::new(src.flat_map(move |r| match r {
        Ok(x) => f(x),
        Err(e) => fail_with(e),
    }))
}

fn convert(v: Value, to: Dtype) -> Result<Value, Fault> {
    match (v, to) {
        (Value::Int(i), Dtype::Real) => Ok(Value::Real(i as f64)),
        (v, t) if v.dtype() == t => Ok(v),
        (v, t) => Err(Fault::Dtype { expected: t, found: v }),
    }
}

impl Oracle {
    pub fn new(modules: &[ScheduledModule]) -> Rc<Oracle> {
        let mut map = HashMap::new();
        for m in modules {
            let decl = &m.analyzed.decl;
            let methods = m
                .methods
                .iter()
                .zip(&decl.methods)
                .zip(&m.analyzed.methods)
                .enumerate()
                .map(|(i, ((sched, md), am))| {
                    Rc::new(Method {
                        id: format!("{}/{}", decl.name.name, i + 1),
                        stmts: sched.order.as_slice().iter().map(|&s| md.statements[s].clone()).collect(),
                        types: am.symbols.vars().iter().map(|v| (v.name.clone(), v.dtype)).collect(),
                    })
                })
                .collect();
            let params = |ps: &[ParamDecl]| ps.iter().map(|p| (p.name.name.clone(), p.dtype)).collect();
            map.insert(
                decl.name.name.clone(),
                Rc::new(Module { inputs: params(&decl.inputs), outputs: params(&decl.outputs), methods }),
            );
        }
        Rc::new(Oracle { modules: map })
    }

    pub fn solve(self: &Rc<Self>, module: &str, ins: Vec<Value>) -> Result<OracleSolutions, QueryError> {
        let m = self.modules.get(module).ok_or_else(|| QueryError::UnknownModule(module.to_string()))?;
        if ins.len() != m.inputs.len() {
            return Err(QueryError::InputCount {
                module: module.to_string(),
                expected: m.inputs.len(),
                found: ins.len(),
            });
        }
        let names = m.outputs.iter().map(|(n, _)| n.clone()).collect();
        Ok(OracleSolutions { stream: self.call(module, ins), names, done: false })
    }

    /// All answers of a callee, user modules first, then the builtins.
    fn call(self: &Rc<Self>, name: &str, ins: Vec<Value>) -> Stream<Answer> {
        self.call_as(name, ins, None)
    }

    /// `want` is the caller's type for a builtin's single output, if there is one.
    fn call_as(self: &Rc<Self>, name: &str, ins: Vec<Value>, want: Option<Dtype>) -> Stream<Answer> {
        if let Some(m) = self.modules.get(name).cloned() {
            let ins: Vec<Value> = match ins.into_iter().zip(&m.inputs).map(|(v, (_, t))| convert(v, *t)).collect() {
                Ok(v) => v,
                Err(e) => return fail_with(e),
            };
            let this = self.clone();
            return Box::new((0..m.methods.len()).flat_map(move |k| {
                let method = m.methods[k].clone();
                let mut env = Env::default();
                for ((n, _), v) in m.inputs.iter().zip(&ins) {
                    env = env.bind(n, v.clone());
                }
                let outputs = m.outputs.clone();
                let sols = this.clone().run(method, 0, State { env, violations: Vec::new() });
                then(sols, move |st| {
                    once(
                        outputs
                            .iter()
                            .map(|(n, _)| st.env.lookup(n))
                            .collect::<Result<Vec<_>, _>>()
                            .map(|o| (o, st.violations)),
                    )
                })
            }));
        }
        let single = |vs: Stream<Value>| -> Stream<Answer> { Box::new(vs.map(|r| r.map(|v| (vec![v], Vec::new())))) };
        match (name, ins.as_slice()) {
            ("for", [b, e, s]) => {
                let all_int = ins.iter().all(|v| matches!(v, Value::Int(_)));
                single(enumerate_for(b, e, s, want.map_or(all_int, |t| t == Dtype::Int)))
            }
            ("select", [l]) => match l {
                Value::List(items) => {
                    let items = items.clone();
                    single(Box::new((0..items.len()).map(move |i| match want {
                        Some(t) => convert(items[i].clone(), t),
                        None => Ok(items[i].clone()),
                    })))
                }
                other => fail_with(Fault::Dtype { expected: Dtype::List, found: other.clone() }),
            },
            _ => fail_with(Fault::Internal(format!("no module `{name}` with {} input(s)", ins.len()))),
        }
    }

    /// Solutions of the statements of `m` from index `i` on.
    fn run(self: Rc<Self>, m: Rc<Method>, i: usize, st: State) -> Stream<State> {
        let Some(stmt) = m.stmts.get(i) else { return once(Ok(st)) };
        let eval = |e: &Expr| eval(e, &st.env);
        let types = &m.types;
        let bind_here = |st: &State, name: &str, v: Value| bind_as(types, st, name, v);

        match &stmt.kind {
            StmtKind::Bind { target, dtype, rhs } => match rhs {
                BindRhs::Expr(e) => match eval(e).and_then(|v| bind_here(&st, &target.name, v)) {
                    Ok(next) => self.run(m.clone(), i + 1, next),
                    Err(e) => fail_with(e),
                },
                BindRhs::For { begin, end, step } => {
                    let bounds = (eval(begin), eval(end), eval(step));
                    let (b, e, s) = match bounds {
                        (Ok(b), Ok(e), Ok(s)) => (b, e, s),
                        (Err(x), _, _) | (_, Err(x), _) | (_, _, Err(x)) => return fail_with(x),
                    };
                    let name = target.name.clone();
                    let values = enumerate_for(&b, &e, &s, *dtype == Dtype::Int);
                    let mc = m.clone();
                    then(values, move |v| match bind_as(&mc.types, &st, &name, v) {
                        Ok(next) => self.clone().run(mc.clone(), i + 1, next),
                        Err(e) => fail_with(e),
                    })
                }
                BindRhs::Select(e) => {
                    let list = match eval(e) {
                        Ok(Value::List(items)) => items,
                        Ok(other) => return fail_with(Fault::Dtype { expected: Dtype::List, found: other }),
                        Err(x) => return fail_with(x),
                    };
                    let name = target.name.clone();
                    let mc = m.clone();
                    Box::new((0..list.len()).flat_map(move |k| match bind_as(&mc.types, &st, &name, list[k].clone()) {
                        Ok(next) => self.clone().run(mc.clone(), i + 1, next),
                        Err(e) => fail_with(e),
                    }))
                }
            },
            StmtKind::When(c) | StmtKind::Test(c) => match eval(c).and_then(truth) {
                Ok(true) => self.run(m.clone(), i + 1, st),
                Ok(false) => none(),
                Err(e) => fail_with(e),
            },
            StmtKind::Verify(c) => match eval(c).and_then(truth) {
                Ok(true) => self.run(m.clone(), i + 1, st),
                Ok(false) => {
                    let bindings = c
                        .variables()
                        .into_iter()
                        .map(|n| st.env.lookup(n).map(|v| (n.to_string(), v)))
                        .collect::<Result<Vec<_>, _>>();
                    match bindings {
                        Ok(bindings) => {
                            let mut next = st.clone();
                            next.violations.push(VerifyViolation {
                                condition: expr_to_string(c),
                                method: m.id.clone(),
                                bindings,
                            });
                            self.run(m.clone(), i + 1, next)
                        }
                        Err(e) => fail_with(e),
                    }
                }
                Err(e) => fail_with(e),
            },
            StmtKind::Call(site) | StmtKind::Dcall(site) => {
                let args = match site.args.iter().map(eval).collect::<Result<Vec<_>, _>>() {
                    Ok(a) => a,
                    Err(e) => return fail_with(e),
                };
                let outs: Vec<String> = site.outs.iter().map(|o| o.name.clone()).collect();
                let want = outs.first().map(|o| m.types[o]);
                let mut answers = self.call_as(&site.callee.name, args, want);
                if matches!(stmt.kind, StmtKind::Dcall(_)) {
                    answers = match answers.next() {
                        Some(first) => once(first),
                        None => none(),
                    };
                }
                let mc = m.clone();
                then(answers, move |(vals, vs)| {
                    let mut next = st.clone();
                    for (name, v) in outs.iter().zip(vals) {
                        match bind_as(&mc.types, &next, name, v) {
                            Ok(n) => next = n,
                            Err(e) => return fail_with(e),
                        }
                    }
                    next.violations.extend(vs);
                    self.clone().run(mc.clone(), i + 1, next)
                })
            }
            StmtKind::Find { callee, args, target } => {
                let args = match args.iter().map(eval).collect::<Result<Vec<_>, _>>() {
                    Ok(a) => a,
                    Err(e) => return fail_with(e),
                };
                let mut items = Vec::new();
                let mut raised = Vec::new();
                for answer in self.call(&callee.name, args) {
                    match answer {
                        Ok((mut vals, vs)) => {
                            items.push(if vals.len() == 1 { vals.pop().unwrap() } else { Value::list(vals) });
                            raised.extend(vs);
                        }
                        Err(e) => return fail_with(e),
                    }
                }
                match bind_here(&st, &target.name, Value::list(items)) {
                    Ok(mut next) => {
                        next.violations.extend(raised);
                        self.run(m.clone(), i + 1, next)
                    }
                    Err(e) => fail_with(e),
                }
            }
        }
    }
}

pub struct OracleSolutions {
    stream: Stream<Answer>,
    names: Vec<String>,
    done: bool,
}

impl Iterator for OracleSolutions {
    type Item = Result<Solution, Fault>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = self.stream.next();
        self.done = !matches!(item, Some(Ok(_)));
        item.map(|r| {
            r.map(|(vals, violations)| Solution { outputs: self.names.iter().cloned().zip(vals).collect(), violations })
        })
    }
}

/// `b, b+s, b+2s, ...` while within `e`, by repeated addition.
fn enumerate_for(b: &Value, e: &Value, s: &Value, int: bool) -> Stream<Value> {
    if int {
        let (Value::Int(b), Value::Int(e), Value::Int(s)) = (b, e, s) else {
            let bad = [b, e, s].into_iter().find(|v| !matches!(v, Value::Int(_))).unwrap().clone();
            return fail_with(Fault::Dtype { expected: Dtype::Int, found: bad });
        };
        if *s <= 0 {
            return fail_with(Fault::NonPositiveStep(Value::Int(*s)));
        }
        let (e, s) = (*e, *s);
        return Box::new(
            iter::successors(Some(*b), move |v| v.checked_add(s))
                .take_while(move |v| *v <= e)
                .map(|v| Ok(Value::Int(v))),
        );
    }
    let num = |v: &Value| match v {
        Value::Real(r) => Ok(*r),
        Value::Int(i) => Ok(*i as f64),
        other => Err(Fault::Dtype { expected: Dtype::Real, found: other.clone() }),
    };
    let (b, e, s0) = match (num(b), num(e), num(s)) {
        (Ok(b), Ok(e), Ok(s)) => (b, e, s),
        (Err(x), _, _) | (_, Err(x), _) | (_, _, Err(x)) => return fail_with(x),
    };
    if s0 <= 0.0 {
        return fail_with(Fault::NonPositiveStep(s.clone()));
    }
    let limit = e + 1e-9 * f64::max(1.0, e.abs());
    Box::new(
        iter::successors(Some(b), move |v| Some(v + s0)).take_while(move |v| *v <= limit).map(|v| Ok(Value::Real(v))),
    )
}

fn bind_as(types: &HashMap<String, Dtype>, st: &State, name: &str, v: Value) -> Result<State, Fault> {
    let v = convert(v, types[name])?;
    Ok(State { env: st.env.bind(name, v), violations: st.violations.clone() })
}

fn truth(v: Value) -> Result<bool, Fault> {
    match v {
        Value::Bool(b) => Ok(b),
        other => Err(Fault::Dtype { expected: Dtype::Bool, found: other }),
    }
}

fn real_of(v: &Value) -> Result<f64, Fault> {
    match v {
        Value::Real(r) => Ok(*r),
        Value::Int(i) => Ok(*i as f64),
        other => Err(Fault::Dtype { expected: Dtype::Real, found: other.clone() }),
    }
}

fn checked_real(r: f64, op: &str) -> Result<Value, Fault> {
    if r.is_finite() {
        Ok(Value::Real(r))
    } else {
        Err(Fault::Domain(format!("{op} has no finite result")))
    }
}

fn eval(e: &Expr, env: &Env) -> Result<Value, Fault> {
    match &e.kind {
        ExprKind::Int(i) => Ok(Value::Int(*i)),
        ExprKind::Real(r) => Ok(Value::Real(*r)),
        ExprKind::Bool(b) => Ok(Value::Bool(*b)),
        ExprKind::Var(n) => env.lookup(n),
        ExprKind::Neg(x) => match eval(x, env)? {
            Value::Int(i) => i.checked_neg().map(Value::Int).ok_or(Fault::Overflow),
            Value::Real(r) => Ok(Value::Real(-r)),
            other => Err(Fault::Dtype { expected: Dtype::Real, found: other }),
        },
        ExprKind::Binary(op, l, r) => {
            let (a, b) = (eval(l, env)?, eval(r, env)?);
            match (op, &a, &b) {
                (BinOp::Add, Value::Int(x), Value::Int(y)) => x.checked_add(*y).map(Value::Int).ok_or(Fault::Overflow),
                (BinOp::Sub, Value::Int(x), Value::Int(y)) => x.checked_sub(*y).map(Value::Int).ok_or(Fault::Overflow),
                (BinOp::Mul, Value::Int(x), Value::Int(y)) => x.checked_mul(*y).map(Value::Int).ok_or(Fault::Overflow),
                _ => {
                    let (x, y) = (real_of(&a)?, real_of(&b)?);
                    match op {
                        BinOp::Add => checked_real(x + y, "addition"),
                        BinOp::Sub => checked_real(x - y, "subtraction"),
                        BinOp::Mul => checked_real(x * y, "multiplication"),
                        BinOp::Div => {
                            if y == 0.0 {
                                Err(Fault::DivisionByZero)
                            } else {
                                checked_real(x / y, "division")
                            }
                        }
                        BinOp::Pow => {
                            let p = x.powf(y);
                            if p.is_nan() {
                                Err(Fault::Domain(format!("{x:?}^{y:?} is undefined")))
                            } else {
                                checked_real(p, "power")
                            }
                        }
                    }
                }
            }
        }
        ExprKind::Compare(op, l, r) => {
            let (a, b) = (eval(l, env)?, eval(r, env)?);
            let ord = match (&a, &b) {
                (Value::Int(x), Value::Int(y)) => Some(x.cmp(y)),
                (Value::Int(_) | Value::Real(_), Value::Int(_) | Value::Real(_)) => {
                    real_of(&a)?.partial_cmp(&real_of(&b)?)
                }
                _ if a.dtype() == b.dtype() && matches!(op, CmpOp::Eq | CmpOp::Ne) => {
                    return Ok(Value::Bool((a == b) == (*op == CmpOp::Eq)));
                }
                _ => return Err(Fault::Dtype { expected: a.dtype(), found: b }),
            };
            let Some(ord) = ord else { return Err(Fault::Domain("comparison with NaN".into())) };
            Ok(Value::Bool(match op {
                CmpOp::Le => ord.is_le(),
                CmpOp::Ge => ord.is_ge(),
                CmpOp::Lt => ord.is_lt(),
                CmpOp::Gt => ord.is_gt(),
                CmpOp::Eq => ord.is_eq(),
                CmpOp::Ne => ord.is_ne(),
            }))
        }
        ExprKind::Func(f, args) => {
            let vs = args.iter().map(|a| eval(a, env)).collect::<Result<Vec<_>, _>>()?;
            let int_of = |v: &Value| match v {
                Value::Int(i) => Ok(*i),
                other => Err(Fault::Dtype { expected: Dtype::Int, found: other.clone() }),
            };
            let list_of = |v: &Value| match v {
                Value::List(l) => Ok(l.clone()),
                other => Err(Fault::Dtype { expected: Dtype::List, found: other.clone() }),
            };
            match f {
                Func::Sqrt => {
                    let x = real_of(&vs[0])?;
                    if x < 0.0 {
                        Err(Fault::Domain(format!("sqrt of negative number {x:?}")))
                    } else {
                        Ok(Value::Real(x.sqrt()))
                    }
                }
                Func::Abs => match &vs[0] {
                    Value::Int(i) => i.checked_abs().map(Value::Int).ok_or(Fault::Overflow),
                    v => Ok(Value::Real(real_of(v)?.abs())),
                },
                Func::Min | Func::Max => {
                    let pick_first = |less: bool| (f == &Func::Min) == less;
                    match (&vs[0], &vs[1]) {
                        (Value::Int(x), Value::Int(y)) => Ok(Value::Int(if pick_first(x <= y) { *x } else { *y })),
                        (a, b) => {
                            let (x, y) = (real_of(a)?, real_of(b)?);
                            Ok(Value::Real(if f == &Func::Min { x.min(y) } else { x.max(y) }))
                        }
                    }
                }
                Func::Div | Func::Mod => {
                    let (x, y) = (int_of(&vs[0])?, int_of(&vs[1])?);
                    if y == 0 {
                        return Err(Fault::DivisionByZero);
                    }
                    let q = if f == &Func::Div { x.checked_div_euclid(y) } else { x.checked_rem_euclid(y) };
                    q.map(Value::Int).ok_or(Fault::Overflow)
                }
                Func::Len => Ok(Value::Int(list_of(&vs[0])?.len() as i64)),
                Func::Cons => {
                    let tail = list_of(&vs[1])?;
                    Ok(Value::list(iter::once(vs[0].clone()).chain(tail.iter().cloned()).collect()))
                }
            }
        }
        ExprKind::List(items) => Ok(Value::list(items.iter().map(|a| eval(a, env)).collect::<Result<Vec<_>, _>>()?)),
    }
}

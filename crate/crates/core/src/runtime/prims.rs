//! Primitive generators, deterministic commit and all-solutions collection.

use std::cell::RefCell;
use std::rc::Rc;

use crate::value::{Dtype, List, Value};

use super::{ops, vars, Cont, Executable, Goal, RuntimeFault, Variable, VerifyViolation, Vm};

#[derive(Clone, Copy)]
enum Range {
    Int { cur: i64, end: i64, step: i64 },
    Real { cur: f64, end: f64, step: f64 },
}

impl Range {
    fn contains_cur(&self) -> bool {
        match *self {
            Range::Int { cur, end, .. } => cur <= end,
            Range::Real { cur, end, .. } => cur <= end + 1e-9 * end.abs().max(1.0),
        }
    }

    fn advance(&self) -> Option<Range> {
        match *self {
            Range::Int { cur, end, step } => cur.checked_add(step).map(|cur| Range::Int { cur, end, step }),
            Range::Real { cur, end, step } => Some(Range::Real { cur: cur + step, end, step }),
        }
    }

    fn value(&self) -> Value {
        match *self {
            Range::Int { cur, .. } => Value::Int(cur),
            Range::Real { cur, .. } => Value::Real(cur),
        }
    }
}

struct ForGen {
    range: Range,
    out: Variable,
    cont: Cont,
}

impl Executable for ForGen {
    fn exec(&self, vm: &mut Vm) -> Result<Goal, RuntimeFault> {
        if !self.range.contains_cur() {
            return Ok(Goal::Failure);
        }
        if let Some(next) = self.range.advance().filter(Range::contains_cur) {
            vm.push(Rc::new(ForGen { range: next, out: self.out.clone(), cont: self.cont.clone() }));
        }
        vm.write(&self.out, self.range.value());
        Ok(Goal::Next(self.cont.clone()))
    }
}

/// Goal enumerating `begin, begin+step, ...` up to `end` into `out`.
/// With `int` set the arithmetic is exact; otherwise the bound has a small tolerance.
pub fn for_gen(
    begin: &Value,
    end: &Value,
    step: &Value,
    int: bool,
    out: Variable,
    cont: Cont,
) -> Result<Cont, RuntimeFault> {
    let range = if int {
        Range::Int { cur: ops::to_int(begin)?, end: ops::to_int(end)?, step: ops::to_int(step)? }
    } else {
        Range::Real { cur: ops::to_real(begin)?, end: ops::to_real(end)?, step: ops::to_real(step)? }
    };
    let positive = match range {
        Range::Int { step, .. } => step > 0,
        Range::Real { step, .. } => step > 0.0,
    };
    if !positive {
        return Err(RuntimeFault::NonPositiveStep(step.clone()));
    }
    Ok(Rc::new(ForGen { range, out, cont }))
}

struct SelectGen {
    list: List,
    index: usize,
    dtype: Option<Dtype>,
    out: Variable,
    cont: Cont,
}

impl Executable for SelectGen {
    fn exec(&self, vm: &mut Vm) -> Result<Goal, RuntimeFault> {
        let Some(item) = self.list.get(self.index) else { return Ok(Goal::Failure) };
        if self.index + 1 < self.list.len() {
            vm.push(Rc::new(SelectGen {
                list: self.list.clone(),
                index: self.index + 1,
                dtype: self.dtype,
                out: self.out.clone(),
                cont: self.cont.clone(),
            }));
        }
        let item = match self.dtype {
            Some(t) => ops::coerce(item.clone(), t)?,
            None => item.clone(),
        };
        vm.write(&self.out, item);
        Ok(Goal::Next(self.cont.clone()))
    }
}

/// Goal yielding the elements of `list` left to right, converted to `dtype` if given.
pub fn select_gen(list: &Value, dtype: Option<Dtype>, out: Variable, cont: Cont) -> Result<Cont, RuntimeFault> {
    Ok(Rc::new(SelectGen { list: ops::to_list(list)?, index: 0, dtype, out, cont }))
}

/// Drops the choice points a deterministic callee left behind.
pub struct Commit {
    pub depth: usize,
    pub cont: Cont,
}

impl Executable for Commit {
    fn exec(&self, vm: &mut Vm) -> Result<Goal, RuntimeFault> {
        vm.cut_to(self.depth);
        Ok(Goal::Next(self.cont.clone()))
    }
}

/// Run the goal built by `callee` and commit to its first solution.
pub fn dcall(
    vm: &Vm,
    cont: Cont,
    callee: impl FnOnce(Cont) -> Result<Cont, RuntimeFault>,
) -> Result<Goal, RuntimeFault> {
    let commit = Rc::new(Commit { depth: vm.depth(), cont });
    Ok(Goal::Next(callee(commit)?))
}

struct Widen {
    cells: Vec<(Variable, &'static str)>,
    cont: Cont,
}

impl Executable for Widen {
    fn exec(&self, vm: &mut Vm) -> Result<Goal, RuntimeFault> {
        for (cell, name) in &self.cells {
            let v = vm.read(cell, name)?;
            vm.write(cell, ops::coerce(v, Dtype::Real)?);
        }
        Ok(Goal::Next(self.cont.clone()))
    }
}

/// Continuation converting int results in `cells` to real before `cont`.
pub fn widen(cells: Vec<(Variable, &'static str)>, cont: Cont) -> Cont {
    Rc::new(Widen { cells, cont })
}

#[derive(Default)]
struct Collected {
    items: Vec<Value>,
    violations: Vec<VerifyViolation>,
}

struct FindRecord {
    acc: Rc<RefCell<Collected>>,
    outs: Vec<Variable>,
    mark: usize,
}

impl Executable for FindRecord {
    fn exec(&self, vm: &mut Vm) -> Result<Goal, RuntimeFault> {
        let mut row = Vec::with_capacity(self.outs.len());
        for (i, v) in self.outs.iter().enumerate() {
            row.push(vm.read(v, &format!("find output {}", i + 1))?);
        }
        let item = if row.len() == 1 { row.pop().unwrap() } else { Value::list(row) };
        let mut acc = self.acc.borrow_mut();
        acc.items.push(item);
        acc.violations.extend_from_slice(vm.violations_since(self.mark));
        Ok(Goal::Failure)
    }
}

struct FindFinish {
    acc: Rc<RefCell<Collected>>,
    target: Variable,
    cont: Cont,
}

impl Executable for FindFinish {
    fn exec(&self, vm: &mut Vm) -> Result<Goal, RuntimeFault> {
        let Collected { items, violations } = std::mem::take(&mut *self.acc.borrow_mut());
        vm.write(&self.target, Value::list(items));
        for v in violations {
            vm.violate(v);
        }
        Ok(Goal::Next(self.cont.clone()))
    }
}

/// Collect every solution of the goal built by `callee` into a list in `target`.
///
/// A callee with one output contributes bare values, otherwise one list per
/// solution. Violations raised inside the callee carry over to the caller.
pub fn find(
    vm: &mut Vm,
    n_outs: usize,
    target: Variable,
    cont: Cont,
    callee: impl FnOnce(Vec<Variable>, Cont) -> Result<Cont, RuntimeFault>,
) -> Result<Goal, RuntimeFault> {
    let acc = Rc::new(RefCell::new(Collected::default()));
    vm.push(Rc::new(FindFinish { acc: acc.clone(), target, cont }));
    let outs = vars(n_outs);
    let record = Rc::new(FindRecord { acc, outs: outs.clone(), mark: vm.violations().len() });
    Ok(Goal::Next(callee(outs, record)?))
}

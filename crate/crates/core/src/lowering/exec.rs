use std::rc::Rc;
use std::sync::Arc;

use crate::runtime::{self, ops, var, Cont, Executable, Goal, RuntimeFault, Variable, VerifyViolation, Vm};
use crate::value::Value;

use super::{CExpr, CallSiteOp, Callee, GenOp, LinkedProgram, MethodGraph, Op};

type R<T> = Result<T, RuntimeFault>;

impl LinkedProgram {
    /// Goal running module `id` on `ins`, writing its outputs to `outs` before continuing with `cont`.
    pub fn goal(self: &Arc<Self>, id: usize, ins: Vec<Value>, outs: Vec<Variable>, cont: Cont) -> R<Cont> {
        let g = &self.modules[id];
        if ins.len() != g.inputs.len() || outs.len() != g.outputs.len() {
            return Err(RuntimeFault::Internal(format!(
                "`{}` called with {} input(s) and {} output(s)",
                g.name,
                ins.len(),
                outs.len()
            )));
        }
        let mut ins = ins;
        for (v, (_, t)) in ins.iter_mut().zip(&g.inputs) {
            if v.dtype() != *t {
                *v = ops::coerce(v.clone(), *t)?;
            }
        }
        Ok(Rc::new(Entry { prog: self.clone(), module: id, method: 0, ins: ins.into(), outs: outs.into(), cont }))
    }
}

/// Tries one method, leaving the next one as a choice point.
struct Entry {
    prog: Arc<LinkedProgram>,
    module: usize,
    method: usize,
    ins: Rc<[Value]>,
    outs: Rc<[Variable]>,
    cont: Cont,
}

impl Executable for Entry {
    fn exec(&self, vm: &mut Vm) -> R<Goal> {
        let g = &self.prog.modules[self.module];
        if self.method + 1 < g.methods.len() {
            vm.push(Rc::new(Entry {
                prog: self.prog.clone(),
                module: self.module,
                method: self.method + 1,
                ins: self.ins.clone(),
                outs: self.outs.clone(),
                cont: self.cont.clone(),
            }));
        }
        let m = &g.methods[self.method];
        let frame = m
            .layout
            .iter()
            .map(|cell| match (cell.input, cell.output) {
                (Some(_), _) => None,
                (None, Some(o)) => Some(self.outs[o].clone()),
                (None, None) => Some(var()),
            })
            .collect();
        let act = Rc::new(Activation {
            prog: self.prog.clone(),
            module: self.module,
            method: self.method,
            ins: self.ins.clone(),
            frame,
            cont: self.cont.clone(),
        });
        run_unit(&act, 0, 0, vm)
    }
}

/// One call's cells. Output cells are the caller's own; inputs are read from `ins` and have no cell.
struct Activation {
    prog: Arc<LinkedProgram>,
    module: usize,
    method: usize,
    ins: Rc<[Value]>,
    frame: Vec<Option<Variable>>,
    cont: Cont,
}

impl Activation {
    fn method(&self) -> &MethodGraph {
        &self.prog.modules[self.module].methods[self.method]
    }

    fn cell(&self, s: usize) -> &Variable {
        self.frame[s].as_ref().expect("inputs are never written")
    }

    fn read(&self, s: usize, vm: &Vm) -> R<Value> {
        let info = &self.method().layout[s];
        match (info.input, &self.frame[s]) {
            (Some(i), _) => Ok(self.ins[i].clone()),
            (None, Some(cell)) => vm.read(cell, &info.name),
            (None, None) => Err(RuntimeFault::Internal(format!("no cell for `{}`", info.name))),
        }
    }

    fn eval(&self, e: &CExpr, vm: &Vm) -> R<Value> {
        match e {
            CExpr::Const(v) => Ok(v.clone()),
            CExpr::Slot(s) => self.read(*s, vm),
            CExpr::Neg(inner) => ops::neg(&self.eval(inner, vm)?),
            CExpr::Bin(op, l, r) => ops::binary(*op, &self.eval(l, vm)?, &self.eval(r, vm)?),
            CExpr::Cmp(op, l, r) => Ok(Value::Bool(ops::compare(*op, &self.eval(l, vm)?, &self.eval(r, vm)?)?)),
            CExpr::Func(f, args) => match &args[..] {
                [a] => ops::apply(*f, &[self.eval(a, vm)?]),
                [a, b] => ops::apply(*f, &[self.eval(a, vm)?, self.eval(b, vm)?]),
                _ => ops::apply(*f, &self.eval_all(args, vm)?),
            },
            CExpr::List(items) => Ok(Value::list(self.eval_all(items, vm)?)),
        }
    }

    fn eval_all(&self, es: &[CExpr], vm: &Vm) -> R<Vec<Value>> {
        es.iter().map(|e| self.eval(e, vm)).collect()
    }

    /// Goal for the callee of `site`, given its output cells and continuation.
    fn callee(&self, site: &CallSiteOp, args: Vec<Value>, outs: Vec<Variable>, k: Cont) -> R<Cont> {
        match &site.callee {
            Callee::Module(id) => self.prog.goal(*id, args, outs, k),
            Callee::For { int } => runtime::for_gen(&args[0], &args[1], &args[2], *int, outs[0].clone(), k),
            Callee::Select { dtype } => runtime::select_gen(&args[0], *dtype, outs[0].clone(), k),
            Callee::Named(n) => Err(RuntimeFault::Internal(format!("call to unlinked module `{n}`"))),
        }
    }

    /// Continuation after a call: widen int results first if needed.
    fn after_call(self: &Rc<Self>, site: &CallSiteOp, cont: Cont) -> Cont {
        if site.widen.is_empty() {
            cont
        } else {
            Rc::new(Widen { act: self.clone(), slots: site.widen.clone(), cont })
        }
    }
}

fn run_unit(act: &Rc<Activation>, unit: usize, pos: usize, vm: &mut Vm) -> R<Goal> {
    let m = act.method();
    let node = &m.units[unit];
    for (k, op) in node.ops.iter().enumerate().skip(pos) {
        match op {
            Op::Assign { slot, dtype, expr } => {
                let v = ops::coerce(act.eval(expr, vm)?, *dtype)?;
                vm.write(act.cell(*slot), v);
            }
            Op::Guard { expr } => {
                if !ops::truth(&act.eval(expr, vm)?)? {
                    return Ok(Goal::Failure);
                }
            }
            Op::Verify { text, reads, expr } => {
                if !ops::truth(&act.eval(expr, vm)?)? {
                    let bindings = reads
                        .iter()
                        .map(|&s| Ok((m.layout[s].name.clone(), act.read(s, vm)?)))
                        .collect::<R<Vec<_>>>()?;
                    vm.violate(VerifyViolation { condition: text.clone(), method: m.id.clone(), bindings });
                }
            }
            Op::Dcall(site) => {
                let resume: Cont = Rc::new(UnitStep { act: act.clone(), unit, pos: k + 1 });
                let args = act.eval_all(&site.args, vm)?;
                let outs = site.outs.iter().map(|&s| act.cell(s).clone()).collect();
                let cont = act.after_call(site, resume);
                return runtime::dcall(vm, cont, |commit| act.callee(site, args, outs, commit));
            }
            Op::Find { site, target } => {
                let resume: Cont = Rc::new(UnitStep { act: act.clone(), unit, pos: k + 1 });
                let args = act.eval_all(&site.args, vm)?;
                let n_outs = match site.callee {
                    Callee::Module(id) => act.prog.modules[id].outputs.len(),
                    _ => 1,
                };
                return runtime::find(vm, n_outs, act.cell(*target).clone(), resume, |outs, record| {
                    act.callee(site, args, outs, record)
                });
            }
        }
    }
    let Some(gen) = &node.generator else { return Ok(Goal::Next(act.cont.clone())) };
    let next: Cont = if unit + 1 < m.units.len() {
        Rc::new(UnitStep { act: act.clone(), unit: unit + 1, pos: 0 })
    } else {
        act.cont.clone()
    };
    let goal = match gen {
        GenOp::For { slot, int, begin, end, step } => runtime::for_gen(
            &act.eval(begin, vm)?,
            &act.eval(end, vm)?,
            &act.eval(step, vm)?,
            *int,
            act.cell(*slot).clone(),
            next,
        )?,
        GenOp::Select { slot, dtype, list } => {
            runtime::select_gen(&act.eval(list, vm)?, Some(*dtype), act.cell(*slot).clone(), next)?
        }
        GenOp::Call(site) => {
            let args = act.eval_all(&site.args, vm)?;
            let outs = site.outs.iter().map(|&s| act.cell(s).clone()).collect();
            let cont = act.after_call(site, next);
            act.callee(site, args, outs, cont)?
        }
    };
    Ok(Goal::Next(goal))
}

/// Resumes a unit after a `dcall` or `find`, or starts a later unit.
struct UnitStep {
    act: Rc<Activation>,
    unit: usize,
    pos: usize,
}

impl Executable for UnitStep {
    fn exec(&self, vm: &mut Vm) -> R<Goal> {
        run_unit(&self.act, self.unit, self.pos, vm)
    }
}

struct Widen {
    act: Rc<Activation>,
    slots: Vec<usize>,
    cont: Cont,
}

impl Executable for Widen {
    fn exec(&self, vm: &mut Vm) -> R<Goal> {
        let layout = &self.act.method().layout;
        for &s in &self.slots {
            let v = self.act.read(s, vm)?;
            vm.write(self.act.cell(s), ops::coerce(v, layout[s].dtype)?);
        }
        Ok(Goal::Next(self.cont.clone()))
    }
}

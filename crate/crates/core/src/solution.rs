//! Solutions, the VM query driver, and output formats.

use std::fmt::Write;
use std::sync::Arc;

use crate::lowering::LinkedProgram;
use crate::runtime::{succeed, vars, Cont, RuntimeFault, Variable, VerifyViolation, Vm};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// In declaration order.
    pub outputs: Vec<(String, Value)>,
    pub violations: Vec<VerifyViolation>,
}

impl Solution {
    pub fn get(&self, name: &str) -> Option<&Value> {
        self.outputs.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut outputs = serde_json::Map::new();
        for (name, v) in &self.outputs {
            outputs.insert(name.clone(), v.to_json());
        }
        serde_json::json!({
            "outputs": outputs,
            "violations": self.violations.iter().map(VerifyViolation::to_json).collect::<Vec<_>>(),
        })
    }

    /// One JSON record, no trailing newline.
    pub fn to_jsonl(&self) -> String {
        self.to_json().to_string()
    }

    /// `X=0.0 Y=1.0`, followed by one indented line per violation.
    pub fn to_text(&self) -> String {
        let mut out = self.outputs.iter().map(|(n, v)| format!("{n}={v}")).collect::<Vec<_>>().join(" ");
        for v in &self.violations {
            let _ = write!(out, "\n  ! {v}");
        }
        out
    }

    /// Equal up to `rel` relative difference in reals; everything else exact.
    pub fn approx_eq(&self, other: &Solution, rel: f64) -> bool {
        fn pairs(a: &[(String, Value)], b: &[(String, Value)], rel: f64) -> bool {
            a.len() == b.len() && a.iter().zip(b).all(|((n, x), (m, y))| n == m && x.approx_eq(y, rel))
        }
        pairs(&self.outputs, &other.outputs, rel)
            && self.violations.len() == other.violations.len()
            && self.violations.iter().zip(&other.violations).all(|(a, b)| {
                a.condition == b.condition && a.method == b.method && pairs(&a.bindings, &b.bindings, rel)
            })
    }
}

pub fn streams_match(a: &[Solution], b: &[Solution], rel: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.approx_eq(y, rel))
}

/// Drives a goal with `call` and then `redo`, reading outputs after each success.
pub struct VmSolutions {
    vm: Vm,
    goal: Option<Cont>,
    outs: Vec<Variable>,
    names: Vec<String>,
    done: bool,
}

impl VmSolutions {
    pub fn new(vm: Vm, goal: Cont, outs: Vec<Variable>, names: Vec<String>) -> Self {
        VmSolutions { vm, goal: Some(goal), outs, names, done: false }
    }

    pub fn vm(&self) -> &Vm {
        &self.vm
    }

    pub fn into_vm(self) -> Vm {
        self.vm
    }

    fn step(&mut self) -> Result<Option<Solution>, RuntimeFault> {
        let found = match self.goal.take() {
            Some(goal) => self.vm.call(goal)?,
            None => self.vm.redo()?,
        };
        if !found {
            return Ok(None);
        }
        let outputs = self
            .names
            .iter()
            .zip(&self.outs)
            .map(|(n, v)| Ok((n.clone(), self.vm.read(v, n)?)))
            .collect::<Result<Vec<_>, RuntimeFault>>()?;
        Ok(Some(Solution { outputs, violations: self.vm.violations().to_vec() }))
    }
}

impl Iterator for VmSolutions {
    type Item = Result<Solution, RuntimeFault>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.step() {
            Ok(Some(s)) => Some(Ok(s)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QueryError {
    #[error("no module named `{0}`")]
    UnknownModule(String),
    #[error("`{module}` takes {expected} input(s), got {found}")]
    InputCount { module: String, expected: usize, found: usize },
    #[error(transparent)]
    Fault(#[from] RuntimeFault),
}

/// Solutions of `module` on the lowered program.
pub fn solve(prog: &Arc<LinkedProgram>, module: &str, ins: Vec<Value>, vm: Vm) -> Result<VmSolutions, QueryError> {
    let id = prog.module_id(module).ok_or_else(|| QueryError::UnknownModule(module.to_string()))?;
    let g = prog.module(id);
    if ins.len() != g.inputs.len() {
        return Err(QueryError::InputCount { module: module.to_string(), expected: g.inputs.len(), found: ins.len() });
    }
    let outs = vars(g.outputs.len());
    let names = g.outputs.iter().map(|(n, _)| n.clone()).collect();
    let goal = prog.goal(id, ins, outs.clone(), succeed())?;
    Ok(VmSolutions::new(vm, goal, outs, names))
}

//! The inference engine.
//!
//! Code runs as a chain of [`Executable`] continuations. `exec` returns the
//! next goal, or one of the success/failure sentinels, and the [`Vm`] loop owns
//! control: on failure it resumes the most recent choice point.
//!
//! Variable cells are never restored on backtracking. A resumed path rewrites
//! every cell before reading it, which [`Vm::with_checks`] verifies at runtime.

pub mod ops;
pub mod prims;

use std::cell::{Cell, RefCell};
use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use crate::value::{Dtype, Value};

pub use prims::{dcall, find, for_gen, select_gen, widen, Commit};

/// A continuation.
pub type Cont = Rc<dyn Executable>;

pub enum Goal {
    Next(Cont),
    Success,
    Failure,
}

pub trait Executable {
    fn exec(&self, vm: &mut Vm) -> Result<Goal, RuntimeFault>;
}

struct Succeed;

impl Executable for Succeed {
    fn exec(&self, _: &mut Vm) -> Result<Goal, RuntimeFault> {
        Ok(Goal::Success)
    }
}

struct Fail;

impl Executable for Fail {
    fn exec(&self, _: &mut Vm) -> Result<Goal, RuntimeFault> {
        Ok(Goal::Failure)
    }
}

/// Continuation that reports a solution.
pub fn succeed() -> Cont {
    Rc::new(Succeed)
}

/// Goal that fails immediately.
pub fn fail() -> Cont {
    Rc::new(Fail)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuntimeFault {
    #[error("read of unbound variable `{0}`")]
    UnboundRead(String),
    #[error("variable `{0}` read a value left over from an abandoned path")]
    StaleRead(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("{0}")]
    Domain(String),
    #[error("integer overflow")]
    Overflow,
    #[error("`for` step must be positive, got {0}")]
    NonPositiveStep(Value),
    #[error("expected a value of type {expected}, found {found}")]
    Dtype { expected: Dtype, found: Value },
    #[error("internal error: {0}")]
    Internal(String),
}

/// A single-assignment cell. Writes overwrite freely; nothing is restored on backtracking.
#[derive(Default)]
pub struct VarCell {
    value: RefCell<Option<Value>>,
    stamp: Cell<u64>,
}

impl VarCell {
    /// Current content without any checking. Meant for reading solution outputs.
    pub fn get(&self) -> Option<Value> {
        self.value.borrow().clone()
    }
}

impl fmt::Debug for VarCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.value.borrow() {
            Some(v) => write!(f, "VarCell({v})"),
            None => f.write_str("VarCell(_)"),
        }
    }
}

pub type Variable = Rc<VarCell>;

pub fn var() -> Variable {
    Rc::new(VarCell::default())
}

pub fn vars(n: usize) -> Vec<Variable> {
    (0..n).map(|_| var()).collect()
}

/// A failed `verify` condition.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyViolation {
    pub condition: String,
    /// `module/method-number`
    pub method: String,
    /// Variables referenced by the condition, in order of first appearance.
    pub bindings: Vec<(String, Value)>,
}

impl VerifyViolation {
    pub fn to_json(&self) -> serde_json::Value {
        let mut bindings = serde_json::Map::new();
        for (name, v) in &self.bindings {
            bindings.insert(name.clone(), v.to_json());
        }
        serde_json::json!({
            "condition": self.condition,
            "method": self.method,
            "bindings": bindings,
        })
    }
}

impl fmt::Display for VerifyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "verify({}) failed in {}", self.condition, self.method)?;
        for (i, (name, v)) in self.bindings.iter().enumerate() {
            write!(f, "{}{name}={v}", if i == 0 { " with " } else { ", " })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub steps: u64,
    pub pushes: u64,
    pub pops: u64,
    pub peak_depth: usize,
    pub commits: u64,
    /// Choice points discarded by commits.
    pub discarded: u64,
}

/// Stack depths observed around one `dcall` commit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommitEvent {
    pub entry_depth: usize,
    pub depth_before: usize,
    pub depth_after: usize,
}

struct ChoicePoint {
    goal: Cont,
    violations: usize,
    clock: u64,
}

pub struct Vm {
    stack: Vec<ChoicePoint>,
    violations: Vec<VerifyViolation>,
    stats: Stats,
    clock: u64,
    /// Clock ranges whose writes belong to abandoned paths, kept sorted and disjoint.
    dead: Option<Vec<(u64, u64)>>,
    commits: Option<Vec<CommitEvent>>,
}

impl Default for Vm {
    fn default() -> Self {
        Vm::new()
    }
}

impl Vm {
    pub fn new() -> Self {
        Vm { stack: Vec::new(), violations: Vec::new(), stats: Stats::default(), clock: 0, dead: None, commits: None }
    }

    /// A VM that faults when a resumed path reads a cell last written on an abandoned one.
    pub fn with_checks() -> Self {
        Vm { dead: Some(Vec::new()), ..Vm::new() }
    }

    /// Record stack depths at every commit.
    pub fn trace_commits(&mut self) {
        self.commits = Some(Vec::new());
    }

    pub fn commit_events(&self) -> &[CommitEvent] {
        self.commits.as_deref().unwrap_or(&[])
    }

    /// Run `goal` until a solution or exhaustion. Clears any previous state first.
    pub fn call(&mut self, goal: Cont) -> Result<bool, RuntimeFault> {
        self.stack.clear();
        self.violations.clear();
        self.stats = Stats::default();
        self.run(goal)
    }

    /// Resume the most recent choice point.
    pub fn redo(&mut self) -> Result<bool, RuntimeFault> {
        match self.pop() {
            Some(goal) => self.run(goal),
            None => Ok(false),
        }
    }

    fn run(&mut self, mut goal: Cont) -> Result<bool, RuntimeFault> {
        loop {
            self.stats.steps += 1;
            goal = match goal.exec(self) {
                Ok(Goal::Next(next)) => next,
                Ok(Goal::Success) => return Ok(true),
                Ok(Goal::Failure) => match self.pop() {
                    Some(next) => next,
                    None => return Ok(false),
                },
                Err(fault) => {
                    self.stack.clear();
                    return Err(fault);
                }
            };
        }
    }

    fn pop(&mut self) -> Option<Cont> {
        let cp = self.stack.pop()?;
        self.stats.pops += 1;
        self.violations.truncate(cp.violations);
        if let Some(dead) = &mut self.dead {
            let mut start = cp.clock;
            while let Some(&(s, e)) = dead.last() {
                if e < start {
                    break;
                }
                start = start.min(s);
                dead.pop();
            }
            dead.push((start, self.clock));
        }
        Some(cp.goal)
    }

    pub fn push(&mut self, goal: Cont) {
        self.stack.push(ChoicePoint { goal, violations: self.violations.len(), clock: self.clock });
        self.stats.pushes += 1;
        self.stats.peak_depth = self.stats.peak_depth.max(self.stack.len());
    }

    pub fn depth(&self) -> usize {
        self.stack.len()
    }

    /// Discard every choice point above `depth`.
    pub fn cut_to(&mut self, entry_depth: usize) {
        let before = self.stack.len();
        debug_assert!(entry_depth <= before, "commit below its entry depth");
        self.stack.truncate(entry_depth);
        self.stats.commits += 1;
        self.stats.discarded += (before - self.stack.len()) as u64;
        if let Some(log) = &mut self.commits {
            log.push(CommitEvent { entry_depth, depth_before: before, depth_after: self.stack.len() });
        }
    }

    pub fn read(&self, v: &VarCell, name: &str) -> Result<Value, RuntimeFault> {
        let value = v.value.borrow().clone().ok_or_else(|| RuntimeFault::UnboundRead(name.to_string()))?;
        if let Some(dead) = &self.dead {
            let t = v.stamp.get();
            let i = dead.partition_point(|&(_, e)| e < t);
            if i < dead.len() && dead[i].0 < t {
                return Err(RuntimeFault::StaleRead(name.to_string()));
            }
        }
        Ok(value)
    }

    pub fn write(&mut self, v: &VarCell, value: Value) {
        self.clock += 1;
        v.stamp.set(self.clock);
        *v.value.borrow_mut() = Some(value);
    }

    pub fn violate(&mut self, v: VerifyViolation) {
        self.violations.push(v);
    }

    /// Violations raised on the current path.
    pub fn violations(&self) -> &[VerifyViolation] {
        &self.violations
    }

    pub(crate) fn violations_since(&self, mark: usize) -> &[VerifyViolation] {
        &self.violations[mark..]
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }
}

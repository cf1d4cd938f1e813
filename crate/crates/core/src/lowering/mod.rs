//! Compilation of scheduled modules into executable graphs.
//!
//! Each method becomes a list of unit nodes, one per continuation unit. A node
//! runs its deterministic operations in order and then hands its trailing
//! generator the next node as continuation. The first unit runs directly from
//! the method entry instead of through a separate node.

mod exec;

use std::collections::HashMap;
use std::fmt::Write;
use std::sync::Arc;

use thiserror::Error;

use crate::analyzer::{Origin, StmtClass};
use crate::frontend::ast::*;
use crate::frontend::pretty::{expr_to_string, stmt_to_string};
use crate::scheduler::ScheduledModule;
use crate::value::{Dtype, Value};

/// Expression with variables resolved to frame slots.
#[derive(Debug, Clone, PartialEq)]
pub enum CExpr {
    Const(Value),
    Slot(usize),
    Neg(Box<CExpr>),
    Bin(BinOp, Box<CExpr>, Box<CExpr>),
    Cmp(CmpOp, Box<CExpr>, Box<CExpr>),
    Func(Func, Vec<CExpr>),
    List(Vec<CExpr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Callee {
    /// Not yet linked.
    Named(String),
    Module(usize),
    For {
        int: bool,
    },
    Select {
        dtype: Option<Dtype>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CallSiteOp {
    pub callee: Callee,
    pub args: Vec<CExpr>,
    /// Caller slots receiving the outputs; empty for `find`.
    pub outs: Vec<usize>,
    /// Output slots whose callee type is int but whose caller type is real.
    pub widen: Vec<usize>,
    /// How a builtin callee would run here, kept until linking decides.
    hint_int: bool,
    hint_dtype: Option<Dtype>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    Assign {
        slot: usize,
        dtype: Dtype,
        expr: CExpr,
    },
    /// `when` and `test`
    Guard {
        expr: CExpr,
    },
    Verify {
        text: String,
        reads: Vec<usize>,
        expr: CExpr,
    },
    Dcall(CallSiteOp),
    Find {
        site: CallSiteOp,
        target: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum GenOp {
    For { slot: usize, int: bool, begin: CExpr, end: CExpr, step: CExpr },
    Select { slot: usize, dtype: Dtype, list: CExpr },
    Call(CallSiteOp),
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitNode {
    /// `Method_<i>_cu<j>`
    pub label: String,
    pub stmts: Vec<usize>,
    pub ops: Vec<Op>,
    pub generator: Option<GenOp>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellInfo {
    pub name: String,
    pub dtype: Dtype,
    pub input: Option<usize>,
    pub output: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodGraph {
    /// `module/number`, used in violation records.
    pub id: String,
    pub layout: Vec<CellInfo>,
    pub units: Vec<UnitNode>,
    pub stmt_text: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuleGraph {
    pub name: String,
    pub inputs: Vec<(String, Dtype)>,
    pub outputs: Vec<(String, Dtype)>,
    pub methods: Vec<MethodGraph>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LowerError {
    #[error("internal error while lowering `{module}`: {message}")]
    Internal { module: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinkError {
    #[error("unresolved module(s): {}", .0.join(", "))]
    UnresolvedModule(Vec<String>),
    #[error("module `{0}` is defined more than once")]
    DuplicateModule(String),
}

fn compile_expr(e: &Expr, slot: &dyn Fn(&str) -> usize) -> CExpr {
    let b = |e: &Expr| Box::new(compile_expr(e, slot));
    match &e.kind {
        ExprKind::Int(v) => CExpr::Const(Value::Int(*v)),
        ExprKind::Real(v) => CExpr::Const(Value::Real(*v)),
        ExprKind::Bool(v) => CExpr::Const(Value::Bool(*v)),
        ExprKind::Var(name) => CExpr::Slot(slot(name)),
        ExprKind::Neg(inner) => CExpr::Neg(b(inner)),
        ExprKind::Binary(op, l, r) => CExpr::Bin(*op, b(l), b(r)),
        ExprKind::Compare(op, l, r) => CExpr::Cmp(*op, b(l), b(r)),
        ExprKind::Func(f, args) => CExpr::Func(*f, args.iter().map(|a| compile_expr(a, slot)).collect()),
        ExprKind::List(items) => CExpr::List(items.iter().map(|a| compile_expr(a, slot)).collect()),
    }
}

/// Statically int-typed expression, given the slot types.
fn is_int(e: &CExpr, layout: &[CellInfo]) -> bool {
    match e {
        CExpr::Const(v) => v.dtype() == Dtype::Int,
        CExpr::Slot(s) => layout[*s].dtype == Dtype::Int,
        CExpr::Neg(inner) => is_int(inner, layout),
        CExpr::Bin(op, l, r) => !matches!(op, BinOp::Div | BinOp::Pow) && is_int(l, layout) && is_int(r, layout),
        CExpr::Func(Func::Div | Func::Mod | Func::Len, _) => true,
        CExpr::Func(Func::Abs, a) => is_int(&a[0], layout),
        CExpr::Func(Func::Min | Func::Max, a) => a.iter().all(|x| is_int(x, layout)),
        _ => false,
    }
}

/// Build the graph for one scheduled module. Callees stay unresolved until [`link`].
pub fn lower(m: &ScheduledModule) -> Result<ModuleGraph, LowerError> {
    let decl = &m.analyzed.decl;
    let name = decl.name.name.clone();
    let internal = |message: String| LowerError::Internal { module: name.clone(), message };
    let mut methods = Vec::new();

    for (mi, ((am, sched), md)) in m.analyzed.methods.iter().zip(&m.methods).zip(&decl.methods).enumerate() {
        let layout: Vec<CellInfo> = am
            .symbols
            .vars()
            .iter()
            .map(|v| CellInfo {
                name: v.name.clone(),
                dtype: v.dtype,
                input: match v.origin {
                    Origin::Input(i) => Some(i),
                    Origin::Stmt(_) => None,
                },
                output: v.output,
            })
            .collect();
        let slot = |n: &str| am.symbols.slot(n).expect("analyzer resolved every name");
        let cx = |e: &Expr| compile_expr(e, &slot);
        let site = |callee: &Ident, args: &[Expr], outs: &[Ident], find: bool| {
            let args: Vec<CExpr> = args.iter().map(cx).collect();
            let outs: Vec<usize> = outs.iter().map(|o| slot(&o.name)).collect();
            let (hint_int, hint_dtype) = match outs.first() {
                Some(&s) if !find => (layout[s].dtype == Dtype::Int, Some(layout[s].dtype)),
                _ => (args.iter().all(|a| is_int(a, &layout)), None),
            };
            CallSiteOp {
                callee: Callee::Named(callee.name.clone()),
                args,
                outs,
                widen: Vec::new(),
                hint_int,
                hint_dtype,
            }
        };

        let mut writes = vec![0usize; layout.len()];
        let mut units = Vec::new();
        for (ui, unit) in sched.units.iter().enumerate() {
            let mut ops = Vec::new();
            let mut generator = None;
            for &si in &unit.stmts {
                let stmt = &md.statements[si];
                for d in stmt.defines() {
                    writes[slot(&d.name)] += 1;
                }
                let is_gen = am.graph.classes[si] == StmtClass::Generator;
                if is_gen != (unit.trailing_generator == Some(si)) {
                    return Err(internal(format!("statement {} misplaced in unit {}", si + 1, ui + 1)));
                }
                match &stmt.kind {
                    StmtKind::Bind { target, dtype, rhs } => {
                        let s = slot(&target.name);
                        match rhs {
                            BindRhs::Expr(e) => ops.push(Op::Assign { slot: s, dtype: *dtype, expr: cx(e) }),
                            BindRhs::For { begin, end, step } => {
                                generator = Some(GenOp::For {
                                    slot: s,
                                    int: *dtype == Dtype::Int,
                                    begin: cx(begin),
                                    end: cx(end),
                                    step: cx(step),
                                })
                            }
                            BindRhs::Select(e) => {
                                generator = Some(GenOp::Select { slot: s, dtype: *dtype, list: cx(e) })
                            }
                        }
                    }
                    StmtKind::When(e) | StmtKind::Test(e) => ops.push(Op::Guard { expr: cx(e) }),
                    StmtKind::Verify(e) => ops.push(Op::Verify {
                        text: expr_to_string(e),
                        reads: e.variables().into_iter().map(slot).collect(),
                        expr: cx(e),
                    }),
                    StmtKind::Call(cs) => generator = Some(GenOp::Call(site(&cs.callee, &cs.args, &cs.outs, false))),
                    StmtKind::Dcall(cs) => ops.push(Op::Dcall(site(&cs.callee, &cs.args, &cs.outs, false))),
                    StmtKind::Find { callee, args, target } => {
                        ops.push(Op::Find { site: site(callee, args, &[], true), target: slot(&target.name) })
                    }
                }
            }
            if ui + 1 < sched.units.len() && generator.is_none() {
                return Err(internal(format!("unit {} of method {} has no generator", ui + 1, mi + 1)));
            }
            units.push(UnitNode {
                label: format!("Method_{}_cu{}", mi + 1, ui + 1),
                stmts: unit.stmts.clone(),
                ops,
                generator,
            });
        }
        for (s, cell) in layout.iter().enumerate() {
            let expected = usize::from(cell.input.is_none());
            if writes[s] != expected {
                return Err(internal(format!("cell `{}` is written {} times", cell.name, writes[s])));
            }
        }
        methods.push(MethodGraph {
            id: format!("{}/{}", name, mi + 1),
            layout,
            units,
            stmt_text: md.statements.iter().map(stmt_to_string).collect(),
        });
    }

    let params = |ps: &[ParamDecl]| ps.iter().map(|p| (p.name.name.clone(), p.dtype)).collect();
    Ok(ModuleGraph { name, inputs: params(&decl.inputs), outputs: params(&decl.outputs), methods })
}

/// A set of linked module graphs. Immutable; share it behind the `Arc`.
#[derive(Debug, PartialEq)]
pub struct LinkedProgram {
    modules: Vec<ModuleGraph>,
    index: HashMap<String, usize>,
}

impl LinkedProgram {
    pub fn module_id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn module(&self, id: usize) -> &ModuleGraph {
        &self.modules[id]
    }

    pub fn modules(&self) -> &[ModuleGraph] {
        &self.modules
    }
}

/// Bind every call site to a module of the set or to a builtin generator.
/// Modules shadow builtins of the same name.
pub fn link(mut graphs: Vec<ModuleGraph>) -> Result<Arc<LinkedProgram>, LinkError> {
    let mut index = HashMap::new();
    for (i, g) in graphs.iter().enumerate() {
        if index.insert(g.name.clone(), i).is_some() {
            return Err(LinkError::DuplicateModule(g.name.clone()));
        }
    }
    let signatures: Vec<Vec<Dtype>> = graphs.iter().map(|g| g.outputs.iter().map(|(_, t)| *t).collect()).collect();
    let mut missing: Vec<String> = Vec::new();
    let mut resolve = |site: &mut CallSiteOp, layout: &[CellInfo]| {
        let Callee::Named(name) = &site.callee else { return };
        site.callee = match (index.get(name), name.as_str()) {
            (Some(&id), _) => {
                site.widen = site
                    .outs
                    .iter()
                    .zip(&signatures[id])
                    .filter(|(&s, &t)| t == Dtype::Int && layout[s].dtype == Dtype::Real)
                    .map(|(&s, _)| s)
                    .collect();
                Callee::Module(id)
            }
            (None, "for") => Callee::For { int: site.hint_int },
            (None, "select") => Callee::Select { dtype: site.hint_dtype },
            (None, _) => {
                if !missing.contains(name) {
                    missing.push(name.clone());
                }
                return;
            }
        };
    };
    for g in &mut graphs {
        for m in &mut g.methods {
            for unit in &mut m.units {
                for op in &mut unit.ops {
                    match op {
                        Op::Dcall(site) | Op::Find { site, .. } => resolve(site, &m.layout),
                        _ => {}
                    }
                }
                if let Some(GenOp::Call(site)) = &mut unit.generator {
                    resolve(site, &m.layout);
                }
            }
        }
    }
    if !missing.is_empty() {
        missing.sort();
        return Err(LinkError::UnresolvedModule(missing));
    }
    Ok(Arc::new(LinkedProgram { modules: graphs, index }))
}

fn callee_name(prog: &LinkedProgram, c: &Callee) -> String {
    match c {
        Callee::Named(n) => format!("{n}?"),
        Callee::Module(id) => prog.modules[*id].name.clone(),
        Callee::For { int: true } => "builtin for (int)".into(),
        Callee::For { int: false } => "builtin for (real)".into(),
        Callee::Select { .. } => "builtin select".into(),
    }
}

/// Nodes, continuations and cell layouts of every module.
pub fn dump_graph(prog: &LinkedProgram) -> String {
    let mut out = String::new();
    for g in &prog.modules {
        let sig = |ps: &[(String, Dtype)]| ps.iter().map(|(n, t)| format!("{n} : {t}")).collect::<Vec<_>>().join(", ");
        let _ = writeln!(out, "module {}({{{}}}, {{{}}})", g.name, sig(&g.inputs), sig(&g.outputs));
        for (mi, m) in g.methods.iter().enumerate() {
            let alt = if mi + 1 < g.methods.len() { format!(", alternative method {}", mi + 2) } else { String::new() };
            let _ = writeln!(out, "  method {}{}", mi + 1, alt);
            let cells: Vec<String> = m
                .layout
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let role = match (c.input, c.output) {
                        (Some(k), _) => format!(" in{}", k + 1),
                        (_, Some(k)) => format!(" out{}", k + 1),
                        _ => String::new(),
                    };
                    format!("{i}:{}:{}{role}", c.name, c.dtype)
                })
                .collect();
            let _ = writeln!(out, "    cells {}", cells.join(" "));
            for (ui, u) in m.units.iter().enumerate() {
                let entry = if ui == 0 { " (entry)" } else { "" };
                let _ = writeln!(out, "    {}{}", u.label, entry);
                for (&si, op) in u.stmts.iter().zip(&u.ops) {
                    let note = match op {
                        Op::Dcall(s) => format!("  [commit, {}]", callee_name(prog, &s.callee)),
                        Op::Find { site, .. } => format!("  [collect, {}]", callee_name(prog, &site.callee)),
                        _ => String::new(),
                    };
                    let _ = writeln!(out, "      s{} {}{}", si + 1, m.stmt_text[si], note);
                }
                if let Some(gen) = &u.generator {
                    let si = *u.stmts.last().expect("generator unit is non-empty");
                    let what = match gen {
                        GenOp::For { int, .. } => format!("builtin for ({})", if *int { "int" } else { "real" }),
                        GenOp::Select { .. } => "builtin select".to_string(),
                        GenOp::Call(s) => callee_name(prog, &s.callee),
                    };
                    let _ = writeln!(out, "      s{} {}  [generator, {}]", si + 1, m.stmt_text[si], what);
                }
                let next = match (&u.generator, m.units.get(ui + 1)) {
                    (Some(_), Some(n)) => n.label.clone(),
                    _ => "caller".to_string(),
                };
                let _ = writeln!(out, "      then {next}");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests;

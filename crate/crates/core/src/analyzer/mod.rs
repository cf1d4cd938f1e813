//! Name resolution, single-assignment checking, dependency graphs and
//! statement classification.

pub mod typeck;

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::diag::{Diagnostic, Span};
use crate::frontend::ast::*;
use crate::value::Dtype;

/// Functional role of a statement in generate-and-test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StmtClass {
    Generator,
    Calculator,
    Tester,
}

impl StmtClass {
    pub fn is_deterministic(self) -> bool {
        self != StmtClass::Generator
    }
}

impl fmt::Display for StmtClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StmtClass::Generator => "generator",
            StmtClass::Calculator => "calculator",
            StmtClass::Tester => "tester",
        })
    }
}

pub fn classify(stmt: &Stmt) -> StmtClass {
    match &stmt.kind {
        StmtKind::Bind { rhs: BindRhs::For { .. } | BindRhs::Select(_), .. } | StmtKind::Call(_) => {
            StmtClass::Generator
        }
        StmtKind::Bind { rhs: BindRhs::Expr(_), .. } | StmtKind::Dcall(_) | StmtKind::Find { .. } => {
            StmtClass::Calculator
        }
        StmtKind::When(_) | StmtKind::Test(_) | StmtKind::Verify(_) => StmtClass::Tester,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub name: String,
    pub inputs: Vec<(String, Dtype)>,
    pub outputs: Vec<(String, Dtype)>,
}

impl Signature {
    pub fn of(m: &ModuleDecl) -> Self {
        let conv = |ps: &[ParamDecl]| ps.iter().map(|p| (p.name.name.clone(), p.dtype)).collect();
        Signature { name: m.name.name.clone(), inputs: conv(&m.inputs), outputs: conv(&m.outputs) }
    }
}

/// Generators that are available as callees without a module definition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    /// `{B, E, S}` to `{N}`
    For,
    /// `{L}` to `{X}`
    Select,
}

impl Builtin {
    pub fn from_name(name: &str) -> Option<Builtin> {
        match name {
            "for" => Some(Builtin::For),
            "select" => Some(Builtin::Select),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Builtin::For => "for",
            Builtin::Select => "select",
        }
    }

    pub fn arity(self) -> (usize, usize) {
        match self {
            Builtin::For => (3, 1),
            Builtin::Select => (1, 1),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum CalleeSig<'r> {
    Module(&'r Signature),
    Builtin(Builtin),
}

/// Signatures of every module in one compilation batch.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    sigs: HashMap<String, Signature>,
}

impl Registry {
    pub fn from_modules<'a>(modules: impl IntoIterator<Item = &'a ModuleDecl>) -> Self {
        let sigs = modules.into_iter().map(|m| (m.name.name.clone(), Signature::of(m))).collect();
        Registry { sigs }
    }

    /// User modules shadow the builtin generators of the same name.
    pub fn resolve(&self, name: &str) -> Option<CalleeSig<'_>> {
        match self.sigs.get(name) {
            Some(sig) => Some(CalleeSig::Module(sig)),
            None => Builtin::from_name(name).map(CalleeSig::Builtin),
        }
    }

    pub fn get(&self, name: &str) -> Option<&Signature> {
        self.sigs.get(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// Module input parameter at this position.
    Input(usize),
    /// Defined by the statement at this source index.
    Stmt(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarInfo {
    pub name: String,
    pub dtype: Dtype,
    pub origin: Origin,
    /// Position among the module outputs, if this variable is one.
    pub output: Option<usize>,
}

/// Per-method variable table. Inputs come first, then variables in the
/// source order of their defining statements.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SymbolTable {
    vars: Vec<VarInfo>,
    index: HashMap<String, usize>,
}

impl SymbolTable {
    pub fn get(&self, name: &str) -> Option<&VarInfo> {
        self.index.get(name).map(|&i| &self.vars[i])
    }

    pub fn slot(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn vars(&self) -> &[VarInfo] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    fn insert(&mut self, info: VarInfo) {
        self.index.insert(info.name.clone(), self.vars.len());
        self.vars.push(info);
    }
}

/// Dependencies between the statements of one method.
#[derive(Debug, Clone, PartialEq)]
pub struct DepGraph {
    pub classes: Vec<StmtClass>,
    /// `(definer, reader)` pairs, sorted and free of duplicates.
    pub edges: Vec<(usize, usize)>,
    preds: Vec<Vec<usize>>,
}

impl DepGraph {
    pub fn new(classes: Vec<StmtClass>, mut edges: Vec<(usize, usize)>) -> Self {
        edges.sort_unstable();
        edges.dedup();
        let mut preds = vec![Vec::new(); classes.len()];
        for &(from, to) in &edges {
            preds[to].push(from);
        }
        DepGraph { classes, edges, preds }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn preds(&self, node: usize) -> &[usize] {
        &self.preds[node]
    }

    /// A cycle through the graph, as statement indices in dependency order.
    pub fn find_cycle(&self) -> Option<Vec<usize>> {
        let n = self.len();
        let mut indegree: Vec<usize> = (0..n).map(|i| self.preds[i].len()).collect();
        let mut succs = vec![Vec::new(); n];
        for &(from, to) in &self.edges {
            succs[from].push(to);
        }
        let mut queue: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut done = vec![false; n];
        while let Some(i) = queue.pop() {
            done[i] = true;
            for &j in &succs[i] {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    queue.push(j);
                }
            }
        }
        // Every unfinished node has an unfinished predecessor; walk back until a node repeats.
        let start = (0..n).find(|&i| !done[i])?;
        let mut path = vec![start];
        let mut seen = HashMap::from([(start, 0usize)]);
        let mut cur = start;
        loop {
            let prev =
                *self.preds[cur].iter().find(|&&p| !done[p]).expect("unfinished node has an unfinished predecessor");
            if let Some(&at) = seen.get(&prev) {
                let mut cycle = path[at..].to_vec();
                cycle.reverse();
                let min = cycle.iter().enumerate().min_by_key(|(_, &v)| v).map(|(i, _)| i).unwrap_or(0);
                cycle.rotate_left(min);
                return Some(cycle);
            }
            seen.insert(prev, path.len());
            path.push(prev);
            cur = prev;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzedMethod {
    pub symbols: SymbolTable,
    pub graph: DepGraph,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzedModule {
    pub decl: ModuleDecl,
    pub methods: Vec<AnalyzedMethod>,
    pub warnings: Vec<Diagnostic>,
}

impl AnalyzedModule {
    pub fn name(&self) -> &str {
        &self.decl.name.name
    }
}

/// `s1, s3` for 0-based statement indices `[0, 2]`.
fn stmt_list(stmts: &[usize]) -> String {
    stmts.iter().map(|s| format!("s{}", s + 1)).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("unknown variable `{name}`")]
    UnknownVariable { name: String, span: Span },
    #[error("`{name}` is assigned more than once")]
    DoubleAssignment { name: String, span: Span },
    #[error("cyclic dependency between statements {} in method {method}", stmt_list(stmts))]
    CyclicDependency { method: usize, stmts: Vec<usize>, span: Span },
    #[error("unknown module `{name}`")]
    UnknownModule { name: String, span: Span },
    #[error("`{callee}` takes {expected_in} input(s) and {expected_out} output(s), found {found_in} and {found_out}")]
    ArityMismatch {
        callee: String,
        expected_in: usize,
        expected_out: usize,
        found_in: usize,
        found_out: usize,
        span: Span,
    },
    #[error("type mismatch: {message}")]
    TypeMismatch { message: String, span: Span },
    #[error("output `{name}` is not defined in method {method}")]
    MissingOutput { name: String, method: usize, span: Span },
    #[error("parameter `{name}` is declared more than once")]
    DuplicateParam { name: String, span: Span },
    #[error("module `{name}` is defined more than once")]
    DuplicateModule { name: String, span: Span },
}

impl AnalysisError {
    pub fn span(&self) -> Span {
        match self {
            AnalysisError::UnknownVariable { span, .. }
            | AnalysisError::DoubleAssignment { span, .. }
            | AnalysisError::CyclicDependency { span, .. }
            | AnalysisError::UnknownModule { span, .. }
            | AnalysisError::ArityMismatch { span, .. }
            | AnalysisError::TypeMismatch { span, .. }
            | AnalysisError::MissingOutput { span, .. }
            | AnalysisError::DuplicateParam { span, .. }
            | AnalysisError::DuplicateModule { span, .. } => *span,
        }
    }

    pub fn to_diagnostic(&self) -> Diagnostic {
        Diagnostic::error(self.span().start, self.to_string())
    }
}

/// Analyze every module of a batch against the batch's own registry.
pub fn analyze_all(modules: &[ModuleDecl]) -> Result<Vec<AnalyzedModule>, Vec<AnalysisError>> {
    let registry = Registry::from_modules(modules);
    let mut errors = Vec::new();
    let mut seen: HashSet<&str> = HashSet::new();
    for m in modules {
        if !seen.insert(&m.name.name) {
            errors.push(AnalysisError::DuplicateModule { name: m.name.name.clone(), span: m.name.span });
        }
    }
    let mut out = Vec::new();
    for m in modules {
        match analyze(m, &registry) {
            Ok(a) => out.push(a),
            Err(es) => errors.extend(es),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

/// Check one module and build its per-method symbol tables and dependency graphs.
pub fn analyze(module: &ModuleDecl, registry: &Registry) -> Result<AnalyzedModule, Vec<AnalysisError>> {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();

    let mut seen = HashSet::new();
    for p in module.params() {
        if !seen.insert(p.name.name.as_str()) {
            errors.push(AnalysisError::DuplicateParam { name: p.name.name.clone(), span: p.name.span });
        }
    }

    let mut methods = Vec::new();
    for (mi, method) in module.methods.iter().enumerate() {
        let mut cx = MethodCx { module, registry, errors: &mut errors, warnings: &mut warnings, method: mi + 1 };
        if let Some(m) = cx.analyze_method(method) {
            methods.push(m);
        }
    }

    if errors.is_empty() {
        Ok(AnalyzedModule { decl: module.clone(), methods, warnings })
    } else {
        Err(errors)
    }
}

struct MethodCx<'a> {
    module: &'a ModuleDecl,
    registry: &'a Registry,
    errors: &'a mut Vec<AnalysisError>,
    warnings: &'a mut Vec<Diagnostic>,
    /// 1-based
    method: usize,
}

impl MethodCx<'_> {
    fn type_mismatch(&mut self, span: Span, message: String) {
        self.errors.push(AnalysisError::TypeMismatch { message, span });
    }

    fn analyze_method(&mut self, method: &MethodDecl) -> Option<AnalyzedMethod> {
        let errors_before = self.errors.len();
        let mut symbols = SymbolTable::default();
        for (i, p) in self.module.inputs.iter().enumerate() {
            symbols.insert(VarInfo {
                name: p.name.name.clone(),
                dtype: p.dtype,
                origin: Origin::Input(i),
                output: None,
            });
        }
        let outputs: HashMap<&str, (usize, Dtype)> =
            self.module.outputs.iter().enumerate().map(|(i, p)| (p.name.name.as_str(), (i, p.dtype))).collect();

        // Pass 1: definitions and their types.
        for (si, stmt) in method.statements.iter().enumerate() {
            for (target, dtype) in self.definitions(stmt, &symbols, &outputs) {
                if symbols.get(&target.name).is_some() {
                    self.errors.push(AnalysisError::DoubleAssignment { name: target.name.clone(), span: target.span });
                    continue;
                }
                let output = outputs.get(target.name.as_str()).map(|&(i, _)| i);
                symbols.insert(VarInfo { name: target.name.clone(), dtype, origin: Origin::Stmt(si), output });
            }
        }
        for p in &self.module.outputs {
            if symbols.get(&p.name.name).is_none() {
                self.errors.push(AnalysisError::MissingOutput {
                    name: p.name.name.clone(),
                    method: self.method,
                    span: method.span,
                });
            }
        }

        // Pass 2: reads, expression types and edges.
        let mut edges = Vec::new();
        let mut read: HashSet<&str> = HashSet::new();
        for (si, stmt) in method.statements.iter().enumerate() {
            for name in stmt.reads() {
                read.insert(name);
                match symbols.get(name) {
                    Some(VarInfo { origin: Origin::Stmt(def), .. }) => edges.push((*def, si)),
                    Some(_) => {}
                    None => {
                        let span = find_var_span(stmt, name).unwrap_or(stmt.span);
                        self.errors.push(AnalysisError::UnknownVariable { name: name.to_string(), span });
                    }
                }
            }
            self.check_stmt(stmt, &symbols);
        }

        for v in symbols.vars() {
            if matches!(v.origin, Origin::Stmt(_)) && v.output.is_none() && !read.contains(v.name.as_str()) {
                let Origin::Stmt(si) = v.origin else { unreachable!() };
                self.warnings.push(Diagnostic::warning(
                    method.statements[si].span.start,
                    format!("variable `{}` is never used", v.name),
                ));
            }
        }

        let classes = method.statements.iter().map(classify).collect();
        let graph = DepGraph::new(classes, edges);
        if let Some(stmts) = graph.find_cycle() {
            let span = method.statements[stmts[0]].span;
            self.errors.push(AnalysisError::CyclicDependency { method: self.method, stmts, span });
        }

        (self.errors.len() == errors_before).then_some(AnalyzedMethod { symbols, graph })
    }

    /// Names a statement defines, with their types.
    fn definitions<'s>(
        &mut self,
        stmt: &'s Stmt,
        symbols: &SymbolTable,
        outputs: &HashMap<&str, (usize, Dtype)>,
    ) -> Vec<(&'s Ident, Dtype)> {
        match &stmt.kind {
            StmtKind::Bind { target, dtype, .. } => {
                if let Some(&(_, declared)) = outputs.get(target.name.as_str()) {
                    if declared != *dtype {
                        self.type_mismatch(
                            target.span,
                            format!("output `{}` is declared {declared} but bound as {dtype}", target.name),
                        );
                    }
                }
                vec![(target, *dtype)]
            }
            StmtKind::Find { target, .. } => {
                if let Some(&(_, declared)) = outputs.get(target.name.as_str()) {
                    if declared != Dtype::List {
                        self.type_mismatch(
                            target.span,
                            format!("find result `{}` is a list, not {declared}", target.name),
                        );
                    }
                }
                vec![(target, Dtype::List)]
            }
            StmtKind::Call(site) | StmtKind::Dcall(site) => {
                let out_types: Vec<Option<Dtype>> = match self.registry.resolve(&site.callee.name) {
                    Some(CalleeSig::Module(sig)) => sig.outputs.iter().map(|(_, t)| Some(*t)).collect(),
                    Some(CalleeSig::Builtin(Builtin::For)) => {
                        let all_int = site.args.iter().all(|a| {
                            typeck::type_of(a, &|n| symbols_type(symbols, n), &mut Vec::new()) == Some(Dtype::Int)
                        });
                        vec![Some(if all_int { Dtype::Int } else { Dtype::Real })]
                    }
                    Some(CalleeSig::Builtin(Builtin::Select)) => vec![None],
                    // reported by check_stmt
                    None => vec![None; site.outs.len()],
                };
                let mut defs = Vec::new();
                for (i, out) in site.outs.iter().enumerate() {
                    let produced = out_types.get(i).copied().flatten();
                    let declared = outputs.get(out.name.as_str()).map(|&(_, t)| t);
                    let dtype = match (produced, declared) {
                        (Some(p), Some(d)) => {
                            if !d.accepts(p) {
                                self.type_mismatch(
                                    out.span,
                                    format!(
                                        "output `{}` is declared {d} but `{}` yields {p}",
                                        out.name, site.callee.name
                                    ),
                                );
                            }
                            d
                        }
                        (Some(p), None) => p,
                        (None, Some(d)) => d,
                        (None, None) => {
                            if self.registry.resolve(&site.callee.name).is_some() && i < out_types.len() {
                                self.type_mismatch(
                                    out.span,
                                    format!(
                                        "cannot infer the type of `{}`; bind it with `{} : <type> = select(...)`",
                                        out.name, out.name
                                    ),
                                );
                            }
                            Dtype::Real
                        }
                    };
                    defs.push((out, dtype));
                }
                defs
            }
            StmtKind::When(_) | StmtKind::Test(_) | StmtKind::Verify(_) => Vec::new(),
        }
    }

    fn expr_type(&mut self, e: &Expr, symbols: &SymbolTable) -> Option<Dtype> {
        let mut issues = Vec::new();
        let t = typeck::type_of(e, &|n| symbols_type(symbols, n), &mut issues);
        for issue in issues {
            if issue.warning {
                self.warnings.push(Diagnostic::warning(issue.span.start, issue.message));
            } else {
                self.type_mismatch(issue.span, issue.message);
            }
        }
        t
    }

    fn check_stmt(&mut self, stmt: &Stmt, symbols: &SymbolTable) {
        match &stmt.kind {
            StmtKind::Bind { target, dtype, rhs } => match rhs {
                BindRhs::Expr(e) => {
                    if let Some(t) = self.expr_type(e, symbols) {
                        if !dtype.accepts(t) {
                            self.type_mismatch(
                                e.span,
                                format!("`{}` is declared {dtype} but the expression is {t}", target.name),
                            );
                        }
                    }
                }
                BindRhs::For { begin, end, step } => {
                    let ts: Vec<_> = [begin, end, step].into_iter().map(|e| (e, self.expr_type(e, symbols))).collect();
                    if !dtype.is_numeric() {
                        self.type_mismatch(
                            target.span,
                            format!("`for` produces numbers, but `{}` is declared {dtype}", target.name),
                        );
                    }
                    for (e, t) in ts {
                        match t {
                            Some(t) if !t.is_numeric() => {
                                self.type_mismatch(e.span, format!("`for` bounds must be numeric, found {t}"))
                            }
                            Some(Dtype::Real) if *dtype == Dtype::Int => self.type_mismatch(
                                e.span,
                                format!("`{}` is declared int but a `for` bound is real", target.name),
                            ),
                            _ => {}
                        }
                    }
                }
                BindRhs::Select(e) => {
                    if let Some(t) = self.expr_type(e, symbols) {
                        if t != Dtype::List {
                            self.type_mismatch(e.span, format!("`select` needs a list, found {t}"));
                        }
                    }
                }
            },
            StmtKind::When(e) | StmtKind::Test(e) | StmtKind::Verify(e) => {
                if let Some(t) = self.expr_type(e, symbols) {
                    if t != Dtype::Bool {
                        self.type_mismatch(
                            e.span,
                            format!("`{}` condition must be bool, found {t}", stmt.kind.keyword()),
                        );
                    }
                }
            }
            StmtKind::Call(site) | StmtKind::Dcall(site) => {
                self.check_call(&site.callee, &site.args, Some(site.outs.len()), symbols, stmt.span)
            }
            StmtKind::Find { callee, args, .. } => self.check_call(callee, args, None, symbols, stmt.span),
        }
    }

    fn check_call(&mut self, callee: &Ident, args: &[Expr], outs: Option<usize>, symbols: &SymbolTable, span: Span) {
        let arg_types: Vec<Option<Dtype>> = args.iter().map(|a| self.expr_type(a, symbols)).collect();
        let Some(sig) = self.registry.resolve(&callee.name) else {
            self.errors.push(AnalysisError::UnknownModule { name: callee.name.clone(), span: callee.span });
            return;
        };
        let (params, n_out): (Vec<Option<Dtype>>, usize) = match sig {
            CalleeSig::Module(s) => (s.inputs.iter().map(|(_, t)| Some(*t)).collect(), s.outputs.len()),
            CalleeSig::Builtin(Builtin::For) => (vec![None; 3], 1),
            CalleeSig::Builtin(Builtin::Select) => (vec![Some(Dtype::List)], 1),
        };
        if params.len() != args.len() || outs.is_some_and(|o| o != n_out) {
            self.errors.push(AnalysisError::ArityMismatch {
                callee: callee.name.clone(),
                expected_in: params.len(),
                expected_out: n_out,
                found_in: args.len(),
                found_out: outs.unwrap_or(n_out),
                span,
            });
            return;
        }
        for ((arg, found), want) in args.iter().zip(arg_types).zip(params) {
            match (found, want) {
                (Some(f), Some(w)) if !w.accepts(f) => {
                    self.type_mismatch(arg.span, format!("argument to `{}` should be {w}, found {f}", callee.name))
                }
                (Some(f), None) if !f.is_numeric() => {
                    self.type_mismatch(arg.span, format!("argument to `{}` should be numeric, found {f}", callee.name))
                }
                _ => {}
            }
        }
    }
}

fn symbols_type(symbols: &SymbolTable, name: &str) -> Option<Dtype> {
    symbols.get(name).map(|v| v.dtype)
}

fn find_var_span(stmt: &Stmt, name: &str) -> Option<Span> {
    fn walk(e: &Expr, name: &str) -> Option<Span> {
        match &e.kind {
            ExprKind::Var(n) if n == name => Some(e.span),
            ExprKind::Neg(inner) => walk(inner, name),
            ExprKind::Binary(_, l, r) | ExprKind::Compare(_, l, r) => walk(l, name).or_else(|| walk(r, name)),
            ExprKind::Func(_, items) | ExprKind::List(items) => items.iter().find_map(|i| walk(i, name)),
            _ => None,
        }
    }
    stmt.operands().into_iter().find_map(|e| walk(e, name))
}

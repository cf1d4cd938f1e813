//! Rust source generation from linked module graphs.
//!
//! Every module becomes a Rust module holding a struct with the typed inputs,
//! the caller's output cells, a method index and the continuation. Running it
//! tries one method and leaves the next as a choice point. Each method gets a
//! frame struct `Method_<i>` and one continuation struct per unit after the
//! first, named like the graph nodes. Generated code only depends on the
//! runtime of this crate.

use std::fmt::Write;

use crate::lowering::{CExpr, CallSiteOp, Callee, CellInfo, GenOp, LinkedProgram, MethodGraph, ModuleGraph, Op};
use crate::value::{Dtype, Value};

const KEYWORDS: &[&str] = &[
    "abstract", "as", "async", "await", "become", "box", "break", "const", "continue", "crate", "do", "dyn", "else",
    "enum", "extern", "false", "final", "fn", "for", "gen", "if", "impl", "in", "let", "loop", "macro", "match", "mod",
    "move", "mut", "override", "priv", "pub", "ref", "return", "self", "Self", "static", "struct", "super", "trait",
    "true", "try", "type", "typeof", "unsafe", "unsized", "use", "virtual", "where", "while", "yield",
];

/// Names the generated code uses for itself.
const RESERVED_FIELDS: &[&str] = &["method", "cont", "_"];
const RESERVED_TYPES: &[&str] = &[
    "BinOp",
    "CmpOp",
    "Cont",
    "Dtype",
    "Executable",
    "Func",
    "Goal",
    "R",
    "Rc",
    "RuntimeFault",
    "Value",
    "Variable",
    "VerifyViolation",
    "Vm",
];

const ALLOW: &str = "#[allow(unused, non_snake_case, non_camel_case_types, clippy::all)]";

/// A generated file, relative to the crate root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedFile {
    pub path: String,
    pub contents: String,
}

fn field(name: &str) -> String {
    if KEYWORDS.contains(&name) || RESERVED_FIELDS.contains(&name) || name.starts_with("dsp_") {
        format!("dsp_{name}")
    } else {
        name.to_string()
    }
}

/// Rust module holding the code for DSP module `name`.
pub fn mod_name(name: &str) -> String {
    format!("dsp_{name}")
}

/// Struct implementing DSP module `name`.
pub fn struct_name(name: &str) -> String {
    let mut chars = name.chars();
    let camel = match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect::<String>(),
        None => String::new(),
    };
    if camel.starts_with("Method_") || RESERVED_TYPES.contains(&camel.as_str()) {
        format!("Dsp{camel}")
    } else {
        camel
    }
}

fn rust_type(t: Dtype) -> &'static str {
    match t {
        Dtype::Real => "f64",
        Dtype::Int => "i64",
        Dtype::Bool => "bool",
        Dtype::List => "List",
    }
}

/// Expression turning a `Value` named `v` into the Rust type of `t`.
fn unwrap_value(t: Dtype, v: &str) -> String {
    match t {
        Dtype::Real => format!("ops::to_real(&{v})?"),
        Dtype::Int => format!("ops::to_int(&{v})?"),
        Dtype::Bool => format!("ops::truth(&{v})?"),
        Dtype::List => format!("ops::to_list(&{v})?"),
    }
}

fn wrap_field(t: Dtype, f: &str) -> String {
    match t {
        Dtype::Real => format!("Value::Real(self.{f})"),
        Dtype::Int => format!("Value::Int(self.{f})"),
        Dtype::Bool => format!("Value::Bool(self.{f})"),
        Dtype::List => format!("Value::List(self.{f}.clone())"),
    }
}

fn literal(v: &Value) -> String {
    match v {
        Value::Real(r) => format!("Value::Real({r:?})"),
        Value::Int(i) => format!("Value::Int({i})"),
        Value::Bool(b) => format!("Value::Bool({b})"),
        Value::List(items) => {
            format!("Value::list(vec![{}])", items.iter().map(literal).collect::<Vec<_>>().join(", "))
        }
    }
}

struct MethodEmitter<'a> {
    prog: &'a LinkedProgram,
    graph: &'a ModuleGraph,
    method: &'a MethodGraph,
    /// 1-based
    number: usize,
}

impl MethodEmitter<'_> {
    fn cell(&self, s: usize) -> &CellInfo {
        &self.method.layout[s]
    }

    fn frame_name(&self) -> String {
        format!("Method_{}", self.number)
    }

    fn expr(&self, e: &CExpr) -> String {
        match e {
            CExpr::Const(v) => literal(v),
            CExpr::Slot(s) => self.read(*s),
            CExpr::Neg(inner) => format!("ops::neg(&{})?", self.expr(inner)),
            CExpr::Bin(op, l, r) => format!("ops::binary(BinOp::{op:?}, &{}, &{})?", self.expr(l), self.expr(r)),
            CExpr::Cmp(op, l, r) => {
                format!("Value::Bool(ops::compare(CmpOp::{op:?}, &{}, &{})?)", self.expr(l), self.expr(r))
            }
            CExpr::Func(f, args) => format!("ops::apply(Func::{f:?}, &[{}])?", self.exprs(args)),
            CExpr::List(items) => format!("Value::list(vec![{}])", self.exprs(items)),
        }
    }

    fn exprs(&self, es: &[CExpr]) -> String {
        es.iter().map(|e| self.expr(e)).collect::<Vec<_>>().join(", ")
    }

    fn read(&self, s: usize) -> String {
        let c = self.cell(s);
        if c.input.is_some() {
            wrap_field(c.dtype, &field(&c.name))
        } else {
            format!("vm.read(&self.{}, {:?})?", field(&c.name), c.name)
        }
    }

    fn cell_ref(&self, s: usize) -> String {
        format!("self.{}.clone()", field(&self.cell(s).name))
    }

    /// Result-valued expression building the callee goal.
    fn callee(&self, site: &CallSiteOp, outs: &[String], k: &str) -> String {
        let args: Vec<String> = (0..site.args.len()).map(|i| format!("a{i}")).collect();
        match &site.callee {
            Callee::Module(id) => {
                let g = self.prog.module(*id);
                let mut params: Vec<String> =
                    g.inputs.iter().zip(&args).map(|((_, t), a)| unwrap_value(*t, a)).collect();
                params.extend(outs.iter().cloned());
                params.push(k.to_string());
                format!(
                    "Ok(Rc::new(super::{}::{}::new({})) as Cont)",
                    mod_name(&g.name),
                    struct_name(&g.name),
                    params.join(", ")
                )
            }
            Callee::For { int } => format!("runtime::for_gen(&a0, &a1, &a2, {int}, {}, {k})", outs[0]),
            Callee::Select { dtype } => {
                let t = match dtype {
                    Some(t) => format!("Some(Dtype::{t:?})"),
                    None => "None".into(),
                };
                format!("runtime::select_gen(&a0, {t}, {}, {k})", outs[0])
            }
            Callee::Named(n) => format!("Err(RuntimeFault::Internal({:?}.to_string()))", format!("unlinked `{n}`")),
        }
    }

    fn eval_args(&self, out: &mut String, site: &CallSiteOp, indent: &str) {
        for (i, a) in site.args.iter().enumerate() {
            let _ = writeln!(out, "{indent}let a{i} = {};", self.expr(a));
        }
    }

    fn wrap_widen(&self, site: &CallSiteOp, cont: &str) -> String {
        if site.widen.is_empty() {
            return cont.to_string();
        }
        let cells: Vec<String> =
            site.widen.iter().map(|&s| format!("({}, {:?})", self.cell_ref(s), self.cell(s).name)).collect();
        format!("runtime::widen(vec![{}], {cont})", cells.join(", "))
    }

    fn resume_name(&self, unit: usize, pos: usize) -> String {
        if pos == 0 {
            format!("Method_{}_cu{}", self.number, unit + 1)
        } else {
            format!("Method_{}_cu{}_{}", self.number, unit + 1, pos)
        }
    }

    fn fn_name(unit: usize, pos: usize) -> String {
        if pos == 0 {
            format!("cu{}", unit + 1)
        } else {
            format!("cu{}_{}", unit + 1, pos)
        }
    }

    /// Entry points of unit `u`: the start, and the position after every commit or collection.
    fn entries(&self, u: usize) -> Vec<usize> {
        let mut out = vec![0];
        for (k, op) in self.method.units[u].ops.iter().enumerate() {
            if matches!(op, Op::Dcall(_) | Op::Find { .. }) {
                out.push(k + 1);
            }
        }
        out
    }

    fn body(&self, out: &mut String, u: usize, pos: usize) {
        let node = &self.method.units[u];
        let ind = "        ";
        for (k, op) in node.ops.iter().enumerate().skip(pos) {
            let text = self.method.stmt_text[node.stmts[k]].replace('\n', " ");
            let _ = writeln!(out, "{ind}// s{} {text}", node.stmts[k] + 1);
            match op {
                Op::Assign { slot, dtype, expr } => {
                    let _ = writeln!(out, "{ind}let v = ops::coerce({}, Dtype::{dtype:?})?;", self.expr(expr));
                    let _ = writeln!(out, "{ind}vm.write(&self.{}, v);", field(&self.cell(*slot).name));
                }
                Op::Guard { expr } => {
                    let _ = writeln!(out, "{ind}if !ops::truth(&{})? {{", self.expr(expr));
                    let _ = writeln!(out, "{ind}    return Ok(Goal::Failure);");
                    let _ = writeln!(out, "{ind}}}");
                }
                Op::Verify { text, reads, expr } => {
                    let _ = writeln!(out, "{ind}if !ops::truth(&{})? {{", self.expr(expr));
                    let bindings: Vec<String> = reads
                        .iter()
                        .map(|&s| format!("({:?}.to_string(), {})", self.cell(s).name, self.read(s)))
                        .collect();
                    let _ = writeln!(out, "{ind}    let bindings = vec![{}];", bindings.join(", "));
                    let _ = writeln!(
                        out,
                        "{ind}    vm.violate(VerifyViolation {{ condition: {text:?}.to_string(), method: {:?}.to_string(), bindings }});",
                        self.method.id
                    );
                    let _ = writeln!(out, "{ind}}}");
                }
                Op::Dcall(site) => {
                    let _ =
                        writeln!(out, "{ind}let resume: Cont = Rc::new({}(self.clone()));", self.resume_name(u, k + 1));
                    let _ = writeln!(out, "{ind}let cont = {};", self.wrap_widen(site, "resume"));
                    self.eval_args(out, site, ind);
                    let outs: Vec<String> = site.outs.iter().map(|&s| self.cell_ref(s)).collect();
                    let _ =
                        writeln!(out, "{ind}runtime::dcall(vm, cont, |commit| {})", self.callee(site, &outs, "commit"));
                    return;
                }
                Op::Find { site, target } => {
                    let n = match site.callee {
                        Callee::Module(id) => self.prog.module(id).outputs.len(),
                        _ => 1,
                    };
                    let _ =
                        writeln!(out, "{ind}let resume: Cont = Rc::new({}(self.clone()));", self.resume_name(u, k + 1));
                    self.eval_args(out, site, ind);
                    let outs: Vec<String> = (0..n).map(|i| format!("outs[{i}].clone()")).collect();
                    let _ = writeln!(
                        out,
                        "{ind}runtime::find(vm, {n}, {}, resume, |outs, record| {})",
                        self.cell_ref(*target),
                        self.callee(site, &outs, "record")
                    );
                    return;
                }
            }
        }
        let next = if u + 1 < self.method.units.len() {
            format!("Rc::new({}(self.clone()))", self.resume_name(u + 1, 0))
        } else {
            "self.cont.clone()".into()
        };
        match &node.generator {
            None => {
                let _ = writeln!(out, "{ind}Ok(Goal::Next(self.cont.clone()))");
            }
            Some(gen) => {
                let s = *node.stmts.last().expect("a generator is a statement");
                let _ = writeln!(out, "{ind}// s{} {}", s + 1, self.method.stmt_text[s].replace('\n', " "));
                let _ = writeln!(out, "{ind}let next: Cont = {next};");
                match gen {
                    GenOp::For { slot, int, begin, end, step } => {
                        let _ = writeln!(out, "{ind}let b = {};", self.expr(begin));
                        let _ = writeln!(out, "{ind}let e = {};", self.expr(end));
                        let _ = writeln!(out, "{ind}let s = {};", self.expr(step));
                        let _ = writeln!(
                            out,
                            "{ind}Ok(Goal::Next(runtime::for_gen(&b, &e, &s, {int}, {}, next)?))",
                            self.cell_ref(*slot)
                        );
                    }
                    GenOp::Select { slot, dtype, list } => {
                        let _ = writeln!(out, "{ind}let l = {};", self.expr(list));
                        let _ = writeln!(
                            out,
                            "{ind}Ok(Goal::Next(runtime::select_gen(&l, Some(Dtype::{dtype:?}), {}, next)?))",
                            self.cell_ref(*slot)
                        );
                    }
                    GenOp::Call(site) => {
                        let _ = writeln!(out, "{ind}let cont = {};", self.wrap_widen(site, "next"));
                        self.eval_args(out, site, ind);
                        let outs: Vec<String> = site.outs.iter().map(|&s| self.cell_ref(s)).collect();
                        let goal = self.callee(site, &outs, "cont");
                        let _ = writeln!(out, "{ind}let goal: Result<Cont, RuntimeFault> = {goal};");
                        let _ = writeln!(out, "{ind}Ok(Goal::Next(goal?))");
                    }
                }
            }
        }
    }

    fn emit(&self, out: &mut String) {
        let frame = self.frame_name();
        let _ = writeln!(out, "/// Frame of method {} of `{}`.", self.number, self.graph.name);
        let _ = writeln!(out, "pub struct {frame} {{");
        for c in &self.method.layout {
            let t = if c.input.is_some() { rust_type(c.dtype) } else { "Variable" };
            let _ = writeln!(out, "    {}: {t},", field(&c.name));
        }
        let _ = writeln!(out, "    cont: Cont,\n}}\n");

        let _ = writeln!(out, "impl {frame} {{");
        for u in 0..self.method.units.len() {
            for pos in self.entries(u) {
                if u > 0 || pos > 0 {
                    out.push('\n');
                }
                let _ = writeln!(out, "    fn {}(self: &Rc<Self>, vm: &mut Vm) -> R<Goal> {{", Self::fn_name(u, pos));
                self.body(out, u, pos);
                let _ = writeln!(out, "    }}");
            }
        }
        let _ = writeln!(out, "}}\n");

        for u in 0..self.method.units.len() {
            for pos in self.entries(u) {
                if u == 0 && pos == 0 {
                    continue;
                }
                let name = self.resume_name(u, pos);
                let _ = writeln!(out, "struct {name}(Rc<{frame}>);\n");
                let _ = writeln!(out, "impl Executable for {name} {{");
                let _ = writeln!(out, "    fn exec(&self, vm: &mut Vm) -> R<Goal> {{");
                let _ = writeln!(out, "        self.0.{}(vm)", Self::fn_name(u, pos));
                let _ = writeln!(out, "    }}\n}}\n");
            }
        }
    }
}

/// Body of the Rust module for module `id`.
pub fn emit_module(prog: &LinkedProgram, id: usize) -> String {
    let g = prog.module(id);
    let name = struct_name(&g.name);
    let mut out = String::new();
    let _ = writeln!(out, "// Generated by dspc from module `{}`. Do not edit.\n", g.name);
    out.push_str(
        "use std::rc::Rc;\n\n\
         use dsp_core::frontend::ast::{BinOp, CmpOp, Func};\n\
         use dsp_core::runtime::{self, ops, var, Cont, Executable, Goal, RuntimeFault, Variable, VerifyViolation, Vm};\n\
         use dsp_core::value::{Dtype, List, Value};\n\n\
         type R<T> = Result<T, RuntimeFault>;\n\n",
    );

    let params: Vec<(String, String)> = g
        .inputs
        .iter()
        .map(|(n, t)| (field(n), rust_type(*t).to_string()))
        .chain(g.outputs.iter().map(|(n, _)| (field(n), "Variable".to_string())))
        .collect();

    let _ = writeln!(out, "#[derive(Clone)]\npub struct {name} {{");
    for (f, t) in &params {
        let _ = writeln!(out, "    {f}: {t},");
    }
    let _ = writeln!(out, "    method: usize,\n    cont: Cont,\n}}\n");

    let mut sig: Vec<String> = params.iter().map(|(f, t)| format!("{f}: {t}")).collect();
    sig.push("cont: Cont".into());
    let names: Vec<&str> = params.iter().map(|(f, _)| f.as_str()).collect();
    let _ = writeln!(out, "impl {name} {{");
    let _ = writeln!(out, "    pub fn new({}) -> Self {{", sig.join(", "));
    let _ = writeln!(
        out,
        "        {name} {{ {}method: 1, cont }}",
        names.iter().map(|n| format!("{n}, ")).collect::<String>()
    );
    let _ = writeln!(out, "    }}\n}}\n");

    let _ = writeln!(out, "impl Executable for {name} {{");
    let _ = writeln!(out, "    fn exec(&self, vm: &mut Vm) -> R<Goal> {{");
    if g.methods.len() > 1 {
        let _ = writeln!(out, "        if self.method < {} {{", g.methods.len());
        let _ = writeln!(out, "            vm.push(Rc::new({name} {{ method: self.method + 1, ..self.clone() }}));");
        let _ = writeln!(out, "        }}");
    }
    let _ = writeln!(out, "        match self.method {{");
    for (mi, m) in g.methods.iter().enumerate() {
        let inits: Vec<String> = m
            .layout
            .iter()
            .map(|c| {
                let f = field(&c.name);
                match (c.input, c.output) {
                    (Some(_), _) if c.dtype == Dtype::List => format!("{f}: self.{f}.clone()"),
                    (Some(_), _) => format!("{f}: self.{f}"),
                    (None, Some(o)) => format!("{f}: self.{}.clone()", field(&g.outputs[o].0)),
                    (None, None) => format!("{f}: var()"),
                }
            })
            .chain(std::iter::once("cont: self.cont.clone()".to_string()))
            .collect();
        let _ =
            writeln!(out, "            {} => Rc::new(Method_{} {{ {} }}).cu1(vm),", mi + 1, mi + 1, inits.join(", "));
    }
    let _ = writeln!(out, "            _ => unreachable!(),\n        }}\n    }}\n}}\n");

    let _ = writeln!(out, "/// Goal running `{}` on dynamically typed inputs.", g.name);
    let _ = writeln!(out, "pub fn activate(ins: &[Value], outs: &[Variable], cont: Cont) -> R<Cont> {{");
    let _ = writeln!(out, "    if ins.len() != {} || outs.len() != {} {{", g.inputs.len(), g.outputs.len());
    let _ = writeln!(
        out,
        "        return Err(RuntimeFault::Internal(format!(\"`{{}}` called with {{}} input(s) and {{}} output(s)\", {:?}, ins.len(), outs.len())));",
        g.name
    );
    let _ = writeln!(out, "    }}");
    let mut args: Vec<String> =
        g.inputs.iter().enumerate().map(|(i, (_, t))| unwrap_value(*t, &format!("ins[{i}]"))).collect();
    args.extend((0..g.outputs.len()).map(|i| format!("outs[{i}].clone()")));
    args.push("cont".into());
    let _ = writeln!(out, "    Ok(Rc::new({name}::new({})))", args.join(", "));
    let _ = writeln!(out, "}}\n");

    for (mi, m) in g.methods.iter().enumerate() {
        MethodEmitter { prog, graph: g, method: m, number: mi + 1 }.emit(&mut out);
    }
    while out.ends_with("\n\n") {
        out.pop();
    }
    out
}

/// Dispatch table and query entry points shared by both layouts.
fn emit_dispatch(prog: &LinkedProgram, out: &mut String) {
    out.push_str(
        "\n/// `(module, input count, output names)`\n\
         pub const MODULES: &[(&str, usize, &[&str])] = &[\n",
    );
    for g in prog.modules() {
        let outs: Vec<String> = g.outputs.iter().map(|(n, _)| format!("{n:?}")).collect();
        let _ = writeln!(out, "    ({:?}, {}, &[{}]),", g.name, g.inputs.len(), outs.join(", "));
    }
    out.push_str("];\n\n");
    out.push_str(
        "pub fn goal(\n    module: &str,\n    ins: &[dsp_core::value::Value],\n    outs: &[dsp_core::runtime::Variable],\n    \
         cont: dsp_core::runtime::Cont,\n) -> Result<dsp_core::runtime::Cont, dsp_core::runtime::RuntimeFault> {\n    match module {\n",
    );
    for g in prog.modules() {
        let _ = writeln!(out, "        {:?} => {}::activate(ins, outs, cont),", g.name, mod_name(&g.name));
    }
    out.push_str(
        "        _ => Err(dsp_core::runtime::RuntimeFault::Internal(format!(\"no module named `{module}`\"))),\n    }\n}\n\n",
    );
    out.push_str(
        "pub fn solve(\n    module: &str,\n    ins: Vec<dsp_core::value::Value>,\n    vm: dsp_core::runtime::Vm,\n\
         ) -> Result<dsp_core::solution::VmSolutions, dsp_core::solution::QueryError> {\n    \
         use dsp_core::solution::QueryError;\n    \
         let &(_, n_ins, names) = MODULES\n        .iter()\n        .find(|(n, _, _)| *n == module)\n        \
         .ok_or_else(|| QueryError::UnknownModule(module.to_string()))?;\n    \
         if ins.len() != n_ins {\n        \
         return Err(QueryError::InputCount { module: module.to_string(), expected: n_ins, found: ins.len() });\n    }\n    \
         let outs = dsp_core::runtime::vars(names.len());\n    \
         let g = goal(module, &ins, &outs, dsp_core::runtime::succeed())?;\n    \
         let names = names.iter().map(|n| n.to_string()).collect();\n    \
         Ok(dsp_core::solution::VmSolutions::new(vm, g, outs, names))\n}\n",
    );
}

/// The whole program as one Rust source file with inline modules, suitable for `include!`.
pub fn emit_single(prog: &LinkedProgram) -> String {
    let mut out = String::from("// Generated by dspc. Do not edit.\n");
    for (id, g) in prog.modules().iter().enumerate() {
        let _ = write!(out, "\n{ALLOW}\npub mod {} {{\n", mod_name(&g.name));
        for line in emit_module(prog, id).lines() {
            if line.is_empty() {
                out.push('\n');
            } else {
                let _ = writeln!(out, "    {line}");
            }
        }
        out.push_str("}\n");
    }
    emit_dispatch(prog, &mut out);
    out
}

/// A standalone cargo crate: manifest, `src/lib.rs` and one file per module.
/// `core_path` is where the manifest finds `dsp-core`.
pub fn emit_crate(prog: &LinkedProgram, crate_name: &str, core_path: &str) -> Vec<EmittedFile> {
    let manifest = format!(
        "[package]\nname = {crate_name:?}\nversion = \"0.1.0\"\nedition = \"2021\"\n\n\
         [dependencies]\ndsp-core = {{ path = {core_path:?} }}\n\n[workspace]\n"
    );
    let mut lib = String::from("// Generated by dspc. Do not edit.\n\n");
    for g in prog.modules() {
        let _ = writeln!(lib, "{ALLOW}\npub mod {};", mod_name(&g.name));
    }
    emit_dispatch(prog, &mut lib);
    let mut files = vec![
        EmittedFile { path: "Cargo.toml".into(), contents: manifest },
        EmittedFile { path: "src/lib.rs".into(), contents: lib },
    ];
    for (id, g) in prog.modules().iter().enumerate() {
        let mut contents = emit_module(prog, id);
        contents.push('\n');
        files.push(EmittedFile { path: format!("src/{}.rs", mod_name(&g.name)), contents });
    }
    files
}

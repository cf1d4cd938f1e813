//! The `dspc` driver: check, run, emit and bench.
//!
//! Everything writes to caller-supplied streams and returns the exit code, so
//! the binary is a thin wrapper and tests can drive commands in-process.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dsp_core::corpus::{self, Case};
use dsp_core::diag::Diagnostic;
use dsp_core::emitter::emit_crate;
use dsp_core::frontend::ast::ExprKind;
use dsp_core::frontend::{ast::Expr, parse_expr_source};
use dsp_core::lowering::dump_graph;
use dsp_core::oracle::Oracle;
use dsp_core::pipeline::{compile, Compiled};
use dsp_core::runtime::{RuntimeFault, Stats, Vm};
use dsp_core::scheduler::dump_schedule;
use dsp_core::solution::{solve, Solution};
use dsp_core::value::{Dtype, Value};

/// Stack for threads that run the recursive oracle or drop deep continuation chains.
pub const BIG_STACK: usize = 1 << 30;

#[derive(Parser, Debug)]
#[command(name = "dspc", version, about = "Compile and run DSP programs")]
#[command(after_help = "DSPC_HEAP_HINT is reserved and currently ignored.")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse, analyze and schedule a file, printing diagnostics.
    Check {
        file: PathBuf,
        #[command(flatten)]
        dumps: Dumps,
    },
    /// Solve a module and stream its solutions.
    Run(RunArgs),
    /// Write a cargo crate with one Rust file per module.
    Emit {
        file: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Path to dsp-core written into the generated manifest.
        #[arg(long)]
        core_path: Option<PathBuf>,
    },
    /// Time the benchmark suites on each engine.
    Bench {
        #[arg(value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Only this engine; both by default.
        #[arg(long, value_enum)]
        engine: Option<Engine>,
    },
}

#[derive(Args, Debug, Default)]
pub struct Dumps {
    /// Print the statement order and unit boundaries of every method.
    #[arg(long)]
    pub dump_schedule: bool,
    /// Print the lowered unit graph.
    #[arg(long)]
    pub dump_graph: bool,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    pub file: PathBuf,
    /// Module to solve; the first in the file by default.
    #[arg(short, long)]
    pub module: Option<String>,
    /// Input as `name=value`.
    #[arg(short, long = "input", value_name = "NAME=VALUE")]
    pub inputs: Vec<String>,
    /// Every solution.
    #[arg(long, conflicts_with = "limit")]
    pub all: bool,
    /// At most N solutions (default 1).
    #[arg(long, value_name = "N")]
    pub limit: Option<usize>,
    /// Print only the number of solutions.
    #[arg(long)]
    pub count: bool,
    #[arg(long, value_enum, default_value_t = Engine::Vm)]
    pub engine: Engine,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Print engine counters to stderr.
    #[arg(long)]
    pub stats: bool,
    #[command(flatten)]
    pub dumps: Dumps,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Vm,
    Oracle,
}

impl Engine {
    fn name(self) -> &'static str {
        match self {
            Engine::Vm => "vm",
            Engine::Oracle => "oracle",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Jsonl,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Plan,
    Nqueens,
    Ack,
    Tarai,
    AckNocut,
    TaraiNocut,
    All,
}

/// Parse `args` (program name first) and run the command.
pub fn main_with(args: impl IntoIterator<Item = String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    execute(cli.command, out, err)
}

pub fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match command {
        Command::Check { file, dumps } => check(&file, &dumps, out, err),
        Command::Run(args) => run(&args, out, err),
        Command::Emit { file, out: dir, core_path } => emit(&file, &dir, core_path.as_deref(), out, err),
        Command::Bench { suite, trials, engine } => bench_cmd(suite, trials, engine, out),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            let _ = writeln!(err, "error: {message}");
            2
        }
    }
}

fn read(file: &Path) -> Result<String, String> {
    std::fs::read_to_string(file).map_err(|e| format!("cannot read {}: {e}", file.display()))
}

fn report(diags: &[Diagnostic], file: &Path, err: &mut dyn Write) {
    for d in diags {
        let _ = writeln!(err, "{}", d.render(&file.display().to_string()));
    }
}

/// Compile `file`, printing warnings or errors. `None` means errors were printed.
fn compile_file(
    file: &Path,
    dumps: &Dumps,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<Option<Compiled>, String> {
    let source = read(file)?;
    let compiled = match compile(&source) {
        Ok(c) => c,
        Err(diags) => {
            report(&diags, file, err);
            return Ok(None);
        }
    };
    report(&compiled.warnings, file, err);
    if dumps.dump_schedule {
        for m in &compiled.scheduled {
            let _ = out.write_all(dump_schedule(m).as_bytes());
        }
    }
    if dumps.dump_graph {
        let _ = out.write_all(dump_graph(&compiled.program).as_bytes());
    }
    Ok(Some(compiled))
}

fn check(file: &Path, dumps: &Dumps, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, String> {
    Ok(if compile_file(file, dumps, out, err)?.is_some() { 0 } else { 2 })
}

/// A command-line literal: number, boolean, or list of literals.
pub fn parse_literal(text: &str) -> Result<Value, String> {
    fn lit(e: &Expr) -> Option<Value> {
        Some(match &e.kind {
            ExprKind::Int(v) => Value::Int(*v),
            ExprKind::Real(v) => Value::Real(*v),
            ExprKind::Bool(v) => Value::Bool(*v),
            ExprKind::Neg(inner) => match lit(inner)? {
                Value::Int(v) => Value::Int(v.checked_neg()?),
                Value::Real(v) => Value::Real(-v),
                _ => return None,
            },
            ExprKind::List(items) => Value::list(items.iter().map(lit).collect::<Option<Vec<_>>>()?),
            _ => return None,
        })
    }
    let e = parse_expr_source(text).map_err(|e| format!("bad literal `{text}`: {}", e.to_diagnostic().message))?;
    lit(&e).ok_or_else(|| format!("`{text}` is not a literal"))
}

/// Order `name=value` inputs by the module's declaration.
pub fn bind_inputs(module: &str, params: &[(String, Dtype)], inputs: &[String]) -> Result<Vec<Value>, String> {
    let mut slots: Vec<Option<Value>> = vec![None; params.len()];
    for item in inputs {
        let (name, text) = item.split_once('=').ok_or_else(|| format!("input `{item}` is not NAME=VALUE"))?;
        let i = params
            .iter()
            .position(|(n, _)| n == name.trim())
            .ok_or_else(|| format!("`{module}` has no input named `{}`", name.trim()))?;
        let v = parse_literal(text.trim())?;
        let t = params[i].1;
        let v =
            v.clone().coerce(t).ok_or_else(|| format!("input `{}` expects {t}, got `{}`", params[i].0, text.trim()))?;
        if slots[i].replace(v).is_some() {
            return Err(format!("input `{}` given twice", params[i].0));
        }
    }
    slots.into_iter().zip(params).map(|(v, (n, _))| v.ok_or_else(|| format!("missing input `{n}`"))).collect()
}

fn run(args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, String> {
    let Some(compiled) = compile_file(&args.file, &args.dumps, out, err)? else { return Ok(2) };
    let module = match &args.module {
        Some(m) => m.clone(),
        None => compiled.scheduled.first().map(|m| m.name().to_string()).ok_or("file defines no modules")?,
    };
    let id = compiled.program.module_id(&module).ok_or_else(|| format!("no module named `{module}`"))?;
    let ins = bind_inputs(&module, &compiled.program.module(id).inputs, &args.inputs)?;
    let limit = if args.all || (args.count && args.limit.is_none()) { usize::MAX } else { args.limit.unwrap_or(1) };

    let mut found = 0usize;
    let mut emit = |s: &Solution| {
        found += 1;
        if !args.count {
            let line = match args.format {
                Format::Text => s.to_text(),
                Format::Jsonl => s.to_jsonl(),
            };
            let _ = writeln!(out, "{line}");
        }
    };
    let (fault, stats): (Option<RuntimeFault>, Option<Stats>) = match args.engine {
        Engine::Vm => {
            let mut it = solve(&compiled.program, &module, ins, Vm::new()).map_err(|e| e.to_string())?;
            let mut fault = None;
            for r in it.by_ref().take(limit) {
                match r {
                    Ok(s) => emit(&s),
                    Err(e) => fault = Some(e),
                }
            }
            (fault, Some(it.vm().stats()))
        }
        Engine::Oracle => {
            let oracle = Oracle::new(&compiled.scheduled);
            let it = oracle.solve(&module, ins).map_err(|e| e.to_string())?;
            let mut fault = None;
            for r in it.take(limit) {
                match r {
                    Ok(s) => emit(&s),
                    Err(e) => fault = Some(e),
                }
            }
            (fault, None)
        }
    };
    if args.count {
        let _ = writeln!(out, "{found}");
    }
    if args.stats {
        let _ = match stats {
            Some(s) => writeln!(err, "stats: {}", format_stats(&s)),
            None => writeln!(err, "stats: not collected by the oracle engine"),
        };
    }
    if let Some(f) = fault {
        return Err(format!("runtime fault: {f}"));
    }
    Ok(if found > 0 { 0 } else { 1 })
}

pub fn format_stats(s: &Stats) -> String {
    format!(
        "steps={} pushes={} pops={} peak_depth={} commits={} discarded={}",
        s.steps, s.pushes, s.pops, s.peak_depth, s.commits, s.discarded
    )
}

fn emit(
    file: &Path,
    dir: &Path,
    core_path: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, String> {
    let Some(compiled) = compile_file(file, &Dumps::default(), out, err)? else { return Ok(2) };
    let core = match core_path {
        Some(p) => p.to_path_buf(),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("../core"),
    };
    let core = core.canonicalize().unwrap_or(core);
    let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("program");
    let crate_name: String =
        format!("dsp-{stem}").chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '-' }).collect();
    for f in emit_crate(&compiled.program, &crate_name, &core.display().to_string()) {
        let path = dir.join(&f.path);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| format!("cannot create {}: {e}", parent.display()))?;
        }
        std::fs::write(&path, f.contents).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        let _ = writeln!(out, "{}", path.display());
    }
    Ok(0)
}

/// One row of the benchmark table.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub program: String,
    pub input: String,
    pub engine: Engine,
    pub solutions: usize,
    pub mean_ms: f64,
    /// VM only.
    pub stats: Option<Stats>,
}

pub fn suite_cases(suite: Suite) -> Vec<Case> {
    let name = match suite {
        Suite::All => return corpus::bench_suites(),
        Suite::Plan => "plan",
        Suite::Nqueens => "nqueens",
        Suite::Ack => "ack",
        Suite::Tarai => "tarai",
        Suite::AckNocut => "ack_nocut",
        Suite::TaraiNocut => "tarai_nocut",
    };
    corpus::bench_suites().into_iter().filter(|c| c.label == name).collect()
}

fn input_label(c: &Case) -> String {
    let args: Vec<String> = c.inputs.iter().map(Value::to_string).collect();
    format!("{}({})", c.module, args.join(","))
}

/// Drain every solution of `case` on `engine`, `trials` times.
/// Runs on a thread with a large stack; programs are compiled there since engines are not `Send`.
pub fn bench_case(case: &Case, engine: Engine, trials: usize) -> Result<BenchReport, String> {
    let case = case.clone();
    let trials = trials.max(1);
    std::thread::Builder::new()
        .stack_size(BIG_STACK)
        .spawn(move || -> Result<BenchReport, String> {
            let compiled = compile(case.source).map_err(|ds| format!("{}: {}", case.label, ds[0].message))?;
            let mut total = 0.0;
            let mut solutions = 0;
            let mut stats = None;
            for _ in 0..trials {
                let start = Instant::now();
                match engine {
                    Engine::Vm => {
                        let mut it = solve(&compiled.program, case.module, case.inputs.clone(), Vm::new())
                            .map_err(|e| e.to_string())?;
                        solutions = it
                            .by_ref()
                            .map(|r| r.map(drop))
                            .collect::<Result<Vec<_>, _>>()
                            .map_err(|e| e.to_string())?
                            .len();
                        total += start.elapsed().as_secs_f64();
                        stats = Some(it.vm().stats());
                    }
                    Engine::Oracle => {
                        let oracle = Oracle::new(&compiled.scheduled);
                        let it = oracle.solve(case.module, case.inputs.clone()).map_err(|e| e.to_string())?;
                        solutions =
                            it.map(|r| r.map(drop)).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?.len();
                        total += start.elapsed().as_secs_f64();
                    }
                }
            }
            Ok(BenchReport {
                program: case.label.to_string(),
                input: input_label(&case),
                engine,
                solutions,
                mean_ms: total * 1000.0 / trials as f64,
                stats,
            })
        })
        .map_err(|e| e.to_string())?
        .join()
        .map_err(|_| "benchmark thread panicked".to_string())?
}

/// Every case on every engine. Fails if engines disagree on a solution count.
pub fn bench(cases: &[Case], engines: &[Engine], trials: usize) -> Result<Vec<BenchReport>, String> {
    let mut rows = Vec::new();
    for c in cases {
        let start = rows.len();
        for &e in engines {
            rows.push(bench_case(c, e, trials)?);
        }
        let counts: Vec<usize> = rows[start..].iter().map(|r: &BenchReport| r.solutions).collect();
        if counts.windows(2).any(|w| w[0] != w[1]) {
            return Err(format!("{}: engines disagree on solution count {counts:?}", c.label));
        }
    }
    Ok(rows)
}

pub fn format_table(rows: &[BenchReport]) -> String {
    let mut out = format!(
        "{:<12} {:<16} {:<7} {:>9} {:>11} {:>10} {:>9} {:>6} {:>8}\n",
        "program", "input", "engine", "solutions", "mean_ms", "steps", "pushes", "peak", "commits"
    );
    for r in rows {
        let (steps, pushes, peak, commits) = match &r.stats {
            Some(s) => (s.steps.to_string(), s.pushes.to_string(), s.peak_depth.to_string(), s.commits.to_string()),
            None => ("-".into(), "-".into(), "-".into(), "-".into()),
        };
        let _ = writeln!(
            out,
            "{:<12} {:<16} {:<7} {:>9} {:>11.3} {:>10} {:>9} {:>6} {:>8}",
            r.program,
            r.input,
            r.engine.name(),
            r.solutions,
            r.mean_ms,
            steps,
            pushes,
            peak,
            commits
        );
    }
    let programs: Vec<&str> = rows.iter().map(|r| r.program.as_str()).fold(Vec::new(), |mut v, p| {
        if !v.contains(&p) {
            v.push(p);
        }
        v
    });
    for p in programs {
        let time = |e| rows.iter().find(|r| r.program == p && r.engine == e).map(|r| r.mean_ms);
        if let (Some(vm), Some(oracle)) = (time(Engine::Vm), time(Engine::Oracle)) {
            let _ = writeln!(out, "{p}: oracle/vm time ratio {:.2}", oracle / vm.max(1e-9));
        }
    }
    out
}

fn bench_cmd(suite: Suite, trials: usize, engine: Option<Engine>, out: &mut dyn Write) -> Result<i32, String> {
    let engines = match engine {
        Some(e) => vec![e],
        None => vec![Engine::Vm, Engine::Oracle],
    };
    let rows = bench(&suite_cases(suite), &engines, trials)?;
    let _ = out.write_all(format_table(&rows).as_bytes());
    Ok(0)
}

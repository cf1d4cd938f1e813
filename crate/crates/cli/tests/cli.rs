use std::path::{Path, PathBuf};
use std::process::Command;

use dsp_cli::{bind_inputs, main_with, parse_literal};
use dsp_core::value::{Dtype, Value};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn corpus(file: &str) -> String {
    root().join("corpus").join(file).display().to_string()
}

fn golden(file: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(file);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Run in-process; returns (exit code, stdout, stderr).
fn dspc(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("dspc").chain(args.iter().copied()).map(String::from);
    let code = main_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write_temp(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn schedule_dump_matches_golden() {
    assert_eq!(
        dspc(&["check", &corpus("quarter.dsp"), "--dump-schedule"]),
        (0, golden("quarter.schedule"), String::new())
    );
    assert_eq!(dspc(&["check", &corpus("nqueens.dsp"), "--dump-schedule"]).1, golden("nqueens.schedule"));
}

#[test]
fn graph_dump_matches_golden() {
    assert_eq!(dspc(&["check", &corpus("quarter.dsp"), "--dump-graph"]).1, golden("quarter.graph"));
    assert_eq!(dspc(&["check", &corpus("for.dsp"), "--dump-graph"]).1, golden("for.graph"));
}

#[test]
fn jsonl_matches_golden() {
    let (code, out, _) =
        dspc(&["run", &corpus("nqueens.dsp"), "-m", "nqueens", "-i", "N=6", "--all", "--format", "jsonl"]);
    assert_eq!((code, out), (0, golden("nqueens6.jsonl")));
    let verify = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/quarter_verify.dsp");
    let (code, out, _) = dspc(&["run", &verify.display().to_string(), "-i", "R=2.0", "--all", "--format", "jsonl"]);
    assert_eq!((code, out), (0, golden("quarter_verify.jsonl")));
}

#[test]
fn oracle_engine_gives_the_same_jsonl() {
    let (_, out, _) =
        dspc(&["run", &corpus("nqueens.dsp"), "-i", "N=6", "--all", "--format", "jsonl", "--engine", "oracle"]);
    assert_eq!(out, golden("nqueens6.jsonl"));
}

#[test]
fn run_examples() {
    let (code, out, _) = dspc(&["run", &corpus("quarter.dsp"), "-m", "pointInQuarterCircle", "-i", "R=2.0", "--all"]);
    assert_eq!(code, 0);
    assert_eq!(
        out.lines().collect::<Vec<_>>(),
        ["X=0.0 Y=0.0", "X=0.0 Y=1.0", "X=0.0 Y=2.0", "X=1.0 Y=0.0", "X=1.0 Y=1.0", "X=2.0 Y=0.0"]
    );

    let (code, out, _) = dspc(&["run", &corpus("quarter.dsp"), "-m", "pointInQuarterCircle", "-i", "R=-1.0", "--all"]);
    assert_eq!((code, out.as_str()), (1, ""));

    assert_eq!(dspc(&["run", &corpus("nqueens.dsp"), "-m", "nqueens", "-i", "N=8", "--count"]).1, "92\n");
}

#[test]
fn limits() {
    let q = corpus("quarter.dsp");
    assert_eq!(dspc(&["run", &q, "-i", "R=2.0"]).1.lines().count(), 1);
    assert_eq!(dspc(&["run", &q, "-i", "R=2.0", "--limit", "4"]).1.lines().count(), 4);
    assert_eq!(dspc(&["run", &q, "-i", "R=2.0", "--limit", "4", "--count"]).1, "4\n");
    assert_eq!(dspc(&["run", &q, "-i", "R=2", "--count"]).1, "6\n", "int literal widens to real");
}

#[test]
fn stats_go_to_stderr() {
    let (code, out, err) = dspc(&["run", &corpus("ack.dsp"), "-i", "M=2", "-i", "N=3", "--stats"]);
    assert_eq!((code, out.as_str()), (0, "A=9\n"));
    assert!(err.starts_with("stats: steps="), "{err}");
    assert!(err.contains("commits="));
}

#[test]
fn check_reports_errors_with_positions() {
    let dir = tempfile::tempdir().unwrap();
    let cyc = write_temp(
        &dir,
        "cyc.dsp",
        "c({}, {A : real})\n  method\n    A : real = B;\n    B : real = A;\n  end method;\nend;\n",
    );
    let (code, _, err) = dspc(&["check", &cyc]);
    assert_eq!(code, 2);
    assert!(err.starts_with(&format!("{cyc}:")), "{err}");
    assert!(err.contains("error: cyclic dependency between statements s1, s2"), "{err}");

    let unk = write_temp(&dir, "unk.dsp", "c({}, {A : real}) method call(nope, {}, {A}); end method; end;\n");
    let (code, _, err) = dspc(&["check", &unk]);
    assert_eq!(code, 2);
    assert!(err.contains("error: unknown module `nope`"), "{err}");

    assert_eq!(dspc(&["check", &corpus("quarter.dsp")]), (0, String::new(), String::new()));
}

#[test]
fn bad_invocations_exit_2() {
    let q = corpus("quarter.dsp");
    assert_eq!(dspc(&["run", &q, "-i", "Q=1.0"]).0, 2);
    assert_eq!(dspc(&["run", &q]).2, "error: missing input `R`\n");
    assert_eq!(dspc(&["run", &q, "-i", "R=true"]).0, 2);
    assert_eq!(dspc(&["run", &q, "-m", "nope", "-i", "R=1.0"]).0, 2);
    assert_eq!(dspc(&["run", "/no/such/file.dsp"]).0, 2);
    assert_eq!(dspc(&["frobnicate"]).0, 2);
    assert_eq!(dspc(&["--help"]).0, 0);
}

#[test]
fn runtime_faults_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_temp(&dir, "z.dsp", "z({A : int}, {B : int}) method B : int = div(A, 0); end method; end;\n");
    let (code, _, err) = dspc(&["run", &f, "-i", "A=1"]);
    assert_eq!(code, 2);
    assert!(err.contains("runtime fault"), "{err}");
}

#[test]
fn literals() {
    assert_eq!(parse_literal("2.5").unwrap(), Value::Real(2.5));
    assert_eq!(parse_literal("-3").unwrap(), Value::Int(-3));
    assert_eq!(
        parse_literal("[1, true, -0.5]").unwrap(),
        Value::list(vec![Value::Int(1), Value::Bool(true), Value::Real(-0.5)])
    );
    assert!(parse_literal("X + 1").is_err());
    let params = [("A".to_string(), Dtype::Real), ("B".to_string(), Dtype::Int)];
    assert_eq!(bind_inputs("m", &params, &["B=2".into(), "A=1".into()]).unwrap(), [Value::Real(1.0), Value::Int(2)]);
    assert!(bind_inputs("m", &params, &["A=1".into(), "A=2".into(), "B=1".into()]).is_err());
}

#[test]
fn bench_single_suite() {
    let (code, out, _) = dspc(&["bench", "ack", "--trials", "1"]);
    assert_eq!(code, 0);
    let rows: Vec<&str> = out.lines().filter(|l| l.starts_with("ack ")).collect();
    assert_eq!(rows.len(), 2, "{out}");
    assert!(out.contains("ack: oracle/vm time ratio"));
    let (_, out, _) = dspc(&["bench", "plan", "--trials", "2", "--engine", "vm"]);
    assert_eq!(out.lines().filter(|l| l.starts_with("plan ")).count(), 1);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_dspc");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(status(&["run", &corpus("quarter.dsp"), "-i", "R=2.0"]), Some(0));
    assert_eq!(status(&["run", &corpus("quarter.dsp"), "-i", "R=-1.0"]), Some(1));
    assert_eq!(status(&["run", &corpus("quarter.dsp")]), Some(2));
    let out = Command::new(bin).args(["run", &corpus("nqueens.dsp"), "-i", "N=8", "--count"]).output().unwrap();
    assert_eq!(String::from_utf8_lossy(&out.stdout), "92\n");
}

#[test]
fn emitted_crate_builds_and_matches() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, err) = dspc(&["emit", &corpus("for.dsp"), "-o", &dir.path().display().to_string()]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().count(), 3);
    let manifest = std::fs::read_to_string(dir.path().join("Cargo.toml")).unwrap();
    assert!(manifest.contains("dsp-core = { path ="));
    assert!(dir.path().join("src/dsp_for.rs").exists());

    // a driver test inside the emitted crate, run against the same inputs as the lowered program
    std::fs::create_dir_all(dir.path().join("tests")).unwrap();
    std::fs::write(
        dir.path().join("tests/run.rs"),
        "#[test]\nfn stream() {\n    use dsp_core::value::Value;\n    \
         let ins = vec![Value::Real(0.0), Value::Real(2.0), Value::Real(1.0)];\n    \
         let s: Vec<String> = dsp_for::solve(\"for\", ins, dsp_core::runtime::Vm::new()).unwrap().map(|s| s.unwrap().to_jsonl()).collect();\n    \
         std::fs::write(std::env::var(\"STREAM_OUT\").unwrap(), s.join(\"\\n\")).unwrap();\n}\n",
    )
    .unwrap();
    let stream = dir.path().join("stream.jsonl");
    let target = root().join("target/emitted-crates");
    let status = Command::new(env!("CARGO"))
        .args(["test", "--offline", "--quiet", "--manifest-path"])
        .arg(dir.path().join("Cargo.toml"))
        .env("CARGO_TARGET_DIR", &target)
        .env("STREAM_OUT", &stream)
        .status()
        .unwrap();
    assert!(status.success());
    let (_, lowered, _) =
        dspc(&["run", &corpus("for.dsp"), "-i", "B=0.0", "-i", "E=2.0", "-i", "S=1.0", "--all", "--format", "jsonl"]);
    assert_eq!(std::fs::read_to_string(stream).unwrap() + "\n", lowered);
}

//! Transpiled modules run under the Python runtime and behave like
//! `legalc interpret`.

mod common;

use common::*;
use legalc_core::dcalc::Var;
use legalc_core::dcalc_to_lcalc::{helper_name, process_exceptions};
use legalc_core::lcalc::{self, mk, Exn, LKind, LProgram, LTerm};
use legalc_core::value::{Lit, Type};

fn first_line(s: &str) -> &str {
    s.lines().next().unwrap_or("")
}

#[test]
fn every_scenario_runs_identically() {
    let dir = tempfile::tempdir().unwrap();
    for s in all_scenarios() {
        let expected = s.interpret();
        let module = transpile(&s, dir.path()).unwrap();
        let got = python().arg(&module).output().expect("python3");
        assert_eq!(stdout(&got), stdout(&expected), "{}", s.name);
        assert_eq!(code(&got), code(&expected), "{}: {}", s.name, stderr(&got));
        // Same error title; the Python side has no source excerpts.
        assert_eq!(first_line(&stderr(&got)), first_line(&stderr(&expected)), "{}", s.name);
    }
}

#[test]
fn emitted_modules_compile_and_import_without_a_main() {
    let dir = tempfile::tempdir().unwrap();
    for file in ["section121.catala_en", "arithmetic.catala_en", "conflict.catala_en"] {
        let out = dir.path().join(file.replace(".catala_en", ".py"));
        let o = legalc(&["transpile", file, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let src = std::fs::read_to_string(&out).unwrap();
        assert!(src.starts_with("# Generated by legalc"), "{file}");
        let o = python().arg("-c").arg(format!("import runpy; runpy.run_path({:?})", out.display().to_string())).output().unwrap();
        assert!(o.status.success(), "{file}: {}", stderr(&o));
        assert_eq!(stdout(&o), "", "{file}");
    }
}

#[test]
fn transpilation_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = transpile(&section121_c(), dir.path()).unwrap();
    let first = std::fs::read_to_string(&a).unwrap();
    let b = transpile(&section121_c(), dir.path()).unwrap();
    assert_eq!(first, std::fs::read_to_string(b).unwrap());
}

// ---------------------------------------------------------------------------
// process_exceptions: runtime against the lambda-calculus helper.
// ---------------------------------------------------------------------------

/// Thunk kinds: raises ∅, raises ⊛, returns 0, returns 1.
const KINDS: [&str; 4] = ["empty", "conflict", "0", "1"];

fn lists() -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for len in 0..=4u32 {
        for code in 0..4usize.pow(len) {
            out.push((0..len).map(|i| (code / 4usize.pow(i)) % 4).collect());
        }
    }
    out
}

fn lthunk(k: usize) -> LTerm {
    let body = match k {
        0 => LKind::Raise(Exn::Empty, None),
        1 => LKind::Raise(Exn::Conflict, None),
        n => LKind::Lit(Lit::Int(n as i64 - 2)),
    };
    mk(LKind::Lam(Var::fresh("_"), Type::Unit, mk(body, None)), None)
}

fn lcalc_outcome(list: &[usize]) -> String {
    let name = helper_name(&Type::Int);
    let mut p = LProgram::default();
    p.tops.insert(name.clone(), process_exceptions(&Type::Int));
    let arg = mk(LKind::Array(Type::thunk(Type::Int), list.iter().map(|&k| lthunk(k)).collect()), None);
    let t = mk(LKind::App(mk(LKind::TopName(name), None), arg), None);
    match lcalc::eval(&p, &t, 10_000) {
        Ok(v) => v.to_value().to_string(),
        Err(lcalc::LError::Raised(Exn::Conflict, _)) => "conflict".into(),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn runtime_process_exceptions_matches_the_helper() {
    let all = lists();
    assert_eq!(all.len(), 1 + 4 + 16 + 64 + 256);
    let spec: Vec<String> = all.iter().map(|l| l.iter().map(|&k| KINDS[k]).collect::<Vec<_>>().join(",")).collect();
    let script = r#"
import sys
import legalc_runtime as rt

def thunk(kind):
    if kind == "empty":
        return lambda: rt.raise_empty()
    if kind == "conflict":
        return lambda: rt.raise_conflict()
    return lambda: int(kind)

for line in sys.stdin.read().splitlines():
    kinds = [k for k in line[1:].split(",") if k]
    try:
        r = rt.render(rt.process_exceptions([thunk(k) for k in kinds]))
    except rt.Conflict:
        r = "conflict"
    print(r)
"#;
    let mut child = python()
        .args(["-c", script])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    {
        use std::io::Write;
        // Each line starts with ':' so the empty list is not a blank line.
        let input: String = spec.iter().map(|s| format!(":{s}\n")).collect();
        child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    }
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let py: Vec<String> = String::from_utf8(out.stdout).unwrap().lines().map(str::to_owned).collect();
    assert_eq!(py.len(), all.len());
    for (l, got) in all.iter().zip(&py) {
        assert_eq!(got, &lcalc_outcome(l), "thunks {:?}", l.iter().map(|&k| KINDS[k]).collect::<Vec<_>>());
    }
}

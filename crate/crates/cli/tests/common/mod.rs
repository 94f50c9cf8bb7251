#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

pub fn tests_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests")
}

pub fn corpus_dir() -> PathBuf {
    tests_dir().join("corpus")
}

pub fn runtime_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../runtime/python")
}

/// Runs `legalc` in `dir` without color.
pub fn legalc_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_legalc"))
        .args(args)
        .current_dir(dir)
        .env("LEGALC_NO_COLOR", "1")
        .output()
        .expect("run legalc")
}

pub fn legalc(args: &[&str]) -> Output {
    legalc_in(&corpus_dir(), args)
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

pub struct Scenario {
    pub name: &'static str,
    pub file: &'static str,
    pub scope: &'static str,
    pub bindings: Vec<(&'static str, String)>,
}

impl Scenario {
    pub fn args(&self) -> Vec<String> {
        let mut a = vec![self.file.to_owned(), "--scope".into(), self.scope.into()];
        for (k, v) in &self.bindings {
            a.push("--bind".into());
            a.push(format!("{k}={v}"));
        }
        a
    }

    pub fn interpret(&self) -> Output {
        let mut a = vec!["interpret".to_owned()];
        a.extend(self.args());
        legalc(&a.iter().map(String::as_str).collect::<Vec<_>>())
    }

    pub fn golden_path(&self) -> PathBuf {
        tests_dir().join("golden").join(format!("{}.out", self.name))
    }
}

fn period(start: &str, end: &str) -> String {
    format!("Period {{ -- start: |{start}| -- end: |{end}| }}")
}

fn personal(start: &str, end: &str) -> String {
    let p = period(start, end);
    format!("PersonalData {{ -- property_ownership: [{p}] -- property_usage_as_principal_residence: [{p}] }}")
}

/// Owned and used 2015-01-01 to 2021-01-01: 1,825 days in the window.
pub fn long_residence() -> String {
    personal("2015-01-01", "2021-01-01")
}

/// Owned and used 2020-03-01 to 2021-01-01: 306 days.
pub fn short_residence() -> String {
    personal("2020-03-01", "2021-01-01")
}

const SALE: &str = "|2021-01-01|";

const ITEMS: &str = "[Item { -- code: 1 -- price: $1,234.56 }; Item { -- code: 2 -- price: $0.05 }]";

pub fn section121_a() -> Scenario {
    Scenario {
        name: "section121_a",
        file: "section121.catala_en",
        scope: "Section121SinglePerson",
        bindings: vec![
            ("personal", long_residence()),
            ("gain_from_sale_or_exchange_of_property", "$300,000".into()),
            ("date_of_sale_or_exchange", SALE.into()),
        ],
    }
}

pub fn section121_b() -> Scenario {
    Scenario {
        name: "section121_b",
        file: "section121.catala_en",
        scope: "Section121SinglePerson",
        bindings: vec![
            ("personal", short_residence()),
            ("gain_from_sale_or_exchange_of_property", "$300,000".into()),
            ("date_of_sale_or_exchange", SALE.into()),
        ],
    }
}

pub fn section121_c() -> Scenario {
    let p = long_residence();
    Scenario {
        name: "section121_c",
        file: "section121.catala_en",
        scope: "Section121Return",
        bindings: vec![
            ("return_data", format!("JointReturn content CoupleData {{ -- personal1: {p} -- personal2: {p} }}")),
            ("gain_from_sale_or_exchange_of_property", "$600,000".into()),
            ("date_of_sale_or_exchange", SALE.into()),
        ],
    }
}

/// The three criterion scenarios with the line each must print.
pub fn section121_expected() -> Vec<(Scenario, &'static str)> {
    vec![
        (section121_a(), "Section121SinglePerson.amount_excluded_from_gross_income = $250,000.00"),
        (section121_b(), "Section121SinglePerson.amount_excluded_from_gross_income = $0.00"),
        (section121_c(), "Section121Return.gain_cap = $500,000.00"),
    ]
}

/// Every scenario of the corpus, error scenarios included.
pub fn all_scenarios() -> Vec<Scenario> {
    let p = long_residence();
    vec![
        section121_a(),
        section121_b(),
        section121_c(),
        Scenario {
            name: "section121_single_return",
            file: "section121.catala_en",
            scope: "Section121Return",
            bindings: vec![
                ("return_data", format!("SingleReturn content {p}")),
                ("gain_from_sale_or_exchange_of_property", "$600,000".into()),
                ("date_of_sale_or_exchange", SALE.into()),
            ],
        },
        Scenario {
            name: "section121_joint_short",
            file: "section121.catala_en",
            scope: "Section121Return",
            bindings: vec![
                (
                    "return_data",
                    format!("JointReturn content CoupleData {{ -- personal1: {p} -- personal2: {} }}", short_residence()),
                ),
                ("gain_from_sale_or_exchange_of_property", "$600,000".into()),
                ("date_of_sale_or_exchange", SALE.into()),
            ],
        },
        Scenario {
            name: "section121_missing_date",
            file: "section121.catala_en",
            scope: "Section121SinglePerson",
            bindings: vec![
                ("personal", long_residence()),
                ("gain_from_sale_or_exchange_of_property", "$300,000".into()),
            ],
        },
        Scenario {
            name: "arithmetic",
            file: "arithmetic.catala_en",
            scope: "Ledger",
            bindings: vec![("items", ITEMS.into()), ("divisor", "-7".into())],
        },
        Scenario {
            name: "division_by_zero",
            file: "arithmetic.catala_en",
            scope: "Ledger",
            bindings: vec![("items", ITEMS.into()), ("divisor", "0".into())],
        },
        Scenario {
            name: "conflict",
            file: "conflict.catala_en",
            scope: "Allowance",
            bindings: vec![("age", "70".into())],
        },
        Scenario {
            name: "no_conflict",
            file: "conflict.catala_en",
            scope: "Allowance",
            bindings: vec![("age", "30".into())],
        },
        Scenario {
            name: "no_definition",
            file: "conflict.catala_en",
            scope: "Allowance",
            bindings: vec![("age", "12".into())],
        },
    ]
}

// ---------------------------------------------------------------------------
// Criteria shared by the test files and the acceptance target
// ---------------------------------------------------------------------------

pub fn check_section121() -> Result<String, String> {
    for (s, line) in section121_expected() {
        let o = s.interpret();
        if code(&o) != 0 {
            return Err(format!("{}: exit {}: {}", s.name, code(&o), stderr(&o)));
        }
        let out = stdout(&o);
        if !out.lines().any(|l| l == line) {
            return Err(format!("{}: missing `{line}` in\n{out}", s.name));
        }
        let golden = std::fs::read_to_string(s.golden_path()).map_err(|e| format!("{}: {e}", s.name))?;
        if out != golden {
            return Err(format!("{}: output differs from {}\n{out}", s.name, s.golden_path().display()));
        }
    }
    Ok("scenarios (a) $250,000.00, (b) $0.00, (c) gain cap $500,000.00".into())
}

pub const DESUGAR_CASES: [&str; 6] =
    ["rule_i", "rule_ii", "rule_iiia", "rule_iiib", "rule_iv", "exceptions_to_exceptions"];

pub fn check_desugar_golden(case: &str) -> Result<(), String> {
    let dir = tests_dir().join("desugar");
    let file = format!("{case}.catala_en");
    let o = legalc_in(&dir, &["emit", &file, "--stage", "desugared"]);
    if code(&o) != 0 {
        return Err(format!("{case}: exit {}: {}", code(&o), stderr(&o)));
    }
    let expected = std::fs::read_to_string(dir.join(format!("{case}.desugared"))).map_err(|e| e.to_string())?;
    if stdout(&o) != expected {
        return Err(format!("{case}: got\n{}expected\n{expected}", stdout(&o)));
    }
    Ok(())
}

pub fn check_desugar_goldens() -> Result<String, String> {
    for c in DESUGAR_CASES {
        check_desugar_golden(c)?;
    }
    Ok(format!("{} goldens match", DESUGAR_CASES.len()))
}

/// Exit 1 and one excerpt per position of the cycle.
pub fn check_rejection(file: &str, title: &str, lines: &[u32]) -> Result<(), String> {
    let o = legalc(&["typecheck", file]);
    let err = stderr(&o);
    if code(&o) != 1 {
        return Err(format!("{file}: exit {} (expected 1)", code(&o)));
    }
    if !err.starts_with(&format!("[ERROR] {title}\n")) {
        return Err(format!("{file}: unexpected error\n{err}"));
    }
    for l in lines {
        let p = format!("--> {file}:{l}:");
        if !err.contains(&p) {
            return Err(format!("{file}: position on line {l} not listed\n{err}"));
        }
    }
    let listed = err.matches("--> ").count();
    if listed != lines.len() {
        return Err(format!("{file}: {listed} positions listed, expected {}\n{err}", lines.len()));
    }
    Ok(())
}

pub fn check_cycles() -> Result<String, String> {
    check_rejection("cycle.catala_en", "Cyclic dependency detected between variables of scope Loop", &[10, 11, 12])?;
    check_rejection("recursion.catala_en", "Recursive scope calls are not allowed", &[6])?;
    Ok("variable cycle (3 positions) and self-recursive scope (1 position) exit 1".into())
}

// ---------------------------------------------------------------------------
// Python
// ---------------------------------------------------------------------------

pub fn python() -> Command {
    let mut c = Command::new("python3");
    c.env("PYTHONPATH", runtime_dir()).env("PYTHONDONTWRITEBYTECODE", "1");
    c
}

/// Transpiles with a main block for the scenario into `dir`.
pub fn transpile(s: &Scenario, dir: &Path) -> Result<PathBuf, String> {
    let out = dir.join(format!("{}.py", s.name));
    let mut a = vec!["transpile".to_owned()];
    a.extend(s.args());
    a.push("--out".into());
    a.push(out.display().to_string());
    let o = legalc(&a.iter().map(String::as_str).collect::<Vec<_>>());
    if code(&o) != 0 {
        return Err(format!("{}: transpile exit {}: {}", s.name, code(&o), stderr(&o)));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Performance
// ---------------------------------------------------------------------------

pub const PERF_SCOPES: usize = 50;
pub const PERF_DEFS: usize = 30;

/// `PERF_SCOPES` scopes of `PERF_DEFS` variables; scope k reads the last
/// variable of scope k-1 through a sub-scope, so interpreting the last
/// scope runs all of them. Values stay below a few thousand.
pub fn perf_program() -> String {
    let mut s = String::from("# Generated benchmark\n\n");
    for k in 0..PERF_SCOPES {
        s.push_str(&format!("## Scope {k}\n\n```catala\ndeclaration scope S{k}:\n"));
        for i in 0..PERF_DEFS {
            s.push_str(&format!("  context v{i} content integer\n"));
        }
        if k > 0 {
            s.push_str(&format!("  context sub scope S{}\n", k - 1));
        }
        s.push_str(&format!("\nscope S{k}:\n"));
        for i in 0..PERF_DEFS {
            let p = i.saturating_sub(1);
            let line = match (i, i % 3) {
                (0, _) if k == 0 => "  definition v0 equals 1\n".to_owned(),
                (0, _) => format!("  definition v0 equals sub.v{} + 1\n", PERF_DEFS - 1),
                (_, 1) => format!("  definition v{i} equals if v{p} > 1000 then v{p} - 997 else v{p} + {i}\n"),
                (_, 2) => format!(
                    "  label base_v{i} definition v{i} equals if v{p} > 1000 then v{p} - 900 else v{p} * 2\n  \
                     exception base_v{i} definition v{i} under condition v{p} > 500 consequence equals v{p} - 400\n"
                ),
                _ => format!(
                    "  definition v{i} under condition v{p} > 100 consequence equals (v{p} + v{q}) / 2\n  \
                     definition v{i} under condition v{p} <= 100 consequence equals v{p} + v{q}\n",
                    q = i - 2
                ),
            };
            s.push_str(&line);
        }
        s.push_str("```\n\n");
    }
    s
}

/// Independent evaluation of `perf_program`: the value of every variable
/// of the last scope.
pub fn perf_expected() -> Vec<i64> {
    let mut last = 0;
    let mut vs = vec![0i64; PERF_DEFS];
    for k in 0..PERF_SCOPES {
        for i in 0..PERF_DEFS {
            let p = if i > 0 { vs[i - 1] } else { 0 };
            vs[i] = match (i, i % 3) {
                (0, _) if k == 0 => 1,
                (0, _) => last + 1,
                (_, 1) if p > 1000 => p - 997,
                (_, 1) => p + i as i64,
                (_, 2) if p > 500 => p - 400,
                (_, 2) => p * 2,
                _ if p > 100 => (p + vs[i - 2]) / 2,
                _ => p + vs[i - 2],
            };
        }
        last = vs[PERF_DEFS - 1];
    }
    vs
}

pub struct PerfReport {
    pub interpret: Duration,
    pub transpiled: Duration,
}

impl PerfReport {
    pub fn speedup(&self) -> f64 {
        self.interpret.as_secs_f64() / self.transpiled.as_secs_f64()
    }
}

/// Times `legalc interpret` on the generated program (best of 3, whole
/// process) and one call of the transpiled scope (mean of 20 calls inside
/// one Python process). Both outputs are checked against `perf_expected`.
pub fn run_perf() -> Result<PerfReport, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let src = dir.path().join("bench.catala_en");
    std::fs::write(&src, perf_program()).map_err(|e| e.to_string())?;
    let scope = format!("S{}", PERF_SCOPES - 1);
    let expected: String = perf_expected()
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{scope}.v{i} = {v}\n"))
        .collect();

    let mut best = Duration::MAX;
    for _ in 0..3 {
        let t = Instant::now();
        let o = legalc_in(dir.path(), &["interpret", "bench.catala_en", "--scope", &scope]);
        best = best.min(t.elapsed());
        if code(&o) != 0 || stdout(&o) != expected {
            return Err(format!("interpreter output differs:\n{}{}", stdout(&o), stderr(&o)));
        }
    }

    let o = legalc_in(dir.path(), &["transpile", "bench.catala_en", "--out", "bench.py", "--scope", &scope]);
    if code(&o) != 0 {
        return Err(format!("transpile failed: {}", stderr(&o)));
    }
    let driver = "import sys, time\nimport bench, legalc_runtime as rt\n\
                  r = bench._main()\n\
                  sys.stdout.write(''.join('S%d.v%d = %s\\n' % (int(sys.argv[1]), i, rt.render(v)) for i, v in enumerate(r)))\n\
                  n = 20\nt = time.perf_counter()\nfor _ in range(n):\n    bench._main()\n\
                  sys.stderr.write('%.9f' % ((time.perf_counter() - t) / n))\n";
    let o = python()
        .env("PYTHONPATH", format!("{}:{}", runtime_dir().display(), dir.path().display()))
        .args(["-c", driver, &(PERF_SCOPES - 1).to_string()])
        .current_dir(dir.path())
        .output()
        .map_err(|e| format!("python3: {e}"))?;
    if !o.status.success() || stdout(&o) != expected {
        return Err(format!("transpiled output differs:\n{}{}", stdout(&o), stderr(&o)));
    }
    let secs: f64 = stderr(&o).trim().parse().map_err(|e| format!("timing: {e}"))?;
    Ok(PerfReport {
        interpret: best,
        transpiled: Duration::from_secs_f64(secs),
    })
}

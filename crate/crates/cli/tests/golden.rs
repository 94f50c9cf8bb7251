//! Exact CLI output on the checked-in corpus. Set `LEGALC_BLESS=1` to
//! rewrite the expectation files after reviewing a change.

mod common;

use common::*;

fn bless() -> bool {
    std::env::var_os("LEGALC_BLESS").is_some()
}

#[test]
fn section121_scenarios() {
    if bless() {
        for s in all_scenarios() {
            let o = s.interpret();
            std::fs::write(s.golden_path(), stdout(&o)).unwrap();
            if code(&o) != 0 {
                std::fs::write(s.golden_path().with_extension("err"), stderr(&o)).unwrap();
            }
        }
    }
    check_section121().unwrap();
}

#[test]
fn every_scenario_matches_its_golden() {
    for s in all_scenarios() {
        let o = s.interpret();
        let golden = std::fs::read_to_string(s.golden_path()).unwrap();
        assert_eq!(stdout(&o), golden, "{}", s.name);
        let err = s.golden_path().with_extension("err");
        if err.exists() {
            assert_eq!(code(&o), 1, "{}", s.name);
            assert_eq!(stderr(&o), std::fs::read_to_string(err).unwrap(), "{}", s.name);
        } else {
            assert_eq!(code(&o), 0, "{}: {}", s.name, stderr(&o));
        }
    }
}

#[test]
fn joint_return_needs_both_spouses_to_use_the_home() {
    let o = all_scenarios().into_iter().find(|s| s.name == "section121_joint_short").unwrap().interpret();
    let out = stdout(&o);
    assert!(out.contains("Section121Return.paragraph_A_applies = false\n"), "{out}");
    assert!(out.contains("Section121Return.gain_cap = $250,000.00\n"), "{out}");
}

#[test]
fn desugar_goldens() {
    if bless() {
        let dir = tests_dir().join("desugar");
        for c in DESUGAR_CASES {
            let o = legalc_in(&dir, &["emit", &format!("{c}.catala_en"), "--stage", "desugared"]);
            std::fs::write(dir.join(format!("{c}.desugared")), stdout(&o)).unwrap();
        }
    }
    for c in DESUGAR_CASES {
        check_desugar_golden(c).unwrap();
    }
}

/// The desugared forms of the table rules, checked structurally as well.
#[test]
fn desugared_shapes() {
    let dir = tests_dir().join("desugar");
    let emit = |c: &str| stdout(&legalc_in(&dir, &["emit", &format!("{c}.catala_en"), "--stage", "desugared"]));
    let i = emit("rule_i");
    assert!(i.contains("parent - at rule_i.catala_en:9:8 : under condition true consequence equals false"), "{i}");
    assert!(i.contains("adult = <<| age >= 18 :- true> | true :- false>"), "{i}");
    assert!(emit("rule_ii").contains("under condition true consequence equals income"));
    let iiia = emit("rule_iiia");
    assert!(iiia.contains("consequence nodefault"), "{iiia}");
    assert!(iiia.contains("| true :- ∅>"), "{iiia}");
    assert_eq!(emit("rule_iiib").matches("def cap").count(), 1);
    assert!(emit("rule_iv").contains("parent __label_Cap_cap at"));
    let nested = emit("exceptions_to_exceptions");
    assert!(nested.contains("rate = <<<| disabled :- 10>, <| veteran :- 12> | resident :- 15> | true :- 20>"), "{nested}");
}

#[test]
fn trace_shows_which_definition_applied() {
    let mut a = vec!["interpret".to_owned(), "--trace".to_owned()];
    a.extend(section121_c().args());
    let o = legalc(&a.iter().map(String::as_str).collect::<Vec<_>>());
    let out = stdout(&o);
    assert_eq!(code(&o), 0);
    assert!(
        out.lines().any(|l| l.starts_with("[LOG] Section121Return.gain_cap: exception 0 applies")
            && l.ends_with("[Section 121: Exclusion of gain from sale of principal residence > (b) Limitations > (2) Special rules for joint returns > (A) $500,000 Limitation for certain joint returns]")),
        "{out}"
    );
    let results: Vec<&str> = out.lines().filter(|l| !l.starts_with("[LOG]")).collect();
    let plain = stdout(&section121_c().interpret());
    assert_eq!(results.join("\n") + "\n", plain);
}

#[test]
fn intermediate_stages_print() {
    for stage in ["scopelang", "dcalc", "lcalc"] {
        let o = legalc(&["emit", "section121.catala_en", "--stage", stage]);
        assert_eq!(code(&o), 0, "{stage}: {}", stderr(&o));
        assert!(stdout(&o).contains("Section121Return"), "{stage}");
    }
    let o = legalc(&["emit", "section121.catala_en", "--stage", "lcalc"]);
    assert!(stdout(&o).contains("process_exceptions__money"));
}

#[test]
fn typecheck_counts_scopes() {
    let o = legalc(&["typecheck", "section121.catala_en"]);
    assert_eq!(stdout(&o), "Typechecking successful: 2 scope(s)\n");
}

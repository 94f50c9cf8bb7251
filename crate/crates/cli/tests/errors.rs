mod common;

use common::*;

#[test]
fn variable_cycle_lists_every_edge() {
    check_rejection("cycle.catala_en", "Cyclic dependency detected between variables of scope Loop", &[10, 11, 12]).unwrap();
    let err = stderr(&legalc(&["typecheck", "cycle.catala_en"]));
    assert!(err.contains("Message: the cycle involves a, b, c"), "{err}");
}

#[test]
fn self_recursive_scope_is_rejected() {
    check_rejection("recursion.catala_en", "Recursive scope calls are not allowed", &[6]).unwrap();
}

#[test]
fn cycles_fail_every_command() {
    for args in [
        vec!["interpret", "cycle.catala_en", "--scope", "Loop"],
        vec!["emit", "cycle.catala_en", "--stage", "dcalc"],
        vec!["transpile", "cycle.catala_en", "--out", "/dev/null"],
    ] {
        assert_eq!(code(&legalc(&args)), 1, "{args:?}");
    }
}

#[test]
fn conflict_lists_both_definitions() {
    let o = legalc(&["interpret", "conflict.catala_en", "--scope", "Allowance", "--bind", "age=70"]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.starts_with("[ERROR] conflicting definitions of Allowance.amount apply at the same time\n"), "{err}");
    assert!(err.contains("--> conflict.catala_en:9:3") && err.contains("--> conflict.catala_en:10:3"), "{err}");
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["frobnicate"],
        vec!["interpret", "conflict.catala_en"],
        vec!["emit", "conflict.catala_en", "--stage", "assembly"],
        vec!["interpret", "conflict.catala_en", "--scope", "Allowance", "--bind", "age"],
        vec!["typecheck", "does_not_exist.catala_en"],
    ] {
        let o = legalc(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn semantic_errors_exit_1() {
    for args in [
        vec!["interpret", "conflict.catala_en", "--scope", "Nope"],
        vec!["interpret", "conflict.catala_en", "--scope", "Allowance", "--bind", "age=true"],
        vec!["interpret", "conflict.catala_en", "--scope", "Allowance", "--bind", "height=3"],
        vec!["interpret", "conflict.catala_en", "--scope", "Allowance", "--bind", "Other.age=3"],
    ] {
        let o = legalc(&args);
        assert_eq!(code(&o), 1, "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).starts_with("[ERROR] "), "{args:?}");
    }
}

#[test]
fn binding_errors_point_into_the_binding() {
    let o = legalc(&["interpret", "conflict.catala_en", "--scope", "Allowance", "--bind", "age=1 +"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("<bind age>"), "{}", stderr(&o));
}

#[test]
fn color_only_on_request() {
    let o = legalc(&["interpret", "conflict.catala_en", "--scope", "Allowance", "--bind", "age=70"]);
    assert!(!stderr(&o).contains('\x1b'));
}

#[test]
fn selftest_reports_agreement() {
    let o = legalc(&["selftest", "--n", "200", "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.starts_with("200/200 agree\n200/200 translations preserve types\n"), "{out}");
}

#[test]
fn symbol_map_is_written_next_to_the_module() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s121.py");
    let o = legalc(&["transpile", "section121.catala_en", "--out", out.to_str().unwrap(), "--emit", "symbol-map"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let map = std::fs::read_to_string(dir.path().join("s121.symbols.json")).unwrap();
    for key in ["\"scopes\"", "\"structures\"", "\"enumerations\"", "\"Section121SinglePerson\"", "\"version\""] {
        assert!(map.contains(key), "{key} missing from {map}");
    }
}

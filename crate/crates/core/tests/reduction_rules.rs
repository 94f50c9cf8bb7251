mod rules;

use legalc_core::dcalc::{self, build::*, Program};
use rules::*;

#[test]
fn every_rule_has_a_passing_witness() {
    let failures: Vec<String> = ALL.iter().filter_map(|r| witness(*r).err()).collect();
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn empty_is_not_caught_by_a_regular_context() {
    // The inner default steps to ∅, which D-ContextEmptyError lifts
    // through the application in the same step.
    let p = Program::default();
    let inner = d(vec![], bool(false), bool(true));
    let t = app(id_bool(), inner);
    let n = step(&p, &t);
    assert!(is_empty(&n), "{}", dcalc::print(&n));
}

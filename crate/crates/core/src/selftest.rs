//! Differential harness: generated default-calculus terms are evaluated
//! directly and through the translation, and the outcomes compared.

use std::collections::BTreeSet;
use std::fmt;

use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dcalc::{self, EvalConfig, EvalError};
use crate::dcalc_to_lcalc::{check_simulation, check_type_preservation, Verdict};
use crate::gen;
use crate::value::{Name, Outcome};

pub const STEP_BUDGET: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FailureKind {
    IllTyped,
    Preservation,
    TranslationTyping,
    Disagreement,
}

#[derive(Clone, Debug)]
pub struct Counterexample {
    pub index: u64,
    pub kind: FailureKind,
    pub term: String,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub total: u64,
    pub agree: u64,
    pub types_preserved: u64,
    pub values: u64,
    pub empties: u64,
    pub conflicts: u64,
    pub faults: u64,
    /// Terms with defaults nested three or more deep.
    pub deep_defaults: u64,
    pub constructors: BTreeSet<Name>,
    pub failures: Vec<Counterexample>,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.failures.is_empty() && self.agree == self.total && self.types_preserved == self.total
    }

    fn merge(mut self, other: Report) -> Report {
        self.total += other.total;
        self.agree += other.agree;
        self.types_preserved += other.types_preserved;
        self.values += other.values;
        self.empties += other.empties;
        self.conflicts += other.conflicts;
        self.faults += other.faults;
        self.deep_defaults += other.deep_defaults;
        self.constructors.extend(other.constructors);
        self.failures.extend(other.failures);
        self.failures.sort_by_key(|c| c.index);
        self
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}/{} agree", self.agree, self.total)?;
        writeln!(f, "{}/{} translations preserve types", self.types_preserved, self.total)?;
        writeln!(
            f,
            "outcomes: {} values, {} ∅, {} ⊛, {} arithmetic faults; {} terms with defaults nested 3+ deep",
            self.values, self.empties, self.conflicts, self.faults, self.deep_defaults
        )?;
        for c in self.failures.iter().take(5) {
            writeln!(f, "counterexample #{} ({:?}): {}\n  term: {}", c.index, c.kind, c.detail, c.term)?;
        }
        Ok(())
    }
}

/// Seed of the `i`-th term, so that runs are reproducible regardless of
/// scheduling.
pub fn term_seed(seed: u64, i: u64) -> u64 {
    seed ^ i.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17)
}

pub fn check_one(seed: u64, i: u64) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(term_seed(seed, i));
    let (t, ty) = gen::generate(&mut rng, gen::MAX_DEPTH);
    let p = gen::program();
    let mut r = Report {
        total: 1,
        ..Report::default()
    };
    gen::constructor_names(&t, &mut r.constructors);
    if gen::default_depth(&t) >= 3 {
        r.deep_defaults = 1;
    }
    let fail = |r: &mut Report, kind, detail: String| {
        r.failures.push(Counterexample {
            index: i,
            kind,
            term: dcalc::print(&t).replace('\n', " "),
            detail,
        })
    };
    if let Err(e) = dcalc::check(&p, &IndexMap::new(), &t, &ty) {
        fail(&mut r, FailureKind::IllTyped, e.to_string());
        return r;
    }
    match check_type_preservation(&p, &t, &ty) {
        Ok(()) => r.types_preserved = 1,
        Err(e) => fail(&mut r, FailureKind::TranslationTyping, e),
    }
    let cfg = EvalConfig {
        max_steps: STEP_BUDGET,
        check_preservation: Some(ty.clone()),
    };
    match check_simulation(&p, &t, &cfg) {
        Verdict::Agree(o) => {
            r.agree = 1;
            match o {
                Outcome::Value(_) => r.values = 1,
                Outcome::Empty => r.empties = 1,
                Outcome::Conflict => r.conflicts = 1,
            }
        }
        Verdict::AgreeFault => {
            r.agree = 1;
            r.faults = 1;
        }
        Verdict::Disagree { source, target } => {
            let kind = if source.contains("type not preserved") {
                FailureKind::Preservation
            } else {
                FailureKind::Disagreement
            };
            fail(&mut r, kind, format!("default calculus: {source}; lambda calculus: {target}"));
        }
    }
    r
}

/// Runs the harness on `n` terms in parallel.
pub fn run(n: u64, seed: u64) -> Report {
    (0..n)
        .into_par_iter()
        .map(|i| check_one(seed, i))
        .reduce(Report::default, Report::merge)
}

/// Evaluation errors other than ∅/⊛ outcomes, for diagnostics.
pub fn describe(e: &EvalError) -> String {
    e.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_agrees() {
        let r = run(300, 42);
        assert!(r.ok(), "{r}");
        assert!(r.deep_defaults > 0);
        assert!(r.conflicts > 0 && r.empties > 0 && r.values > 0, "{r}");
    }
}

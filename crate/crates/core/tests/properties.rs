use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use legalc_core::dcalc::{self, build, EvalConfig, EvalError, Kind, Term};
use legalc_core::dcalc_to_lcalc::{self, Verdict};
use legalc_core::error::ErrorKind;
use legalc_core::gen;
use legalc_core::literate;
use legalc_core::pipeline;
use legalc_core::value::{Lit, Outcome, Type, Value};

fn generated(seed: u64) -> (Term, Type) {
    gen::generate(&mut ChaCha8Rng::seed_from_u64(seed), gen::MAX_DEPTH)
}

fn cfg(ty: &Type) -> EvalConfig {
    EvalConfig {
        max_steps: 1_000_000,
        check_preservation: Some(ty.clone()),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    /// Well-typed terms reduce to a value or an error term, keeping their
    /// type at every step.
    #[test]
    fn progress_and_preservation(seed in any::<u64>()) {
        let (t, ty) = generated(seed);
        let p = gen::program();
        prop_assert!(dcalc::check(&p, &Default::default(), &t, &ty).is_ok());
        match dcalc::eval(&p, &t, &cfg(&ty)) {
            Ok(v) => prop_assert!(v.is_value(), "stopped on {}", dcalc::print(&v)),
            Err(EvalError::Fault { .. }) => {}
            Err(e) => prop_assert!(false, "{e} on {}", dcalc::print(&t)),
        }
    }

    #[test]
    fn evaluation_is_deterministic(seed in any::<u64>()) {
        let (t, ty) = generated(seed);
        let p = gen::program();
        let a = dcalc::eval(&p, &t, &cfg(&ty)).map(|v| dcalc::print(&v));
        let b = dcalc::eval(&p, &t, &cfg(&ty)).map(|v| dcalc::print(&v));
        prop_assert_eq!(a, b);
        let (lp, lt) = dcalc_to_lcalc::translate_with(&p, &t);
        let a = legalc_core::lcalc::outcome(legalc_core::lcalc::eval(&lp, &lt, 1_000_000)).map_err(|e| e.to_string());
        let b = legalc_core::lcalc::outcome(legalc_core::lcalc::eval(&lp, &lt, 1_000_000)).map_err(|e| e.to_string());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn translation_agrees_and_preserves_types(seed in any::<u64>()) {
        let (t, ty) = generated(seed);
        let p = gen::program();
        prop_assert!(dcalc_to_lcalc::check_type_preservation(&p, &t, &ty).is_ok());
        let v = dcalc_to_lcalc::check_simulation(&p, &t, &cfg(&ty));
        prop_assert!(!matches!(v, Verdict::Disagree { .. }), "{v:?}");
    }

    /// Reassembling the blocks gives back the input byte for byte.
    #[test]
    fn literate_round_trip(
        lines in prop::collection::vec(
            prop::sample::select(vec![
                "# Title", "## Section (a)", "### (1)", "#no heading", "Some law text.", "",
                "```catala", "```", "```python", "  definition x equals 1", "```catala ",
            ]),
            0..24,
        ),
        crlf in any::<bool>(),
        final_newline in any::<bool>(),
    ) {
        let eol = if crlf { "\r\n" } else { "\n" };
        let mut text = lines.join(eol);
        if final_newline && !text.is_empty() {
            text.push_str(eol);
        }
        if let Ok(doc) = literate::extract_blocks("t.catala_en", &text) {
            prop_assert_eq!(doc.reassemble(), text);
        }
    }
}

// ---------------------------------------------------------------------------
// Exception trees: the desugared program resolves like the tree it states.
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
enum Res {
    Val(i64),
    Empty,
    Conflict,
}

/// Direct evaluation of a prioritized tree: children are exceptions to
/// their parent.
fn resolve(k: usize, parents: &[Option<usize>], conds: &[bool]) -> Res {
    let mut live = Vec::new();
    for c in (0..parents.len()).filter(|&c| parents[c] == Some(k)) {
        match resolve(c, parents, conds) {
            Res::Conflict => return Res::Conflict,
            Res::Empty => {}
            v => live.push(v),
        }
    }
    match live.len() {
        0 if conds[k] => Res::Val(k as i64),
        0 => Res::Empty,
        1 => live.pop().unwrap(),
        _ => Res::Conflict,
    }
}

fn tree_program(parents: &[Option<usize>], conds: &[bool], order: &[usize]) -> String {
    let mut s = String::from("# Tree\n\n```catala\ndeclaration scope T:\n  context x content integer\n\nscope T:\n");
    for &k in order {
        let exc = match parents[k] {
            Some(p) => format!("exception l{p} "),
            None => String::new(),
        };
        s.push_str(&format!(
            "  label l{k} {exc}definition x under condition {} consequence equals {k}\n",
            conds[k]
        ));
    }
    s.push_str("```\n");
    s
}

fn tree() -> impl Strategy<Value = (Vec<Option<usize>>, Vec<bool>, Vec<usize>)> {
    (1usize..8).prop_flat_map(|n| {
        let parents = (1..n).map(|k| (0..k).prop_map(Some).boxed()).collect::<Vec<_>>();
        (
            parents.prop_map(|ps| std::iter::once(None).chain(ps).collect::<Vec<_>>()),
            prop::collection::vec(any::<bool>(), n),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn exception_trees_resolve_by_priority((parents, conds, order) in tree()) {
        let src = tree_program(&parents, &conds, &order);
        let c = pipeline::compile("t.catala_en", &src).expect("tree compiles");
        let got = match pipeline::interpret(&c, "T", &[], false) {
            Ok(r) => match &r.results[0].1 {
                Value::Lit(Lit::Int(i)) => Res::Val(*i),
                v => panic!("unexpected value {v}"),
            },
            Err((e, _)) if e.kind == ErrorKind::Conflict => Res::Conflict,
            Err((e, _)) if e.kind == ErrorKind::NoApplicableDefinition => Res::Empty,
            Err((e, _)) => panic!("{e:?}"),
        };
        prop_assert_eq!(got, resolve(0, &parents, &conds), "{}", src);
        // The printed tree does not depend on the textual order.
        let mut sorted = order.clone();
        sorted.sort();
        let a = pipeline::desugar_only("t.catala_en", &src).unwrap();
        let b = pipeline::desugar_only("t.catala_en", &tree_program(&parents, &conds, &sorted)).unwrap();
        let edges = |ds: &[legalc_core::desugar::DesugaredScope]| {
            let text = legalc_core::desugar::print_desugared(ds);
            let mut e: Vec<String> = text
                .lines()
                .filter_map(|l| l.trim().strip_prefix("def x "))
                .map(|l| l.split(" at ").next().unwrap().to_owned())
                .collect();
            e.sort();
            e
        };
        prop_assert_eq!(edges(&a), edges(&b));
    }
}

// ---------------------------------------------------------------------------
// Dependency sort: any textual order of a DAG of definitions computes the
// same values.
// ---------------------------------------------------------------------------

fn dag() -> impl Strategy<Value = (Vec<Vec<usize>>, Vec<usize>)> {
    (1usize..12).prop_flat_map(|n| {
        let deps = (0..n)
            .map(|k| prop::sample::subsequence((0..k).collect::<Vec<_>>(), 0..=k.min(3)).boxed())
            .collect::<Vec<_>>();
        (deps, Just((0..n).collect::<Vec<_>>()).prop_shuffle())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn sort_is_invariant_under_permutation((deps, order) in dag()) {
        let n = deps.len();
        let mut s = String::from("# Dag\n\n```catala\ndeclaration scope D:\n");
        for k in 0..n {
            s.push_str(&format!("  context v{k} content integer\n"));
        }
        s.push_str("\nscope D:\n");
        for &k in &order {
            let rhs: Vec<String> = std::iter::once("1".to_owned()).chain(deps[k].iter().map(|d| format!("v{d}"))).collect();
            s.push_str(&format!("  definition v{k} equals {}\n", rhs.join(" + ")));
        }
        s.push_str("```\n");
        let mut expected = vec![0i64; n];
        for k in 0..n {
            expected[k] = 1 + deps[k].iter().map(|&d| expected[d]).sum::<i64>();
        }
        let c = pipeline::compile("d.catala_en", &s).expect("dag compiles");
        let r = pipeline::interpret(&c, "D", &[], false).map_err(|(e, _)| e.to_string()).unwrap();
        let got: BTreeMap<String, Value> = r.results.into_iter().collect();
        for (k, v) in expected.iter().enumerate() {
            prop_assert_eq!(&got[&format!("v{k}")], &Value::Lit(Lit::Int(*v)));
        }
    }
}

// ---------------------------------------------------------------------------
// Exhaustive exception lists.
// ---------------------------------------------------------------------------

/// Every exception list of length at most 4 over {∅, ⊛, true, false},
/// wrapped in `⟨ es | false :- false ⟩`: both interpreters agree with the
/// counting oracle.
#[test]
fn exception_lists_up_to_four() {
    let atoms = || vec![build::empty(), build::conflict(), build::bool(true), build::bool(false)];
    let p = dcalc::Program::default();
    let mut cases = 0;
    for len in 0..=4u32 {
        for code in 0..4usize.pow(len) {
            let picks: Vec<usize> = (0..len).map(|i| (code / 4usize.pow(i)) % 4).collect();
            let es: Vec<Term> = picks.iter().map(|&k| atoms()[k].clone()).collect();
            let live: Vec<bool> = picks.iter().filter(|&&k| k >= 2).map(|&k| k == 2).collect();
            let expected = if picks.contains(&1) || live.len() >= 2 {
                Outcome::Conflict
            } else if let [b] = live[..] {
                Outcome::Value(Value::Lit(Lit::Bool(b)))
            } else {
                Outcome::Empty
            };
            let t = build::default(es, build::bool(false), build::bool(false), Type::Bool);
            let got = dcalc::outcome(&dcalc::eval(&p, &t, &EvalConfig::default()).unwrap());
            assert_eq!(got, expected, "{}", dcalc::print(&t));
            assert_eq!(
                dcalc_to_lcalc::check_simulation(&p, &t, &EvalConfig::default()),
                Verdict::Agree(expected),
                "{}",
                dcalc::print(&t)
            );
            cases += 1;
        }
    }
    assert_eq!(cases, 1 + 4 + 16 + 64 + 256);
}

// ---------------------------------------------------------------------------
// Calling convention.
// ---------------------------------------------------------------------------

/// Every argument passed to a scope is a thunk: `λ(_: unit). e`, or a
/// variable bound at a `unit → τ` type.
#[test]
fn scope_arguments_are_thunks() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../cli/tests/corpus/section121.catala_en");
    let text = std::fs::read_to_string(path).unwrap();
    let c = pipeline::compile("section121.catala_en", &text).unwrap();
    let mut thunk_vars = std::collections::HashSet::new();
    for t in c.program.tops.values() {
        dcalc::map_term(t, &mut |t| {
            if let Kind::Let(x, Type::Arrow(a, _), _, _) = &t.kind {
                if **a == Type::Unit {
                    thunk_vars.insert(x.clone());
                }
            }
            None
        });
    }
    let mut calls = 0;
    for t in c.program.tops.values() {
        dcalc::map_term(t, &mut |t| {
            if let Kind::App(f, a) = &t.kind {
                if let (Kind::TopName(_), Kind::Tuple(args)) = (&f.kind, &a.kind) {
                    calls += 1;
                    for arg in args {
                        let ok = match &arg.kind {
                            Kind::Lam(_, Type::Unit, _) => true,
                            Kind::Var(x) => thunk_vars.contains(x),
                            _ => false,
                        };
                        assert!(ok, "non-thunk argument {}", dcalc::print(arg));
                    }
                }
            }
            None
        });
    }
    assert_eq!(calls, 2, "one call per sub-scope of Section121Return");
}

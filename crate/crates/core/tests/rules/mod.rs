//! Witnesses for each reduction rule and error-typing rule of the default
//! calculus. `witness` matches on every `Rule`, so adding a rule without a
//! witness does not compile.

use legalc_core::dcalc::{self, build::*, Kind, Machine, Program, Term, Var};
use legalc_core::value::Type;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    Context,
    Beta,
    ContextConflictError,
    ContextEmptyError,
    DefaultTrueNoExceptions,
    DefaultFalseNoExceptions,
    DefaultOneException,
    DefaultExceptionsConflict,
    ConflictErrorTyping,
    EmptyErrorTyping,
}

pub const ALL: [Rule; 10] = [
    Rule::Context,
    Rule::Beta,
    Rule::ContextConflictError,
    Rule::ContextEmptyError,
    Rule::DefaultTrueNoExceptions,
    Rule::DefaultFalseNoExceptions,
    Rule::DefaultOneException,
    Rule::DefaultExceptionsConflict,
    Rule::ConflictErrorTyping,
    Rule::EmptyErrorTyping,
];

pub fn step(p: &Program, t: &Term) -> Term {
    Machine { program: p, trace: None }.step(t).unwrap().expect("term is not a value")
}

pub fn id_bool() -> Term {
    let x = Var::fresh("x");
    lam(&x, Type::Bool, var(&x))
}

pub fn d(exceptions: Vec<Term>, j: Term, c: Term) -> Term {
    default(exceptions, j, c, Type::Bool)
}

pub fn is_empty(t: &Term) -> bool {
    matches!(t.kind, Kind::Empty(_))
}

fn is_conflict(t: &Term) -> bool {
    matches!(t.kind, Kind::Conflict(_))
}

fn shows(t: &Term, s: &str) -> bool {
    dcalc::print(t) == s
}

/// Checks the rule on a few one-step instances; returns a description of
/// the first failure.
pub fn witness(rule: Rule) -> Result<(), String> {
    let p = Program::default();
    let check = |ok: bool, what: &str| if ok { Ok(()) } else { Err(format!("{rule:?}: {what}")) };
    match rule {
        Rule::Context => {
            // C_λ argument position, then an exception slot of C.
            let t = app(id_bool(), app(id_bool(), bool(true)));
            let n = step(&p, &t);
            check(matches!(&n.kind, Kind::App(_, a) if shows(a, "true")), "argument reduced in place")?;
            let t = d(vec![app(id_bool(), bool(false))], bool(true), bool(true));
            let n = step(&p, &t);
            check(
                matches!(&n.kind, Kind::Default(dd) if shows(&dd.exceptions[0], "false")),
                "exception reduced in its slot",
            )?;
            // ∅ produced inside an exception slot stays there.
            let t = d(vec![app(id_bool(), empty())], bool(true), bool(true));
            let n = step(&p, &t);
            check(matches!(&n.kind, Kind::Default(dd) if is_empty(&dd.exceptions[0])), "∅ kept in its slot")
        }
        Rule::Beta => {
            let t = app(id_bool(), bool(false));
            check(shows(&step(&p, &t), "false"), "(λx.x) false → false")
        }
        Rule::ContextConflictError => {
            let t = app(id_bool(), conflict());
            check(is_conflict(&step(&p, &t)), "⊛ in C_λ")?;
            let t = d(vec![empty(), conflict()], bool(true), bool(true));
            check(is_conflict(&step(&p, &t)), "⊛ in an exception slot")?;
            let t = d(vec![d(vec![conflict()], bool(true), bool(true))], bool(true), bool(true));
            check(is_conflict(&step(&p, &t)), "⊛ produced under an exception slot")
        }
        Rule::ContextEmptyError => {
            let t = app(id_bool(), empty());
            check(is_empty(&step(&p, &t)), "∅ in argument position")?;
            let t = app(empty(), bool(true));
            check(is_empty(&step(&p, &t)), "∅ in function position")?;
            let t = d(vec![], empty(), bool(true));
            check(is_empty(&step(&p, &t)), "∅ in the justification")?;
            let t = d(vec![], bool(true), empty());
            check(is_empty(&step(&p, &t)), "∅ in the consequence")
        }
        Rule::DefaultTrueNoExceptions => {
            let t = d(vec![empty(), empty()], bool(true), bool(false));
            check(shows(&step(&p, &t), "false"), "⟨∅, ∅ | true :- false⟩ → false")?;
            let t = d(vec![], bool(true), bool(true));
            check(shows(&step(&p, &t), "true"), "⟨ | true :- true⟩ → true")
        }
        Rule::DefaultFalseNoExceptions => {
            // The consequence is not evaluated.
            let t = d(vec![empty()], bool(false), conflict());
            check(is_empty(&step(&p, &t)), "⟨∅ | false :- ⊛⟩ → ∅")
        }
        Rule::DefaultOneException => {
            // Neither justification nor consequence is evaluated.
            let t = d(vec![empty(), bool(false), empty()], conflict(), conflict());
            check(shows(&step(&p, &t), "false"), "⟨∅, false, ∅ | ⊛ :- ⊛⟩ → false")
        }
        Rule::DefaultExceptionsConflict => {
            let t = d(vec![bool(true), empty(), bool(true)], bool(true), bool(true));
            check(is_conflict(&step(&p, &t)), "two live exceptions, even equal ones")?;
            let t = d(vec![bool(true), bool(false)], bool(false), bool(false));
            check(is_conflict(&step(&p, &t)), "two live exceptions with a false justification")
        }
        Rule::ConflictErrorTyping | Rule::EmptyErrorTyping => {
            let e = if rule == Rule::EmptyErrorTyping { empty() } else { conflict() };
            let tops = Default::default();
            for ty in [Type::Bool, Type::Unit, Type::Arrow(Box::new(Type::Bool), Box::new(Type::Bool))] {
                check(dcalc::check(&p, &tops, &e, &ty).is_ok(), &format!("error term has type {ty}"))?;
            }
            // The polymorphic error term fits wherever its context needs.
            let t = app(id_bool(), e.clone());
            check(dcalc::typecheck(&p, &tops, &t).ok() == Some(Type::Bool), "error as an argument")?;
            let t = d(vec![e], bool(true), bool(false));
            check(dcalc::typecheck(&p, &tops, &t).ok() == Some(Type::Bool), "error as an exception")
        }
    }
}

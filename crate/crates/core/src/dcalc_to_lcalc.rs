//! Translation of the default calculus to the lambda calculus with
//! exceptions, and the executable checks of its correctness: type
//! preservation and agreement of the two interpreters.

use std::collections::BTreeMap;
use std::sync::Arc;

use indexmap::IndexMap;

use crate::dcalc::{self, DefaultMeta, ErrorOrigin, EvalConfig, EvalError, Kind, Program, Term, Var};
use crate::error::ErrorKind;
use crate::lcalc::{self, mk, Exn, LError, LKind, LProgram, LTerm};
use crate::value::{Name, Outcome, Type};

/// Name of the `process_exceptions` instance at element type `ty`.
pub fn helper_name(ty: &Type) -> Name {
    format!("process_exceptions__{}", ty.mangle()).into()
}

/// ```text
/// λ(l: list (unit → τ)).
///   fold_left (λ(a: option τ). λ(e: unit → τ).
///       let e' : option τ = try Some (e ()) with ∅ -> None in
///       match a with
///       | None -> e'
///       | Some a' -> (match e' with None -> Some a' | Some _ -> raise ⊛))
///     None l
/// ```
pub fn process_exceptions(ty: &Type) -> LTerm {
    let opt = Type::Option(Box::new(ty.clone()));
    let thunk = Type::thunk(ty.clone());
    let l = Var::fresh("l");
    let a = Var::fresh("a");
    let e = Var::fresh("e");
    let e2 = Var::fresh("e'");
    let a2 = Var::fresh("a'");
    let ignored = Var::fresh("_");
    let var = |v: &Var| mk(LKind::Var(v.clone()), None);
    let none = || mk(LKind::NoneC(ty.clone()), None);
    let forced = mk(LKind::App(var(&e), mk(LKind::Lit(crate::value::Lit::Unit), None)), None);
    let attempt = mk(LKind::Try(mk(LKind::SomeC(forced), None), Exn::Empty, none()), None);
    let second = mk(
        LKind::MatchOpt(
            var(&e2),
            mk(LKind::SomeC(var(&a2)), None),
            ignored,
            mk(LKind::Raise(Exn::Conflict, None), None),
        ),
        None,
    );
    let step = mk(LKind::MatchOpt(var(&a), var(&e2), a2.clone(), second), None);
    let body = mk(LKind::Let(e2.clone(), opt.clone(), attempt, step), None);
    let f = mk(LKind::Lam(a, opt, mk(LKind::Lam(e, thunk.clone(), body), None)), None);
    let fold = mk(LKind::Fold(f, none(), var(&l)), None);
    mk(LKind::Lam(l, Type::collection(thunk), fold), None)
}

/// Translation state: the `process_exceptions` instances in use.
#[derive(Default)]
pub struct Translator {
    pub helpers: BTreeMap<Name, Type>,
}

fn no_default_applies(meta: &Option<Arc<DefaultMeta>>) -> Option<Arc<ErrorOrigin>> {
    meta.as_ref().map(|m| {
        Arc::new(ErrorOrigin {
            kind: ErrorKind::NoApplicableDefinition,
            message: format!("no definition of {} applies", m.variable),
            positions: vec![m.pos.clone()],
        })
    })
}

impl Translator {
    pub fn translate(&mut self, t: &Term) -> LTerm {
        let pos = t.pos.clone();
        let k = match &t.kind {
            Kind::Var(v) => LKind::Var(v.clone()),
            Kind::TopName(n) => LKind::TopName(n.clone()),
            Kind::Lit(l) => LKind::Lit(l.clone()),
            Kind::Lam(x, ty, b) => LKind::Lam(x.clone(), ty.clone(), self.translate(b)),
            Kind::App(f, a) => LKind::App(self.translate(f), self.translate(a)),
            Kind::Empty(o) => LKind::Raise(Exn::Empty, o.clone()),
            Kind::Conflict(o) => LKind::Raise(Exn::Conflict, o.clone()),
            Kind::Default(d) => {
                let j = self.translate(&d.justification);
                let c = self.translate(&d.consequence);
                let base = mk(
                    LKind::If(j, c, mk(LKind::Raise(Exn::Empty, no_default_applies(&d.meta)), pos.clone())),
                    pos.clone(),
                );
                if d.exceptions.is_empty() {
                    return base;
                }
                let name = helper_name(&d.ty);
                self.helpers.insert(name.clone(), d.ty.clone());
                let thunks = d
                    .exceptions
                    .iter()
                    .map(|e| {
                        let p = e.pos.clone();
                        mk(LKind::Lam(Var::fresh("_"), Type::Unit, self.translate(e)), p)
                    })
                    .collect();
                let call = mk(
                    LKind::App(
                        mk(LKind::TopName(name), None),
                        mk(LKind::Array(Type::thunk(d.ty.clone()), thunks), None),
                    ),
                    pos.clone(),
                );
                let r = Var::fresh("r");
                let x = Var::fresh("x");
                let m = mk(
                    LKind::MatchOpt(mk(LKind::Var(r.clone()), None), base, x.clone(), mk(LKind::Var(x), None)),
                    pos.clone(),
                );
                LKind::Let(r, Type::Option(Box::new(d.ty.clone())), call, m)
            }
            Kind::If(c, a, b) => LKind::If(self.translate(c), self.translate(a), self.translate(b)),
            Kind::Let(x, ty, a, b) => LKind::Let(x.clone(), ty.clone(), self.translate(a), self.translate(b)),
            Kind::Tuple(es) => LKind::Tuple(es.iter().map(|e| self.translate(e)).collect()),
            Kind::TupleGet(e, i) => LKind::TupleGet(self.translate(e), *i),
            Kind::Struct(n, fs) => LKind::Struct(n.clone(), fs.iter().map(|(f, e)| (f.clone(), self.translate(e))).collect()),
            Kind::StructGet(e, f) => LKind::StructGet(self.translate(e), f.clone()),
            Kind::Inject(en, c, e) => LKind::Inject(en.clone(), c.clone(), self.translate(e)),
            Kind::Match(e, en, arms) => LKind::Match(
                self.translate(e),
                en.clone(),
                arms.iter().map(|(c, x, b)| (c.clone(), x.clone(), self.translate(b))).collect(),
            ),
            Kind::Array(ty, es) => LKind::Array(ty.clone(), es.iter().map(|e| self.translate(e)).collect()),
            Kind::Fold(f, a, l) => LKind::Fold(self.translate(f), self.translate(a), self.translate(l)),
            Kind::Binop(op, a, b) => LKind::Binop(*op, self.translate(a), self.translate(b)),
            Kind::Unop(op, a) => LKind::Unop(*op, self.translate(a)),
        };
        mk(k, pos)
    }

    /// The helper definitions collected so far, sorted by name.
    pub fn helper_tops(&self) -> IndexMap<Name, LTerm> {
        self.helpers.iter().map(|(n, ty)| (n.clone(), process_exceptions(ty))).collect()
    }
}

/// Translates a closed term on its own.
pub fn translate(t: &Term) -> (LTerm, IndexMap<Name, LTerm>) {
    let mut tr = Translator::default();
    let l = tr.translate(t);
    (l, tr.helper_tops())
}

/// Translates a program; helpers come first.
pub fn translate_program(p: &Program) -> LProgram {
    let mut tr = Translator::default();
    let scopes: Vec<(Name, LTerm)> = p.tops.iter().map(|(n, t)| (n.clone(), tr.translate(t))).collect();
    let mut tops = tr.helper_tops();
    tops.extend(scopes);
    LProgram {
        decls: p.decls.clone(),
        tops,
    }
}

/// Translates a closed term against a program and returns the combined
/// target program and term.
pub fn translate_with(p: &Program, t: &Term) -> (LProgram, LTerm) {
    let mut tr = Translator::default();
    let scopes: Vec<(Name, LTerm)> = p.tops.iter().map(|(n, t)| (n.clone(), tr.translate(t))).collect();
    let lt = tr.translate(t);
    let mut tops = tr.helper_tops();
    tops.extend(scopes);
    (
        LProgram {
            decls: p.decls.clone(),
            tops,
        },
        lt,
    )
}

/// The translation of `t : ty` has type `ty` in the target calculus.
pub fn check_type_preservation(p: &Program, t: &Term, ty: &Type) -> Result<(), String> {
    let (lp, lt) = translate_with(p, t);
    let tops = lcalc::type_program(&lp).map_err(|e| format!("translated program is ill-typed: {e}"))?;
    lcalc::LTypeEnv::new(&lp.decls, &tops)
        .check(&lt, ty)
        .map_err(|e| format!("translated term does not have type {ty}: {e}\n  term: {}", dcalc::print(t)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Agree(Outcome),
    /// Both sides hit the same arithmetic fault.
    AgreeFault,
    Disagree { source: String, target: String },
}

/// Evaluates `t` with both interpreters and compares the outcomes: values
/// must be identical, ∅ must map to an uncaught ∅ and ⊛ to an uncaught ⊛.
pub fn check_simulation(p: &Program, t: &Term, cfg: &EvalConfig) -> Verdict {
    let src = dcalc::eval(p, t, cfg).map(|v| dcalc::outcome(&v));
    let (lp, lt) = translate_with(p, t);
    let tgt = lcalc::outcome(lcalc::eval(&lp, &lt, cfg.max_steps.saturating_mul(4)));
    match (src, tgt) {
        (Ok(a), Ok(b)) if a == b => Verdict::Agree(a),
        (Err(EvalError::Fault { .. }), Err(LError::Fault { .. })) => Verdict::AgreeFault,
        (a, b) => Verdict::Disagree {
            source: match a {
                Ok(o) => o.to_string(),
                Err(e) => format!("error: {e}"),
            },
            target: match b {
                Ok(o) => o.to_string(),
                Err(e) => format!("error: {e}"),
            },
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dcalc::build::*;
    use crate::value::{Lit, Value};

    fn agree(t: &Term) -> Outcome {
        let p = Program::default();
        match check_simulation(&p, t, &EvalConfig::default()) {
            Verdict::Agree(o) => o,
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn spec_examples() {
        let t = default(vec![empty(), int(5), empty()], bool(true), int(0), Type::Int);
        assert_eq!(agree(&t), Outcome::Value(Value::Lit(Lit::Int(5))));
        let t = default(vec![int(3), int(4)], bool(true), int(0), Type::Int);
        assert_eq!(agree(&t), Outcome::Conflict);
        let t = default(vec![empty()], bool(false), int(0), Type::Int);
        assert_eq!(agree(&t), Outcome::Empty);
    }

    #[test]
    fn fast_path_shape() {
        let (l, helpers) = translate(&default(vec![], bool(true), bool(false), Type::Bool));
        assert!(helpers.is_empty());
        assert_eq!(lcalc::print(&l), "if true then false else raise ∅");
        let (l, _) = translate(&empty());
        assert_eq!(lcalc::print(&l), "raise ∅");
    }

    #[test]
    fn preservation_on_small_terms() {
        let p = Program::default();
        check_type_preservation(&p, &default(vec![], bool(true), bool(false), Type::Bool), &Type::Bool).unwrap();
        check_type_preservation(&p, &empty(), &Type::Money).unwrap();
        let t = default(vec![int(1), empty()], bool(true), int(0), Type::Int);
        check_type_preservation(&p, &t, &Type::Int).unwrap();
    }

    #[test]
    fn helper_types() {
        let decls = crate::value::TypeDecls::default();
        let tops = IndexMap::new();
        let ty = lcalc::LTypeEnv::new(&decls, &tops).tc(&process_exceptions(&Type::Int), None).unwrap();
        assert_eq!(
            ty,
            Some(Type::arrow(
                Type::collection(Type::thunk(Type::Int)),
                Type::Option(Box::new(Type::Int))
            ))
        );
    }
}

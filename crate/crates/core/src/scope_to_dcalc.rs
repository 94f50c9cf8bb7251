//! Compilation of sorted scopes to default-calculus functions. Each scope
//! becomes a function from a tuple of thunked overrides (one per local
//! variable) to the tuple of its local variables' values.

use std::collections::HashMap;
use std::sync::Arc;

use indexmap::IndexMap;

use crate::dcalc::{self, mk, DefaultMeta, DefaultRole, DefaultTerm, ErrorOrigin, Kind, Program, Term, Var};
use crate::error::ErrorKind;
use crate::pos::Pos;
use crate::scopelang::{Atom, Location, Scope, ScopeProgram};
use crate::value::{Lit, Name, Type};

/// Types of a scope's locals, in declaration order.
pub fn signature(scope: &Scope) -> Vec<Type> {
    scope.vars.iter().map(|v| v.ty.clone()).collect()
}

/// `Tuple(unit -> τ_i) -> Tuple(τ_i)`
pub fn scope_type(scope: &Scope) -> Type {
    let tys = signature(scope);
    Type::arrow(Type::Tuple(tys.iter().cloned().map(Type::thunk).collect()), Type::Tuple(tys))
}

pub fn never_defined(variable: &str, pos: &Pos) -> Term {
    let origin = ErrorOrigin {
        kind: ErrorKind::NeverDefined,
        message: format!("variable {variable} was never defined"),
        positions: vec![pos.clone()],
    };
    dcalc::build::thunk(mk(Kind::Empty(Some(Arc::new(origin))), Some(pos.clone())))
}

/// Compilation state: the binding of each location, and whether it is
/// forced (in Δ) or still a thunk.
struct State {
    bindings: HashMap<Location, (Var, bool)>,
}

enum Binding {
    Let(Var, Type, Term),
}

fn unit() -> Term {
    mk(Kind::Lit(Lit::Unit), None)
}

impl State {
    /// F-In / F-NotIn: a forced location reads as its variable, an unforced
    /// one is forced on the spot.
    fn read(&self, loc: &Location, pos: Option<Pos>) -> Term {
        let (v, forced) = &self.bindings[loc];
        let var = mk(Kind::Var(v.clone()), pos.clone());
        if *forced {
            var
        } else {
            mk(Kind::App(var, unit()), pos)
        }
    }

    /// T-In / T-NotIn.
    fn thunk(&self, loc: &Location) -> Term {
        let (v, forced) = &self.bindings[loc];
        let var = mk(Kind::Var(v.clone()), None);
        if *forced {
            dcalc::build::thunk(var)
        } else {
            var
        }
    }
}

fn wrap(bindings: Vec<Binding>, body: Term) -> Term {
    bindings.into_iter().rev().fold(body, |acc, b| match b {
        Binding::Let(v, ty, e) => {
            let pos = e.pos.clone();
            mk(Kind::Let(v, ty, e, acc), pos)
        }
    })
}

/// C-Scope, with C-Def, C-Call and C-Empty for the atoms.
pub fn compile_scope(scope: &Scope, prog: &ScopeProgram) -> Term {
    let args = Var::fresh("args");
    let mut out = Vec::new();
    let mut st = State {
        bindings: HashMap::new(),
    };
    for (i, v) in scope.vars.iter().enumerate() {
        let x = Var::fresh(&v.name);
        let get = mk(Kind::TupleGet(mk(Kind::Var(args.clone()), None), i), None);
        out.push(Binding::Let(x.clone(), Type::thunk(v.ty.clone()), get));
        st.bindings.insert(Location::Var(v.name.clone()), (x, false));
    }
    // Every sub-scope variable starts out as a thunked ∅.
    for (i, sub) in scope.subs.iter().enumerate() {
        let callee = prog.scope(&sub.callee).expect("callee scopes are sorted first");
        for v in &callee.vars {
            let loc = Location::Sub(i, v.name.clone());
            let x = Var::fresh(&format!("{}.{}", sub.name, v.name));
            let label = format!("{}.{}.{}", scope.name, sub.name, v.name);
            out.push(Binding::Let(x.clone(), Type::thunk(v.ty.clone()), never_defined(&label, &v.pos)));
            st.bindings.insert(loc, (x, false));
        }
    }
    for atom in &scope.atoms {
        match atom {
            Atom::Def { loc, ty, default, pos } => compile_def(scope, &mut st, &mut out, loc, ty, default, pos),
            Atom::Call(i) => compile_call(scope, prog, &mut st, &mut out, *i),
        }
    }
    // C-Empty: force every local and return them.
    let result = scope
        .vars
        .iter()
        .map(|v| st.read(&Location::Var(v.name.clone()), Some(v.pos.clone())))
        .collect();
    let body = wrap(out, mk(Kind::Tuple(result), None));
    let arg_ty = match scope_type(scope) {
        Type::Arrow(a, _) => *a,
        _ => unreachable!(),
    };
    mk(Kind::Lam(args, arg_ty, body), Some(scope.pos.clone()))
}

/// C-Def: `let ℓ = <ℓ () | true :- e>`, where reads in `e` go through the
/// current bindings.
fn compile_def(scope: &Scope, st: &mut State, out: &mut Vec<Binding>, loc: &Location, ty: &Type, default: &Term, pos: &Pos) {
    let by_placeholder: HashMap<u32, Location> = scope.placeholders.iter().map(|(l, v)| (v.id, l.clone())).collect();
    let e = dcalc::map_term(default, &mut |t| match &t.kind {
        Kind::Var(v) => by_placeholder.get(&v.id).map(|l| st.read(l, t.pos.clone())),
        _ => None,
    });
    let (prev, forced) = st.bindings[loc].clone();
    debug_assert!(!forced, "a location is defined once");
    let override_slot = mk(Kind::App(mk(Kind::Var(prev), None), unit()), None);
    let wrapper = mk(
        Kind::Default(Box::new(DefaultTerm {
            exceptions: vec![override_slot],
            justification: mk(Kind::Lit(Lit::Bool(true)), None),
            consequence: e,
            ty: ty.clone(),
            meta: Some(Arc::new(DefaultMeta {
                variable: format!("{}.{}", scope.name, scope.location_name(loc)),
                role: DefaultRole::Override,
                pos: pos.clone(),
                headings: Vec::new(),
            })),
        })),
        Some(pos.clone()),
    );
    let x = Var::fresh(&scope.location_name(loc));
    out.push(Binding::Let(x.clone(), ty.clone(), wrapper));
    st.bindings.insert(loc.clone(), (x, true));
}

/// C-Call: `let tmp = S(thunks) in let S_n[x_i] = tmp.i`.
fn compile_call(scope: &Scope, prog: &ScopeProgram, st: &mut State, out: &mut Vec<Binding>, i: usize) {
    let sub = &scope.subs[i];
    let callee = prog.scope(&sub.callee).expect("callee scopes are sorted first");
    let locs: Vec<Location> = callee.vars.iter().map(|v| Location::Sub(i, v.name.clone())).collect();
    let thunks = locs.iter().map(|l| st.thunk(l)).collect();
    let tys = signature(callee);
    let tmp = Var::fresh(&sub.id);
    let call = mk(
        Kind::App(mk(Kind::TopName(callee.name.clone()), None), mk(Kind::Tuple(thunks), None)),
        Some(sub.pos.clone()),
    );
    out.push(Binding::Let(tmp.clone(), Type::Tuple(tys.clone()), call));
    for (k, (loc, ty)) in locs.into_iter().zip(tys).enumerate() {
        let x = Var::fresh(&scope.location_name(&loc));
        out.push(Binding::Let(x.clone(), ty, mk(Kind::TupleGet(mk(Kind::Var(tmp.clone()), None), k), None)));
        st.bindings.insert(loc, (x, true));
    }
}

pub fn compile_program(prog: &ScopeProgram) -> Program {
    let mut tops: IndexMap<Name, Term> = IndexMap::new();
    for s in &prog.scopes {
        tops.insert(s.name.clone(), compile_scope(s, prog));
    }
    Program {
        decls: prog.decls.clone(),
        tops,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dcalc::{eval, outcome, EvalConfig};
    use crate::desugar::desugar_program;
    use crate::literate::extract_blocks;
    use crate::parser::parse;
    use crate::scopelang::lower_program;
    use crate::value::{Outcome, Value};

    fn compile(src: &str) -> (ScopeProgram, Program) {
        let doc = extract_blocks("t.catala_en", &format!("```catala\n{src}```\n")).unwrap();
        let prog = parse(&doc).unwrap();
        let ds = desugar_program(&prog).unwrap();
        let sp = lower_program(&prog, &ds, Some(&doc)).unwrap();
        let p = compile_program(&sp);
        (sp, p)
    }

    fn call(p: &Program, sp: &ScopeProgram, scope: &str, args: Vec<Term>) -> Outcome {
        let t = mk(Kind::App(mk(Kind::TopName(scope.into()), None), mk(Kind::Tuple(args), None)), None);
        let tops = dcalc::type_program(p).unwrap();
        let ty = dcalc::typecheck(p, &tops, &t).unwrap();
        let cfg = EvalConfig {
            max_steps: 1_000_000,
            check_preservation: Some(ty),
        };
        let _ = sp;
        outcome(&eval(p, &t, &cfg).unwrap())
    }

    fn empty_thunk() -> Term {
        dcalc::build::thunk(dcalc::build::empty())
    }

    #[test]
    fn override_wins_over_local_definition() {
        let (sp, p) = compile("declaration scope A:\n context x content integer\nscope A:\n definition x equals 1\n");
        let v = call(&p, &sp, "A", vec![dcalc::build::thunk(dcalc::build::int(42))]);
        assert_eq!(v, Outcome::Value(Value::Tuple(vec![Value::Lit(Lit::Int(42))])));
        let v = call(&p, &sp, "A", vec![empty_thunk()]);
        assert_eq!(v, Outcome::Value(Value::Tuple(vec![Value::Lit(Lit::Int(1))])));
    }

    #[test]
    fn unset_input_is_empty() {
        let (sp, p) = compile("declaration scope A:\n context x content integer\n");
        assert_eq!(call(&p, &sp, "A", vec![empty_thunk()]), Outcome::Empty);
        let body = dcalc::print(&p.tops["A"]);
        assert!(body.ends_with("(x ())"), "{body}");
    }

    #[test]
    fn sub_scope_call() {
        let (sp, p) = compile(
            "declaration scope S:\n context input content integer\n context output content integer\n\
             declaration scope T:\n context y content integer\n context s scope S\n\
             scope S:\n definition output equals input + 1\n\
             scope T:\n definition s.input equals 41\n definition y equals s.output\n",
        );
        let v = call(&p, &sp, "T", vec![empty_thunk()]);
        assert_eq!(v, Outcome::Value(Value::Tuple(vec![Value::Lit(Lit::Int(42))])));
    }
}

//! Random generator of well-typed closed default-calculus terms, biased
//! towards deeply nested defaults and thunked defaults under λ.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dcalc::build::*;
use crate::dcalc::{mk, Kind, Program, Term, Var};
use crate::ops::{Op, UOp};
use crate::surface::OpKind;
use crate::value::{Name, Type, TypeDecls};

pub const MAX_DEPTH: u32 = 6;

pub fn pair() -> Type {
    Type::Struct("Pair".into())
}

pub fn opt() -> Type {
    Type::Enum("Opt".into())
}

/// `Pair { a: int, b: bool }` and `Opt = Nothing | Just int`.
pub fn decls() -> TypeDecls {
    let mut d = TypeDecls::default();
    d.structs.insert("Pair".into(), vec![("a".into(), Type::Int), ("b".into(), Type::Bool)]);
    d.enums.insert("Opt".into(), vec![("Nothing".into(), Type::Unit), ("Just".into(), Type::Int)]);
    d
}

pub fn program() -> Program {
    Program {
        decls: Arc::new(decls()),
        tops: Default::default(),
    }
}

pub struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    env: Vec<(Var, Type)>,
}

impl<'r, R: Rng> Gen<'r, R> {
    pub fn new(rng: &'r mut R) -> Self {
        Gen { rng, env: Vec::new() }
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    /// A type of bounded size.
    pub fn ty(&mut self, size: u32) -> Type {
        let base = [Type::Int, Type::Bool, Type::Int, Type::Bool, pair(), opt(), Type::Unit];
        if size == 0 {
            return base[..6].choose(self.rng).unwrap().clone();
        }
        match self.rng.gen_range(0..10) {
            0..=5 => base.choose(self.rng).unwrap().clone(),
            6 => Type::collection(Type::Int),
            7 => Type::Tuple(vec![self.ty(size - 1), self.ty(size - 1)]),
            8 => Type::thunk(self.ty(size - 1)),
            _ => Type::arrow(self.ty(size - 1), self.ty(size - 1)),
        }
    }

    fn small_int(&mut self) -> i64 {
        self.rng.gen_range(-10..=10)
    }

    fn literal(&mut self, ty: &Type) -> Term {
        match ty {
            Type::Unit => unit(),
            Type::Bool => bool(self.rng.gen()),
            Type::Int => int(self.small_int()),
            _ => self.term(ty, 0),
        }
    }

    fn with_var<T>(&mut self, v: &Var, ty: &Type, f: impl FnOnce(&mut Self) -> T) -> T {
        self.env.push((v.clone(), ty.clone()));
        let r = f(self);
        self.env.pop();
        r
    }

    fn leaf(&mut self, ty: &Type) -> Term {
        let vars: Vec<Var> = self.env.iter().filter(|(_, t)| t == ty).map(|(v, _)| v.clone()).collect();
        if !vars.is_empty() && self.chance(0.5) {
            return var(vars.choose(self.rng).unwrap());
        }
        if self.chance(0.06) {
            return if self.chance(0.7) { empty() } else { conflict() };
        }
        match ty {
            Type::Unit | Type::Bool | Type::Int => self.literal(ty),
            Type::Struct(_) => mk(Kind::Struct("Pair".into(), vec![("a".into(), int(self.small_int())), ("b".into(), bool(self.rng.gen()))]), None),
            Type::Enum(_) => {
                if self.chance(0.5) {
                    mk(Kind::Inject("Opt".into(), "Nothing".into(), unit()), None)
                } else {
                    mk(Kind::Inject("Opt".into(), "Just".into(), int(self.small_int())), None)
                }
            }
            Type::Collection(t) => {
                let n = self.rng.gen_range(0..3);
                let items = (0..n).map(|_| self.leaf(t)).collect();
                array((**t).clone(), items)
            }
            Type::Tuple(ts) => tuple(ts.iter().map(|t| self.leaf(t)).collect()),
            Type::Arrow(a, b) => {
                let x = Var::fresh("x");
                let body = self.with_var(&x, a, |g| g.leaf(b));
                lam(&x, (**a).clone(), body)
            }
            Type::Date | Type::Money | Type::Duration | Type::Option(_) => unreachable!("not generated"),
        }
    }

    /// A closed (modulo the current environment) term of type `ty`.
    pub fn term(&mut self, ty: &Type, depth: u32) -> Term {
        if depth == 0 {
            return self.leaf(ty);
        }
        let d = depth - 1;
        // Structural forms available at every type.
        let roll = self.rng.gen_range(0..100);
        match roll {
            0..=29 => return self.default(ty, d),
            30..=35 => return if_(self.term(&Type::Bool, d), self.term(ty, d), self.term(ty, d)),
            36..=41 => {
                let t1 = self.ty(1);
                let x = Var::fresh("y");
                let e1 = self.term(&t1, d);
                let e2 = self.with_var(&x, &t1, |g| g.term(ty, d));
                return let_(&x, t1, e1, e2);
            }
            42..=46 => {
                let t1 = self.ty(1);
                let x = Var::fresh("z");
                let body = self.with_var(&x, &t1, |g| g.term(ty, d));
                let arg = self.term(&t1, d);
                return app(lam(&x, t1, body), arg);
            }
            47..=53 => {
                // A thunked default, forced.
                let body = self.default(ty, d);
                return app(thunk(body), unit());
            }
            54..=57 => {
                let other = self.ty(0);
                let t = Type::Tuple(vec![ty.clone(), other]);
                return mk(Kind::TupleGet(self.term(&t, d), 0), None);
            }
            58..=61 => {
                let scrut = self.term(&opt(), d);
                let n = Var::fresh("n");
                let nothing = self.term(ty, d);
                let just = self.with_var(&n, &Type::Int, |g| g.term(ty, d));
                return mk(
                    Kind::Match(scrut, "Opt".into(), vec![("Nothing".into(), Var::fresh("_"), nothing), ("Just".into(), n, just)]),
                    None,
                );
            }
            62..=64 => {
                // Apply a generated function.
                let a = self.ty(0);
                let f = self.term(&Type::arrow(a.clone(), ty.clone()), d);
                return app(f, self.term(&a, d));
            }
            65..=67 => return self.leaf(ty),
            _ => {}
        }
        self.intro(ty, d)
    }

    fn default(&mut self, ty: &Type, d: u32) -> Term {
        let n = *[0usize, 1, 1, 2, 2, 3].choose(self.rng).unwrap();
        let exceptions = (0..n).map(|_| self.term(ty, d)).collect();
        let just = self.term(&Type::Bool, d);
        let cons = self.term(ty, d);
        default(exceptions, just, cons, ty.clone())
    }

    /// Introduction forms and primitive operators of `ty`.
    fn intro(&mut self, ty: &Type, d: u32) -> Term {
        match ty {
            Type::Unit => unit(),
            Type::Bool => match self.rng.gen_range(0..7) {
                0 => binop(Op::And, self.term(&Type::Bool, d), self.term(&Type::Bool, d)),
                1 => binop(Op::Or, self.term(&Type::Bool, d), self.term(&Type::Bool, d)),
                2 => unop(UOp::Not, self.term(&Type::Bool, d)),
                3 => binop(Op::Lt(OpKind::Int), self.term(&Type::Int, d), self.term(&Type::Int, d)),
                4 => {
                    let t = [Type::Int, pair(), opt(), Type::collection(Type::Int)].choose(self.rng).unwrap().clone();
                    let op = if self.chance(0.5) { Op::Eq } else { Op::Neq };
                    binop(op, self.term(&t, d), self.term(&t, d))
                }
                5 => mk(Kind::StructGet(self.term(&pair(), d), "b".into()), None),
                _ => self.literal(ty),
            },
            Type::Int => match self.rng.gen_range(0..8) {
                0 => binop(Op::AddInt, self.term(&Type::Int, d), self.term(&Type::Int, d)),
                1 => binop(Op::SubInt, self.term(&Type::Int, d), self.term(&Type::Int, d)),
                2 => binop(Op::MulInt, int(self.small_int()), int(self.small_int())),
                3 => {
                    let divisor = *[-3i64, -2, -1, 1, 2, 3, 7].choose(self.rng).unwrap();
                    binop(Op::DivInt, self.term(&Type::Int, d), int(divisor))
                }
                4 => unop(UOp::NegInt, self.term(&Type::Int, d)),
                5 => mk(Kind::StructGet(self.term(&pair(), d), "a".into()), None),
                6 => {
                    let acc = Var::fresh("acc");
                    let x = Var::fresh("x");
                    let f = lam(&acc, Type::Int, lam(&x, Type::Int, binop(Op::AddInt, var(&acc), var(&x))));
                    fold(f, self.term(&Type::Int, d), self.term(&Type::collection(Type::Int), d))
                }
                _ => self.literal(ty),
            },
            Type::Struct(_) => mk(
                Kind::Struct(
                    "Pair".into(),
                    vec![("a".into(), self.term(&Type::Int, d)), ("b".into(), self.term(&Type::Bool, d))],
                ),
                None,
            ),
            Type::Enum(_) => {
                if self.chance(0.3) {
                    mk(Kind::Inject("Opt".into(), "Nothing".into(), unit()), None)
                } else {
                    mk(Kind::Inject("Opt".into(), "Just".into(), self.term(&Type::Int, d)), None)
                }
            }
            Type::Collection(t) => {
                let n = self.rng.gen_range(0..4);
                let items = (0..n).map(|_| self.term(t, d)).collect();
                array((**t).clone(), items)
            }
            Type::Tuple(ts) => tuple(ts.iter().map(|t| self.term(t, d)).collect()),
            Type::Arrow(a, b) => {
                let x = Var::fresh("x");
                let body = self.with_var(&x, a, |g| g.term(b, d));
                lam(&x, (**a).clone(), body)
            }
            Type::Date | Type::Money | Type::Duration | Type::Option(_) => unreachable!("not generated"),
        }
    }
}

/// Generates a term and its type.
pub fn generate<R: Rng>(rng: &mut R, max_depth: u32) -> (Term, Type) {
    let mut g = Gen::new(rng);
    let ty = g.ty(2);
    let depth = g.rng.gen_range(1..=max_depth);
    let t = g.term(&ty, depth);
    (t, ty)
}

/// Depth of nesting of default terms.
pub fn default_depth(t: &Term) -> usize {
    let mut best = 0;
    let mut stack = vec![(t.clone(), 0usize)];
    while let Some((t, d)) = stack.pop() {
        let here = if matches!(t.kind, Kind::Default(_)) { d + 1 } else { d };
        best = best.max(here);
        for c in children(&t) {
            stack.push((c, here));
        }
    }
    best
}

pub fn children(t: &Term) -> Vec<Term> {
    match &t.kind {
        Kind::Var(_) | Kind::TopName(_) | Kind::Lit(_) | Kind::Empty(_) | Kind::Conflict(_) => vec![],
        Kind::Lam(_, _, b) => vec![b.clone()],
        Kind::App(a, b) | Kind::Binop(_, a, b) => vec![a.clone(), b.clone()],
        Kind::Let(_, _, a, b) => vec![a.clone(), b.clone()],
        Kind::Default(d) => {
            let mut v = d.exceptions.clone();
            v.push(d.justification.clone());
            v.push(d.consequence.clone());
            v
        }
        Kind::If(a, b, c) | Kind::Fold(a, b, c) => vec![a.clone(), b.clone(), c.clone()],
        Kind::Tuple(es) | Kind::Array(_, es) => es.clone(),
        Kind::Struct(_, fs) => fs.iter().map(|(_, e)| e.clone()).collect(),
        Kind::TupleGet(e, _) | Kind::StructGet(e, _) | Kind::Inject(_, _, e) | Kind::Unop(_, e) => vec![e.clone()],
        Kind::Match(e, _, arms) => {
            let mut v = vec![e.clone()];
            v.extend(arms.iter().map(|(_, _, b)| b.clone()));
            v
        }
    }
}

/// Name of every constructor occurring in `t`, for coverage checks.
pub fn constructor_names(t: &Term, out: &mut std::collections::BTreeSet<Name>) {
    let name = match &t.kind {
        Kind::Var(_) => "Var",
        Kind::TopName(_) => "TopName",
        Kind::Lit(_) => "Lit",
        Kind::Lam(..) => "Lam",
        Kind::App(..) => "App",
        Kind::Default(_) => "Default",
        Kind::Empty(_) => "Empty",
        Kind::Conflict(_) => "Conflict",
        Kind::If(..) => "If",
        Kind::Let(..) => "Let",
        Kind::Tuple(_) => "Tuple",
        Kind::TupleGet(..) => "TupleGet",
        Kind::Struct(..) => "Struct",
        Kind::StructGet(..) => "StructGet",
        Kind::Inject(..) => "Inject",
        Kind::Match(..) => "Match",
        Kind::Array(..) => "Array",
        Kind::Fold(..) => "Fold",
        Kind::Binop(..) => "Binop",
        Kind::Unop(..) => "Unop",
    };
    out.insert(name.into());
    for c in children(t) {
        constructor_names(&c, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dcalc;
    use indexmap::IndexMap;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_terms_typecheck() {
        let p = program();
        let tops = IndexMap::new();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let (t, ty) = generate(&mut rng, MAX_DEPTH);
            dcalc::check(&p, &tops, &t, &ty).unwrap_or_else(|e| panic!("{e}\n{}", dcalc::print(&t)));
        }
    }
}

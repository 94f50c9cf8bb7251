//! The default calculus: a lambda calculus with default terms
//! `<e1, ..., en | j :- c>` and the two error terms ∅ and ⊛, with its
//! typechecker and small-step reference interpreter.

use std::fmt::{self, Write as _};
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;

use indexmap::IndexMap;

use crate::error::{Error, ErrorKind, Result};
use crate::ops::{Op, UOp};
use crate::pos::Pos;
use crate::value::{Lit, Name, Outcome, Type, TypeDecls, Value};

static NEXT_VAR: AtomicU32 = AtomicU32::new(1);

/// A bound variable. Identity is the id; the name is for printing.
#[derive(Clone, Debug)]
pub struct Var {
    pub id: u32,
    pub name: Name,
}

impl Var {
    pub fn fresh(name: &str) -> Var {
        Var {
            id: NEXT_VAR.fetch_add(1, Ordering::Relaxed),
            name: name.into(),
        }
    }
}

impl PartialEq for Var {
    fn eq(&self, other: &Var) -> bool {
        self.id == other.id
    }
}

impl Eq for Var {}

impl Hash for Var {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id.hash(state);
    }
}

/// Where an error term comes from, for messages. Ignored by the semantics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrorOrigin {
    pub kind: ErrorKind,
    pub message: String,
    pub positions: Vec<Pos>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DefaultRole {
    /// A node of a variable's exception tree.
    Definition,
    /// The wrapper giving a caller-provided value priority over the local
    /// definition.
    Override,
}

/// Source information attached to compiled defaults, used by traces and
/// error messages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DefaultMeta {
    pub variable: String,
    pub role: DefaultRole,
    pub pos: Pos,
    pub headings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct DefaultTerm {
    pub exceptions: Vec<Term>,
    pub justification: Term,
    pub consequence: Term,
    pub ty: Type,
    pub meta: Option<Arc<DefaultMeta>>,
}

#[derive(Clone, Debug)]
pub enum Kind {
    Var(Var),
    TopName(Name),
    Lit(Lit),
    Lam(Var, Type, Term),
    App(Term, Term),
    Default(Box<DefaultTerm>),
    Empty(Option<Arc<ErrorOrigin>>),
    Conflict(Option<Arc<ErrorOrigin>>),
    If(Term, Term, Term),
    Let(Var, Type, Term, Term),
    Tuple(Vec<Term>),
    TupleGet(Term, usize),
    Struct(Name, Vec<(Name, Term)>),
    StructGet(Term, Name),
    Inject(Name, Name, Term),
    Match(Term, Name, Vec<(Name, Var, Term)>),
    Array(Type, Vec<Term>),
    Fold(Term, Term, Term),
    Binop(Op, Term, Term),
    Unop(UOp, Term),
}

#[derive(Debug)]
pub struct Node {
    pub kind: Kind,
    pub pos: Option<Pos>,
    is_value: bool,
    /// Bloom filter over ids of variables occurring anywhere below.
    mentions: u64,
}

pub type Term = Arc<Node>;

fn bit(v: &Var) -> u64 {
    1u64 << (v.id % 64)
}

impl Node {
    pub fn is_value(&self) -> bool {
        self.is_value
    }

    pub fn is_error(&self) -> bool {
        matches!(self.kind, Kind::Empty(_) | Kind::Conflict(_))
    }

    /// A value that is not an error term.
    fn is_proper_value(&self) -> bool {
        self.is_value && !self.is_error()
    }
}

pub fn mk(kind: Kind, pos: Option<Pos>) -> Term {
    let proper = |t: &Term| t.is_proper_value();
    let (is_value, mentions) = match &kind {
        Kind::Var(v) => (false, bit(v)),
        Kind::TopName(_) => (false, 0),
        Kind::Lit(_) | Kind::Empty(_) | Kind::Conflict(_) => (true, 0),
        Kind::Lam(x, _, b) => (true, b.mentions | bit(x)),
        Kind::App(f, a) => (false, f.mentions | a.mentions),
        Kind::Default(d) => (
            false,
            d.exceptions.iter().fold(d.justification.mentions | d.consequence.mentions, |m, e| m | e.mentions),
        ),
        Kind::If(a, b, c) => (false, a.mentions | b.mentions | c.mentions),
        Kind::Let(x, _, a, b) => (false, a.mentions | b.mentions | bit(x)),
        Kind::Tuple(es) | Kind::Array(_, es) => (es.iter().all(proper), es.iter().fold(0, |m, e| m | e.mentions)),
        Kind::Struct(_, fs) => (fs.iter().all(|(_, e)| proper(e)), fs.iter().fold(0, |m, (_, e)| m | e.mentions)),
        Kind::Inject(_, _, e) => (proper(e), e.mentions),
        Kind::TupleGet(e, _) | Kind::StructGet(e, _) | Kind::Unop(_, e) => (false, e.mentions),
        Kind::Match(e, _, arms) => (false, arms.iter().fold(e.mentions, |m, (_, x, b)| m | b.mentions | bit(x))),
        Kind::Fold(a, b, c) => (false, a.mentions | b.mentions | c.mentions),
        Kind::Binop(_, a, b) => (false, a.mentions | b.mentions),
    };
    Arc::new(Node {
        kind,
        pos,
        is_value,
        mentions,
    })
}

/// Terse constructors, mostly for tests and generated code.
pub mod build {
    use super::*;

    pub fn var(v: &Var) -> Term {
        mk(Kind::Var(v.clone()), None)
    }
    pub fn top(n: &str) -> Term {
        mk(Kind::TopName(n.into()), None)
    }
    pub fn lit(l: Lit) -> Term {
        mk(Kind::Lit(l), None)
    }
    pub fn bool(b: bool) -> Term {
        lit(Lit::Bool(b))
    }
    pub fn int(i: i64) -> Term {
        lit(Lit::Int(i))
    }
    pub fn unit() -> Term {
        lit(Lit::Unit)
    }
    pub fn lam(x: &Var, ty: Type, body: Term) -> Term {
        mk(Kind::Lam(x.clone(), ty, body), None)
    }
    pub fn app(f: Term, a: Term) -> Term {
        mk(Kind::App(f, a), None)
    }
    pub fn default(exceptions: Vec<Term>, justification: Term, consequence: Term, ty: Type) -> Term {
        mk(
            Kind::Default(Box::new(DefaultTerm {
                exceptions,
                justification,
                consequence,
                ty,
                meta: None,
            })),
            None,
        )
    }
    pub fn empty() -> Term {
        mk(Kind::Empty(None), None)
    }
    pub fn conflict() -> Term {
        mk(Kind::Conflict(None), None)
    }
    pub fn if_(c: Term, t: Term, e: Term) -> Term {
        mk(Kind::If(c, t, e), None)
    }
    pub fn let_(x: &Var, ty: Type, e1: Term, e2: Term) -> Term {
        mk(Kind::Let(x.clone(), ty, e1, e2), None)
    }
    pub fn tuple(es: Vec<Term>) -> Term {
        mk(Kind::Tuple(es), None)
    }
    pub fn get(e: Term, i: usize) -> Term {
        mk(Kind::TupleGet(e, i), None)
    }
    pub fn array(ty: Type, es: Vec<Term>) -> Term {
        mk(Kind::Array(ty, es), None)
    }
    pub fn fold(f: Term, acc: Term, l: Term) -> Term {
        mk(Kind::Fold(f, acc, l), None)
    }
    pub fn binop(op: Op, a: Term, b: Term) -> Term {
        mk(Kind::Binop(op, a, b), None)
    }
    pub fn unop(op: UOp, a: Term) -> Term {
        mk(Kind::Unop(op, a), None)
    }
    /// `λ(): τ. e`
    pub fn thunk(e: Term) -> Term {
        lam(&Var::fresh("_"), Type::Unit, e)
    }
}

fn rebuild(t: &Term, kind: Kind) -> Term {
    mk(kind, t.pos.clone())
}

/// `t[x := v]` for a closed value `v`.
pub fn subst(t: &Term, x: &Var, v: &Term) -> Term {
    if t.mentions & bit(x) == 0 {
        return t.clone();
    }
    let s = |e: &Term| subst(e, x, v);
    let kind = match &t.kind {
        Kind::Var(y) if y == x => return v.clone(),
        Kind::Var(_) | Kind::TopName(_) | Kind::Lit(_) | Kind::Empty(_) | Kind::Conflict(_) => return t.clone(),
        Kind::Lam(y, _, _) if y == x => return t.clone(),
        Kind::Lam(y, ty, b) => Kind::Lam(y.clone(), ty.clone(), s(b)),
        Kind::App(f, a) => Kind::App(s(f), s(a)),
        Kind::Default(d) => Kind::Default(Box::new(DefaultTerm {
            exceptions: d.exceptions.iter().map(s).collect(),
            justification: s(&d.justification),
            consequence: s(&d.consequence),
            ty: d.ty.clone(),
            meta: d.meta.clone(),
        })),
        Kind::If(a, b, c) => Kind::If(s(a), s(b), s(c)),
        Kind::Let(y, ty, a, b) => Kind::Let(y.clone(), ty.clone(), s(a), if y == x { b.clone() } else { s(b) }),
        Kind::Tuple(es) => Kind::Tuple(es.iter().map(s).collect()),
        Kind::TupleGet(e, i) => Kind::TupleGet(s(e), *i),
        Kind::Struct(n, fs) => Kind::Struct(n.clone(), fs.iter().map(|(f, e)| (f.clone(), s(e))).collect()),
        Kind::StructGet(e, f) => Kind::StructGet(s(e), f.clone()),
        Kind::Inject(en, c, e) => Kind::Inject(en.clone(), c.clone(), s(e)),
        Kind::Match(e, en, arms) => Kind::Match(
            s(e),
            en.clone(),
            arms.iter()
                .map(|(c, y, b)| (c.clone(), y.clone(), if y == x { b.clone() } else { s(b) }))
                .collect(),
        ),
        Kind::Array(ty, es) => Kind::Array(ty.clone(), es.iter().map(s).collect()),
        Kind::Fold(a, b, c) => Kind::Fold(s(a), s(b), s(c)),
        Kind::Binop(op, a, b) => Kind::Binop(*op, s(a), s(b)),
        Kind::Unop(op, a) => Kind::Unop(*op, s(a)),
    };
    rebuild(t, kind)
}

/// Bottom-up rewrite: `f` sees every node after its children were rewritten
/// and may replace it. Binders are not renamed.
pub fn map_term(t: &Term, f: &mut dyn FnMut(&Term) -> Option<Term>) -> Term {
    let mut m = |e: &Term| map_term(e, f);
    let kind = match &t.kind {
        Kind::Var(_) | Kind::TopName(_) | Kind::Lit(_) | Kind::Empty(_) | Kind::Conflict(_) => None,
        Kind::Lam(y, ty, b) => Some(Kind::Lam(y.clone(), ty.clone(), m(b))),
        Kind::App(a, b) => Some(Kind::App(m(a), m(b))),
        Kind::Default(d) => Some(Kind::Default(Box::new(DefaultTerm {
            exceptions: d.exceptions.iter().map(&mut m).collect(),
            justification: m(&d.justification),
            consequence: m(&d.consequence),
            ty: d.ty.clone(),
            meta: d.meta.clone(),
        }))),
        Kind::If(a, b, c) => Some(Kind::If(m(a), m(b), m(c))),
        Kind::Let(y, ty, a, b) => Some(Kind::Let(y.clone(), ty.clone(), m(a), m(b))),
        Kind::Tuple(es) => Some(Kind::Tuple(es.iter().map(&mut m).collect())),
        Kind::TupleGet(e, i) => Some(Kind::TupleGet(m(e), *i)),
        Kind::Struct(n, fs) => Some(Kind::Struct(n.clone(), fs.iter().map(|(k, e)| (k.clone(), m(e))).collect())),
        Kind::StructGet(e, k) => Some(Kind::StructGet(m(e), k.clone())),
        Kind::Inject(en, c, e) => Some(Kind::Inject(en.clone(), c.clone(), m(e))),
        Kind::Match(e, en, arms) => Some(Kind::Match(
            m(e),
            en.clone(),
            arms.iter().map(|(c, y, b)| (c.clone(), y.clone(), m(b))).collect(),
        )),
        Kind::Array(ty, es) => Some(Kind::Array(ty.clone(), es.iter().map(&mut m).collect())),
        Kind::Fold(a, b, c) => Some(Kind::Fold(m(a), m(b), m(c))),
        Kind::Binop(op, a, b) => Some(Kind::Binop(*op, m(a), m(b))),
        Kind::Unop(op, a) => Some(Kind::Unop(*op, m(a))),
    };
    let node = match kind {
        Some(k) => rebuild(t, k),
        None => t.clone(),
    };
    f(&node).unwrap_or(node)
}

/// A program: type declarations and ordered top-level bindings.
#[derive(Clone, Debug, Default)]
pub struct Program {
    pub decls: Arc<TypeDecls>,
    pub tops: IndexMap<Name, Term>,
}

// ---------------------------------------------------------------------------
// Typing
// ---------------------------------------------------------------------------

pub struct TypeEnv<'a> {
    pub decls: &'a TypeDecls,
    pub tops: &'a IndexMap<Name, Type>,
    vars: Vec<(Var, Type)>,
}

fn type_error(t: &Term, msg: String) -> Error {
    Error::new(ErrorKind::Type, "Type error")
        .with_message(msg)
        .with_opt_pos(None, t.pos.as_ref())
}

fn join(t: &Term, a: Option<Type>, b: Option<Type>) -> Result<Option<Type>> {
    match (a, b) {
        (Some(a), Some(b)) if a != b => Err(type_error(t, format!("branches have types {a} and {b}"))),
        (Some(a), _) | (None, Some(a)) => Ok(Some(a)),
        (None, None) => Ok(None),
    }
}

impl<'a> TypeEnv<'a> {
    pub fn new(decls: &'a TypeDecls, tops: &'a IndexMap<Name, Type>) -> Self {
        TypeEnv {
            decls,
            tops,
            vars: Vec::new(),
        }
    }

    fn lookup(&self, v: &Var) -> Option<&Type> {
        self.vars.iter().rev().find(|(x, _)| x == v).map(|(_, t)| t)
    }

    fn with<T>(&mut self, v: &Var, ty: Type, f: impl FnOnce(&mut Self) -> T) -> T {
        self.vars.push((v.clone(), ty));
        let r = f(self);
        self.vars.pop();
        r
    }

    pub fn check(&mut self, t: &Term, ty: &Type) -> Result<()> {
        self.tc(t, Some(ty)).map(|_| ())
    }

    /// Bidirectional typing. `Ok(None)` means the term can have any type:
    /// it is an error term or can only ever evaluate to one.
    pub fn tc(&mut self, t: &Term, expected: Option<&Type>) -> Result<Option<Type>> {
        let got = self.tc_inner(t, expected)?;
        match (&got, expected) {
            (Some(g), Some(e)) if g != e => Err(type_error(t, format!("expected {e}, found {g}"))),
            _ => Ok(got),
        }
    }

    fn expect_some(&mut self, t: &Term, what: &str) -> Result<Option<Type>> {
        let ty = self.tc(t, None)?;
        if ty.is_none() && !t.is_error() {
            // Only error-typed terms reach here; nothing to check further.
            let _ = what;
        }
        Ok(ty)
    }

    fn tc_inner(&mut self, t: &Term, expected: Option<&Type>) -> Result<Option<Type>> {
        Ok(match &t.kind {
            Kind::Var(v) => Some(
                self.lookup(v)
                    .cloned()
                    .ok_or_else(|| type_error(t, format!("unbound variable {}", v.name)))?,
            ),
            Kind::TopName(n) => Some(
                self.tops
                    .get(n)
                    .cloned()
                    .ok_or_else(|| type_error(t, format!("unknown top-level name {n}")))?,
            ),
            Kind::Lit(l) => Some(l.ty()),
            Kind::Empty(_) | Kind::Conflict(_) => None,
            Kind::Lam(x, ty, body) => {
                let ret_expected = match expected {
                    Some(Type::Arrow(a, b)) if **a == *ty => Some((**b).clone()),
                    _ => None,
                };
                let ret = self.with(x, ty.clone(), |env| env.tc(body, ret_expected.as_ref()))?;
                ret.or(ret_expected).map(|r| Type::arrow(ty.clone(), r))
            }
            Kind::App(f, a) => match self.expect_some(f, "function")? {
                None => {
                    self.tc(a, None)?;
                    None
                }
                Some(Type::Arrow(dom, cod)) => {
                    self.check(a, &dom)?;
                    Some(*cod)
                }
                Some(other) => return Err(type_error(f, format!("expected a function, found {other}"))),
            },
            Kind::Default(d) => {
                for e in &d.exceptions {
                    self.check(e, &d.ty)?;
                }
                self.check(&d.justification, &Type::Bool)?;
                self.check(&d.consequence, &d.ty)?;
                Some(d.ty.clone())
            }
            Kind::If(c, a, b) => {
                self.check(c, &Type::Bool)?;
                let ta = self.tc(a, expected)?;
                let tb = self.tc(b, expected.or(ta.as_ref()))?;
                join(t, ta, tb)?
            }
            Kind::Let(x, ty, e1, e2) => {
                self.check(e1, ty)?;
                self.with(x, ty.clone(), |env| env.tc(e2, expected))?
            }
            Kind::Tuple(es) => {
                let exp: Option<&Vec<Type>> = match expected {
                    Some(Type::Tuple(ts)) if ts.len() == es.len() => Some(ts),
                    _ => None,
                };
                let mut tys = Vec::new();
                let mut bottom = false;
                for (i, e) in es.iter().enumerate() {
                    match self.tc(e, exp.map(|ts| &ts[i]))? {
                        Some(ty) => tys.push(ty),
                        None => match exp {
                            Some(ts) => tys.push(ts[i].clone()),
                            None => bottom = true,
                        },
                    }
                }
                if bottom {
                    None
                } else {
                    Some(Type::Tuple(tys))
                }
            }
            Kind::TupleGet(e, i) => match self.tc(e, None)? {
                None => None,
                Some(Type::Tuple(ts)) if *i < ts.len() => Some(ts[*i].clone()),
                Some(other) => return Err(type_error(t, format!("cannot project component {i} of {other}"))),
            },
            Kind::Struct(name, fields) => {
                let decl = self
                    .decls
                    .structs
                    .get(name)
                    .ok_or_else(|| type_error(t, format!("unknown structure {name}")))?
                    .clone();
                if decl.len() != fields.len() || decl.iter().zip(fields).any(|((a, _), (b, _))| a != b) {
                    return Err(type_error(t, format!("fields of {name} do not match its declaration")));
                }
                for ((_, ty), (_, e)) in decl.iter().zip(fields) {
                    self.check(e, ty)?;
                }
                Some(Type::Struct(name.clone()))
            }
            Kind::StructGet(e, f) => match self.tc(e, None)? {
                None => None,
                Some(Type::Struct(s)) => Some(
                    self.decls
                        .field(&s, f)
                        .cloned()
                        .ok_or_else(|| type_error(t, format!("structure {s} has no field {f}")))?,
                ),
                Some(other) => return Err(type_error(t, format!("expected a structure, found {other}"))),
            },
            Kind::Inject(en, c, e) => {
                let ty = self
                    .decls
                    .case(en, c)
                    .cloned()
                    .ok_or_else(|| type_error(t, format!("{en} has no constructor {c}")))?;
                self.check(e, &ty)?;
                Some(Type::Enum(en.clone()))
            }
            Kind::Match(e, en, arms) => {
                self.check(e, &Type::Enum(en.clone()))?;
                let cases = self
                    .decls
                    .enums
                    .get(en)
                    .ok_or_else(|| type_error(t, format!("unknown enumeration {en}")))?
                    .clone();
                if cases.len() != arms.len() || cases.iter().zip(arms).any(|((a, _), (b, _, _))| a != b) {
                    return Err(type_error(t, format!("match arms do not cover the constructors of {en} in order")));
                }
                let mut result: Option<Type> = None;
                for ((_, ty), (_, x, body)) in cases.iter().zip(arms) {
                    let exp = expected.or(result.as_ref()).cloned();
                    let bt = self.with(x, ty.clone(), |env| env.tc(body, exp.as_ref()))?;
                    result = join(t, result, bt)?;
                }
                result
            }
            Kind::Array(ty, es) => {
                for e in es {
                    self.check(e, ty)?;
                }
                Some(Type::collection(ty.clone()))
            }
            Kind::Fold(f, acc, l) => {
                let ft = self.tc(f, None)?;
                let (acc_ty, elem_ty) = match &ft {
                    Some(Type::Arrow(a, rest)) => match &**rest {
                        Type::Arrow(x, r) if **r == **a => ((**a).clone(), (**x).clone()),
                        _ => return Err(type_error(f, format!("fold function has type {}", ft.as_ref().unwrap()))),
                    },
                    None => {
                        self.tc(acc, None)?;
                        self.tc(l, None)?;
                        return Ok(None);
                    }
                    Some(other) => return Err(type_error(f, format!("fold function has type {other}"))),
                };
                self.check(acc, &acc_ty)?;
                self.check(l, &Type::collection(elem_ty))?;
                Some(acc_ty)
            }
            Kind::Binop(op, a, b) => match op.signature() {
                Some((ta, tb, tr)) => {
                    self.check(a, &ta)?;
                    self.check(b, &tb)?;
                    Some(tr)
                }
                None => {
                    let ta = self.tc(a, None)?;
                    let tb = self.tc(b, ta.as_ref())?;
                    if let Some(ty) = ta.as_ref().or(tb.as_ref()) {
                        if !ty.is_first_order() {
                            return Err(type_error(t, format!("cannot compare values of type {ty}")));
                        }
                    }
                    Some(Type::Bool)
                }
            },
            Kind::Unop(op, a) => {
                let (ta, tr) = op.signature();
                self.check(a, &ta)?;
                Some(tr)
            }
        })
    }
}

/// Types of the top-level bindings, in order.
pub fn type_program(p: &Program) -> Result<IndexMap<Name, Type>> {
    let mut tops = IndexMap::new();
    for (name, t) in &p.tops {
        let ty = TypeEnv::new(&p.decls, &tops)
            .tc(t, None)?
            .ok_or_else(|| type_error(t, format!("cannot infer the type of {name}")))?;
        tops.insert(name.clone(), ty);
    }
    Ok(tops)
}

/// Infers the type of a closed term.
pub fn typecheck(p: &Program, tops: &IndexMap<Name, Type>, t: &Term) -> Result<Type> {
    TypeEnv::new(&p.decls, tops)
        .tc(t, None)?
        .ok_or_else(|| type_error(t, "the type of this term cannot be inferred".into()))
}

/// Checks a closed term against a type; error terms check at every type.
pub fn check(p: &Program, tops: &IndexMap<Name, Type>, t: &Term, ty: &Type) -> Result<()> {
    TypeEnv::new(&p.decls, tops).check(t, ty)
}

// ---------------------------------------------------------------------------
// Reduction
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalError {
    Diverged(u64),
    Fault { message: String, pos: Option<Pos> },
    Stuck(String),
    Preservation(String),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Diverged(n) => write!(f, "evaluation exceeded {n} steps"),
            EvalError::Fault { message, .. } => f.write_str(message),
            EvalError::Stuck(s) => write!(f, "stuck term: {s}"),
            EvalError::Preservation(s) => write!(f, "type not preserved: {s}"),
        }
    }
}

/// How a default term was resolved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Resolution {
    /// Exactly one exception (0-based index) was non-empty.
    Exception(usize),
    /// No exception applied and the justification held.
    Base,
    /// No exception applied and the justification was false.
    Empty,
    /// Several exceptions applied.
    Conflict(Vec<Pos>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub meta: Arc<DefaultMeta>,
    pub resolution: Resolution,
}

pub struct Machine<'a> {
    pub program: &'a Program,
    pub trace: Option<&'a mut Vec<TraceEvent>>,
}

enum Sub {
    Stepped(Term),
    Error(Term),
}

fn fault(t: &Term, message: String) -> EvalError {
    EvalError::Fault {
        message,
        pos: t.pos.clone(),
    }
}

impl Machine<'_> {
    /// Advances a subterm sitting in a regular evaluation context, or
    /// reports the error it is (or steps to).
    fn sub(&mut self, t: &Term) -> std::result::Result<Sub, EvalError> {
        if t.is_error() {
            return Ok(Sub::Error(t.clone()));
        }
        let next = self.step(t)?.expect("sub called on a value");
        Ok(if next.is_error() { Sub::Error(next) } else { Sub::Stepped(next) })
    }

    /// One reduction step; `None` iff `t` is a value.
    pub fn step(&mut self, t: &Term) -> std::result::Result<Option<Term>, EvalError> {
        if t.is_value {
            return Ok(None);
        }
        macro_rules! ctx {
            ($e:expr, $rebuild:expr) => {
                if !$e.is_proper_value() {
                    return Ok(Some(match self.sub($e)? {
                        Sub::Error(err) => err,
                        Sub::Stepped(n) => rebuild(t, $rebuild(n)),
                    }));
                }
            };
        }
        let next = match &t.kind {
            Kind::Var(v) => return Err(EvalError::Stuck(format!("free variable {}", v.name))),
            Kind::TopName(n) => self
                .program
                .tops
                .get(n)
                .cloned()
                .ok_or_else(|| EvalError::Stuck(format!("unknown top-level name {n}")))?,
            Kind::Lit(_) | Kind::Lam(..) | Kind::Empty(_) | Kind::Conflict(_) => unreachable!(),
            Kind::App(f, a) => {
                ctx!(f, |n| Kind::App(n, a.clone()));
                ctx!(a, |n| Kind::App(f.clone(), n));
                match &f.kind {
                    Kind::Lam(x, _, body) => {
                        let r = subst(body, x, a);
                        match (&r.kind, &t.pos) {
                            // Forcing an unset thunk: remember where it was read.
                            (Kind::Empty(Some(o)), Some(p)) if !o.positions.contains(p) => {
                                let mut o = (**o).clone();
                                o.positions.push(p.clone());
                                mk(Kind::Empty(Some(Arc::new(o))), r.pos.clone())
                            }
                            _ => r,
                        }
                    }
                    _ => return Err(EvalError::Stuck("application of a non-function".into())),
                }
            }
            Kind::Default(d) => return self.step_default(t, d).map(Some),
            Kind::If(c, a, b) => {
                ctx!(c, |n| Kind::If(n, a.clone(), b.clone()));
                match &c.kind {
                    Kind::Lit(Lit::Bool(true)) => a.clone(),
                    Kind::Lit(Lit::Bool(false)) => b.clone(),
                    _ => return Err(EvalError::Stuck("non-boolean condition".into())),
                }
            }
            Kind::Let(x, ty, e1, e2) => {
                ctx!(e1, |n| Kind::Let(x.clone(), ty.clone(), n, e2.clone()));
                subst(e2, x, e1)
            }
            Kind::Tuple(es) => return self.step_list(t, es, Kind::Tuple).map(Some),
            Kind::Array(ty, es) => return self.step_list(t, es, |es| Kind::Array(ty.clone(), es)).map(Some),
            Kind::Struct(name, fs) => {
                let es: Vec<Term> = fs.iter().map(|(_, e)| e.clone()).collect();
                return self
                    .step_list(t, &es, |es| {
                        Kind::Struct(name.clone(), fs.iter().map(|(f, _)| f.clone()).zip(es).collect())
                    })
                    .map(Some);
            }
            Kind::Inject(en, c, e) => {
                ctx!(e, |n| Kind::Inject(en.clone(), c.clone(), n));
                unreachable!("injection of a value is a value")
            }
            Kind::TupleGet(e, i) => {
                ctx!(e, |n| Kind::TupleGet(n, *i));
                match &e.kind {
                    Kind::Tuple(es) => es[*i].clone(),
                    _ => return Err(EvalError::Stuck("projection of a non-tuple".into())),
                }
            }
            Kind::StructGet(e, f) => {
                ctx!(e, |n| Kind::StructGet(n, f.clone()));
                match &e.kind {
                    Kind::Struct(_, fs) => fs
                        .iter()
                        .find(|(n, _)| n == f)
                        .map(|(_, v)| v.clone())
                        .ok_or_else(|| EvalError::Stuck(format!("missing field {f}")))?,
                    _ => return Err(EvalError::Stuck("field access on a non-structure".into())),
                }
            }
            Kind::Match(e, en, arms) => {
                ctx!(e, |n| Kind::Match(n, en.clone(), arms.clone()));
                match &e.kind {
                    Kind::Inject(_, c, payload) => {
                        let (_, x, body) = arms
                            .iter()
                            .find(|(n, _, _)| n == c)
                            .ok_or_else(|| EvalError::Stuck(format!("no arm for {c}")))?;
                        subst(body, x, payload)
                    }
                    _ => return Err(EvalError::Stuck("match on a non-enumeration".into())),
                }
            }
            Kind::Fold(f, acc, l) => {
                ctx!(f, |n| Kind::Fold(n, acc.clone(), l.clone()));
                ctx!(acc, |n| Kind::Fold(f.clone(), n, l.clone()));
                ctx!(l, |n| Kind::Fold(f.clone(), acc.clone(), n));
                match &l.kind {
                    Kind::Array(_, es) if es.is_empty() => acc.clone(),
                    Kind::Array(ty, es) => {
                        let acc2 = mk(Kind::App(mk(Kind::App(f.clone(), acc.clone()), t.pos.clone()), es[0].clone()), t.pos.clone());
                        let rest = mk(Kind::Array(ty.clone(), es[1..].to_vec()), l.pos.clone());
                        rebuild(t, Kind::Fold(f.clone(), acc2, rest))
                    }
                    _ => return Err(EvalError::Stuck("fold over a non-list".into())),
                }
            }
            Kind::Binop(op, a, b) => {
                ctx!(a, |n| Kind::Binop(*op, n, b.clone()));
                ctx!(b, |n| Kind::Binop(*op, a.clone(), n));
                let r = match op {
                    Op::Eq | Op::Neq => {
                        let (Some(va), Some(vb)) = (to_value(a), to_value(b)) else {
                            return Err(EvalError::Stuck("comparison of non-values".into()));
                        };
                        Lit::Bool((va == vb) == (*op == Op::Eq))
                    }
                    _ => match (&a.kind, &b.kind) {
                        (Kind::Lit(x), Kind::Lit(y)) => op.apply(x, y).map_err(|m| fault(t, m))?,
                        _ => return Err(EvalError::Stuck("operator on non-literals".into())),
                    },
                };
                rebuild(t, Kind::Lit(r))
            }
            Kind::Unop(op, a) => {
                ctx!(a, |n| Kind::Unop(*op, n));
                match &a.kind {
                    Kind::Lit(x) => rebuild(t, Kind::Lit(op.apply(x).map_err(|m| fault(t, m))?)),
                    _ => return Err(EvalError::Stuck("operator on a non-literal".into())),
                }
            }
        };
        Ok(Some(next))
    }

    fn step_list(
        &mut self,
        t: &Term,
        es: &[Term],
        make: impl FnOnce(Vec<Term>) -> Kind,
    ) -> std::result::Result<Term, EvalError> {
        let i = es
            .iter()
            .position(|e| !e.is_proper_value())
            .expect("a list of values is a value");
        Ok(match self.sub(&es[i])? {
            Sub::Error(e) => e,
            Sub::Stepped(n) => {
                let mut es = es.to_vec();
                es[i] = n;
                rebuild(t, make(es))
            }
        })
    }

    fn record(&mut self, d: &DefaultTerm, resolution: Resolution) {
        if let (Some(trace), Some(meta)) = (self.trace.as_deref_mut(), &d.meta) {
            trace.push(TraceEvent {
                meta: meta.clone(),
                resolution,
            });
        }
    }

    fn step_default(&mut self, t: &Term, d: &DefaultTerm) -> std::result::Result<Term, EvalError> {
        let with = |f: &dyn Fn(&mut DefaultTerm)| {
            let mut d2 = d.clone();
            f(&mut d2);
            rebuild(t, Kind::Default(Box::new(d2)))
        };
        // Exceptions, left to right. ∅ stays in its slot; ⊛ aborts.
        for (i, e) in d.exceptions.iter().enumerate() {
            if matches!(e.kind, Kind::Conflict(_)) {
                return Ok(e.clone());
            }
            if !e.is_value {
                let n = self.step(e)?.expect("non-value steps");
                if matches!(n.kind, Kind::Conflict(_)) {
                    return Ok(n);
                }
                return Ok(with(&|d2| d2.exceptions[i] = n.clone()));
            }
        }
        let live: Vec<usize> = (0..d.exceptions.len())
            .filter(|&i| !matches!(d.exceptions[i].kind, Kind::Empty(_)))
            .collect();
        match live.len() {
            0 => {}
            1 => {
                self.record(d, Resolution::Exception(live[0]));
                return Ok(d.exceptions[live[0]].clone());
            }
            _ => {
                let positions: Vec<Pos> = live.iter().filter_map(|&i| d.exceptions[i].pos.clone()).collect();
                self.record(d, Resolution::Conflict(positions.clone()));
                let origin = d.meta.as_ref().map(|m| {
                    Arc::new(ErrorOrigin {
                        kind: ErrorKind::Conflict,
                        message: format!("conflicting definitions of {} apply at the same time", m.variable),
                        positions,
                    })
                });
                return Ok(mk(Kind::Conflict(origin), t.pos.clone()));
            }
        }
        let j = &d.justification;
        if !j.is_proper_value() {
            return Ok(match self.sub(j)? {
                Sub::Error(err) => err,
                Sub::Stepped(n) => with(&|d2| d2.justification = n.clone()),
            });
        }
        match &j.kind {
            Kind::Lit(Lit::Bool(true)) => {}
            Kind::Lit(Lit::Bool(false)) => {
                self.record(d, Resolution::Empty);
                let origin = d.meta.as_ref().map(|m| {
                    Arc::new(ErrorOrigin {
                        kind: ErrorKind::NoApplicableDefinition,
                        message: format!("no definition of {} applies", m.variable),
                        positions: vec![m.pos.clone()],
                    })
                });
                return Ok(mk(Kind::Empty(origin), t.pos.clone()));
            }
            _ => return Err(EvalError::Stuck("non-boolean justification".into())),
        }
        let c = &d.consequence;
        if c.is_value {
            self.record(d, Resolution::Base);
            // The value now stands for the definition, so conflicts can
            // point at it.
            return Ok(rebuild(t, c.kind.clone()));
        }
        Ok(match self.sub(c)? {
            Sub::Error(err) => {
                self.record(d, Resolution::Base);
                err
            }
            Sub::Stepped(n) => with(&|d2| d2.consequence = n.clone()),
        })
    }
}

#[derive(Clone, Debug)]
pub struct EvalConfig {
    pub max_steps: u64,
    /// When set, every intermediate term is re-checked at this type.
    pub check_preservation: Option<Type>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            max_steps: u64::MAX,
            check_preservation: None,
        }
    }
}

pub fn eval(p: &Program, t: &Term, cfg: &EvalConfig) -> std::result::Result<Term, EvalError> {
    run(p, t, cfg, None)
}

pub fn trace_eval(
    p: &Program,
    t: &Term,
    cfg: &EvalConfig,
) -> (std::result::Result<Term, EvalError>, Vec<TraceEvent>) {
    let mut trace = Vec::new();
    let r = run(p, t, cfg, Some(&mut trace));
    (r, trace)
}

fn run(
    p: &Program,
    t: &Term,
    cfg: &EvalConfig,
    trace: Option<&mut Vec<TraceEvent>>,
) -> std::result::Result<Term, EvalError> {
    let tops = match &cfg.check_preservation {
        Some(_) => type_program(p).map_err(|e| EvalError::Preservation(e.to_string()))?,
        None => IndexMap::new(),
    };
    let mut m = Machine { program: p, trace };
    let mut cur = t.clone();
    let mut steps = 0u64;
    loop {
        match m.step(&cur)? {
            None => return Ok(cur),
            Some(next) => {
                steps += 1;
                if steps > cfg.max_steps {
                    return Err(EvalError::Diverged(cfg.max_steps));
                }
                if let Some(ty) = &cfg.check_preservation {
                    if let Err(e) = check(p, &tops, &next, ty) {
                        return Err(EvalError::Preservation(format!("{e}\n  after: {}\n  before: {}", print(&next), print(&cur))));
                    }
                }
                cur = next;
            }
        }
    }
}

/// First-order view of a value term; `None` for error terms.
pub fn to_value(t: &Term) -> Option<Value> {
    Some(match &t.kind {
        Kind::Lit(l) => Value::Lit(l.clone()),
        Kind::Lam(..) => Value::Function,
        Kind::Tuple(es) => Value::Tuple(es.iter().map(to_value).collect::<Option<_>>()?),
        Kind::Array(_, es) => Value::Collection(es.iter().map(to_value).collect::<Option<_>>()?),
        Kind::Struct(n, fs) => Value::Struct(
            n.clone(),
            fs.iter()
                .map(|(f, e)| Some((f.clone(), to_value(e)?)))
                .collect::<Option<_>>()?,
        ),
        Kind::Inject(en, c, e) => Value::Enum(en.clone(), c.clone(), Box::new(to_value(e)?)),
        _ => return None,
    })
}

pub fn outcome(t: &Term) -> Outcome {
    match &t.kind {
        Kind::Empty(_) => Outcome::Empty,
        Kind::Conflict(_) => Outcome::Conflict,
        _ => Outcome::Value(to_value(t).expect("outcome of a value term")),
    }
}

/// Converts a first-order value back into a term.
pub fn of_value(v: &Value, ty: &Type, decls: &TypeDecls) -> Term {
    let kind = match (v, ty) {
        (Value::Lit(l), _) => Kind::Lit(l.clone()),
        (Value::Tuple(vs), Type::Tuple(ts)) => Kind::Tuple(vs.iter().zip(ts).map(|(v, t)| of_value(v, t, decls)).collect()),
        (Value::Collection(vs), Type::Collection(t)) => {
            Kind::Array((**t).clone(), vs.iter().map(|v| of_value(v, t, decls)).collect())
        }
        (Value::Struct(n, fs), _) => Kind::Struct(
            n.clone(),
            fs.iter()
                .map(|(f, v)| (f.clone(), of_value(v, decls.field(n, f).expect("declared field"), decls)))
                .collect(),
        ),
        (Value::Enum(en, c, p), _) => Kind::Inject(en.clone(), c.clone(), of_value(p, decls.case(en, c).expect("declared case"), decls)),
        _ => panic!("of_value: {v} does not have type {ty}"),
    };
    mk(kind, None)
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

pub fn print(t: &Term) -> String {
    let mut s = String::new();
    pp(t, 0, &mut s);
    s
}

fn atomic(t: &Term) -> bool {
    matches!(
        t.kind,
        Kind::Var(_)
            | Kind::TopName(_)
            | Kind::Lit(_)
            | Kind::Empty(_)
            | Kind::Conflict(_)
            | Kind::Default(_)
            | Kind::Tuple(_)
            | Kind::Array(..)
            | Kind::Struct(..)
            | Kind::TupleGet(..)
            | Kind::StructGet(..)
    )
}

fn pp_atom(t: &Term, ind: usize, s: &mut String) {
    if atomic(t) {
        pp(t, ind, s);
    } else {
        s.push('(');
        pp(t, ind, s);
        s.push(')');
    }
}

fn newline(ind: usize, s: &mut String) {
    s.push('\n');
    for _ in 0..ind {
        s.push_str("  ");
    }
}

fn pp_list(ts: &[Term], sep: &str, ind: usize, s: &mut String) {
    for (i, e) in ts.iter().enumerate() {
        if i > 0 {
            s.push_str(sep);
        }
        pp(e, ind, s);
    }
}

fn pp(t: &Term, ind: usize, s: &mut String) {
    match &t.kind {
        Kind::Var(v) => s.push_str(&v.name),
        Kind::TopName(n) => s.push_str(n),
        Kind::Lit(l) => {
            let _ = write!(s, "{l}");
        }
        Kind::Empty(_) => s.push('∅'),
        Kind::Conflict(_) => s.push('⊛'),
        Kind::Lam(x, ty, b) => {
            let _ = write!(s, "fun ({}: {ty}) -> ", x.name);
            pp(b, ind, s);
        }
        Kind::App(f, a) => {
            pp_atom(f, ind, s);
            s.push(' ');
            pp_atom(a, ind, s);
        }
        Kind::Default(d) => {
            s.push('<');
            pp_list(&d.exceptions, ", ", ind, s);
            if !d.exceptions.is_empty() {
                s.push(' ');
            }
            s.push_str("| ");
            pp(&d.justification, ind, s);
            s.push_str(" :- ");
            pp(&d.consequence, ind, s);
            s.push('>');
        }
        Kind::If(c, a, b) => {
            s.push_str("if ");
            pp(c, ind, s);
            s.push_str(" then ");
            pp(a, ind, s);
            s.push_str(" else ");
            pp(b, ind, s);
        }
        Kind::Let(x, ty, e1, e2) => {
            let _ = write!(s, "let {}: {ty} = ", x.name);
            pp(e1, ind + 1, s);
            s.push_str(" in");
            newline(ind, s);
            pp(e2, ind, s);
        }
        Kind::Tuple(es) => {
            s.push('(');
            pp_list(es, ", ", ind, s);
            s.push(')');
        }
        Kind::TupleGet(e, i) => {
            pp_atom(e, ind, s);
            let _ = write!(s, ".{i}");
        }
        Kind::Struct(n, fs) => {
            let _ = write!(s, "{n} {{");
            for (f, e) in fs {
                let _ = write!(s, " -- {f}: ");
                pp(e, ind, s);
            }
            s.push_str(" }");
        }
        Kind::StructGet(e, f) => {
            pp_atom(e, ind, s);
            let _ = write!(s, ".{f}");
        }
        Kind::Inject(_, c, e) => {
            let _ = write!(s, "{c} ");
            pp_atom(e, ind, s);
        }
        Kind::Match(e, _, arms) => {
            s.push_str("match ");
            pp(e, ind, s);
            s.push_str(" with");
            for (c, x, b) in arms {
                newline(ind + 1, s);
                let _ = write!(s, "| {c} {} -> ", x.name);
                pp(b, ind + 2, s);
            }
        }
        Kind::Array(_, es) => {
            s.push('[');
            pp_list(es, "; ", ind, s);
            s.push(']');
        }
        Kind::Fold(f, a, l) => {
            s.push_str("fold_left ");
            pp_atom(f, ind, s);
            s.push(' ');
            pp_atom(a, ind, s);
            s.push(' ');
            pp_atom(l, ind, s);
        }
        Kind::Binop(op, a, b) => {
            pp_atom(a, ind, s);
            let _ = write!(s, " {op} ");
            pp_atom(b, ind, s);
        }
        Kind::Unop(op, a) => {
            s.push_str(op.symbol());
            pp_atom(a, ind, s);
        }
    }
}

pub fn print_program(p: &Program) -> String {
    let mut s = String::new();
    for (n, t) in &p.tops {
        let _ = write!(s, "let {n} =");
        newline(1, &mut s);
        pp(t, 1, &mut s);
        s.push_str("\n\n");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::build::*;
    use super::*;

    fn run(t: &Term) -> Outcome {
        let p = Program::default();
        outcome(&eval(&p, t, &EvalConfig::default()).unwrap())
    }

    fn int_v(i: i64) -> Outcome {
        Outcome::Value(Value::Lit(Lit::Int(i)))
    }

    #[test]
    fn conflict_needs_two_live_exceptions() {
        let d = default(vec![empty(), int(5), empty()], bool(true), int(0), Type::Int);
        assert_eq!(run(&d), int_v(5));
        let d = default(vec![int(3), int(4)], bool(true), int(0), Type::Int);
        assert_eq!(run(&d), Outcome::Conflict);
        let d = default(vec![empty()], bool(false), int(0), Type::Int);
        assert_eq!(run(&d), Outcome::Empty);
    }

    #[test]
    fn empty_is_contained_in_exception_slot() {
        let inner = default(vec![], bool(false), bool(true), Type::Bool);
        let d = default(vec![inner], bool(true), bool(false), Type::Bool);
        assert_eq!(run(&d), Outcome::Value(Value::Lit(Lit::Bool(false))));
    }

    #[test]
    fn empty_escapes_regular_contexts() {
        let x = Var::fresh("x");
        let t = app(lam(&x, Type::Bool, var(&x)), empty());
        assert_eq!(run(&t), Outcome::Empty);
        let t = if_(empty(), int(1), int(2));
        assert_eq!(run(&t), Outcome::Empty);
    }

    #[test]
    fn typing_errors_are_polymorphic() {
        let p = Program::default();
        let tops = IndexMap::new();
        check(&p, &tops, &empty(), &Type::Money).unwrap();
        check(&p, &tops, &conflict(), &Type::arrow(Type::Int, Type::Bool)).unwrap();
        let bad = default(vec![default(vec![], bool(true), int(1), Type::Int)], bool(true), bool(false), Type::Bool);
        assert_eq!(typecheck(&p, &tops, &bad).unwrap_err().kind, ErrorKind::Type);
    }

    #[test]
    fn fold_sums() {
        let a = Var::fresh("a");
        let x = Var::fresh("x");
        let f = lam(&a, Type::Int, lam(&x, Type::Int, binop(Op::AddInt, var(&a), var(&x))));
        let t = fold(f, int(0), array(Type::Int, vec![int(1), int(2), int(3)]));
        assert_eq!(run(&t), int_v(6));
    }

    #[test]
    fn printer() {
        let d = default(vec![empty(), int(2)], bool(true), int(0), Type::Int);
        assert_eq!(print(&d), "<∅, 2 | true :- 0>");
    }
}

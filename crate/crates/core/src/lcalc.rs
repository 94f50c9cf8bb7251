//! The target lambda calculus: no default terms, but options, lists with a
//! left fold, and exceptions `raise ε` / `try e with ε -> e'` for
//! ε ∈ {∅, ⊛}. Comes with a typechecker and a big-step evaluator over
//! closures.

use std::fmt::{self, Write as _};
use std::sync::Arc;

use indexmap::IndexMap;

use crate::dcalc::{ErrorOrigin, Var};
use crate::error::{Error, ErrorKind, Result};
use crate::ops::{Op, UOp};
use crate::pos::Pos;
use crate::value::{Lit, Name, Outcome, Type, TypeDecls, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Exn {
    Empty,
    Conflict,
}

impl fmt::Display for Exn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Exn::Empty => "∅",
            Exn::Conflict => "⊛",
        })
    }
}

#[derive(Clone, Debug)]
pub enum LKind {
    Var(Var),
    TopName(Name),
    Lit(Lit),
    Lam(Var, Type, LTerm),
    App(LTerm, LTerm),
    /// `None` at the given element type.
    NoneC(Type),
    SomeC(LTerm),
    /// `match e with None -> a | Some x -> b`
    MatchOpt(LTerm, LTerm, Var, LTerm),
    Array(Type, Vec<LTerm>),
    Fold(LTerm, LTerm, LTerm),
    Raise(Exn, Option<Arc<ErrorOrigin>>),
    Try(LTerm, Exn, LTerm),
    If(LTerm, LTerm, LTerm),
    Let(Var, Type, LTerm, LTerm),
    Tuple(Vec<LTerm>),
    TupleGet(LTerm, usize),
    Struct(Name, Vec<(Name, LTerm)>),
    StructGet(LTerm, Name),
    Inject(Name, Name, LTerm),
    Match(LTerm, Name, Vec<(Name, Var, LTerm)>),
    Binop(Op, LTerm, LTerm),
    Unop(UOp, LTerm),
}

#[derive(Debug)]
pub struct LNode {
    pub kind: LKind,
    pub pos: Option<Pos>,
}

pub type LTerm = Arc<LNode>;

pub fn mk(kind: LKind, pos: Option<Pos>) -> LTerm {
    Arc::new(LNode { kind, pos })
}

#[derive(Clone, Debug, Default)]
pub struct LProgram {
    pub decls: Arc<TypeDecls>,
    pub tops: IndexMap<Name, LTerm>,
}

// ---------------------------------------------------------------------------
// Typing
// ---------------------------------------------------------------------------

fn type_error(t: &LTerm, msg: String) -> Error {
    Error::new(ErrorKind::Type, "Type error")
        .with_message(msg)
        .with_opt_pos(None, t.pos.as_ref())
}

fn join(t: &LTerm, a: Option<Type>, b: Option<Type>) -> Result<Option<Type>> {
    match (a, b) {
        (Some(a), Some(b)) if a != b => Err(type_error(t, format!("branches have types {a} and {b}"))),
        (Some(a), _) | (None, Some(a)) => Ok(Some(a)),
        (None, None) => Ok(None),
    }
}

pub struct LTypeEnv<'a> {
    decls: &'a TypeDecls,
    tops: &'a IndexMap<Name, Type>,
    vars: Vec<(Var, Type)>,
}

impl<'a> LTypeEnv<'a> {
    pub fn new(decls: &'a TypeDecls, tops: &'a IndexMap<Name, Type>) -> Self {
        LTypeEnv {
            decls,
            tops,
            vars: Vec::new(),
        }
    }

    fn with<T>(&mut self, v: &Var, ty: Type, f: impl FnOnce(&mut Self) -> T) -> T {
        self.vars.push((v.clone(), ty));
        let r = f(self);
        self.vars.pop();
        r
    }

    pub fn check(&mut self, t: &LTerm, ty: &Type) -> Result<()> {
        self.tc(t, Some(ty)).map(|_| ())
    }

    /// Same conventions as the default-calculus checker: `None` is the type
    /// of terms that can only raise.
    pub fn tc(&mut self, t: &LTerm, expected: Option<&Type>) -> Result<Option<Type>> {
        let got = self.tc_inner(t, expected)?;
        match (&got, expected) {
            (Some(g), Some(e)) if g != e => Err(type_error(t, format!("expected {e}, found {g}"))),
            _ => Ok(got),
        }
    }

    fn tc_inner(&mut self, t: &LTerm, expected: Option<&Type>) -> Result<Option<Type>> {
        Ok(match &t.kind {
            LKind::Var(v) => Some(
                self.vars
                    .iter()
                    .rev()
                    .find(|(x, _)| x == v)
                    .map(|(_, t)| t.clone())
                    .ok_or_else(|| type_error(t, format!("unbound variable {}", v.name)))?,
            ),
            LKind::TopName(n) => Some(
                self.tops
                    .get(n)
                    .cloned()
                    .ok_or_else(|| type_error(t, format!("unknown top-level name {n}")))?,
            ),
            LKind::Lit(l) => Some(l.ty()),
            LKind::Raise(..) => None,
            LKind::Lam(x, ty, body) => {
                let ret_expected = match expected {
                    Some(Type::Arrow(a, b)) if **a == *ty => Some((**b).clone()),
                    _ => None,
                };
                let ret = self.with(x, ty.clone(), |env| env.tc(body, ret_expected.as_ref()))?;
                ret.or(ret_expected).map(|r| Type::arrow(ty.clone(), r))
            }
            LKind::App(f, a) => match self.tc(f, None)? {
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
            LKind::NoneC(ty) => Some(Type::Option(Box::new(ty.clone()))),
            LKind::SomeC(e) => {
                let inner = match expected {
                    Some(Type::Option(t)) => Some((**t).clone()),
                    _ => None,
                };
                let ty = self.tc(e, inner.as_ref())?;
                ty.or(inner).map(|t| Type::Option(Box::new(t)))
            }
            LKind::MatchOpt(e, none, x, some) => {
                let inner = match self.tc(e, None)? {
                    Some(Type::Option(t)) => *t,
                    Some(other) => return Err(type_error(e, format!("expected an option, found {other}"))),
                    None => return Err(type_error(e, "cannot infer the option type of this match".into())),
                };
                let a = self.tc(none, expected)?;
                let exp = expected.cloned().or(a.clone());
                let b = self.with(x, inner, |env| env.tc(some, exp.as_ref()))?;
                join(t, a, b)?
            }
            LKind::Array(ty, es) => {
                for e in es {
                    self.check(e, ty)?;
                }
                Some(Type::collection(ty.clone()))
            }
            LKind::Fold(f, acc, l) => {
                let ft = self.tc(f, None)?;
                let (acc_ty, elem_ty) = match &ft {
                    Some(Type::Arrow(a, rest)) => match &**rest {
                        Type::Arrow(x, r) if **r == **a => ((**a).clone(), (**x).clone()),
                        _ => return Err(type_error(f, format!("fold function has type {}", ft.as_ref().unwrap()))),
                    },
                    Some(other) => return Err(type_error(f, format!("fold function has type {other}"))),
                    None => {
                        self.tc(acc, None)?;
                        self.tc(l, None)?;
                        return Ok(None);
                    }
                };
                self.check(acc, &acc_ty)?;
                self.check(l, &Type::collection(elem_ty))?;
                Some(acc_ty)
            }
            LKind::Try(e, _, h) => {
                let a = self.tc(e, expected)?;
                let exp = expected.cloned().or(a.clone());
                let b = self.tc(h, exp.as_ref())?;
                join(t, a, b)?
            }
            LKind::If(c, a, b) => {
                self.check(c, &Type::Bool)?;
                let ta = self.tc(a, expected)?;
                let tb = self.tc(b, expected.or(ta.as_ref()))?;
                join(t, ta, tb)?
            }
            LKind::Let(x, ty, e1, e2) => {
                self.check(e1, ty)?;
                self.with(x, ty.clone(), |env| env.tc(e2, expected))?
            }
            LKind::Tuple(es) => {
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
            LKind::TupleGet(e, i) => match self.tc(e, None)? {
                None => None,
                Some(Type::Tuple(ts)) if *i < ts.len() => Some(ts[*i].clone()),
                Some(other) => return Err(type_error(t, format!("cannot project component {i} of {other}"))),
            },
            LKind::Struct(name, fields) => {
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
            LKind::StructGet(e, f) => match self.tc(e, None)? {
                None => None,
                Some(Type::Struct(s)) => Some(
                    self.decls
                        .field(&s, f)
                        .cloned()
                        .ok_or_else(|| type_error(t, format!("structure {s} has no field {f}")))?,
                ),
                Some(other) => return Err(type_error(t, format!("expected a structure, found {other}"))),
            },
            LKind::Inject(en, c, e) => {
                let ty = self
                    .decls
                    .case(en, c)
                    .cloned()
                    .ok_or_else(|| type_error(t, format!("{en} has no constructor {c}")))?;
                self.check(e, &ty)?;
                Some(Type::Enum(en.clone()))
            }
            LKind::Match(e, en, arms) => {
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
            LKind::Binop(op, a, b) => match op.signature() {
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
            LKind::Unop(op, a) => {
                let (ta, tr) = op.signature();
                self.check(a, &ta)?;
                Some(tr)
            }
        })
    }
}

pub fn type_program(p: &LProgram) -> Result<IndexMap<Name, Type>> {
    let mut tops = IndexMap::new();
    for (name, t) in &p.tops {
        let ty = LTypeEnv::new(&p.decls, &tops)
            .tc(t, None)?
            .ok_or_else(|| type_error(t, format!("cannot infer the type of {name}")))?;
        tops.insert(name.clone(), ty);
    }
    Ok(tops)
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct Closure {
    env: Env,
    var: Var,
    body: LTerm,
}

#[derive(Clone, Debug)]
pub enum LValue {
    Lit(Lit),
    Closure(Arc<Closure>),
    Tuple(Arc<[LValue]>),
    Struct(Name, Arc<[(Name, LValue)]>),
    Inject(Name, Name, Arc<LValue>),
    Array(Arc<[LValue]>),
    Opt(Option<Arc<LValue>>),
}

impl LValue {
    pub fn to_value(&self) -> Value {
        match self {
            LValue::Lit(l) => Value::Lit(l.clone()),
            LValue::Closure(_) => Value::Function,
            LValue::Tuple(vs) => Value::Tuple(vs.iter().map(LValue::to_value).collect()),
            LValue::Struct(n, fs) => Value::Struct(n.clone(), fs.iter().map(|(f, v)| (f.clone(), v.to_value())).collect()),
            LValue::Inject(e, c, v) => Value::Enum(e.clone(), c.clone(), Box::new(v.to_value())),
            LValue::Array(vs) => Value::Collection(vs.iter().map(LValue::to_value).collect()),
            LValue::Opt(o) => Value::Option(o.as_ref().map(|v| Box::new(v.to_value()))),
        }
    }

    pub fn from_value(v: &Value) -> LValue {
        match v {
            Value::Lit(l) => LValue::Lit(l.clone()),
            Value::Tuple(vs) => LValue::Tuple(vs.iter().map(LValue::from_value).collect()),
            Value::Struct(n, fs) => LValue::Struct(n.clone(), fs.iter().map(|(f, v)| (f.clone(), LValue::from_value(v))).collect()),
            Value::Enum(e, c, v) => LValue::Inject(e.clone(), c.clone(), Arc::new(LValue::from_value(v))),
            Value::Collection(vs) => LValue::Array(vs.iter().map(LValue::from_value).collect()),
            Value::Option(o) => LValue::Opt(o.as_ref().map(|v| Arc::new(LValue::from_value(v)))),
            Value::Function => panic!("functions have no first-order representation"),
        }
    }
}

type Env = Option<Arc<EnvCell>>;

#[derive(Debug)]
pub struct EnvCell {
    id: u32,
    value: LValue,
    next: Env,
}

fn extend(env: &Env, v: &Var, value: LValue) -> Env {
    Some(Arc::new(EnvCell {
        id: v.id,
        value,
        next: env.clone(),
    }))
}

fn lookup(env: &Env, v: &Var) -> Option<LValue> {
    let mut cur = env;
    while let Some(c) = cur {
        if c.id == v.id {
            return Some(c.value.clone());
        }
        cur = &c.next;
    }
    None
}

#[derive(Clone, Debug)]
pub enum LError {
    Raised(Exn, Option<Arc<ErrorOrigin>>),
    Fault { message: String, pos: Option<Pos> },
    Diverged(u64),
    Stuck(String),
}

impl fmt::Display for LError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LError::Raised(e, _) => write!(f, "uncaught exception {e}"),
            LError::Fault { message, .. } => f.write_str(message),
            LError::Diverged(n) => write!(f, "evaluation exceeded {n} steps"),
            LError::Stuck(s) => write!(f, "stuck: {s}"),
        }
    }
}

type R<T> = std::result::Result<T, LError>;

pub struct LMachine {
    tops: IndexMap<Name, LValue>,
    steps: u64,
    max_steps: u64,
}

fn stuck<T>(msg: &str) -> R<T> {
    Err(LError::Stuck(msg.to_owned()))
}

impl LMachine {
    pub fn new(p: &LProgram, max_steps: u64) -> R<LMachine> {
        let mut m = LMachine {
            tops: IndexMap::new(),
            steps: 0,
            max_steps,
        };
        for (n, t) in &p.tops {
            let v = m.eval(t, &None)?;
            m.tops.insert(n.clone(), v);
        }
        Ok(m)
    }

    pub fn top(&self, name: &str) -> Option<&LValue> {
        self.tops.get(name)
    }

    fn tick(&mut self) -> R<()> {
        self.steps += 1;
        if self.steps > self.max_steps {
            return Err(LError::Diverged(self.max_steps));
        }
        Ok(())
    }

    pub fn apply(&mut self, f: &LValue, arg: LValue) -> R<LValue> {
        match f {
            LValue::Closure(c) => {
                let env = extend(&c.env, &c.var, arg);
                self.eval(&c.body.clone(), &env)
            }
            _ => stuck("application of a non-function"),
        }
    }

    /// Evaluates `t` in `env`. Tail positions loop instead of recursing.
    pub fn eval(&mut self, t: &LTerm, env: &Env) -> R<LValue> {
        let mut t = t.clone();
        let mut env = env.clone();
        loop {
            self.tick()?;
            let next: (LTerm, Env) = match &t.kind {
                LKind::Var(v) => return lookup(&env, v).map_or_else(|| stuck(&format!("free variable {}", v.name)), Ok),
                LKind::TopName(n) => {
                    return self.tops.get(n).cloned().map_or_else(|| stuck(&format!("unknown top-level {n}")), Ok)
                }
                LKind::Lit(l) => return Ok(LValue::Lit(l.clone())),
                LKind::Lam(x, _, body) => {
                    return Ok(LValue::Closure(Arc::new(Closure {
                        env: env.clone(),
                        var: x.clone(),
                        body: body.clone(),
                    })))
                }
                LKind::App(f, a) => {
                    let fv = self.eval(f, &env)?;
                    let av = self.eval(a, &env)?;
                    match fv {
                        LValue::Closure(c) => (c.body.clone(), extend(&c.env, &c.var, av)),
                        _ => return stuck("application of a non-function"),
                    }
                }
                LKind::NoneC(_) => return Ok(LValue::Opt(None)),
                LKind::SomeC(e) => return Ok(LValue::Opt(Some(Arc::new(self.eval(e, &env)?)))),
                LKind::MatchOpt(e, none, x, some) => match self.eval(e, &env)? {
                    LValue::Opt(None) => (none.clone(), env.clone()),
                    LValue::Opt(Some(v)) => (some.clone(), extend(&env, x, (*v).clone())),
                    _ => return stuck("option match on a non-option"),
                },
                LKind::Array(_, es) => {
                    let vs = es.iter().map(|e| self.eval(e, &env)).collect::<R<Vec<_>>>()?;
                    return Ok(LValue::Array(vs.into()));
                }
                LKind::Fold(f, acc, l) => {
                    let fv = self.eval(f, &env)?;
                    let mut accv = self.eval(acc, &env)?;
                    let LValue::Array(items) = self.eval(l, &env)? else {
                        return stuck("fold over a non-list");
                    };
                    for x in items.iter() {
                        let partial = self.apply(&fv, accv)?;
                        accv = self.apply(&partial, x.clone())?;
                    }
                    return Ok(accv);
                }
                LKind::Raise(e, o) => return Err(LError::Raised(*e, o.clone())),
                LKind::Try(e, exn, h) => match self.eval(e, &env) {
                    Err(LError::Raised(raised, _)) if raised == *exn => (h.clone(), env.clone()),
                    r => return r,
                },
                LKind::If(c, a, b) => match self.eval(c, &env)? {
                    LValue::Lit(Lit::Bool(true)) => (a.clone(), env.clone()),
                    LValue::Lit(Lit::Bool(false)) => (b.clone(), env.clone()),
                    _ => return stuck("non-boolean condition"),
                },
                LKind::Let(x, _, e1, e2) => {
                    let v = self.eval(e1, &env)?;
                    (e2.clone(), extend(&env, x, v))
                }
                LKind::Tuple(es) => {
                    let vs = es.iter().map(|e| self.eval(e, &env)).collect::<R<Vec<_>>>()?;
                    return Ok(LValue::Tuple(vs.into()));
                }
                LKind::TupleGet(e, i) => match self.eval(e, &env)? {
                    LValue::Tuple(vs) if *i < vs.len() => return Ok(vs[*i].clone()),
                    _ => return stuck("bad tuple projection"),
                },
                LKind::Struct(n, fs) => {
                    let vs = fs
                        .iter()
                        .map(|(f, e)| Ok((f.clone(), self.eval(e, &env)?)))
                        .collect::<R<Vec<_>>>()?;
                    return Ok(LValue::Struct(n.clone(), vs.into()));
                }
                LKind::StructGet(e, f) => match self.eval(e, &env)? {
                    LValue::Struct(_, fs) => {
                        return fs
                            .iter()
                            .find(|(n, _)| n == f)
                            .map(|(_, v)| v.clone())
                            .map_or_else(|| stuck("missing field"), Ok)
                    }
                    _ => return stuck("field access on a non-structure"),
                },
                LKind::Inject(en, c, e) => {
                    let v = self.eval(e, &env)?;
                    return Ok(LValue::Inject(en.clone(), c.clone(), Arc::new(v)));
                }
                LKind::Match(e, _, arms) => match self.eval(e, &env)? {
                    LValue::Inject(_, c, payload) => {
                        let Some((_, x, body)) = arms.iter().find(|(n, _, _)| *n == c) else {
                            return stuck("no matching arm");
                        };
                        (body.clone(), extend(&env, x, (*payload).clone()))
                    }
                    _ => return stuck("match on a non-enumeration"),
                },
                LKind::Binop(op, a, b) => {
                    let va = self.eval(a, &env)?;
                    let vb = self.eval(b, &env)?;
                    let fault = |message: String| LError::Fault {
                        message,
                        pos: t.pos.clone(),
                    };
                    let r = match op {
                        Op::Eq | Op::Neq => Lit::Bool((va.to_value() == vb.to_value()) == (*op == Op::Eq)),
                        _ => match (&va, &vb) {
                            (LValue::Lit(x), LValue::Lit(y)) => op.apply(x, y).map_err(fault)?,
                            _ => return stuck("operator on non-literals"),
                        },
                    };
                    return Ok(LValue::Lit(r));
                }
                LKind::Unop(op, a) => match self.eval(a, &env)? {
                    LValue::Lit(x) => {
                        return op.apply(&x).map(LValue::Lit).map_err(|message| LError::Fault {
                            message,
                            pos: t.pos.clone(),
                        })
                    }
                    _ => return stuck("operator on a non-literal"),
                },
            };
            t = next.0;
            env = next.1;
        }
    }
}

/// Evaluates a closed term against a program.
pub fn eval(p: &LProgram, t: &LTerm, max_steps: u64) -> R<LValue> {
    let mut m = LMachine::new(p, max_steps)?;
    m.eval(t, &None)
}

/// Value / ∅ / ⊛; faults and divergence stay errors.
pub fn outcome(r: R<LValue>) -> R<Outcome> {
    match r {
        Ok(v) => Ok(Outcome::Value(v.to_value())),
        Err(LError::Raised(Exn::Empty, _)) => Ok(Outcome::Empty),
        Err(LError::Raised(Exn::Conflict, _)) => Ok(Outcome::Conflict),
        Err(e) => Err(e),
    }
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

fn atomic(t: &LTerm) -> bool {
    matches!(
        t.kind,
        LKind::Var(_)
            | LKind::TopName(_)
            | LKind::Lit(_)
            | LKind::NoneC(_)
            | LKind::Tuple(_)
            | LKind::Array(..)
            | LKind::Struct(..)
            | LKind::TupleGet(..)
            | LKind::StructGet(..)
    )
}

fn newline(ind: usize, s: &mut String) {
    s.push('\n');
    for _ in 0..ind {
        s.push_str("  ");
    }
}

fn pp_atom(t: &LTerm, ind: usize, s: &mut String) {
    if atomic(t) {
        pp(t, ind, s);
    } else {
        s.push('(');
        pp(t, ind, s);
        s.push(')');
    }
}

fn pp(t: &LTerm, ind: usize, s: &mut String) {
    match &t.kind {
        LKind::Var(v) => s.push_str(&v.name),
        LKind::TopName(n) => s.push_str(n),
        LKind::Lit(l) => {
            let _ = write!(s, "{l}");
        }
        LKind::Lam(x, ty, b) => {
            let _ = write!(s, "fun ({}: {ty}) -> ", x.name);
            pp(b, ind, s);
        }
        LKind::App(f, a) => {
            pp_atom(f, ind, s);
            s.push(' ');
            pp_atom(a, ind, s);
        }
        LKind::NoneC(_) => s.push_str("None"),
        LKind::SomeC(e) => {
            s.push_str("Some ");
            pp_atom(e, ind, s);
        }
        LKind::MatchOpt(e, none, x, some) => {
            s.push_str("match ");
            pp(e, ind, s);
            s.push_str(" with");
            newline(ind + 1, s);
            s.push_str("| None -> ");
            pp(none, ind + 2, s);
            newline(ind + 1, s);
            let _ = write!(s, "| Some {} -> ", x.name);
            pp(some, ind + 2, s);
        }
        LKind::Array(_, es) => {
            s.push('[');
            for (i, e) in es.iter().enumerate() {
                if i > 0 {
                    s.push_str("; ");
                }
                pp(e, ind, s);
            }
            s.push(']');
        }
        LKind::Fold(f, a, l) => {
            s.push_str("fold_left ");
            pp_atom(f, ind, s);
            s.push(' ');
            pp_atom(a, ind, s);
            s.push(' ');
            pp_atom(l, ind, s);
        }
        LKind::Raise(e, _) => {
            let _ = write!(s, "raise {e}");
        }
        LKind::Try(e, exn, h) => {
            s.push_str("try ");
            pp(e, ind + 1, s);
            let _ = write!(s, " with {exn} -> ");
            pp(h, ind + 1, s);
        }
        LKind::If(c, a, b) => {
            s.push_str("if ");
            pp(c, ind, s);
            s.push_str(" then ");
            pp(a, ind, s);
            s.push_str(" else ");
            pp(b, ind, s);
        }
        LKind::Let(x, ty, e1, e2) => {
            let _ = write!(s, "let {}: {ty} = ", x.name);
            pp(e1, ind + 1, s);
            s.push_str(" in");
            newline(ind, s);
            pp(e2, ind, s);
        }
        LKind::Tuple(es) => {
            s.push('(');
            for (i, e) in es.iter().enumerate() {
                if i > 0 {
                    s.push_str(", ");
                }
                pp(e, ind, s);
            }
            s.push(')');
        }
        LKind::TupleGet(e, i) => {
            pp_atom(e, ind, s);
            let _ = write!(s, ".{i}");
        }
        LKind::Struct(n, fs) => {
            let _ = write!(s, "{n} {{");
            for (f, e) in fs {
                let _ = write!(s, " -- {f}: ");
                pp(e, ind, s);
            }
            s.push_str(" }");
        }
        LKind::StructGet(e, f) => {
            pp_atom(e, ind, s);
            let _ = write!(s, ".{f}");
        }
        LKind::Inject(_, c, e) => {
            let _ = write!(s, "{c} ");
            pp_atom(e, ind, s);
        }
        LKind::Match(e, _, arms) => {
            s.push_str("match ");
            pp(e, ind, s);
            s.push_str(" with");
            for (c, x, b) in arms {
                newline(ind + 1, s);
                let _ = write!(s, "| {c} {} -> ", x.name);
                pp(b, ind + 2, s);
            }
        }
        LKind::Binop(op, a, b) => {
            pp_atom(a, ind, s);
            let _ = write!(s, " {op} ");
            pp_atom(b, ind, s);
        }
        LKind::Unop(op, a) => {
            s.push_str(op.symbol());
            pp_atom(a, ind, s);
        }
    }
}

pub fn print(t: &LTerm) -> String {
    let mut s = String::new();
    pp(t, 0, &mut s);
    s
}

pub fn print_program(p: &LProgram) -> String {
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
    use super::*;

    fn lit(l: Lit) -> LTerm {
        mk(LKind::Lit(l), None)
    }

    #[test]
    fn try_catches_only_its_exception() {
        let p = LProgram::default();
        let t = mk(LKind::Try(mk(LKind::Raise(Exn::Empty, None), None), Exn::Empty, lit(Lit::Bool(true))), None);
        assert_eq!(outcome(eval(&p, &t, 1000)).unwrap(), Outcome::Value(Value::Lit(Lit::Bool(true))));
        let t = mk(LKind::Try(mk(LKind::Raise(Exn::Conflict, None), None), Exn::Empty, lit(Lit::Bool(true))), None);
        assert_eq!(outcome(eval(&p, &t, 1000)).unwrap(), Outcome::Conflict);
    }

    #[test]
    fn fold_sums() {
        let p = LProgram::default();
        let a = Var::fresh("a");
        let x = Var::fresh("x");
        let f = mk(
            LKind::Lam(
                a.clone(),
                Type::Int,
                mk(
                    LKind::Lam(
                        x.clone(),
                        Type::Int,
                        mk(LKind::Binop(Op::AddInt, mk(LKind::Var(a), None), mk(LKind::Var(x), None)), None),
                    ),
                    None,
                ),
            ),
            None,
        );
        let l = mk(LKind::Array(Type::Int, (1..=3).map(|i| lit(Lit::Int(i))).collect()), None);
        let t = mk(LKind::Fold(f, lit(Lit::Int(0)), l), None);
        assert_eq!(outcome(eval(&p, &t, 1000)).unwrap(), Outcome::Value(Value::Lit(Lit::Int(6))));
    }

    #[test]
    fn raise_is_polymorphic() {
        let decls = TypeDecls::default();
        let tops = IndexMap::new();
        let t = mk(LKind::Raise(Exn::Empty, None), None);
        LTypeEnv::new(&decls, &tops).check(&t, &Type::Money).unwrap();
        let t = mk(LKind::SomeC(lit(Lit::Bool(true))), None);
        assert_eq!(
            LTypeEnv::new(&decls, &tops).tc(&t, None).unwrap(),
            Some(Type::Option(Box::new(Type::Bool)))
        );
        let bad = mk(LKind::Array(Type::Int, vec![lit(Lit::Int(1)), lit(Lit::Bool(true))]), None);
        assert!(LTypeEnv::new(&decls, &tops).tc(&bad, None).is_err());
    }
}

//! The scope language: per-scope lists of definition and call atoms over
//! locations `x` and `S_n[x]`, produced from the desugared program by name
//! resolution, typing, and the two topological sorts.

use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt::Write as _;
use std::sync::Arc;

use indexmap::IndexMap;
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::dcalc::{self, mk, DefaultMeta, DefaultRole, DefaultTerm, ErrorOrigin, Kind, Term, Var};
use crate::desugar::{DefaultExpr, DesugaredScope};
use crate::error::{Error, ErrorKind, Result};
use crate::literate::LiterateDocument;
use crate::ops::{Op, UOp};
use crate::pos::Pos;
use crate::surface::{self, BinOp, Consequence, ContextKind, Expr, ExprKind, OpKind, SurfaceLoc, SurfaceProgram, SurfaceType, UnOp};
use crate::value::{Lit, Name, Type, TypeDecls};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Location {
    Var(Name),
    /// Variable of the sub-scope instance with the given index.
    Sub(usize, Name),
}

#[derive(Clone, Debug)]
pub struct VarDecl {
    pub name: Name,
    pub ty: Type,
    pub pos: Pos,
}

#[derive(Clone, Debug)]
pub struct SubScope {
    /// Name of the context variable holding the instance.
    pub name: Name,
    pub callee: Name,
    /// `<Callee>_<k>`, numbered per callee in declaration order.
    pub id: String,
    pub pos: Pos,
}

#[derive(Clone, Debug)]
pub enum Atom {
    Def {
        loc: Location,
        ty: Type,
        /// Reads of locations appear as the placeholder variables of
        /// `Scope::placeholders`.
        default: Term,
        pos: Pos,
    },
    Call(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GraphNode {
    Var(usize),
    Sub(usize),
}

#[derive(Clone, Debug)]
pub struct Scope {
    pub name: Name,
    pub pos: Pos,
    /// Local (non-sub-scope) context variables in declaration order.
    pub vars: Vec<VarDecl>,
    pub subs: Vec<SubScope>,
    pub atoms: Vec<Atom>,
    /// Dependency edges with the position of the read causing them.
    pub edges: Vec<(GraphNode, GraphNode, Pos)>,
    pub placeholders: IndexMap<Location, Var>,
}

impl Scope {
    pub fn location_name(&self, loc: &Location) -> String {
        match loc {
            Location::Var(x) => x.to_string(),
            Location::Sub(i, x) => format!("{}.{x}", self.subs[*i].name),
        }
    }

    fn node_name(&self, n: GraphNode) -> String {
        match n {
            GraphNode::Var(i) => self.vars[i].name.to_string(),
            GraphNode::Sub(i) => self.subs[i].id.clone(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ScopeProgram {
    pub decls: Arc<TypeDecls>,
    /// Callees before callers.
    pub scopes: Vec<Scope>,
}

impl ScopeProgram {
    pub fn scope(&self, name: &str) -> Option<&Scope> {
        self.scopes.iter().find(|s| &*s.name == name)
    }
}

// ---------------------------------------------------------------------------
// Declarations
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
enum CtxInfo {
    Data(Type, Option<Type>),
    Sub(Name),
}

#[derive(Clone, Debug)]
struct ScopeInfo {
    pos: Pos,
    contexts: IndexMap<Name, (CtxInfo, Pos)>,
}

fn resolution(title: String, pos: &Pos) -> Error {
    Error::at(ErrorKind::Resolution, title, pos)
}

fn lower_type(t: &SurfaceType, decls: &TypeDecls, pos: &Pos) -> Result<Type> {
    Ok(match t {
        SurfaceType::Boolean => Type::Bool,
        SurfaceType::Integer => Type::Int,
        SurfaceType::Money => Type::Money,
        SurfaceType::Date => Type::Date,
        SurfaceType::Duration => Type::Duration,
        SurfaceType::Collection(t) => Type::collection(lower_type(t, decls, pos)?),
        SurfaceType::Named(n) if decls.structs.contains_key(n.as_str()) => Type::Struct(n.as_str().into()),
        SurfaceType::Named(n) if decls.enums.contains_key(n.as_str()) => Type::Enum(n.as_str().into()),
        SurfaceType::Named(n) => return Err(resolution(format!("Unknown type {n}"), pos)),
    })
}

fn lower_decls(prog: &SurfaceProgram) -> Result<(TypeDecls, HashMap<Name, Name>)> {
    let mut decls = TypeDecls::default();
    let mut seen: HashMap<&str, &Pos> = HashMap::new();
    for (name, pos) in prog
        .structs
        .iter()
        .map(|s| (&s.name.node, &s.name.pos))
        .chain(prog.enums.iter().map(|e| (&e.name.node, &e.name.pos)))
        .chain(prog.scopes.iter().map(|s| (&s.name.node, &s.name.pos)))
    {
        if let Some(prev) = seen.insert(name, pos) {
            return Err(resolution(format!("{name} is declared twice"), pos).with_pos(Some("First declaration"), prev));
        }
    }
    // Register names first so declarations may refer to each other.
    for s in &prog.structs {
        decls.structs.insert(s.name.node.as_str().into(), Vec::new());
    }
    for e in &prog.enums {
        decls.enums.insert(e.name.node.as_str().into(), Vec::new());
    }
    for s in &prog.structs {
        let mut fields: Vec<(Name, Type)> = Vec::new();
        for (f, t) in &s.fields {
            if fields.iter().any(|(n, _)| **n == *f.node) {
                return Err(resolution(format!("Field {} of {} is declared twice", f.node, s.name.node), &f.pos));
            }
            fields.push((f.node.as_str().into(), lower_type(t, &decls, &f.pos)?));
        }
        decls.structs.insert(s.name.node.as_str().into(), fields);
    }
    let mut ctor_enum: HashMap<Name, Name> = HashMap::new();
    for e in &prog.enums {
        let mut cases = Vec::new();
        for (c, t) in &e.cases {
            let en: Name = e.name.node.as_str().into();
            if let Some(prev) = ctor_enum.insert(c.node.as_str().into(), en) {
                return Err(resolution(format!("Constructor {} is already declared in {prev}", c.node), &c.pos));
            }
            let ty = match t {
                Some(t) => lower_type(t, &decls, &c.pos)?,
                None => Type::Unit,
            };
            cases.push((c.node.as_str().into(), ty));
        }
        decls.enums.insert(e.name.node.as_str().into(), cases);
    }
    Ok((decls, ctor_enum))
}

fn scope_infos(prog: &SurfaceProgram, decls: &TypeDecls) -> Result<IndexMap<Name, ScopeInfo>> {
    let names: HashSet<&str> = prog.scopes.iter().map(|s| s.name.node.as_str()).collect();
    let mut out = IndexMap::new();
    for s in &prog.scopes {
        let mut contexts: IndexMap<Name, (CtxInfo, Pos)> = IndexMap::new();
        for c in &s.contexts {
            let info = match &c.kind {
                ContextKind::Content(t) => {
                    let dep = c.depends_on.as_ref().map(|d| lower_type(d, decls, &c.pos)).transpose()?;
                    CtxInfo::Data(lower_type(t, decls, &c.pos)?, dep)
                }
                ContextKind::Condition => {
                    let dep = c.depends_on.as_ref().map(|d| lower_type(d, decls, &c.pos)).transpose()?;
                    CtxInfo::Data(Type::Bool, dep)
                }
                ContextKind::SubScope(callee) => {
                    if !names.contains(callee.node.as_str()) {
                        return Err(resolution(format!("Unknown scope {}", callee.node), &callee.pos));
                    }
                    CtxInfo::Sub(callee.node.as_str().into())
                }
            };
            if let Some((_, prev)) = contexts.insert(c.name.node.as_str().into(), (info, c.pos.clone())) {
                return Err(resolution(format!("Context variable {} is declared twice in {}", c.name.node, s.name.node), &c.pos)
                    .with_pos(Some("First declaration"), &prev));
            }
        }
        out.insert(
            s.name.node.as_str().into(),
            ScopeInfo {
                pos: s.name.pos.clone(),
                contexts,
            },
        );
    }
    Ok(out)
}

fn full_type(info: &CtxInfo) -> Option<Type> {
    match info {
        CtxInfo::Data(t, None) => Some(t.clone()),
        CtxInfo::Data(t, Some(d)) => Some(Type::arrow(d.clone(), t.clone())),
        CtxInfo::Sub(_) => None,
    }
}

// ---------------------------------------------------------------------------
// Expressions
// ---------------------------------------------------------------------------

struct Elab<'a> {
    decls: &'a TypeDecls,
    ctor_enum: &'a HashMap<Name, Name>,
    infos: &'a IndexMap<Name, ScopeInfo>,
    scope: &'a Scope,
    sub_index: &'a HashMap<Name, usize>,
    lexical: Vec<(String, Var, Type)>,
    mentions: Vec<(Location, Pos)>,
}

fn type_mismatch(pos: &Pos, expected: &Type, found: &Type) -> Error {
    Error::at(ErrorKind::Type, "Type error", pos).with_message(format!("expected {expected}, found {found}"))
}

impl Elab<'_> {
    fn loc_type(&self, loc: &Location) -> Type {
        match loc {
            Location::Var(x) => self.scope.vars.iter().find(|v| v.name == *x).unwrap().ty.clone(),
            Location::Sub(i, x) => {
                let callee = &self.infos[&self.scope.subs[*i].callee];
                full_type(&callee.contexts[x].0).unwrap()
            }
        }
    }

    fn read(&mut self, loc: Location, pos: &Pos) -> (Term, Type) {
        let ty = self.loc_type(&loc);
        let v = self.scope.placeholders[&loc].clone();
        self.mentions.push((loc, pos.clone()));
        (mk(Kind::Var(v), Some(pos.clone())), ty)
    }

    fn bind<T>(&mut self, name: &str, v: &Var, ty: Type, f: impl FnOnce(&mut Self) -> T) -> T {
        self.lexical.push((name.to_owned(), v.clone(), ty));
        let r = f(self);
        self.lexical.pop();
        r
    }

    fn check(&mut self, e: &Expr, ty: &Type) -> Result<Term> {
        let (t, found) = self.elab(e, Some(ty))?;
        if found != *ty {
            return Err(type_mismatch(&e.pos, ty, &found));
        }
        Ok(t)
    }

    fn elab(&mut self, e: &Expr, expected: Option<&Type>) -> Result<(Term, Type)> {
        let pos = &e.pos;
        let at = |k: Kind| mk(k, Some(pos.clone()));
        let lit = |l: Lit| {
            let ty = l.ty();
            (mk(Kind::Lit(l), Some(pos.clone())), ty)
        };
        Ok(match &e.node {
            ExprKind::Bool(b) => lit(Lit::Bool(*b)),
            ExprKind::Int(i) => lit(Lit::Int(*i)),
            ExprKind::Money(m) => lit(Lit::Money(*m)),
            ExprKind::Date(d) => lit(Lit::Date(*d)),
            ExprKind::Duration(d) => lit(Lit::Duration(*d)),
            ExprKind::Var(x) => {
                if let Some((_, v, ty)) = self.lexical.iter().rev().find(|(n, _, _)| n == x) {
                    (at(Kind::Var(v.clone())), ty.clone())
                } else if self.sub_index.contains_key(x.as_str()) {
                    return Err(Error::at(ErrorKind::Type, "Type error", pos)
                        .with_message(format!("{x} is a sub-scope; only its variables can be read, as {x}.<variable>")));
                } else if self.scope.vars.iter().any(|v| *v.name == **x) {
                    self.read(Location::Var(x.as_str().into()), pos)
                } else {
                    return Err(resolution(format!("Unknown variable {x}"), pos));
                }
            }
            ExprKind::Dot(inner, field) => {
                if let ExprKind::Var(x) = &inner.node {
                    let shadowed = self.lexical.iter().any(|(n, _, _)| n == x);
                    if let (false, Some(&i)) = (shadowed, self.sub_index.get(x.as_str())) {
                        let callee = &self.infos[&self.scope.subs[i].callee];
                        return match callee.contexts.get(field.node.as_str()) {
                            Some((CtxInfo::Data(..), _)) => Ok(self.read(Location::Sub(i, field.node.as_str().into()), pos)),
                            Some((CtxInfo::Sub(_), _)) => Err(Error::at(ErrorKind::Unsupported, "Sub-scopes of sub-scopes cannot be accessed", pos)),
                            None => Err(resolution(
                                format!("Scope {} has no context variable {}", self.scope.subs[i].callee, field.node),
                                &field.pos,
                            )),
                        };
                    }
                }
                let (t, ty) = self.elab(inner, None)?;
                let Type::Struct(s) = &ty else {
                    return Err(Error::at(ErrorKind::Type, "Type error", &inner.pos)
                        .with_message(format!("expected a structure, found {ty}")));
                };
                let fty = self
                    .decls
                    .field(s, &field.node)
                    .ok_or_else(|| resolution(format!("Structure {s} has no field {}", field.node), &field.pos))?
                    .clone();
                (at(Kind::StructGet(t, field.node.as_str().into())), fty)
            }
            ExprKind::StructLit(name, fields) => {
                let decl = self
                    .decls
                    .structs
                    .get(name.node.as_str())
                    .ok_or_else(|| resolution(format!("Unknown structure {}", name.node), &name.pos))?
                    .clone();
                for (f, _) in fields {
                    if !decl.iter().any(|(n, _)| **n == *f.node) {
                        return Err(resolution(format!("Structure {} has no field {}", name.node, f.node), &f.pos));
                    }
                }
                let mut out = Vec::new();
                for (fname, fty) in &decl {
                    let given: Vec<_> = fields.iter().filter(|(f, _)| *f.node == **fname).collect();
                    match given.as_slice() {
                        [(_, fe)] => out.push((fname.clone(), self.check(fe, fty)?)),
                        [] => return Err(resolution(format!("Field {fname} of {} is missing", name.node), pos)),
                        [_, (f, _), ..] => return Err(resolution(format!("Field {fname} is given twice"), &f.pos)),
                    }
                }
                (at(Kind::Struct(name.node.as_str().into(), out)), Type::Struct(name.node.as_str().into()))
            }
            ExprKind::EnumLit(c, payload) => {
                let en = self
                    .ctor_enum
                    .get(c.node.as_str())
                    .ok_or_else(|| resolution(format!("Unknown constructor {}", c.node), &c.pos))?
                    .clone();
                let cty = self.decls.case(&en, &c.node).unwrap().clone();
                let p = match (payload, &cty) {
                    (None, Type::Unit) => mk(Kind::Lit(Lit::Unit), Some(pos.clone())),
                    (None, _) => {
                        return Err(Error::at(ErrorKind::Type, "Type error", pos)
                            .with_message(format!("constructor {} expects a content of type {cty}", c.node)))
                    }
                    (Some(p), Type::Unit) => {
                        return Err(Error::at(ErrorKind::Type, "Type error", &p.pos)
                            .with_message(format!("constructor {} has no content", c.node)))
                    }
                    (Some(p), _) => self.check(p, &cty)?,
                };
                (at(Kind::Inject(en.clone(), c.node.as_str().into(), p)), Type::Enum(en))
            }
            ExprKind::Match(scrut, arms) => {
                let (st, sty) = self.elab(scrut, None)?;
                let Type::Enum(en) = &sty else {
                    return Err(Error::at(ErrorKind::Type, "Type error", &scrut.pos)
                        .with_message(format!("expected an enumeration, found {sty}")));
                };
                let cases = self.decls.enums[en].clone();
                for a in arms {
                    if !cases.iter().any(|(c, _)| **c == *a.ctor.node) {
                        return Err(resolution(format!("Enumeration {en} has no constructor {}", a.ctor.node), &a.ctor.pos));
                    }
                }
                let mut result: Option<Type> = expected.cloned();
                let mut out = Vec::new();
                for (c, cty) in &cases {
                    let matching: Vec<_> = arms.iter().filter(|a| *a.ctor.node == **c).collect();
                    let arm = match matching.as_slice() {
                        [a] => *a,
                        [] => return Err(resolution(format!("This match does not handle the constructor {c}"), pos)),
                        [_, a, ..] => return Err(resolution(format!("Constructor {c} is matched twice"), &a.ctor.pos)),
                    };
                    let (bname, bpos) = match &arm.binder {
                        Some(b) => (b.node.clone(), &b.pos),
                        None => ("_".to_owned(), &arm.ctor.pos),
                    };
                    let _ = bpos;
                    let v = Var::fresh(&bname);
                    let exp = result.clone();
                    let (bt, bty) = self.bind(&bname, &v, cty.clone(), |env| env.elab(&arm.body, exp.as_ref()))?;
                    match &result {
                        Some(r) if *r != bty => return Err(type_mismatch(&arm.body.pos, r, &bty)),
                        _ => result = Some(bty),
                    }
                    out.push((c.clone(), v, bt));
                }
                let ty = result.expect("enumerations have at least one constructor");
                (at(Kind::Match(st, en.clone(), out)), ty)
            }
            ExprKind::Is(scrut, c) => {
                let (st, sty) = self.elab(scrut, None)?;
                let Type::Enum(en) = &sty else {
                    return Err(Error::at(ErrorKind::Type, "Type error", &scrut.pos)
                        .with_message(format!("expected an enumeration, found {sty}")));
                };
                let cases = self.decls.enums[en].clone();
                if !cases.iter().any(|(n, _)| **n == *c.node) {
                    return Err(resolution(format!("Enumeration {en} has no constructor {}", c.node), &c.pos));
                }
                let arms = cases
                    .iter()
                    .map(|(n, _)| (n.clone(), Var::fresh("_"), at(Kind::Lit(Lit::Bool(**n == *c.node)))))
                    .collect();
                (at(Kind::Match(st, en.clone(), arms)), Type::Bool)
            }
            ExprKind::If(c, a, b) => {
                let ct = self.check(c, &Type::Bool)?;
                let (at_, aty) = self.elab(a, expected)?;
                let bt = self.check(b, &aty)?;
                (at(Kind::If(ct, at_, bt)), aty)
            }
            ExprKind::App(f, a) => {
                let (ft, fty) = self.elab(f, None)?;
                let Type::Arrow(dom, cod) = fty else {
                    return Err(Error::at(ErrorKind::Type, "Type error", &f.pos)
                        .with_message(format!("expected a function, found {fty}")));
                };
                let arg = self.check(a, &dom)?;
                (at(Kind::App(ft, arg)), *cod)
            }
            ExprKind::Collection(es) => {
                let mut elem = match expected {
                    Some(Type::Collection(t)) => Some((**t).clone()),
                    _ => None,
                };
                let mut out = Vec::new();
                for e in es {
                    match &elem {
                        Some(t) => out.push(self.check(e, &t.clone())?),
                        None => {
                            let (t, ty) = self.elab(e, None)?;
                            elem = Some(ty);
                            out.push(t);
                        }
                    }
                }
                let Some(elem) = elem else {
                    return Err(Error::at(ErrorKind::Type, "Type error", pos)
                        .with_message("cannot infer the element type of this empty collection"));
                };
                (at(Kind::Array(elem.clone(), out)), Type::collection(elem))
            }
            ExprKind::Sum {
                kind,
                binder,
                collection,
                body,
            } => {
                let (ty, add, zero) = match kind {
                    OpKind::Int => (Type::Int, Op::AddInt, Lit::Int(0)),
                    OpKind::Money => (Type::Money, Op::AddMoney, Lit::Money(crate::value::Money(0))),
                    OpKind::Duration => (Type::Duration, Op::AddDuration, Lit::Duration(crate::value::Duration(0))),
                    OpKind::Date => return Err(Error::at(ErrorKind::Type, "Type error", pos).with_message("dates cannot be summed")),
                };
                let (ct, cty) = self.elab(collection, None)?;
                let Type::Collection(elem) = cty else {
                    return Err(Error::at(ErrorKind::Type, "Type error", &collection.pos)
                        .with_message(format!("expected a collection, found {cty}")));
                };
                let x = Var::fresh(&binder.node);
                let acc = Var::fresh("acc");
                let bt = self.bind(&binder.node, &x, (*elem).clone(), |env| env.check(body, &ty))?;
                let f = at(Kind::Lam(
                    acc.clone(),
                    ty.clone(),
                    at(Kind::Lam(x, (*elem).clone(), at(Kind::Binop(add, at(Kind::Var(acc)), bt)))),
                ));
                (at(Kind::Fold(f, at(Kind::Lit(zero)), ct)), ty)
            }
            ExprKind::Count(c) => {
                let (ct, cty) = self.elab(c, None)?;
                let Type::Collection(elem) = cty else {
                    return Err(Error::at(ErrorKind::Type, "Type error", &c.pos)
                        .with_message(format!("expected a collection, found {cty}")));
                };
                let acc = Var::fresh("acc");
                let f = at(Kind::Lam(
                    acc.clone(),
                    Type::Int,
                    at(Kind::Lam(
                        Var::fresh("_"),
                        *elem,
                        at(Kind::Binop(Op::AddInt, at(Kind::Var(acc)), at(Kind::Lit(Lit::Int(1))))),
                    )),
                ));
                (at(Kind::Fold(f, at(Kind::Lit(Lit::Int(0))), ct)), Type::Int)
            }
            ExprKind::Binop(op, a, b) => self.binop(*op, a, b, pos)?,
            ExprKind::Unop(op, a) => {
                let uop = match op {
                    UnOp::Not => UOp::Not,
                    UnOp::Neg(OpKind::Int) => UOp::NegInt,
                    UnOp::Neg(OpKind::Money) => UOp::NegMoney,
                    UnOp::Neg(OpKind::Duration) => UOp::NegDuration,
                    UnOp::Neg(OpKind::Date) => {
                        return Err(Error::at(ErrorKind::Type, "Type error", pos).with_message("dates cannot be negated"))
                    }
                };
                let (ta, tr) = uop.signature();
                let t = self.check(a, &ta)?;
                (at(Kind::Unop(uop, t)), tr)
            }
        })
    }

    fn binop(&mut self, op: BinOp, a: &Expr, b: &Expr, pos: &Pos) -> Result<(Term, Type)> {
        let at = |k: Kind| mk(k, Some(pos.clone()));
        let bad = |what: &str| Err(Error::at(ErrorKind::Type, "Type error", pos).with_message(format!("operator {} {what}", op.symbol())));
        let resolved = match op {
            BinOp::Add(OpKind::Int) => Op::AddInt,
            BinOp::Add(OpKind::Money) => Op::AddMoney,
            BinOp::Add(OpKind::Duration) => Op::AddDuration,
            BinOp::Add(OpKind::Date) => Op::AddDateDuration,
            BinOp::Sub(OpKind::Int) => Op::SubInt,
            BinOp::Sub(OpKind::Money) => Op::SubMoney,
            BinOp::Sub(OpKind::Duration) => Op::SubDuration,
            BinOp::Sub(OpKind::Date) => {
                let ta = self.check(a, &Type::Date)?;
                let (tb, bty) = self.elab(b, None)?;
                let o = match bty {
                    Type::Date => Op::SubDate,
                    Type::Duration => Op::SubDateDuration,
                    other => return Err(type_mismatch(&b.pos, &Type::Date, &other)),
                };
                let ret = o.signature().unwrap().2;
                return Ok((at(Kind::Binop(o, ta, tb)), ret));
            }
            BinOp::Mul(OpKind::Int) => Op::MulInt,
            BinOp::Mul(OpKind::Money) => Op::MulMoney,
            BinOp::Mul(OpKind::Duration) => Op::MulDuration,
            BinOp::Div(OpKind::Int) => Op::DivInt,
            BinOp::Div(OpKind::Money) => Op::DivMoney,
            BinOp::Mul(OpKind::Date) | BinOp::Div(OpKind::Date) => return bad("does not apply to dates"),
            BinOp::Div(OpKind::Duration) => return bad("is not supported: durations cannot be divided"),
            BinOp::Lt(k) => Op::Lt(k),
            BinOp::Le(k) => Op::Le(k),
            BinOp::Gt(k) => Op::Gt(k),
            BinOp::Ge(k) => Op::Ge(k),
            BinOp::And => Op::And,
            BinOp::Or => Op::Or,
            BinOp::Eq | BinOp::Neq => {
                let (ta, aty) = self.elab(a, None)?;
                if !aty.is_first_order() {
                    return bad("cannot compare functions");
                }
                let tb = self.check(b, &aty)?;
                let o = if op == BinOp::Eq { Op::Eq } else { Op::Neq };
                return Ok((at(Kind::Binop(o, ta, tb)), Type::Bool));
            }
        };
        let (x, y, r) = resolved.signature().unwrap();
        let ta = self.check(a, &x)?;
        let tb = self.check(b, &y)?;
        Ok((at(Kind::Binop(resolved, ta, tb)), r))
    }
}

// ---------------------------------------------------------------------------
// Lowering
// ---------------------------------------------------------------------------

fn lower_default(
    env: &mut Elab<'_>,
    d: &DefaultExpr,
    ty: &Type,
    param: Option<&(Var, Type)>,
    variable: &str,
    doc: Option<&LiterateDocument>,
) -> Result<Term> {
    let mut exceptions = Vec::new();
    for c in &d.exceptions {
        exceptions.push(lower_default(env, c, ty, param, variable, doc)?);
    }
    let body = |env: &mut Elab<'_>| -> Result<(Term, Term)> {
        let j = env.check(&d.justification, &Type::Bool)?;
        let c = match &d.consequence {
            Consequence::Expr(e) => env.check(e, ty)?,
            Consequence::Empty => mk(
                Kind::Empty(Some(Arc::new(ErrorOrigin {
                    kind: ErrorKind::NoApplicableDefinition,
                    message: format!("no definition of {variable} applies"),
                    positions: vec![d.pos.clone()],
                }))),
                Some(d.pos.clone()),
            ),
        };
        Ok((j, c))
    };
    let (justification, consequence) = match (param, &d.param) {
        (Some((v, pty)), Some(name)) => env.bind(&name.node, v, pty.clone(), body)?,
        (None, None) => body(env)?,
        (Some(_), None) => {
            return Err(Error::at(ErrorKind::Type, "Type error", &d.pos)
                .with_message(format!("{variable} depends on a parameter; name it with `of <parameter>`")))
        }
        (None, Some(p)) => {
            return Err(Error::at(ErrorKind::Type, "Type error", &p.pos)
                .with_message(format!("{variable} is not declared with `depends on`")))
        }
    };
    let headings = doc.map(|doc| doc.headings_at(d.pos.start_line).to_vec()).unwrap_or_default();
    Ok(mk(
        Kind::Default(Box::new(DefaultTerm {
            exceptions,
            justification,
            consequence,
            ty: ty.clone(),
            meta: Some(Arc::new(DefaultMeta {
                variable: variable.to_owned(),
                role: DefaultRole::Definition,
                pos: d.pos.clone(),
                headings,
            })),
        })),
        Some(d.pos.clone()),
    ))
}

struct Unsorted {
    scope: Scope,
    /// Definition of each location with its term, position and source key.
    defs: Vec<(Location, Type, Term, Pos)>,
    mentions: Vec<Vec<(Location, Pos)>>,
}

fn lower_scope(
    name: &Name,
    infos: &IndexMap<Name, ScopeInfo>,
    decls: &TypeDecls,
    ctor_enum: &HashMap<Name, Name>,
    desugared: Option<&DesugaredScope>,
    doc: Option<&LiterateDocument>,
) -> Result<Unsorted> {
    let info = &infos[name];
    let mut vars = Vec::new();
    let mut subs = Vec::new();
    let mut per_callee: HashMap<Name, usize> = HashMap::new();
    let mut placeholders = IndexMap::new();
    for (cname, (ci, pos)) in &info.contexts {
        match ci {
            CtxInfo::Sub(callee) => {
                let k = per_callee.entry(callee.clone()).or_insert(0);
                *k += 1;
                let idx = subs.len();
                for (v, (vi, _)) in &infos[callee].contexts {
                    if full_type(vi).is_some() {
                        placeholders.insert(Location::Sub(idx, v.clone()), Var::fresh(&format!("{cname}.{v}")));
                    }
                }
                subs.push(SubScope {
                    name: cname.clone(),
                    callee: callee.clone(),
                    id: format!("{callee}_{k}"),
                    pos: pos.clone(),
                });
            }
            _ => {
                placeholders.insert(Location::Var(cname.clone()), Var::fresh(cname));
                vars.push(VarDecl {
                    name: cname.clone(),
                    ty: full_type(ci).unwrap(),
                    pos: pos.clone(),
                });
            }
        }
    }
    let sub_index: HashMap<Name, usize> = subs.iter().enumerate().map(|(i, s)| (s.name.clone(), i)).collect();
    let scope = Scope {
        name: name.clone(),
        pos: info.pos.clone(),
        vars,
        subs,
        atoms: Vec::new(),
        edges: Vec::new(),
        placeholders,
    };
    let mut defs = Vec::new();
    let mut mentions = Vec::new();
    for dv in desugared.map(|d| d.vars.as_slice()).unwrap_or(&[]) {
        let SurfaceLoc { subscope, var } = &dv.variable;
        let pos = &dv.default.pos;
        let loc = match subscope {
            None => match info.contexts.get(var.as_str()) {
                Some((CtxInfo::Data(..), _)) => Location::Var(var.as_str().into()),
                Some((CtxInfo::Sub(_), _)) => {
                    return Err(Error::at(ErrorKind::Type, "Type error", pos)
                        .with_message(format!("{var} is a sub-scope and cannot be defined")))
                }
                None => return Err(resolution(format!("Unknown variable {var} in scope {name}"), &dv.defs[0].pos)),
            },
            Some(s) => {
                let Some(&i) = sub_index.get(s.as_str()) else {
                    return Err(resolution(format!("Unknown sub-scope {s} in scope {name}"), &dv.defs[0].pos));
                };
                let callee = &scope.subs[i].callee;
                match infos[callee].contexts.get(var.as_str()) {
                    Some((CtxInfo::Data(..), _)) => Location::Sub(i, var.as_str().into()),
                    Some((CtxInfo::Sub(_), _)) => {
                        return Err(Error::at(ErrorKind::Unsupported, "Sub-scopes of sub-scopes cannot be defined", pos))
                    }
                    None => return Err(resolution(format!("Scope {callee} has no context variable {var}"), &dv.defs[0].pos)),
                }
            }
        };
        let (ty, dep) = match &loc {
            Location::Var(x) => match &info.contexts[x].0 {
                CtxInfo::Data(t, d) => (t.clone(), d.clone()),
                CtxInfo::Sub(_) => unreachable!(),
            },
            Location::Sub(i, x) => match &infos[&scope.subs[*i].callee].contexts[x].0 {
                CtxInfo::Data(t, d) => (t.clone(), d.clone()),
                CtxInfo::Sub(_) => unreachable!(),
            },
        };
        let variable = format!("{name}.{}", scope.location_name(&loc));
        let mut env = Elab {
            decls,
            ctor_enum,
            infos,
            scope: &scope,
            sub_index: &sub_index,
            lexical: Vec::new(),
            mentions: Vec::new(),
        };
        let param = dep.as_ref().map(|d| {
            let pname = dv.defs.iter().find_map(|d| d.param.as_ref()).map(|p| p.node.as_str()).unwrap_or("x");
            (Var::fresh(pname), d.clone())
        });
        let body = lower_default(&mut env, &dv.default, &ty, param.as_ref(), &variable, doc)?;
        let (term, full) = match param {
            Some((v, d)) => (
                mk(Kind::Lam(v, d.clone(), body), Some(pos.clone())),
                Type::arrow(d, ty),
            ),
            None => (body, ty),
        };
        mentions.push(env.mentions);
        defs.push((loc, full, term, pos.clone()));
    }
    Ok(Unsorted { scope, defs, mentions })
}

fn node_of(loc: &Location, scope: &Scope) -> GraphNode {
    match loc {
        Location::Var(x) => GraphNode::Var(scope.vars.iter().position(|v| v.name == *x).unwrap()),
        Location::Sub(i, _) => GraphNode::Sub(*i),
    }
}

/// Dependency edges: `y -> x` when the definition of `x` reads `y`,
/// `S_n -> x` when it reads `S_n[y]`, and `y -> S_n` when the definition of
/// `S_n[x]` reads `y`.
pub fn build_dep_graph(scope: &Scope, defs: &[(Location, Vec<(Location, Pos)>)]) -> Vec<(GraphNode, GraphNode, Pos)> {
    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    for (target, reads) in defs {
        let to = node_of(target, scope);
        for (read, pos) in reads {
            let from = node_of(read, scope);
            if seen.insert((from, to)) {
                edges.push((from, to, pos.clone()));
            }
        }
    }
    edges
}

fn pos_key(p: &Pos) -> (u32, u32) {
    (p.start_line, p.start_col)
}

/// Sorts definitions and calls of a scope topologically. Ready sub-scope
/// calls go first; other ties are broken by source position.
pub fn linearize_scope(
    mut scope: Scope,
    defs: Vec<(Location, Type, Term, Pos)>,
    edges: Vec<(GraphNode, GraphNode, Pos)>,
) -> Result<Scope> {
    let mut g: DiGraph<GraphNode, Pos> = DiGraph::new();
    let mut index: HashMap<GraphNode, NodeIndex> = HashMap::new();
    let mut key: HashMap<GraphNode, (u8, (u32, u32))> = HashMap::new();
    for (loc, _, _, pos) in &defs {
        let n = node_of(loc, &scope);
        if let GraphNode::Var(_) = n {
            key.insert(n, (1, pos_key(pos)));
        }
    }
    for (i, s) in scope.subs.iter().enumerate() {
        key.insert(GraphNode::Sub(i), (0, pos_key(&s.pos)));
    }
    for n in key.keys() {
        index.insert(*n, g.add_node(*n));
    }
    // Nodes without an atom (undefined inputs) impose no ordering.
    for (from, to, pos) in &edges {
        if let (Some(&a), Some(&b)) = (index.get(from), index.get(to)) {
            g.add_edge(a, b, pos.clone());
        }
    }

    let cyclic: Vec<Vec<NodeIndex>> = tarjan_scc(&g)
        .into_iter()
        .filter(|c| c.len() > 1 || g.contains_edge(c[0], c[0]))
        .collect();
    if let Some(cycle) = cyclic.into_iter().min_by_key(|c| c.iter().map(|n| key[&g[*n]]).min()) {
        let members: HashSet<NodeIndex> = cycle.iter().copied().collect();
        let mut names: Vec<(GraphNode, String)> = cycle.iter().map(|n| (g[*n], scope.node_name(g[*n]))).collect();
        names.sort_by_key(|(n, _)| key[n]);
        let mut err = Error::new(ErrorKind::Cycle, format!("Cyclic dependency detected between variables of scope {}", scope.name))
            .with_message(format!(
                "the cycle involves {}",
                names.iter().map(|(_, s)| s.as_str()).collect::<Vec<_>>().join(", ")
            ));
        let mut cycle_edges: Vec<_> = g
            .edge_indices()
            .filter_map(|e| {
                let (a, b) = g.edge_endpoints(e).unwrap();
                (members.contains(&a) && members.contains(&b)).then(|| (g[a], g[b], g[e].clone()))
            })
            .collect();
        cycle_edges.sort_by_key(|(_, _, p)| pos_key(p));
        for (a, b, p) in cycle_edges {
            let label = format!("{} is used here in the definition of {}", scope.node_name(a), scope.node_name(b));
            err = err.with_pos(Some(&label), &p);
        }
        return Err(err);
    }

    // Kahn's algorithm with a priority queue on the tie-break key.
    let mut indegree: HashMap<NodeIndex, usize> = g.node_indices().map(|n| (n, 0)).collect();
    for e in g.edge_indices() {
        let (_, b) = g.edge_endpoints(e).unwrap();
        *indegree.get_mut(&b).unwrap() += 1;
    }
    let mut ready: BinaryHeap<std::cmp::Reverse<((u8, (u32, u32)), GraphNode)>> = BinaryHeap::new();
    for (n, d) in &indegree {
        if *d == 0 {
            ready.push(std::cmp::Reverse((key[&g[*n]], g[*n])));
        }
    }
    let mut by_loc: HashMap<GraphNode, Vec<(Location, Type, Term, Pos)>> = HashMap::new();
    for d in defs {
        by_loc.entry(node_of(&d.0, &scope)).or_default().push(d);
    }
    let mut atoms = Vec::new();
    while let Some(std::cmp::Reverse((_, n))) = ready.pop() {
        if let Some(ds) = by_loc.remove(&n) {
            for (loc, ty, default, pos) in ds {
                atoms.push(Atom::Def { loc, ty, default, pos });
            }
        }
        if let GraphNode::Sub(i) = n {
            atoms.push(Atom::Call(i));
        }
        let ni = index[&n];
        for m in g.neighbors(ni).collect::<Vec<_>>() {
            let d = indegree.get_mut(&m).unwrap();
            *d -= 1;
            if *d == 0 {
                ready.push(std::cmp::Reverse((key[&g[m]], g[m])));
            }
        }
    }
    scope.atoms = atoms;
    scope.edges = edges;
    Ok(scope)
}

/// Orders scopes so that callees come first, by declaration order otherwise.
pub fn linearize_program(scopes: Vec<Scope>) -> Result<Vec<Scope>> {
    let idx: HashMap<Name, usize> = scopes.iter().enumerate().map(|(i, s)| (s.name.clone(), i)).collect();
    let mut g: DiGraph<usize, Pos> = DiGraph::new();
    let nodes: Vec<NodeIndex> = (0..scopes.len()).map(|i| g.add_node(i)).collect();
    for (i, s) in scopes.iter().enumerate() {
        for sub in &s.subs {
            g.add_edge(nodes[idx[&sub.callee]], nodes[i], sub.pos.clone());
        }
    }
    let cyclic: Vec<Vec<NodeIndex>> = tarjan_scc(&g)
        .into_iter()
        .filter(|c| c.len() > 1 || g.contains_edge(c[0], c[0]))
        .collect();
    if let Some(cycle) = cyclic.into_iter().min_by_key(|c| c.iter().map(|n| g[*n]).min()) {
        let members: HashSet<usize> = cycle.iter().map(|n| g[*n]).collect();
        let mut ms: Vec<usize> = members.iter().copied().collect();
        ms.sort();
        let names: Vec<&str> = ms.iter().map(|i| &*scopes[*i].name).collect();
        let mut err = Error::new(ErrorKind::Recursion, "Recursive scope calls are not allowed").with_message(format!(
            "the scopes {} call each other recursively",
            names.join(", ")
        ));
        if names.len() == 1 {
            err.message = Some(format!("scope {} uses itself as a sub-scope", names[0]));
        }
        let mut uses = Vec::new();
        for &i in &ms {
            for sub in &scopes[i].subs {
                if members.contains(&idx[&sub.callee]) {
                    uses.push((format!("{} is used here as a sub-scope of {}", sub.callee, scopes[i].name), sub.pos.clone()));
                }
            }
        }
        uses.sort_by_key(|(_, p)| pos_key(p));
        for (l, p) in uses {
            err = err.with_pos(Some(&l), &p);
        }
        return Err(err);
    }
    let mut indegree = vec![0usize; scopes.len()];
    for e in g.edge_indices() {
        indegree[g[g.edge_endpoints(e).unwrap().1]] += 1;
    }
    let mut ready: BinaryHeap<std::cmp::Reverse<usize>> =
        (0..scopes.len()).filter(|i| indegree[*i] == 0).map(std::cmp::Reverse).collect();
    let mut order = Vec::new();
    while let Some(std::cmp::Reverse(i)) = ready.pop() {
        order.push(i);
        for m in g.neighbors(nodes[i]) {
            let j = g[m];
            indegree[j] -= 1;
            if indegree[j] == 0 {
                ready.push(std::cmp::Reverse(j));
            }
        }
    }
    let mut slots: Vec<Option<Scope>> = scopes.into_iter().map(Some).collect();
    Ok(order.into_iter().map(|i| slots[i].take().unwrap()).collect())
}

/// Resolves, types and sorts the whole program.
pub fn lower_program(
    prog: &SurfaceProgram,
    desugared: &[DesugaredScope],
    doc: Option<&LiterateDocument>,
) -> Result<ScopeProgram> {
    let (decls, ctor_enum) = lower_decls(prog)?;
    let infos = scope_infos(prog, &decls)?;
    for u in &prog.uses {
        if !infos.contains_key(u.scope.node.as_str()) {
            return Err(resolution(format!("Unknown scope {}", u.scope.node), &u.scope.pos));
        }
    }
    let mut scopes = Vec::new();
    for name in infos.keys() {
        let ds = desugared.iter().find(|d| *d.scope == **name);
        let u = lower_scope(name, &infos, &decls, &ctor_enum, ds, doc)?;
        let dep_input: Vec<(Location, Vec<(Location, Pos)>)> =
            u.defs.iter().zip(&u.mentions).map(|(d, m)| (d.0.clone(), m.clone())).collect();
        let edges = build_dep_graph(&u.scope, &dep_input);
        scopes.push(linearize_scope(u.scope, u.defs, edges)?);
    }
    Ok(ScopeProgram {
        decls: Arc::new(decls),
        scopes: linearize_program(scopes)?,
    })
}

/// Parses a closed surface expression (a command-line binding) and types it
/// against `ty`.
pub fn lower_closed_expr(prog: &ScopeProgram, e: &surface::Expr, ty: &Type) -> Result<Term> {
    let mut ctor_enum = HashMap::new();
    for (en, cases) in &prog.decls.enums {
        for (c, _) in cases {
            ctor_enum.insert(c.clone(), en.clone());
        }
    }
    let infos = IndexMap::new();
    let scope = Scope {
        name: "".into(),
        pos: e.pos.clone(),
        vars: Vec::new(),
        subs: Vec::new(),
        atoms: Vec::new(),
        edges: Vec::new(),
        placeholders: IndexMap::new(),
    };
    let sub_index = HashMap::new();
    let mut env = Elab {
        decls: &prog.decls,
        ctor_enum: &ctor_enum,
        infos: &infos,
        scope: &scope,
        sub_index: &sub_index,
        lexical: Vec::new(),
        mentions: Vec::new(),
    };
    env.check(e, ty)
}

fn one_line(s: &str) -> String {
    s.split('\n').map(str::trim).collect::<Vec<_>>().join(" ")
}

/// Stable dump: sorted atoms one per line, dependency edges as comments.
pub fn print_program(p: &ScopeProgram) -> String {
    let mut s = String::new();
    for sc in &p.scopes {
        let _ = writeln!(s, "scope {}:", sc.name);
        for (a, b, pos) in &sc.edges {
            let _ = writeln!(s, "  # {} -> {} ({pos})", sc.node_name(*a), sc.node_name(*b));
        }
        for atom in &sc.atoms {
            match atom {
                Atom::Def { loc, ty, default, .. } => {
                    let name = match loc {
                        Location::Var(x) => x.to_string(),
                        Location::Sub(i, x) => format!("{}[{x}]", sc.subs[*i].id),
                    };
                    let _ = writeln!(s, "  def {name} : {ty} = {}", one_line(&dcalc::print(default)));
                }
                Atom::Call(i) => {
                    let _ = writeln!(s, "  call {} ({})", sc.subs[*i].id, sc.subs[*i].name);
                }
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::desugar::desugar_program;
    use crate::literate::extract_blocks;
    use crate::parser::parse;

    fn lower(src: &str) -> Result<ScopeProgram> {
        let doc = extract_blocks("t.catala_en", &format!("```catala\n{src}```\n")).unwrap();
        let prog = parse(&doc)?;
        let ds = desugar_program(&prog)?;
        lower_program(&prog, &ds, Some(&doc))
    }

    fn atoms(p: &ScopeProgram, scope: &str) -> Vec<String> {
        let sc = p.scope(scope).unwrap();
        sc.atoms
            .iter()
            .map(|a| match a {
                Atom::Def { loc: Location::Var(x), .. } => format!("def {x}"),
                Atom::Def { loc: Location::Sub(i, x), .. } => format!("def {}[{x}]", sc.subs[*i].id),
                Atom::Call(i) => format!("call {}", sc.subs[*i].id),
            })
            .collect()
    }

    #[test]
    fn chain_is_sorted() {
        let p = lower("declaration scope A:\n context a content integer\n context b content integer\nscope A:\n definition b equals a\n definition a equals 1\n").unwrap();
        assert_eq!(atoms(&p, "A"), ["def a", "def b"]);
        let sc = p.scope("A").unwrap();
        assert_eq!(sc.edges.len(), 1);
        assert_eq!((sc.edges[0].0, sc.edges[0].1), (GraphNode::Var(0), GraphNode::Var(1)));
    }

    #[test]
    fn call_between_inputs_and_outputs() {
        let p = lower(
            "declaration scope S:\n context input content integer\n context output content integer\n\
             declaration scope T:\n context x content integer\n context y content integer\n context s scope S\n\
             scope S:\n definition output equals input\n\
             scope T:\n definition s.input equals x\n definition y equals s.output\n definition x equals 1\n",
        )
        .unwrap();
        assert_eq!(atoms(&p, "T"), ["def x", "def S_1[input]", "call S_1", "def y"]);
        let order: Vec<&str> = p.scopes.iter().map(|s| &*s.name).collect();
        assert_eq!(order, ["S", "T"]);
    }

    #[test]
    fn cycle_lists_both_variables() {
        let e = lower("declaration scope A:\n context a content integer\n context b content integer\nscope A:\n definition a equals b\n definition b equals a\n").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Cycle);
        assert_eq!(e.positions.len(), 2);
        let msg = e.message.unwrap();
        assert!(msg.contains('a') && msg.contains('b'));
    }

    #[test]
    fn self_call_is_recursion() {
        let e = lower("declaration scope A:\n context x content integer\n context me scope A\n").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Recursion);
        assert_eq!(e.positions.len(), 1);
    }

    #[test]
    fn type_errors() {
        let e = lower("declaration scope A:\n context a content integer\nscope A:\n definition a equals $1\n").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Type);
        let e = lower("declaration scope A:\n context a content integer\nscope A:\n definition a equals 1 +$ 2\n").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Type);
    }

    #[test]
    fn permutation_keeps_order() {
        let p = lower("declaration scope A:\n context a content integer\n context b content integer\n context c content integer\nscope A:\n definition c equals 3\n definition a equals 1\n definition b equals 2\n").unwrap();
        assert_eq!(atoms(&p, "A"), ["def c", "def a", "def b"]);
    }
}

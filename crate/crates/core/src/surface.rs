//! Parse tree of the surface language.

use crate::pos::Pos;
use crate::value::{Date, Duration, Money};

pub type Ident = String;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spanned<T> {
    pub node: T,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SurfaceType {
    Boolean,
    Integer,
    Money,
    Date,
    Duration,
    Collection(Box<SurfaceType>),
    Named(Ident),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructDecl {
    pub name: Spanned<Ident>,
    pub fields: Vec<(Spanned<Ident>, SurfaceType)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnumDecl {
    pub name: Spanned<Ident>,
    pub cases: Vec<(Spanned<Ident>, Option<SurfaceType>)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ContextKind {
    Content(SurfaceType),
    Condition,
    SubScope(Spanned<Ident>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContextDecl {
    pub name: Spanned<Ident>,
    pub kind: ContextKind,
    pub depends_on: Option<SurfaceType>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScopeDecl {
    pub name: Spanned<Ident>,
    pub contexts: Vec<ContextDecl>,
}

/// Variable being defined: `x` or `sub.x`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SurfaceLoc {
    pub subscope: Option<Ident>,
    pub var: Ident,
}

impl std::fmt::Display for SurfaceLoc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.subscope {
            Some(s) => write!(f, "{s}.{}", self.var),
            None => f.write_str(&self.var),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Consequence {
    Expr(Expr),
    /// `nodefault`: only produced by desugaring.
    Empty,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ItemBody {
    Rule {
        target: Spanned<SurfaceLoc>,
        param: Option<Spanned<Ident>>,
        condition: Option<Expr>,
        fulfilled: bool,
    },
    Definition {
        target: Spanned<SurfaceLoc>,
        param: Option<Spanned<Ident>>,
        condition: Option<Expr>,
        consequence: Consequence,
    },
}

impl ItemBody {
    pub fn target(&self) -> &Spanned<SurfaceLoc> {
        match self {
            ItemBody::Rule { target, .. } | ItemBody::Definition { target, .. } => target,
        }
    }

    pub fn param(&self) -> Option<&Spanned<Ident>> {
        match self {
            ItemBody::Rule { param, .. } | ItemBody::Definition { param, .. } => param.as_ref(),
        }
    }
}

/// A rule or definition with its optional `label` and `exception` modifiers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Item {
    pub label: Option<Spanned<Ident>>,
    /// `None`: not an exception; `Some(None)`: unlabeled `exception`;
    /// `Some(Some(l))`: `exception l`.
    pub exception: Option<Option<Spanned<Ident>>>,
    pub body: ItemBody,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScopeUse {
    pub scope: Spanned<Ident>,
    pub items: Vec<Item>,
    pub pos: Pos,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SurfaceProgram {
    pub structs: Vec<StructDecl>,
    pub enums: Vec<EnumDecl>,
    pub scopes: Vec<ScopeDecl>,
    pub uses: Vec<ScopeUse>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OpKind {
    Int,
    Money,
    Date,
    Duration,
}

impl OpKind {
    pub fn suffix(self) -> &'static str {
        match self {
            OpKind::Int => "",
            OpKind::Money => "$",
            OpKind::Date => "@",
            OpKind::Duration => "^",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add(OpKind),
    Sub(OpKind),
    Mul(OpKind),
    Div(OpKind),
    Lt(OpKind),
    Le(OpKind),
    Gt(OpKind),
    Ge(OpKind),
    Eq,
    Neq,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> String {
        let (s, k) = match self {
            BinOp::Add(k) => ("+", k),
            BinOp::Sub(k) => ("-", k),
            BinOp::Mul(k) => ("*", k),
            BinOp::Div(k) => ("/", k),
            BinOp::Lt(k) => ("<", k),
            BinOp::Le(k) => ("<=", k),
            BinOp::Gt(k) => (">", k),
            BinOp::Ge(k) => (">=", k),
            BinOp::Eq => return "=".into(),
            BinOp::Neq => return "!=".into(),
            BinOp::And => return "and".into(),
            BinOp::Or => return "or".into(),
        };
        format!("{s}{}", k.suffix())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg(OpKind),
}

impl UnOp {
    pub fn symbol(self) -> String {
        match self {
            UnOp::Not => "not".into(),
            UnOp::Neg(k) => format!("-{}", k.suffix()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchArm {
    pub ctor: Spanned<Ident>,
    pub binder: Option<Spanned<Ident>>,
    pub body: Expr,
}

pub type Expr = Box<Spanned<ExprKind>>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    Bool(bool),
    Int(i64),
    Money(Money),
    Date(Date),
    Duration(Duration),
    Var(Ident),
    /// `e.field`: struct field access or sub-scope variable, resolved later.
    Dot(Expr, Spanned<Ident>),
    StructLit(Spanned<Ident>, Vec<(Spanned<Ident>, Expr)>),
    EnumLit(Spanned<Ident>, Option<Expr>),
    Match(Expr, Vec<MatchArm>),
    Is(Expr, Spanned<Ident>),
    If(Expr, Expr, Expr),
    App(Expr, Expr),
    Collection(Vec<Expr>),
    Sum {
        kind: OpKind,
        binder: Spanned<Ident>,
        collection: Expr,
        body: Expr,
    },
    Count(Expr),
    Binop(BinOp, Expr, Expr),
    Unop(UnOp, Expr),
}

pub fn mk(node: ExprKind, pos: Pos) -> Expr {
    Box::new(Spanned { node, pos })
}

impl std::fmt::Display for SurfaceType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SurfaceType::Boolean => f.write_str("boolean"),
            SurfaceType::Integer => f.write_str("integer"),
            SurfaceType::Money => f.write_str("money"),
            SurfaceType::Date => f.write_str("date"),
            SurfaceType::Duration => f.write_str("duration"),
            SurfaceType::Collection(t) => write!(f, "collection {t}"),
            SurfaceType::Named(n) => f.write_str(n),
        }
    }
}

// Binding strength used to decide where the printer needs parentheses.
fn prec(e: &ExprKind) -> u8 {
    match e {
        ExprKind::If(..) | ExprKind::Match(..) => 0,
        ExprKind::Binop(BinOp::Or, ..) => 1,
        ExprKind::Binop(BinOp::And, ..) => 2,
        ExprKind::Unop(UnOp::Not, _) => 3,
        ExprKind::Binop(
            BinOp::Lt(_) | BinOp::Le(_) | BinOp::Gt(_) | BinOp::Ge(_) | BinOp::Eq | BinOp::Neq,
            ..,
        ) => 4,
        ExprKind::Binop(BinOp::Add(_) | BinOp::Sub(_), ..) => 5,
        ExprKind::Binop(BinOp::Mul(_) | BinOp::Div(_), ..) => 6,
        ExprKind::Unop(UnOp::Neg(_), _) => 7,
        ExprKind::App(..) | ExprKind::Sum { .. } | ExprKind::Count(_) => 8,
        ExprKind::EnumLit(_, Some(_)) => 8,
        ExprKind::Dot(..) | ExprKind::Is(..) => 9,
        _ => 10,
    }
}

struct Paren<'a>(&'a Expr, u8);

impl std::fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if prec(&self.0.node) < self.1 {
            write!(f, "({})", self.0.node)
        } else {
            write!(f, "{}", self.0.node)
        }
    }
}

/// Prints back in concrete syntax, on one line.
impl std::fmt::Display for ExprKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let p = prec(self);
        match self {
            ExprKind::Bool(b) => write!(f, "{b}"),
            ExprKind::Int(i) => write!(f, "{i}"),
            ExprKind::Money(m) => write!(f, "{m}"),
            ExprKind::Date(d) => write!(f, "|{d}|"),
            ExprKind::Duration(d) => write!(f, "{d}"),
            ExprKind::Var(v) => f.write_str(v),
            ExprKind::Dot(e, field) => write!(f, "{}.{}", Paren(e, 9), field.node),
            ExprKind::StructLit(name, fields) => {
                write!(f, "{} {{", name.node)?;
                for (n, e) in fields {
                    write!(f, " -- {}: {}", n.node, e.node)?;
                }
                f.write_str(" }")
            }
            ExprKind::EnumLit(c, None) => f.write_str(&c.node),
            ExprKind::EnumLit(c, Some(e)) => write!(f, "{} content {}", c.node, Paren(e, 9)),
            ExprKind::Match(e, arms) => {
                write!(f, "match {} with", e.node)?;
                for arm in arms {
                    write!(f, " -- {}", arm.ctor.node)?;
                    if let Some(b) = &arm.binder {
                        write!(f, " of {}", b.node)?;
                    }
                    write!(f, " : {}", Paren(&arm.body, 1))?;
                }
                Ok(())
            }
            ExprKind::Is(e, c) => write!(f, "{} is {}", Paren(e, 9), c.node),
            ExprKind::If(c, t, e) => write!(f, "if {} then {} else {}", c.node, t.node, e.node),
            ExprKind::App(g, a) => write!(f, "{} of {}", Paren(g, 9), Paren(a, 8)),
            ExprKind::Collection(es) => {
                f.write_str("[")?;
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    write!(f, "{}", e.node)?;
                }
                f.write_str("]")
            }
            ExprKind::Sum {
                kind,
                binder,
                collection,
                body,
            } => {
                let ty = match kind {
                    OpKind::Int => "integer",
                    OpKind::Money => "money",
                    OpKind::Duration => "duration",
                    OpKind::Date => "date",
                };
                write!(
                    f,
                    "sum {ty} for {} in {} of {}",
                    binder.node,
                    Paren(collection, 9),
                    Paren(body, 8)
                )
            }
            ExprKind::Count(c) => write!(f, "number of {}", Paren(c, 9)),
            ExprKind::Binop(op, l, r) => {
                // Comparisons do not chain; arithmetic and logic are left-associative.
                let (lp, rp) = if p == 4 { (p + 1, p + 1) } else { (p, p + 1) };
                write!(f, "{} {} {}", Paren(l, lp), op.symbol(), Paren(r, rp))
            }
            ExprKind::Unop(UnOp::Not, e) => write!(f, "not {}", Paren(e, 3)),
            ExprKind::Unop(UnOp::Neg(k), e) => write!(f, "-{}{}", k.suffix(), Paren(e, 8)),
        }
    }
}

//! Typed primitive operators shared by both calculi and the backend.

use std::fmt;

use crate::surface::OpKind;
use crate::value::{Duration, Lit, Money, Type};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    AddInt,
    SubInt,
    MulInt,
    DivInt,
    AddMoney,
    SubMoney,
    /// Money times an integer.
    MulMoney,
    /// Money divided by an integer, truncated toward zero.
    DivMoney,
    AddDuration,
    SubDuration,
    MulDuration,
    AddDateDuration,
    SubDateDuration,
    SubDate,
    Lt(OpKind),
    Le(OpKind),
    Gt(OpKind),
    Ge(OpKind),
    /// Structural equality on first-order values.
    Eq,
    Neq,
    And,
    Or,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UOp {
    Not,
    NegInt,
    NegMoney,
    NegDuration,
}

fn kind_type(k: OpKind) -> Type {
    match k {
        OpKind::Int => Type::Int,
        OpKind::Money => Type::Money,
        OpKind::Date => Type::Date,
        OpKind::Duration => Type::Duration,
    }
}

impl Op {
    /// Operand and result types; `None` for the polymorphic equalities.
    pub fn signature(self) -> Option<(Type, Type, Type)> {
        use Type::*;
        Some(match self {
            Op::AddInt | Op::SubInt | Op::MulInt | Op::DivInt => (Int, Int, Int),
            Op::AddMoney | Op::SubMoney => (Money, Money, Money),
            Op::MulMoney | Op::DivMoney => (Money, Int, Money),
            Op::AddDuration | Op::SubDuration => (Duration, Duration, Duration),
            Op::MulDuration => (Duration, Int, Duration),
            Op::AddDateDuration | Op::SubDateDuration => (Date, Duration, Date),
            Op::SubDate => (Date, Date, Duration),
            Op::Lt(k) | Op::Le(k) | Op::Gt(k) | Op::Ge(k) => (kind_type(k), kind_type(k), Bool),
            Op::And | Op::Or => (Bool, Bool, Bool),
            Op::Eq | Op::Neq => return None,
        })
    }

    pub fn symbol(self) -> String {
        match self {
            Op::AddInt => "+".into(),
            Op::SubInt => "-".into(),
            Op::MulInt => "*".into(),
            Op::DivInt => "/".into(),
            Op::AddMoney => "+$".into(),
            Op::SubMoney => "-$".into(),
            Op::MulMoney => "*$".into(),
            Op::DivMoney => "/$".into(),
            Op::AddDuration => "+^".into(),
            Op::SubDuration => "-^".into(),
            Op::MulDuration => "*^".into(),
            Op::AddDateDuration => "+@".into(),
            Op::SubDateDuration => "-@^".into(),
            Op::SubDate => "-@".into(),
            Op::Lt(k) => format!("<{}", k.suffix()),
            Op::Le(k) => format!("<={}", k.suffix()),
            Op::Gt(k) => format!(">{}", k.suffix()),
            Op::Ge(k) => format!(">={}", k.suffix()),
            Op::Eq => "=".into(),
            Op::Neq => "!=".into(),
            Op::And => "and".into(),
            Op::Or => "or".into(),
        }
    }

    /// Evaluates every operator except the equalities. Errors are
    /// arithmetic faults (overflow, division by zero).
    pub fn apply(self, a: &Lit, b: &Lit) -> Result<Lit, String> {
        use Lit::*;
        let overflow = || "integer overflow".to_owned();
        Ok(match (self, a, b) {
            (Op::AddInt, Int(x), Int(y)) => Int(x.checked_add(*y).ok_or_else(overflow)?),
            (Op::SubInt, Int(x), Int(y)) => Int(x.checked_sub(*y).ok_or_else(overflow)?),
            (Op::MulInt, Int(x), Int(y)) => Int(x.checked_mul(*y).ok_or_else(overflow)?),
            (Op::DivInt, Int(x), Int(y)) => Int(checked_div(*x, *y)?),
            (Op::AddMoney, Money(x), Money(y)) => Money(crate::value::Money(x.0.checked_add(y.0).ok_or_else(overflow)?)),
            (Op::SubMoney, Money(x), Money(y)) => Money(crate::value::Money(x.0.checked_sub(y.0).ok_or_else(overflow)?)),
            (Op::MulMoney, Money(x), Int(y)) => Money(crate::value::Money(x.0.checked_mul(*y).ok_or_else(overflow)?)),
            (Op::DivMoney, Money(x), Int(y)) => Money(crate::value::Money(checked_div(x.0, *y)?)),
            (Op::AddDuration, Duration(x), Duration(y)) => {
                Duration(crate::value::Duration(x.0.checked_add(y.0).ok_or_else(overflow)?))
            }
            (Op::SubDuration, Duration(x), Duration(y)) => {
                Duration(crate::value::Duration(x.0.checked_sub(y.0).ok_or_else(overflow)?))
            }
            (Op::MulDuration, Duration(x), Int(y)) => {
                Duration(crate::value::Duration(x.0.checked_mul(*y).ok_or_else(overflow)?))
            }
            (Op::AddDateDuration, Date(d), Duration(n)) => Date(d.add_days(*n).ok_or_else(overflow)?),
            (Op::SubDateDuration, Date(d), Duration(n)) => Date(
                d.add_days(crate::value::Duration(n.0.checked_neg().ok_or_else(overflow)?))
                    .ok_or_else(overflow)?,
            ),
            (Op::SubDate, Date(x), Date(y)) => Duration(x.diff(*y)),
            (Op::Lt(_), x, y) => Bool(cmp(x, y)?.is_lt()),
            (Op::Le(_), x, y) => Bool(cmp(x, y)?.is_le()),
            (Op::Gt(_), x, y) => Bool(cmp(x, y)?.is_gt()),
            (Op::Ge(_), x, y) => Bool(cmp(x, y)?.is_ge()),
            (Op::And, Bool(x), Bool(y)) => Bool(*x && *y),
            (Op::Or, Bool(x), Bool(y)) => Bool(*x || *y),
            (op, a, b) => return Err(format!("ill-typed operands {a} {} {b}", op.symbol())),
        })
    }
}

fn checked_div(x: i64, y: i64) -> Result<i64, String> {
    if y == 0 {
        return Err("division by zero".into());
    }
    x.checked_div(y).ok_or_else(|| "integer overflow".into())
}

fn cmp(a: &Lit, b: &Lit) -> Result<std::cmp::Ordering, String> {
    use Lit::*;
    Ok(match (a, b) {
        (Int(x), Int(y)) => x.cmp(y),
        (Money(x), Money(y)) => x.cmp(y),
        (Date(x), Date(y)) => x.cmp(y),
        (Duration(x), Duration(y)) => x.cmp(y),
        _ => return Err(format!("cannot compare {a} and {b}")),
    })
}

impl UOp {
    pub fn signature(self) -> (Type, Type) {
        match self {
            UOp::Not => (Type::Bool, Type::Bool),
            UOp::NegInt => (Type::Int, Type::Int),
            UOp::NegMoney => (Type::Money, Type::Money),
            UOp::NegDuration => (Type::Duration, Type::Duration),
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            UOp::Not => "not ",
            UOp::NegInt => "-",
            UOp::NegMoney => "-$",
            UOp::NegDuration => "-^",
        }
    }

    pub fn apply(self, a: &Lit) -> Result<Lit, String> {
        let overflow = || "integer overflow".to_owned();
        Ok(match (self, a) {
            (UOp::Not, Lit::Bool(b)) => Lit::Bool(!b),
            (UOp::NegInt, Lit::Int(i)) => Lit::Int(i.checked_neg().ok_or_else(overflow)?),
            (UOp::NegMoney, Lit::Money(m)) => Lit::Money(Money(m.0.checked_neg().ok_or_else(overflow)?)),
            (UOp::NegDuration, Lit::Duration(d)) => {
                Lit::Duration(Duration(d.0.checked_neg().ok_or_else(overflow)?))
            }
            (op, a) => return Err(format!("ill-typed operand {}{a}", op.symbol())),
        })
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.symbol())
    }
}

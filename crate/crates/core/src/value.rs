//! Scalar domains (money, dates, durations), the type language shared by
//! both calculi, and first-order runtime values used for comparing and
//! printing results.

use std::fmt::{self, Write as _};
use std::sync::Arc;

pub type Name = Arc<str>;

/// Exact amount in cents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Money(pub i64);

/// Signed number of days.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Duration(pub i64);

/// Proleptic Gregorian civil date, stored as days since 1970-01-01.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Date(i64);

pub fn is_leap_year(y: i64) -> bool {
    (y % 4 == 0 && y % 100 != 0) || y % 400 == 0
}

pub fn days_in_month(y: i64, m: u32) -> u32 {
    match m {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if is_leap_year(y) => 29,
        2 => 28,
        _ => 0,
    }
}

impl Date {
    pub fn from_ymd(y: i64, m: u32, d: u32) -> Option<Date> {
        if !(1..=12).contains(&m) || d == 0 || d > days_in_month(y, m) {
            return None;
        }
        // Days-from-civil over 400-year eras.
        let y = if m <= 2 { y - 1 } else { y };
        let era = y.div_euclid(400);
        let yoe = y - era * 400;
        let mp = (m as i64 + 9) % 12;
        let doy = (153 * mp + 2) / 5 + d as i64 - 1;
        let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        Some(Date(era * 146_097 + doe - 719_468))
    }

    pub fn ymd(self) -> (i64, u32, u32) {
        let z = self.0 + 719_468;
        let era = z.div_euclid(146_097);
        let doe = z - era * 146_097;
        let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
        let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        let mp = (5 * doy + 2) / 153;
        let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
        let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
        let y = yoe + era * 400 + i64::from(m <= 2);
        (y, m, d)
    }

    pub fn day_number(self) -> i64 {
        self.0
    }

    pub fn add_days(self, n: Duration) -> Option<Date> {
        self.0.checked_add(n.0).map(Date)
    }

    pub fn diff(self, other: Date) -> Duration {
        Duration(self.0 - other.0)
    }
}

impl fmt::Display for Date {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (y, m, d) = self.ymd();
        write!(f, "{y:04}-{m:02}-{d:02}")
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let neg = self.0 < 0;
        let abs = self.0.unsigned_abs();
        let units = (abs / 100).to_string();
        let mut grouped = String::new();
        for (i, ch) in units.chars().enumerate() {
            if i > 0 && (units.len() - i) % 3 == 0 {
                grouped.push(',');
            }
            grouped.push(ch);
        }
        write!(f, "{}${}.{:02}", if neg { "-" } else { "" }, grouped, abs % 100)
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} day", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Type {
    Unit,
    Bool,
    Int,
    Money,
    Date,
    Duration,
    Struct(Name),
    Enum(Name),
    Collection(Box<Type>),
    /// Only produced by the lambda-calculus translation.
    Option(Box<Type>),
    Tuple(Vec<Type>),
    Arrow(Box<Type>, Box<Type>),
}

impl Type {
    pub fn arrow(a: Type, b: Type) -> Type {
        Type::Arrow(Box::new(a), Box::new(b))
    }

    pub fn thunk(t: Type) -> Type {
        Type::arrow(Type::Unit, t)
    }

    pub fn collection(t: Type) -> Type {
        Type::Collection(Box::new(t))
    }

    pub fn is_first_order(&self) -> bool {
        match self {
            Type::Arrow(..) => false,
            Type::Collection(t) | Type::Option(t) => t.is_first_order(),
            Type::Tuple(ts) => ts.iter().all(Type::is_first_order),
            _ => true,
        }
    }

    /// Identifier-safe rendering, used to name per-type helpers.
    pub fn mangle(&self) -> String {
        match self {
            Type::Unit => "unit".into(),
            Type::Bool => "bool".into(),
            Type::Int => "int".into(),
            Type::Money => "money".into(),
            Type::Date => "date".into(),
            Type::Duration => "duration".into(),
            Type::Struct(n) | Type::Enum(n) => n.to_string(),
            Type::Collection(t) => format!("list_{}", t.mangle()),
            Type::Option(t) => format!("option_{}", t.mangle()),
            Type::Tuple(ts) => {
                let inner: Vec<_> = ts.iter().map(Type::mangle).collect();
                format!("tup{}_{}_", ts.len(), inner.join("_"))
            }
            Type::Arrow(a, b) => format!("fn_{}_to_{}_", a.mangle(), b.mangle()),
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Unit => f.write_str("unit"),
            Type::Bool => f.write_str("bool"),
            Type::Int => f.write_str("int"),
            Type::Money => f.write_str("money"),
            Type::Date => f.write_str("date"),
            Type::Duration => f.write_str("duration"),
            Type::Struct(n) | Type::Enum(n) => f.write_str(n),
            Type::Collection(t) => write!(f, "list {}", Atomic(t)),
            Type::Option(t) => write!(f, "option {}", Atomic(t)),
            Type::Tuple(ts) => {
                f.write_str("(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" * ")?;
                    }
                    write!(f, "{}", Atomic(t))?;
                }
                f.write_str(")")
            }
            Type::Arrow(a, b) => {
                let lhs = match **a {
                    Type::Arrow(..) => format!("({a})"),
                    _ => a.to_string(),
                };
                write!(f, "{lhs} -> {b}")
            }
        }
    }
}

struct Atomic<'a>(&'a Type);

impl fmt::Display for Atomic<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Type::Arrow(..) | Type::Collection(_) | Type::Option(_) => write!(f, "({})", self.0),
            t => write!(f, "{t}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Lit {
    Unit,
    Bool(bool),
    Int(i64),
    Money(Money),
    Date(Date),
    Duration(Duration),
}

impl Lit {
    pub fn ty(&self) -> Type {
        match self {
            Lit::Unit => Type::Unit,
            Lit::Bool(_) => Type::Bool,
            Lit::Int(_) => Type::Int,
            Lit::Money(_) => Type::Money,
            Lit::Date(_) => Type::Date,
            Lit::Duration(_) => Type::Duration,
        }
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lit::Unit => f.write_str("()"),
            Lit::Bool(b) => write!(f, "{b}"),
            Lit::Int(i) => write!(f, "{i}"),
            Lit::Money(m) => write!(f, "{m}"),
            Lit::Date(d) => write!(f, "|{d}|"),
            Lit::Duration(d) => write!(f, "{d}"),
        }
    }
}

/// A fully evaluated first-order result. Functions are opaque.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Lit(Lit),
    Tuple(Vec<Value>),
    Struct(Name, Vec<(Name, Value)>),
    Enum(Name, Name, Box<Value>),
    Collection(Vec<Value>),
    Option(Option<Box<Value>>),
    Function,
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Lit(Lit::Date(d)) => write!(f, "{d}"),
            Value::Lit(l) => write!(f, "{l}"),
            Value::Tuple(vs) => {
                f.write_str("(")?;
                write_sep(f, vs, ", ")?;
                f.write_str(")")
            }
            Value::Struct(name, fields) => {
                write!(f, "{name} {{")?;
                for (n, v) in fields {
                    write!(f, " -- {n}: {v}")?;
                }
                f.write_str(" }")
            }
            Value::Enum(_, ctor, payload) => match **payload {
                Value::Lit(Lit::Unit) => write!(f, "{ctor}"),
                ref p => write!(f, "{ctor} ({p})"),
            },
            Value::Collection(vs) => {
                f.write_str("[")?;
                write_sep(f, vs, "; ")?;
                f.write_str("]")
            }
            Value::Option(None) => f.write_str("None"),
            Value::Option(Some(v)) => write!(f, "Some ({v})"),
            Value::Function => f.write_str("<function>"),
        }
    }
}

fn write_sep(f: &mut fmt::Formatter<'_>, vs: &[Value], sep: &str) -> fmt::Result {
    let mut s = String::new();
    for (i, v) in vs.iter().enumerate() {
        if i > 0 {
            s.push_str(sep);
        }
        let _ = write!(s, "{v}");
    }
    f.write_str(&s)
}

/// Structure and enumeration declarations, shared by every typed IR.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeDecls {
    pub structs: indexmap::IndexMap<Name, Vec<(Name, Type)>>,
    /// Payload-less constructors carry `Type::Unit`.
    pub enums: indexmap::IndexMap<Name, Vec<(Name, Type)>>,
}

impl TypeDecls {
    pub fn field(&self, s: &str, f: &str) -> Option<&Type> {
        self.structs.get(s)?.iter().find(|(n, _)| &**n == f).map(|(_, t)| t)
    }

    pub fn case(&self, e: &str, c: &str) -> Option<&Type> {
        self.enums.get(e)?.iter().find(|(n, _)| &**n == c).map(|(_, t)| t)
    }
}

/// Result of running a closed term in either calculus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Value(Value),
    Empty,
    Conflict,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Value(v) => write!(f, "{v}"),
            Outcome::Empty => f.write_str("∅"),
            Outcome::Conflict => f.write_str("⊛"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn next_day(y: i64, m: u32, d: u32) -> (i64, u32, u32) {
        if d < days_in_month(y, m) {
            (y, m, d + 1)
        } else if m < 12 {
            (y, m + 1, 1)
        } else {
            (y + 1, 1, 1)
        }
    }

    #[test]
    fn civil_roundtrip_against_day_stepping() {
        let mut ymd = (1899, 12, 25);
        let mut date = Date::from_ymd(1899, 12, 25).unwrap();
        for _ in 0..(365 * 250) {
            assert_eq!(date.ymd(), ymd);
            ymd = next_day(ymd.0, ymd.1, ymd.2);
            date = date.add_days(Duration(1)).unwrap();
        }
    }

    #[test]
    fn leap_day_and_diff() {
        let d = Date::from_ymd(2020, 2, 28).unwrap();
        assert_eq!(d.add_days(Duration(1)).unwrap().ymd(), (2020, 2, 29));
        let a = Date::from_ymd(2021, 3, 1).unwrap();
        let b = Date::from_ymd(2021, 2, 1).unwrap();
        assert_eq!(a.diff(b), Duration(28));
        assert!(Date::from_ymd(2021, 2, 29).is_none());
        assert_eq!(Date::from_ymd(1970, 1, 1).unwrap().day_number(), 0);
    }

    #[test]
    fn money_rendering() {
        assert_eq!(Money(25_000_000).to_string(), "$250,000.00");
        assert_eq!(Money(0).to_string(), "$0.00");
        assert_eq!(Money(-123_456).to_string(), "-$1,234.56");
        assert_eq!(Money(5).to_string(), "$0.05");
        assert_eq!(Money(100_000_000_00).to_string(), "$100,000,000.00");
    }

    #[test]
    fn type_printing() {
        let t = Type::arrow(Type::arrow(Type::Unit, Type::Int), Type::collection(Type::Bool));
        assert_eq!(t.to_string(), "(unit -> int) -> list bool");
    }
}

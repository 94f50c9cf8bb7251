use std::fmt;
use std::sync::Arc;

use crate::error::{Error, ErrorKind, Result};
use crate::pos::Pos;
use crate::surface::OpKind;
use crate::value::{Date, Money};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Keyword(&'static str),
    Ident(String),
    Ctor(String),
    Int(i64),
    Money(Money),
    Date(Date),
    /// Arithmetic or comparison operator with its type suffix.
    Op(&'static str, OpKind),
    Eq,
    Neq,
    Colon,
    DoubleDash,
    Dot,
    Semi,
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Eof,
}

pub const KEYWORDS: &[&str] = &[
    "declaration",
    "structure",
    "enumeration",
    "scope",
    "context",
    "data",
    "content",
    "condition",
    "depends",
    "on",
    "collection",
    "rule",
    "definition",
    "exception",
    "label",
    "under",
    "consequence",
    "fulfilled",
    "not",
    "equals",
    "match",
    "with",
    "if",
    "then",
    "else",
    "and",
    "or",
    "of",
    "true",
    "false",
    "is",
    "sum",
    "number",
    "for",
    "in",
    "day",
    "integer",
    "boolean",
    "money",
    "date",
    "duration",
];

impl Tok {
    /// How the token is named in "expected" lists.
    pub fn describe(&self) -> String {
        match self {
            Tok::Keyword(k) => (*k).to_owned(),
            Tok::Ident(s) | Tok::Ctor(s) => s.clone(),
            Tok::Int(i) => i.to_string(),
            Tok::Money(m) => m.to_string(),
            Tok::Date(d) => format!("|{d}|"),
            Tok::Op(o, k) => format!("{o}{}", k.suffix()),
            Tok::Eq => "=".into(),
            Tok::Neq => "!=".into(),
            Tok::Colon => ":".into(),
            Tok::DoubleDash => "--".into(),
            Tok::Dot => ".".into(),
            Tok::Semi => ";".into(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::LBracket => "[".into(),
            Tok::RBracket => "]".into(),
            Tok::LBrace => "{".into(),
            Tok::RBrace => "}".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    /// Source text of the token.
    pub text: String,
    pub pos: Pos,
}

struct Cursor<'a> {
    chars: Vec<char>,
    i: usize,
    line: u32,
    col: u32,
    file: &'a Arc<str>,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).copied()
    }

    fn peek_at(&self, k: usize) -> Option<char> {
        self.chars.get(self.i + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos_from(&self, line: u32, col: u32) -> Pos {
        Pos::new(self.file.clone(), line, col, self.line, self.col)
    }
}

fn op_suffix(c: Option<char>) -> Option<OpKind> {
    match c {
        Some('$') => Some(OpKind::Money),
        Some('@') => Some(OpKind::Date),
        Some('^') => Some(OpKind::Duration),
        _ => None,
    }
}

/// Tokenize one code block whose first character sits at `first_line`:1.
pub fn lex(file: &Arc<str>, text: &str, first_line: u32) -> Result<Vec<Token>> {
    let mut c = Cursor {
        chars: text.chars().collect(),
        i: 0,
        line: first_line,
        col: 1,
        file,
    };
    let mut out = Vec::new();
    while let Some(ch) = c.peek() {
        if ch.is_whitespace() {
            c.bump();
            continue;
        }
        if ch == '#' {
            while let Some(x) = c.peek() {
                if x == '\n' {
                    break;
                }
                c.bump();
            }
            continue;
        }
        let (line, col, start) = (c.line, c.col, c.i);
        let tok = lex_one(&mut c, ch, line, col)?;
        let text: String = c.chars[start..c.i].iter().collect();
        out.push(Token {
            tok,
            text,
            pos: c.pos_from(line, col),
        });
    }
    Ok(out)
}

fn lex_error(c: &Cursor<'_>, line: u32, col: u32, msg: &str) -> Error {
    Error::at(ErrorKind::Syntax, "Lexing error", &c.pos_from(line, col)).with_message(msg)
}

fn lex_one(c: &mut Cursor<'_>, ch: char, line: u32, col: u32) -> Result<Tok> {
    if ch.is_alphabetic() || ch == '_' {
        let mut s = String::new();
        while let Some(x) = c.peek() {
            if x.is_alphanumeric() || x == '_' {
                s.push(x);
                c.bump();
            } else {
                break;
            }
        }
        if let Some(k) = KEYWORDS.iter().find(|k| **k == s) {
            return Ok(Tok::Keyword(k));
        }
        return Ok(if s.chars().next().is_some_and(char::is_uppercase) {
            Tok::Ctor(s)
        } else {
            Tok::Ident(s)
        });
    }
    if ch.is_ascii_digit() {
        let mut n: i64 = 0;
        while let Some(x) = c.peek().filter(char::is_ascii_digit) {
            n = n
                .checked_mul(10)
                .and_then(|n| n.checked_add(x.to_digit(10).unwrap() as i64))
                .ok_or_else(|| lex_error(c, line, col, "integer literal too large"))?;
            c.bump();
        }
        return Ok(Tok::Int(n));
    }
    c.bump();
    let tok = match ch {
        '$' => return lex_money(c, line, col),
        '|' => return lex_date(c, line, col),
        ':' => Tok::Colon,
        '.' => Tok::Dot,
        ';' => Tok::Semi,
        '(' => Tok::LParen,
        ')' => Tok::RParen,
        '[' => Tok::LBracket,
        ']' => Tok::RBracket,
        '{' => Tok::LBrace,
        '}' => Tok::RBrace,
        '=' => Tok::Eq,
        '!' if c.peek() == Some('=') => {
            c.bump();
            Tok::Neq
        }
        '-' if c.peek() == Some('-') => {
            c.bump();
            Tok::DoubleDash
        }
        '+' | '-' | '*' | '/' => {
            let name = match ch {
                '+' => "+",
                '-' => "-",
                '*' => "*",
                _ => "/",
            };
            Tok::Op(name, suffix(c))
        }
        '<' | '>' => {
            let name = match (ch, c.peek()) {
                ('<', Some('=')) => "<=",
                ('>', Some('=')) => ">=",
                ('<', _) => "<",
                _ => ">",
            };
            if name.len() == 2 {
                c.bump();
            }
            Tok::Op(name, suffix(c))
        }
        other => {
            return Err(lex_error(
                c,
                line,
                col,
                &format!("unexpected character '{other}'"),
            ))
        }
    };
    Ok(tok)
}

fn suffix(c: &mut Cursor<'_>) -> OpKind {
    match op_suffix(c.peek()) {
        Some(k) => {
            c.bump();
            k
        }
        None => OpKind::Int,
    }
}

/// `$1,234.56`, `$0`, `$250,000`.
fn lex_money(c: &mut Cursor<'_>, line: u32, col: u32) -> Result<Tok> {
    let mut units: i64 = 0;
    let mut digits = 0;
    loop {
        match c.peek() {
            Some(d) if d.is_ascii_digit() => {
                units = units
                    .checked_mul(10)
                    .and_then(|u| u.checked_add(d.to_digit(10).unwrap() as i64))
                    .ok_or_else(|| lex_error(c, line, col, "money literal too large"))?;
                digits += 1;
                c.bump();
            }
            Some(',') if digits > 0 && c.peek_at(1).is_some_and(|d| d.is_ascii_digit()) => {
                c.bump();
            }
            _ => break,
        }
    }
    if digits == 0 {
        return Err(lex_error(c, line, col, "expected digits after '$'"));
    }
    let mut cents = 0;
    if c.peek() == Some('.') && c.peek_at(1).is_some_and(|d| d.is_ascii_digit()) {
        c.bump();
        let mut n = 0;
        while let Some(d) = c.peek().filter(char::is_ascii_digit) {
            if n == 2 {
                return Err(lex_error(c, line, col, "money literals have at most two decimals"));
            }
            cents = cents * 10 + d.to_digit(10).unwrap() as i64;
            n += 1;
            c.bump();
        }
        if n == 1 {
            cents *= 10;
        }
    }
    let total = units
        .checked_mul(100)
        .and_then(|u| u.checked_add(cents))
        .ok_or_else(|| lex_error(c, line, col, "money literal too large"))?;
    Ok(Tok::Money(Money(total)))
}

/// `|YYYY-MM-DD|`.
fn lex_date(c: &mut Cursor<'_>, line: u32, col: u32) -> Result<Tok> {
    let mut s = String::new();
    while let Some(x) = c.peek() {
        if x == '|' || x == '\n' {
            break;
        }
        s.push(x);
        c.bump();
    }
    if c.peek() != Some('|') {
        return Err(lex_error(c, line, col, "unterminated date literal, expected |YYYY-MM-DD|"));
    }
    c.bump();
    let parts: Vec<&str> = s.split('-').collect();
    let parsed = match parts.as_slice() {
        [y, m, d] if y.len() == 4 && m.len() == 2 && d.len() == 2 => {
            match (y.parse::<i64>(), m.parse::<u32>(), d.parse::<u32>()) {
                (Ok(y), Ok(m), Ok(d)) => Date::from_ymd(y, m, d),
                _ => None,
            }
        }
        _ => None,
    };
    parsed
        .map(Tok::Date)
        .ok_or_else(|| lex_error(c, line, col, &format!("invalid date literal |{s}|, expected |YYYY-MM-DD|")))
}

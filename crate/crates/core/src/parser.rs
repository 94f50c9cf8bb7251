//! Recursive-descent parser for the surface language.
//!
//! The parser keeps the set of tokens it tested for since the last consumed
//! token. When it fails, that set is exactly what the grammar would have
//! accepted at the failing position, and it becomes the suggestion list of
//! the syntax error.

use crate::error::{Error, ErrorKind, Result};
use crate::lexer::{lex, Tok, Token};
use crate::literate::LiterateDocument;
use crate::pos::Pos;
use crate::surface::*;

pub fn parse(doc: &LiterateDocument) -> Result<SurfaceProgram> {
    let mut toks = Vec::new();
    for (text, pos, _) in doc.code_blocks() {
        toks.extend(lex(&doc.file, text, pos.start_line)?);
    }
    let eof_pos = match toks.last() {
        Some(t) => Pos::new(
            doc.file.clone(),
            t.pos.end_line,
            t.pos.end_col,
            t.pos.end_line,
            t.pos.end_col + 1,
        ),
        None => Pos::new(doc.file.clone(), 1, 1, 1, 1),
    };
    toks.push(Token {
        tok: Tok::Eof,
        text: String::new(),
        pos: eof_pos,
    });
    Parser {
        toks,
        i: 0,
        expected: Vec::new(),
    }
    .program()
}

/// Parse a standalone expression, e.g. a command-line binding value.
pub fn parse_expr(file: &str, text: &str) -> Result<Expr> {
    let file = std::sync::Arc::<str>::from(file);
    let mut toks = lex(&file, text, 1)?;
    let end = toks
        .last()
        .map(|t| t.pos.end_col)
        .unwrap_or(1);
    toks.push(Token {
        tok: Tok::Eof,
        text: String::new(),
        pos: Pos::new(file, 1, end, 1, end + 1),
    });
    let mut p = Parser {
        toks,
        i: 0,
        expected: Vec::new(),
    };
    let e = p.expr()?;
    if !p.check(&Tok::Eof) {
        return Err(p.error("unexpected input after the expression"));
    }
    Ok(e)
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
    expected: Vec<String>,
}

const CMP_OPS: &[&str] = &["<", "<=", ">", ">="];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn token(&self) -> &Token {
        &self.toks[self.i]
    }

    fn prev_pos(&self) -> Pos {
        self.toks[self.i.saturating_sub(1)].pos.clone()
    }

    fn expect_name(&mut self, name: &str) {
        if !self.expected.iter().any(|e| e == name) {
            self.expected.push(name.to_owned());
        }
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        self.expected.clear();
        t
    }

    fn check(&mut self, t: &Tok) -> bool {
        self.expect_name(&t.describe());
        self.peek() == t
    }

    fn check_kw(&mut self, kw: &'static str) -> bool {
        self.check(&Tok::Keyword(kw))
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.check(t) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &'static str) -> bool {
        self.eat(&Tok::Keyword(kw))
    }

    fn expect(&mut self, t: &Tok, msg: &str) -> Result<Token> {
        if self.check(t) {
            Ok(self.bump())
        } else {
            Err(self.error(msg))
        }
    }

    fn expect_kw(&mut self, kw: &'static str, msg: &str) -> Result<Token> {
        self.expect(&Tok::Keyword(kw), msg)
    }

    // Category names are not tokens, so they are left out of the
    // suggestions.
    fn ident(&mut self, what: &str) -> Result<Spanned<Ident>> {
        if let Tok::Ident(s) = self.peek() {
            let s = s.clone();
            let t = self.bump();
            Ok(Spanned { node: s, pos: t.pos })
        } else {
            Err(self.error(&format!("expected {what}")))
        }
    }

    fn ctor(&mut self, what: &str) -> Result<Spanned<Ident>> {
        if let Tok::Ctor(s) = self.peek() {
            let s = s.clone();
            let t = self.bump();
            Ok(Spanned { node: s, pos: t.pos })
        } else {
            Err(self.error(&format!("expected {what}")))
        }
    }

    fn check_op(&mut self, names: &[&'static str]) -> Option<(&'static str, OpKind)> {
        for n in names {
            self.expect_name(n);
        }
        match self.peek() {
            Tok::Op(o, k) if names.contains(o) => Some((o, *k)),
            _ => None,
        }
    }

    fn error(&self, message: &str) -> Error {
        let tok = self.token();
        let shown = if tok.tok == Tok::Eof {
            "end of input".to_owned()
        } else {
            tok.text.clone()
        };
        let mut suggestions: Vec<(usize, usize, String)> = self
            .expected
            .iter()
            .enumerate()
            .map(|(i, e)| (edit_distance(&shown, e), i, e.clone()))
            .collect();
        suggestions.sort();
        let mut err = Error::new(ErrorKind::Syntax, format!("Syntax error at token \"{shown}\""))
            .with_message(message)
            .with_suggestions(suggestions.into_iter().map(|(_, _, s)| s).collect())
            .with_pos(Some("Error token"), &tok.pos);
        if self.i > 0 {
            err = err.with_pos(Some("Last good token"), &self.prev_pos());
        }
        err
    }

    // ---- declarations -------------------------------------------------

    fn program(mut self) -> Result<SurfaceProgram> {
        let mut prog = SurfaceProgram::default();
        loop {
            if self.check_kw("declaration") {
                self.declaration(&mut prog)?;
            } else if self.check_kw("scope") {
                prog.uses.push(self.scope_use()?);
            } else if self.check(&Tok::Eof) {
                return Ok(prog);
            } else {
                return Err(self.error("expected a declaration or a scope use block"));
            }
        }
    }

    fn declaration(&mut self, prog: &mut SurfaceProgram) -> Result<()> {
        self.bump();
        if self.eat_kw("structure") {
            let name = self.ctor("a structure name")?;
            self.expect(&Tok::Colon, "expected ':' after the structure name")?;
            let mut fields = Vec::new();
            while self.eat_kw("data") {
                let f = self.ident("a field name")?;
                let ty = if self.eat_kw("condition") {
                    SurfaceType::Boolean
                } else {
                    self.expect_kw("content", "expected 'content' or 'condition' for this field")?;
                    self.typ()?
                };
                fields.push((f, ty));
            }
            prog.structs.push(StructDecl { name, fields });
        } else if self.eat_kw("enumeration") {
            let name = self.ctor("an enumeration name")?;
            self.expect(&Tok::Colon, "expected ':' after the enumeration name")?;
            let mut cases = Vec::new();
            while self.eat(&Tok::DoubleDash) {
                let c = self.ctor("a constructor name")?;
                let payload = if self.eat_kw("content") {
                    Some(self.typ()?)
                } else {
                    None
                };
                cases.push((c, payload));
            }
            prog.enums.push(EnumDecl { name, cases });
        } else if self.eat_kw("scope") {
            let name = self.ctor("a scope name")?;
            self.expect(&Tok::Colon, "expected ':' after the scope name")?;
            let mut contexts = Vec::new();
            while self.check_kw("context") {
                let start = self.bump().pos;
                let var = self.ident("a context variable name")?;
                let kind = if self.eat_kw("condition") {
                    ContextKind::Condition
                } else if self.eat_kw("content") {
                    ContextKind::Content(self.typ()?)
                } else if self.eat_kw("scope") {
                    ContextKind::SubScope(self.ctor("a scope name")?)
                } else {
                    return Err(self.error(
                        "expected 'content', 'condition' or 'scope' for this context variable",
                    ));
                };
                let depends_on = if !matches!(kind, ContextKind::SubScope(_)) && self.eat_kw("depends") {
                    self.expect_kw("on", "expected 'on' after 'depends'")?;
                    Some(self.typ()?)
                } else {
                    None
                };
                contexts.push(ContextDecl {
                    name: var,
                    kind,
                    depends_on,
                    pos: start.join(&self.prev_pos()),
                });
            }
            prog.scopes.push(ScopeDecl { name, contexts });
        } else {
            return Err(self.error("expected 'structure', 'enumeration' or 'scope' after 'declaration'"));
        }
        Ok(())
    }

    fn typ(&mut self) -> Result<SurfaceType> {
        let ty = if self.eat_kw("boolean") {
            SurfaceType::Boolean
        } else if self.eat_kw("integer") {
            SurfaceType::Integer
        } else if self.eat_kw("money") {
            SurfaceType::Money
        } else if self.eat_kw("date") {
            SurfaceType::Date
        } else if self.eat_kw("duration") {
            SurfaceType::Duration
        } else if self.eat_kw("collection") {
            SurfaceType::Collection(Box::new(self.typ()?))
        } else {
            SurfaceType::Named(self.ctor("a type name")?.node)
        };
        Ok(ty)
    }

    // ---- scope uses -----------------------------------------------------

    fn scope_use(&mut self) -> Result<ScopeUse> {
        let start = self.bump().pos;
        let scope = self.ctor("a scope name")?;
        self.expect(&Tok::Colon, "expected ':' after the scope name")?;
        let mut items = Vec::new();
        loop {
            if self.check_kw("rule")
                || self.check_kw("definition")
                || self.check_kw("exception")
                || self.check_kw("label")
            {
                items.push(self.item()?);
            } else if self.check_kw("scope") || self.check_kw("declaration") || self.check(&Tok::Eof) {
                break;
            } else {
                let msg = match &self.toks[self.i.saturating_sub(1)].tok {
                    Tok::Int(_) => "expected a unit for this literal, or a valid operator to complete the expression",
                    _ => "expected a valid operator to complete the expression, or the start of a new item",
                };
                return Err(self.error(msg));
            }
        }
        Ok(ScopeUse {
            pos: start.join(&self.prev_pos()),
            scope,
            items,
        })
    }

    fn item(&mut self) -> Result<Item> {
        let start = self.token().pos.clone();
        let mut label = None;
        let mut exception = None;
        loop {
            if label.is_none() && self.eat_kw("label") {
                label = Some(self.ident("a label name")?);
            } else if exception.is_none() && self.eat_kw("exception") {
                self.expect_name("a label name");
                exception = Some(match self.peek() {
                    Tok::Ident(_) => Some(self.ident("a label name")?),
                    _ => None,
                });
            } else {
                break;
            }
        }
        let body = if self.eat_kw("rule") {
            let target = self.location()?;
            let param = self.param()?;
            let condition = self.condition()?;
            self.expect_kw("consequence", "expected 'consequence' in this rule")?;
            let fulfilled = !self.eat_kw("not");
            self.expect_kw("fulfilled", "expected 'fulfilled' or 'not fulfilled'")?;
            ItemBody::Rule {
                target,
                param,
                condition,
                fulfilled,
            }
        } else if self.eat_kw("definition") {
            let target = self.location()?;
            let param = self.param()?;
            let condition = self.condition()?;
            if condition.is_some() {
                self.expect_kw("consequence", "expected 'consequence' after the condition")?;
            }
            self.expect_kw("equals", "expected 'equals' in this definition")?;
            ItemBody::Definition {
                target,
                param,
                condition,
                consequence: Consequence::Expr(self.expr()?),
            }
        } else {
            return Err(self.error("expected 'rule' or 'definition'"));
        };
        Ok(Item {
            label,
            exception,
            body,
            pos: start.join(&self.prev_pos()),
        })
    }

    fn location(&mut self) -> Result<Spanned<SurfaceLoc>> {
        let first = self.ident("a variable name")?;
        if self.eat(&Tok::Dot) {
            let second = self.ident("a variable name")?;
            Ok(Spanned {
                pos: first.pos.join(&second.pos),
                node: SurfaceLoc {
                    subscope: Some(first.node),
                    var: second.node,
                },
            })
        } else {
            Ok(Spanned {
                pos: first.pos,
                node: SurfaceLoc {
                    subscope: None,
                    var: first.node,
                },
            })
        }
    }

    fn param(&mut self) -> Result<Option<Spanned<Ident>>> {
        if self.eat_kw("of") {
            Ok(Some(self.ident("a parameter name")?))
        } else {
            Ok(None)
        }
    }

    fn condition(&mut self) -> Result<Option<Expr>> {
        if self.eat_kw("under") {
            self.expect_kw("condition", "expected 'condition' after 'under'")?;
            Ok(Some(self.expr()?))
        } else {
            Ok(None)
        }
    }

    // ---- expressions ----------------------------------------------------

    pub fn expr(&mut self) -> Result<Expr> {
        if self.check_kw("if") {
            let start = self.bump().pos;
            let c = self.expr()?;
            self.expect_kw("then", "expected 'then' after the condition")?;
            let t = self.expr()?;
            self.expect_kw("else", "expected 'else' to complete the conditional")?;
            let e = self.expr()?;
            let pos = start.join(&e.pos);
            return Ok(mk(ExprKind::If(c, t, e), pos));
        }
        if self.check_kw("match") {
            let start = self.bump().pos;
            let scrut = self.expr()?;
            self.expect_kw("with", "expected 'with' after the matched expression")?;
            let mut arms = Vec::new();
            while self.eat(&Tok::DoubleDash) {
                let ctor = self.ctor("a constructor name")?;
                let binder = if self.eat_kw("of") {
                    Some(self.ident("a variable name")?)
                } else {
                    None
                };
                self.expect(&Tok::Colon, "expected ':' before the match arm body")?;
                let body = self.expr()?;
                arms.push(MatchArm { ctor, binder, body });
            }
            if arms.is_empty() {
                return Err(self.error("expected at least one '-- Constructor : expression' arm"));
            }
            let pos = start.join(&self.prev_pos());
            return Ok(mk(ExprKind::Match(scrut, arms), pos));
        }
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.and_expr()?;
        while self.eat_kw("or") {
            let rhs = self.and_expr()?;
            let pos = lhs.pos.join(&rhs.pos);
            lhs = mk(ExprKind::Binop(BinOp::Or, lhs, rhs), pos);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.not_expr()?;
        while self.eat_kw("and") {
            let rhs = self.not_expr()?;
            let pos = lhs.pos.join(&rhs.pos);
            lhs = mk(ExprKind::Binop(BinOp::And, lhs, rhs), pos);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<Expr> {
        if self.check_kw("not") {
            let start = self.bump().pos;
            let e = self.not_expr()?;
            let pos = start.join(&e.pos);
            return Ok(mk(ExprKind::Unop(UnOp::Not, e), pos));
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> Result<Expr> {
        let lhs = self.add_expr()?;
        let op = if let Some((o, k)) = self.check_op(CMP_OPS) {
            Some(match o {
                "<" => BinOp::Lt(k),
                "<=" => BinOp::Le(k),
                ">" => BinOp::Gt(k),
                _ => BinOp::Ge(k),
            })
        } else if self.check(&Tok::Eq) {
            Some(BinOp::Eq)
        } else if self.check(&Tok::Neq) {
            Some(BinOp::Neq)
        } else {
            None
        };
        let Some(op) = op else { return Ok(lhs) };
        self.bump();
        let rhs = self.add_expr()?;
        let pos = lhs.pos.join(&rhs.pos);
        Ok(mk(ExprKind::Binop(op, lhs, rhs), pos))
    }

    fn add_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.mul_expr()?;
        while let Some((o, k)) = self.check_op(&["+", "-"]) {
            self.bump();
            let rhs = self.mul_expr()?;
            let op = if o == "+" { BinOp::Add(k) } else { BinOp::Sub(k) };
            let pos = lhs.pos.join(&rhs.pos);
            lhs = mk(ExprKind::Binop(op, lhs, rhs), pos);
        }
        Ok(lhs)
    }

    fn mul_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some((o, k)) = self.check_op(&["*", "/"]) {
            self.bump();
            let rhs = self.unary()?;
            let op = if o == "*" { BinOp::Mul(k) } else { BinOp::Div(k) };
            let pos = lhs.pos.join(&rhs.pos);
            lhs = mk(ExprKind::Binop(op, lhs, rhs), pos);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some((_, k)) = self.check_op(&["-"]) {
            let start = self.bump().pos;
            let e = self.unary()?;
            let pos = start.join(&e.pos);
            return Ok(mk(ExprKind::Unop(UnOp::Neg(k), e), pos));
        }
        self.app()
    }

    fn app(&mut self) -> Result<Expr> {
        let f = self.postfix()?;
        if self.eat_kw("of") {
            let arg = self.app()?;
            let pos = f.pos.join(&arg.pos);
            return Ok(mk(ExprKind::App(f, arg), pos));
        }
        Ok(f)
    }

    fn postfix(&mut self) -> Result<Expr> {
        let mut e = self.primary()?;
        while self.eat(&Tok::Dot) {
            let field = self.ident("a field or variable name")?;
            let pos = e.pos.join(&field.pos);
            e = mk(ExprKind::Dot(e, field), pos);
        }
        if self.eat_kw("is") {
            let c = self.ctor("a constructor name")?;
            let pos = e.pos.join(&c.pos);
            e = mk(ExprKind::Is(e, c), pos);
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr> {
        for kw in ["true", "false", "sum", "number", "if", "match"] {
            self.expect_name(kw);
        }
        for name in ["an integer", "a money amount", "a date", "a variable name", "(", "["] {
            self.expect_name(name);
        }
        let tok = self.token().clone();
        match &tok.tok {
            Tok::Keyword("true") | Tok::Keyword("false") => {
                self.bump();
                Ok(mk(ExprKind::Bool(tok.tok == Tok::Keyword("true")), tok.pos))
            }
            Tok::Int(n) => {
                self.bump();
                if self.check_kw("day") {
                    let end = self.bump().pos;
                    return Ok(mk(
                        ExprKind::Duration(crate::value::Duration(*n)),
                        tok.pos.join(&end),
                    ));
                }
                Ok(mk(ExprKind::Int(*n), tok.pos))
            }
            Tok::Money(m) => {
                self.bump();
                Ok(mk(ExprKind::Money(*m), tok.pos))
            }
            Tok::Date(d) => {
                self.bump();
                Ok(mk(ExprKind::Date(*d), tok.pos))
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(mk(ExprKind::Var(s.clone()), tok.pos))
            }
            Tok::Ctor(s) => {
                self.bump();
                let name = Spanned {
                    node: s.clone(),
                    pos: tok.pos.clone(),
                };
                if self.eat(&Tok::LBrace) {
                    let mut fields = Vec::new();
                    while self.eat(&Tok::DoubleDash) {
                        let f = self.ident("a field name")?;
                        self.expect(&Tok::Colon, "expected ':' after the field name")?;
                        fields.push((f, self.expr()?));
                    }
                    let end = self.expect(&Tok::RBrace, "expected '-- field: value' or '}'")?;
                    return Ok(mk(ExprKind::StructLit(name, fields), tok.pos.join(&end.pos)));
                }
                if self.eat_kw("content") {
                    let payload = self.postfix()?;
                    let pos = tok.pos.join(&payload.pos);
                    return Ok(mk(ExprKind::EnumLit(name, Some(payload)), pos));
                }
                Ok(mk(ExprKind::EnumLit(name, None), tok.pos))
            }
            Tok::LParen => {
                self.bump();
                let mut e = self.expr()?;
                let end = self.expect(&Tok::RParen, "expected ')' to close the parenthesis")?;
                e.pos = tok.pos.join(&end.pos);
                Ok(e)
            }
            Tok::LBracket => {
                self.bump();
                let mut elems = Vec::new();
                if !self.check(&Tok::RBracket) {
                    elems.push(self.expr()?);
                    while self.eat(&Tok::Semi) {
                        elems.push(self.expr()?);
                    }
                }
                let end = self.expect(&Tok::RBracket, "expected ';' or ']' in this collection")?;
                Ok(mk(ExprKind::Collection(elems), tok.pos.join(&end.pos)))
            }
            Tok::Keyword("sum") => {
                self.bump();
                let kind = if self.eat_kw("integer") {
                    OpKind::Int
                } else if self.eat_kw("money") {
                    OpKind::Money
                } else if self.eat_kw("duration") {
                    OpKind::Duration
                } else {
                    return Err(self.error("expected 'integer', 'money' or 'duration' after 'sum'"));
                };
                self.expect_kw("for", "expected 'for' in this aggregation")?;
                let binder = self.ident("a variable name")?;
                self.expect_kw("in", "expected 'in' in this aggregation")?;
                let collection = self.postfix()?;
                self.expect_kw("of", "expected 'of' before the summed expression")?;
                let body = self.app()?;
                let pos = tok.pos.join(&body.pos);
                Ok(mk(
                    ExprKind::Sum {
                        kind,
                        binder,
                        collection,
                        body,
                    },
                    pos,
                ))
            }
            Tok::Keyword("number") => {
                self.bump();
                self.expect_kw("of", "expected 'of' after 'number'")?;
                let c = self.postfix()?;
                let pos = tok.pos.join(&c.pos);
                Ok(mk(ExprKind::Count(c), pos))
            }
            Tok::Keyword("if") | Tok::Keyword("match") => self.expr(),
            _ => Err(self.error("expected an expression")),
        }
    }
}

fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for i in 1..=a.len() {
        let mut cur = vec![i; b.len() + 1];
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

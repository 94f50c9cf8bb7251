//! Python source generation from the lambda calculus. Each scope becomes a
//! function from a tuple of zero-argument closures to the tuple of its
//! locals; ∅ and ⊛ become the runtime's `Empty` and `Conflict` exceptions.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde_json::json;

use crate::dcalc::{self, Kind, Var};
use crate::error::ErrorKind;
use crate::lcalc::{Exn, LKind, LProgram, LTerm};
use crate::ops::{Op, UOp};
use crate::pos::Pos;
use crate::scopelang::ScopeProgram;
use crate::value::{Lit, Name};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

const PY_RESERVED: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del", "elif",
    "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda", "nonlocal", "not", "or",
    "pass", "raise", "return", "try", "while", "with", "yield", "print", "len", "list", "tuple", "int", "bool", "str",
    "object", "type", "sys", "match", "case",
];

fn transliterate(c: char) -> Option<&'static str> {
    Some(match c {
        'à' | 'á' | 'â' | 'ã' | 'ä' | 'å' => "a",
        'À' | 'Á' | 'Â' | 'Ã' | 'Ä' | 'Å' => "A",
        'æ' => "ae",
        'Æ' => "AE",
        'ç' => "c",
        'Ç' => "C",
        'è' | 'é' | 'ê' | 'ë' => "e",
        'È' | 'É' | 'Ê' | 'Ë' => "E",
        'ì' | 'í' | 'î' | 'ï' => "i",
        'Ì' | 'Í' | 'Î' | 'Ï' => "I",
        'ñ' => "n",
        'Ñ' => "N",
        'ò' | 'ó' | 'ô' | 'õ' | 'ö' | 'ø' => "o",
        'Ò' | 'Ó' | 'Ô' | 'Õ' | 'Ö' | 'Ø' => "O",
        'œ' => "oe",
        'Œ' => "OE",
        'ù' | 'ú' | 'û' | 'ü' => "u",
        'Ù' | 'Ú' | 'Û' | 'Ü' => "U",
        'ý' | 'ÿ' => "y",
        'Ý' => "Y",
        'ß' => "ss",
        _ => return None,
    })
}

/// Deterministic ASCII identifier for a source name: accents are dropped,
/// other characters become `_` or `uXXXX`, reserved words get a trailing `_`.
pub fn sanitize(name: &str) -> String {
    let mut s = String::new();
    for c in name.chars() {
        if c.is_ascii_alphanumeric() || c == '_' {
            s.push(c);
        } else if let Some(t) = transliterate(c) {
            s.push_str(t);
        } else if c.is_ascii() {
            s.push('_');
        } else {
            let _ = write!(s, "u{:04x}", c as u32);
        }
    }
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit()) {
        s.insert(0, '_');
    }
    if PY_RESERVED.contains(&s.as_str()) || s.starts_with("_rt") {
        s.push('_');
    }
    s
}

/// Injective renaming: a name already taken gets a numeric suffix.
#[derive(Default)]
struct Namer {
    used: HashSet<String>,
}

impl Namer {
    fn fresh(&mut self, base: &str) -> String {
        let base = sanitize(base);
        if self.used.insert(base.clone()) {
            return base;
        }
        let mut k = 2;
        loop {
            let cand = format!("{base}_{k}");
            if self.used.insert(cand.clone()) {
                return cand;
            }
            k += 1;
        }
    }
}

/// Options of [`emit`].
#[derive(Clone, Debug, Default)]
pub struct EmitOptions {
    pub source_file: String,
    /// A closed term whose value is printed by the generated `__main__`
    /// block, with the scope name and the names of its locals.
    pub main: Option<(LTerm, String, Vec<String>)>,
}

pub struct EmitUnit {
    pub source: String,
    pub symbol_map: serde_json::Value,
}

impl EmitUnit {
    pub fn symbol_map_json(&self) -> String {
        format!("{}\n", serde_json::to_string_pretty(&self.symbol_map).expect("symbol map is plain JSON"))
    }
}

/// Python expression under construction. Atomic expressions can be
/// evaluated at any point without effects.
struct E {
    code: String,
    atomic: bool,
}

fn atom(code: String) -> E {
    E { code, atomic: true }
}

fn compound(code: String) -> E {
    E { code, atomic: false }
}

struct Emitter {
    namer: Namer,
    vars: HashMap<u32, String>,
    structs: HashMap<Name, String>,
    /// Attribute of each field name, shared by all structures.
    fields: HashMap<Name, String>,
    field_namer: Namer,
    enums: HashMap<Name, String>,
    tops: HashMap<Name, String>,
    /// Variable named by each default, keyed by the default's position, so
    /// that conflicts raised by the runtime carry the same message as the
    /// interpreter's.
    defaults: HashMap<Pos, String>,
}

type Block = Vec<String>;

fn push(b: &mut Block, ind: usize, line: impl AsRef<str>) {
    b.push(format!("{}{}", "    ".repeat(ind), line.as_ref()));
}

fn py_str(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            c if c.is_ascii() && !c.is_ascii_control() => out.push(c),
            c => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
        }
    }
    out.push('"');
    out
}

fn lit(l: &Lit) -> E {
    atom(match l {
        Lit::Unit => "()".into(),
        Lit::Bool(true) => "True".into(),
        Lit::Bool(false) => "False".into(),
        Lit::Int(i) if *i < 0 => format!("({i})"),
        Lit::Int(i) => i.to_string(),
        Lit::Money(m) => format!("_rt.Money({})", m.0),
        Lit::Date(d) => {
            let (y, m, dd) = d.ymd();
            format!("_rt.Date({y}, {m}, {dd})")
        }
        Lit::Duration(d) => format!("_rt.Duration({})", d.0),
    })
}

fn error_kind(k: ErrorKind) -> &'static str {
    match k {
        ErrorKind::NeverDefined => "never_defined",
        ErrorKind::Conflict => "conflict",
        _ => "no_definition",
    }
}

impl Emitter {
    fn var(&mut self, v: &Var) -> String {
        if let Some(n) = self.vars.get(&v.id) {
            return n.clone();
        }
        let n = self.namer.fresh(&v.name);
        self.vars.insert(v.id, n.clone());
        n
    }

    fn temp(&mut self, base: &str) -> String {
        self.namer.fresh(base)
    }

    /// Compiles `ts` left to right. When a later operand needs statements,
    /// earlier non-atomic operands are first saved in temporaries so that
    /// evaluation order is preserved.
    fn operands(&mut self, ts: &[&LTerm], b: &mut Block, ind: usize) -> Vec<String> {
        let mut out: Vec<E> = Vec::new();
        for t in ts {
            let mark = b.len();
            let e = self.expr(t, b, ind);
            if b.len() > mark {
                let mut saves = Vec::new();
                for prev in out.iter_mut().filter(|p| !p.atomic) {
                    let tmp = self.temp("tmp");
                    saves.push(format!("{}{tmp} = {}", "    ".repeat(ind), prev.code));
                    *prev = atom(tmp);
                }
                b.splice(mark..mark, saves);
            }
            out.push(e);
        }
        out.into_iter().map(|e| e.code).collect()
    }

    /// Emits a function. Thunks (unit parameter) get a defaulted parameter
    /// so they can be called with no argument.
    fn lambda(&mut self, name: Option<String>, x: &Var, ty: &crate::value::Type, body: &LTerm, b: &mut Block, ind: usize) -> E {
        let param = self.var(x);
        let param = if *ty == crate::value::Type::Unit { format!("{param}=()") } else { param };
        let mut inner = Block::new();
        let e = self.expr(body, &mut inner, ind + 1);
        if inner.is_empty() && name.is_none() {
            return compound(format!("(lambda {param}: {})", e.code));
        }
        let f = name.unwrap_or_else(|| self.temp("fun"));
        push(b, ind, format!("def {f}({param}):"));
        b.extend(inner);
        push(b, ind + 1, format!("return {}", e.code));
        atom(f)
    }

    /// Statement form of a branch: its statements, then `target = value`.
    fn branch(&mut self, t: &LTerm, target: &str, b: &mut Block, ind: usize) {
        let e = self.expr(t, b, ind);
        push(b, ind, format!("{target} = {}", e.code));
    }

    fn binop(op: Op, a: &str, c: &str) -> String {
        match op {
            Op::AddInt => format!("_rt.i64({a} + {c})"),
            Op::SubInt => format!("_rt.i64({a} - {c})"),
            Op::MulInt => format!("_rt.i64({a} * {c})"),
            Op::DivInt => format!("_rt.div({a}, {c})"),
            Op::DivMoney => format!("_rt.div_money({a}, {c})"),
            Op::AddMoney | Op::AddDuration | Op::AddDateDuration => format!("({a} + {c})"),
            Op::SubMoney | Op::SubDuration | Op::SubDateDuration | Op::SubDate => format!("({a} - {c})"),
            Op::MulMoney | Op::MulDuration => format!("({a} * {c})"),
            Op::Lt(_) => format!("({a} < {c})"),
            Op::Le(_) => format!("({a} <= {c})"),
            Op::Gt(_) => format!("({a} > {c})"),
            Op::Ge(_) => format!("({a} >= {c})"),
            Op::Eq => format!("({a} == {c})"),
            Op::Neq => format!("({a} != {c})"),
            // Both operands are evaluated, as in the calculi.
            Op::And => format!("({a} & {c})"),
            Op::Or => format!("({a} | {c})"),
        }
    }

    fn expr(&mut self, t: &LTerm, b: &mut Block, ind: usize) -> E {
        match &t.kind {
            LKind::Var(v) => atom(self.var(v)),
            LKind::TopName(n) => atom(self.tops.get(n).cloned().unwrap_or_else(|| sanitize(n))),
            LKind::Lit(l) => lit(l),
            LKind::Lam(x, ty, body) => self.lambda(None, x, ty, body, b, ind),
            LKind::App(f, a) => {
                if let (LKind::TopName(h), LKind::Array(_, _)) = (&f.kind, &a.kind) {
                    if h.starts_with("process_exceptions__") {
                        let ops = self.operands(&[f, a], b, ind);
                        let variable = t.pos.as_ref().and_then(|p| self.defaults.get(p)).map(|v| py_str(v));
                        return compound(match variable {
                            Some(v) => format!("{}({}, {v})", ops[0], ops[1]),
                            None => format!("{}({})", ops[0], ops[1]),
                        });
                    }
                }
                if matches!(a.kind, LKind::Lit(Lit::Unit)) {
                    let ops = self.operands(&[f], b, ind);
                    return compound(format!("{}()", ops[0]));
                }
                let ops = self.operands(&[f, a], b, ind);
                compound(format!("{}({})", ops[0], ops[1]))
            }
            LKind::NoneC(_) => atom("None".into()),
            LKind::SomeC(e) => {
                let ops = self.operands(&[e], b, ind);
                compound(format!("_rt.Some({})", ops[0]))
            }
            LKind::MatchOpt(e, none, x, some) => {
                let scrut = self.expr(e, b, ind);
                let o = self.temp("opt");
                push(b, ind, format!("{o} = {}", scrut.code));
                let r = self.temp("res");
                push(b, ind, format!("if {o} is None:"));
                self.branch(none, &r, b, ind + 1);
                push(b, ind, "else:");
                let xv = self.var(x);
                push(b, ind + 1, format!("{xv} = {o}.value"));
                self.branch(some, &r, b, ind + 1);
                atom(r)
            }
            LKind::Array(_, es) => {
                let refs: Vec<&LTerm> = es.iter().collect();
                let ops = self.operands(&refs, b, ind);
                compound(format!("[{}]", ops.join(", ")))
            }
            LKind::Fold(f, acc, l) => {
                let ops = self.operands(&[f, acc, l], b, ind);
                compound(format!("_rt.fold_left({}, {}, {})", ops[0], ops[1], ops[2]))
            }
            LKind::Raise(Exn::Empty, origin) => compound(match origin {
                Some(o) => format!("_rt.raise_empty({}, {})", py_str(error_kind(o.kind)), py_str(&o.message)),
                None => "_rt.raise_empty()".into(),
            }),
            LKind::Raise(Exn::Conflict, origin) => compound(match origin {
                Some(o) => format!("_rt.raise_conflict({})", py_str(&o.message)),
                None => "_rt.raise_conflict()".into(),
            }),
            LKind::Try(e, exn, h) => {
                let r = self.temp("res");
                push(b, ind, "try:");
                self.branch(e, &r, b, ind + 1);
                let cls = match exn {
                    Exn::Empty => "_rt.Empty",
                    Exn::Conflict => "_rt.Conflict",
                };
                push(b, ind, format!("except {cls}:"));
                self.branch(h, &r, b, ind + 1);
                atom(r)
            }
            LKind::If(c, x, y) => {
                let cond = self.operands(&[c], b, ind).remove(0);
                let mut bx = Block::new();
                let ex = self.expr(x, &mut bx, ind + 1);
                let mut by = Block::new();
                let ey = self.expr(y, &mut by, ind + 1);
                if bx.is_empty() && by.is_empty() {
                    return compound(format!("({} if {cond} else {})", ex.code, ey.code));
                }
                let r = self.temp("res");
                push(b, ind, format!("if {cond}:"));
                b.extend(bx);
                push(b, ind + 1, format!("{r} = {}", ex.code));
                push(b, ind, "else:");
                b.extend(by);
                push(b, ind + 1, format!("{r} = {}", ey.code));
                atom(r)
            }
            LKind::Let(x, _, e1, e2) => {
                let v = self.var(x);
                if let LKind::Lam(y, ty, body) = &e1.kind {
                    self.lambda(Some(v), y, ty, body, b, ind);
                } else {
                    let e = self.expr(e1, b, ind);
                    push(b, ind, format!("{v} = {}", e.code));
                }
                self.expr(e2, b, ind)
            }
            LKind::Tuple(es) => {
                let refs: Vec<&LTerm> = es.iter().collect();
                let ops = self.operands(&refs, b, ind);
                let inner = if ops.len() == 1 { format!("{},", ops[0]) } else { ops.join(", ") };
                compound(format!("({inner})"))
            }
            LKind::TupleGet(e, i) => {
                let ops = self.operands(&[e], b, ind);
                compound(format!("{}[{i}]", ops[0]))
            }
            LKind::Struct(n, fs) => {
                let refs: Vec<&LTerm> = fs.iter().map(|(_, e)| e).collect();
                let ops = self.operands(&refs, b, ind);
                let args: Vec<String> = fs.iter().zip(ops).map(|((f, _), e)| format!("{}={e}", self.fields[f])).collect();
                compound(format!("{}({})", self.structs[n], args.join(", ")))
            }
            LKind::StructGet(e, f) => {
                let ops = self.operands(&[e], b, ind);
                compound(format!("{}.{}", ops[0], self.fields[f]))
            }
            LKind::Inject(en, c, e) => {
                let ops = self.operands(&[e], b, ind);
                compound(format!("{}({}, {})", self.enums[en], py_str(c), ops[0]))
            }
            LKind::Match(e, _, arms) => {
                let scrut = self.expr(e, b, ind);
                let m = self.temp("m");
                push(b, ind, format!("{m} = {}", scrut.code));
                let r = self.temp("res");
                for (i, (c, x, body)) in arms.iter().enumerate() {
                    if i + 1 == arms.len() {
                        push(b, ind, if arms.len() == 1 { "if True:".to_owned() } else { "else:".to_owned() });
                    } else if i == 0 {
                        push(b, ind, format!("if {m}.ctor == {}:", py_str(c)));
                    } else {
                        push(b, ind, format!("elif {m}.ctor == {}:", py_str(c)));
                    }
                    let xv = self.var(x);
                    push(b, ind + 1, format!("{xv} = {m}.payload"));
                    self.branch(body, &r, b, ind + 1);
                }
                atom(r)
            }
            LKind::Binop(op, x, y) => {
                let ops = self.operands(&[x, y], b, ind);
                compound(Self::binop(*op, &ops[0], &ops[1]))
            }
            LKind::Unop(op, x) => {
                let a = self.operands(&[x], b, ind).remove(0);
                compound(match op {
                    UOp::Not => format!("(not {a})"),
                    UOp::NegInt => format!("_rt.i64(-{a})"),
                    UOp::NegMoney | UOp::NegDuration => format!("(-{a})"),
                })
            }
        }
    }

}

/// Positions of compiled defaults and the variable each defines.
pub fn default_names(p: &dcalc::Program) -> HashMap<Pos, String> {
    let mut out = HashMap::new();
    for t in p.tops.values() {
        dcalc::map_term(t, &mut |t| {
            if let (Kind::Default(d), Some(pos)) = (&t.kind, &t.pos) {
                if let Some(m) = &d.meta {
                    out.entry(pos.clone()).or_insert_with(|| m.variable.clone());
                }
            }
            None
        });
    }
    out
}

/// Generates the Python module for `program`.
pub fn emit(program: &LProgram, scopes: &ScopeProgram, defaults: HashMap<Pos, String>, opts: &EmitOptions) -> EmitUnit {
    let decls = &*program.decls;
    let mut em = Emitter {
        namer: Namer::default(),
        vars: HashMap::new(),
        structs: HashMap::new(),
        fields: HashMap::new(),
        field_namer: Namer::default(),
        enums: HashMap::new(),
        tops: HashMap::new(),
        defaults,
    };
    for n in ["_rt", "sys"] {
        em.namer.used.insert(n.into());
    }
    let mut out = String::new();
    let scope_names: Vec<&str> = scopes.scopes.iter().map(|s| &*s.name).collect();
    let _ = writeln!(out, "# Generated by legalc {VERSION} from {}", opts.source_file);
    let _ = writeln!(out, "# Scopes: {}", scope_names.join(", "));
    let _ = writeln!(out, "# Do not edit: regenerate with `legalc transpile`.");
    out.push('\n');
    out.push_str("import legalc_runtime as _rt\n");
    let _ = writeln!(out, "\n_rt_version = {}\n", py_str(VERSION));

    let mut sym_structs = serde_json::Map::new();
    for (s, fs) in &decls.structs {
        let cls = em.namer.fresh(s);
        em.structs.insert(s.clone(), cls.clone());
        let mut pairs = Vec::new();
        let mut sym_fields = serde_json::Map::new();
        for (f, _) in fs {
            let attr = match em.fields.get(f) {
                Some(a) => a.clone(),
                None => {
                    let a = em.field_namer.fresh(f);
                    em.fields.insert(f.clone(), a.clone());
                    a
                }
            };
            sym_fields.insert(f.to_string(), json!(attr));
            pairs.push((f.clone(), attr));
        }
        let _ = writeln!(out, "\nclass {cls}(_rt.Struct):");
        let slots: Vec<String> = pairs.iter().map(|(_, a)| py_str(a)).collect();
        let _ = writeln!(out, "    __slots__ = ({}{})", slots.join(", "), if slots.len() == 1 { "," } else { "" });
        let _ = writeln!(out, "    _name = {}", py_str(s));
        let fields: Vec<String> = pairs.iter().map(|(f, a)| format!("({}, {})", py_str(f), py_str(a))).collect();
        let _ = writeln!(out, "    _fields = ({}{})", fields.join(", "), if fields.len() == 1 { "," } else { "" });
        sym_structs.insert(s.to_string(), json!({ "class": cls, "fields": sym_fields }));
    }
    let mut sym_enums = serde_json::Map::new();
    for (e, cases) in &decls.enums {
        let cls = em.namer.fresh(e);
        em.enums.insert(e.clone(), cls.clone());
        let _ = writeln!(out, "\nclass {cls}(_rt.Enum):");
        let _ = writeln!(out, "    __slots__ = ()");
        let _ = writeln!(out, "    _name = {}", py_str(e));
        let ctors: Vec<&str> = cases.iter().map(|(c, _)| &**c).collect();
        sym_enums.insert(e.to_string(), json!({ "class": cls, "constructors": ctors }));
    }
    for n in program.tops.keys() {
        let py = em.namer.fresh(n);
        em.tops.insert(n.clone(), py);
    }
    let mut sym_scopes = serde_json::Map::new();
    for (n, t) in &program.tops {
        let py = em.tops[n].clone();
        let mut b = Block::new();
        if n.starts_with("process_exceptions__") {
            push(&mut b, 0, format!("{py} = _rt.process_exceptions"));
        } else if let LKind::Lam(x, ty, body) = &t.kind {
            em.lambda(Some(py.clone()), x, ty, body, &mut b, 0);
        } else {
            let e = em.expr(t, &mut b, 0);
            push(&mut b, 0, format!("{py} = {}", e.code));
        }
        out.push('\n');
        if let Some(sc) = scopes.scope(n) {
            let locals: Vec<String> = sc.vars.iter().map(|v| v.name.to_string()).collect();
            let _ = writeln!(out, "# {n}: ({}) -> ({})", locals.iter().map(|l| format!("{l} thunk")).collect::<Vec<_>>().join(", "), locals.join(", "));
            let vars: Vec<serde_json::Value> =
                locals.iter().enumerate().map(|(i, l)| json!({ "name": l, "index": i })).collect();
            sym_scopes.insert(n.to_string(), json!({ "function": py, "locals": vars }));
        }
        for l in b {
            out.push_str(&l);
            out.push('\n');
        }
    }
    if let Some((term, scope, names)) = &opts.main {
        let mut b = Block::new();
        let e = em.expr(term, &mut b, 1);
        out.push_str("\n\ndef _main():\n");
        for l in b {
            out.push_str(&l);
            out.push('\n');
        }
        let _ = writeln!(out, "    return {}", e.code);
        let names: Vec<String> = names.iter().map(|n| py_str(n)).collect();
        let _ = writeln!(out, "\n\nif __name__ == \"__main__\":");
        let _ = writeln!(out, "    _rt.run_main({}, [{}], _main)", py_str(scope), names.join(", "));
    }
    let helpers: Vec<String> =
        program.tops.keys().filter(|n| n.starts_with("process_exceptions__")).map(|n| n.to_string()).collect();
    let symbol_map = json!({
        "source": opts.source_file,
        "version": VERSION,
        "scopes": sym_scopes,
        "structures": sym_structs,
        "enumerations": sym_enums,
        "helpers": helpers,
    });
    EmitUnit { source: out, symbol_map }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identifiers_are_deterministic_and_injective() {
        assert_eq!(sanitize("montant_versé"), "montant_verse");
        assert_eq!(sanitize("class"), "class_");
        assert_eq!(sanitize("person1.personal"), "person1_personal");
        assert_eq!(sanitize("e'"), "e_");
        assert_eq!(sanitize("1x"), "_1x");
        let mut n = Namer::default();
        assert_eq!(n.fresh("montant_versé"), "montant_verse");
        assert_eq!(n.fresh("montant_verse"), "montant_verse_2");
        assert_eq!(n.fresh("montant_versé"), "montant_verse_3");
    }
}

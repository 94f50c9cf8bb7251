//! End-to-end driver: source text to default-calculus program, and
//! interpretation of a scope with command-line bindings.

use std::sync::Arc;

use crate::dcalc::{self, mk, DefaultRole, EvalConfig, EvalError, Kind, Program, Resolution, Term, TraceEvent};
use crate::dcalc_to_lcalc;
use crate::desugar::{self, DesugaredScope};
use crate::error::{Error, ErrorKind, Result, SourceMap};
use crate::lcalc::LProgram;
use crate::literate::{self, LiterateDocument};
use crate::parser;
use crate::scope_to_dcalc;
use crate::scopelang::{self, ScopeProgram};
use crate::surface::SurfaceProgram;
use crate::value::Value;

pub struct Compiled {
    pub doc: LiterateDocument,
    pub surface: SurfaceProgram,
    pub desugared: Vec<DesugaredScope>,
    pub scopes: ScopeProgram,
    pub program: Program,
    pub sources: SourceMap,
}

/// Runs every stage up to the default calculus and typechecks the result.
pub fn compile(file: &str, text: &str) -> Result<Compiled> {
    let doc = literate::extract_blocks(file, text)?;
    let surface = parser::parse(&doc)?;
    let desugared = desugar::desugar_program(&surface)?;
    let scopes = scopelang::lower_program(&surface, &desugared, Some(&doc))?;
    let program = scope_to_dcalc::compile_program(&scopes);
    dcalc::type_program(&program)?;
    let mut sources = SourceMap::new();
    sources.add(file.into(), text.into());
    Ok(Compiled {
        doc,
        surface,
        desugared,
        scopes,
        program,
        sources,
    })
}

/// Only desugars; enough for `--emit desugared`.
pub fn desugar_only(file: &str, text: &str) -> Result<Vec<DesugaredScope>> {
    let doc = literate::extract_blocks(file, text)?;
    desugar::desugar_program(&parser::parse(&doc)?)
}

impl Compiled {
    pub fn lcalc(&self) -> LProgram {
        dcalc_to_lcalc::translate_program(&self.program)
    }
}

/// Pseudo file name under which a binding's value is parsed.
pub fn binding_file(key: &str) -> String {
    format!("<bind {key}>")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interpretation {
    /// `(variable, value)` for every local, in declaration order.
    pub results: Vec<(String, Value)>,
    pub trace: Vec<String>,
}

impl Interpretation {
    pub fn lines(&self, scope: &str) -> Vec<String> {
        self.results.iter().map(|(x, v)| format!("{scope}.{x} = {v}")).collect()
    }
}

fn resolve_key<'a>(scope: &str, key: &'a str) -> Result<&'a str> {
    match key.split_once('.') {
        None => Ok(key),
        Some((s, x)) if s == scope => Ok(x),
        Some((s, _)) => Err(Error::new(ErrorKind::Resolution, format!("Binding {key} does not belong to scope {scope}"))
            .with_message(format!("bindings name variables of the interpreted scope {scope}, not of {s}"))),
    }
}

/// The argument tuple of `scope`: bound variables become thunks of their
/// value, the others never-defined thunks.
pub fn arguments(c: &Compiled, scope: &str, bindings: &[(String, String)]) -> Result<Vec<Term>> {
    let sc = c.scopes.scope(scope).ok_or_else(|| {
        let names: Vec<String> = c.scopes.scopes.iter().map(|s| s.name.to_string()).collect();
        Error::new(ErrorKind::Resolution, format!("Unknown scope {scope}")).with_message(format!("declared scopes: {}", names.join(", ")))
    })?;
    let mut args: Vec<Option<Term>> = vec![None; sc.vars.len()];
    for (key, text) in bindings {
        let x = resolve_key(scope, key)?;
        let Some(i) = sc.vars.iter().position(|v| &*v.name == x) else {
            return Err(Error::new(ErrorKind::Resolution, format!("Unknown variable {x} in scope {scope}")));
        };
        let file = binding_file(key);
        let e = parser::parse_expr(&file, text)?;
        let t = scopelang::lower_closed_expr(&c.scopes, &e, &sc.vars[i].ty)?;
        args[i] = Some(dcalc::build::thunk(t));
    }
    Ok(args
        .into_iter()
        .zip(&sc.vars)
        .map(|(a, v)| a.unwrap_or_else(|| scope_to_dcalc::never_defined(&format!("{scope}.{}", v.name), &v.pos)))
        .collect())
}

pub fn scope_call(scope: &str, args: Vec<Term>) -> Term {
    mk(Kind::App(mk(Kind::TopName(scope.into()), None), mk(Kind::Tuple(args), None)), None)
}

fn labels(kind: ErrorKind) -> (&'static str, &'static str) {
    match kind {
        ErrorKind::NeverDefined => ("Declared here", "Read here"),
        ErrorKind::Conflict => ("Definition applying here", "Definition applying here"),
        _ => ("Defined here", "Used here"),
    }
}

fn origin_error(kind: ErrorKind, origin: Option<&Arc<dcalc::ErrorOrigin>>) -> Error {
    let Some(o) = origin else {
        return match kind {
            ErrorKind::Conflict => Error::new(kind, "Conflicting definitions apply at the same time"),
            _ => Error::new(kind, "No definition applies"),
        };
    };
    let (first, rest) = labels(o.kind);
    let mut e = Error::new(o.kind, o.message.clone());
    for (i, p) in o.positions.iter().enumerate() {
        e = e.with_pos(Some(if i == 0 { first } else { rest }), p);
    }
    e
}

fn eval_error(e: EvalError) -> Error {
    match e {
        EvalError::Fault { message, pos } => {
            Error::new(ErrorKind::Arithmetic, "Arithmetic error").with_message(message).with_opt_pos(None, pos.as_ref())
        }
        EvalError::Diverged(n) => Error::new(ErrorKind::Diverged, format!("Evaluation exceeded {n} steps")),
        e => Error::new(ErrorKind::Type, "Internal error during evaluation").with_message(e.to_string()),
    }
}

fn trace_line(ev: &TraceEvent) -> Option<String> {
    let m = &ev.meta;
    let what = match (&m.role, &ev.resolution) {
        (DefaultRole::Override, Resolution::Exception(0)) => "value supplied by the caller".to_owned(),
        (DefaultRole::Override, _) => return None,
        (_, Resolution::Exception(k)) => format!("exception {k} applies"),
        (_, Resolution::Base) => "definition applies".to_owned(),
        (_, Resolution::Empty) => "definition does not apply".to_owned(),
        (_, Resolution::Conflict(ps)) => {
            let ps: Vec<String> = ps.iter().map(|p| p.to_string()).collect();
            format!("conflict between definitions at {}", ps.join(", "))
        }
    };
    let mut line = format!("[LOG] {}: {what} ({})", m.variable, m.pos);
    if !m.headings.is_empty() {
        line.push_str(&format!(" [{}]", m.headings.join(" > ")));
    }
    Some(line)
}

/// Runs `f` on a thread with a large stack: the interpreters recurse on
/// term depth.
pub fn with_big_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(512 << 20)
            .spawn_scoped(s, f)
            .expect("spawn interpreter thread")
            .join()
            .unwrap_or_else(|e| std::panic::resume_unwind(e))
    })
}

/// Interprets `scope` with the reference default-calculus interpreter.
/// On failure the trace collected so far is returned alongside the error.
pub fn interpret(
    c: &Compiled,
    scope: &str,
    bindings: &[(String, String)],
    trace: bool,
) -> std::result::Result<Interpretation, (Error, Vec<String>)> {
    let args = arguments(c, scope, bindings).map_err(|e| (e, Vec::new()))?;
    let call = scope_call(scope, args);
    let cfg = EvalConfig::default();
    let (r, events) = with_big_stack(|| {
        if trace {
            dcalc::trace_eval(&c.program, &call, &cfg)
        } else {
            (dcalc::eval(&c.program, &call, &cfg), Vec::new())
        }
    });
    let log: Vec<String> = events.iter().filter_map(trace_line).collect();
    let t = match r {
        Ok(t) => t,
        Err(e) => return Err((eval_error(e), log)),
    };
    match &t.kind {
        Kind::Empty(o) => Err((origin_error(ErrorKind::NoApplicableDefinition, o.as_ref()), log)),
        Kind::Conflict(o) => Err((origin_error(ErrorKind::Conflict, o.as_ref()), log)),
        _ => {
            let Some(Value::Tuple(vs)) = dcalc::to_value(&t) else {
                return Err((Error::new(ErrorKind::Type, "Internal error: scope did not return a tuple"), log));
            };
            let sc = c.scopes.scope(scope).expect("checked by arguments");
            Ok(Interpretation {
                results: sc.vars.iter().map(|v| v.name.to_string()).zip(vs).collect(),
                trace: log,
            })
        }
    }
}

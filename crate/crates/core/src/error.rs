//! Structured errors shared by every pipeline stage, and their rendering.
//!
//! An [`Error`] carries a message plus an ordered list of labelled source
//! positions. Stages add context as the error travels up; [`format_error`]
//! turns it into the multi-line report printed on standard error.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::sync::Arc;

use crate::pos::Pos;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    UnterminatedFence,
    Syntax,
    /// Unknown identifier, duplicate declaration, malformed item.
    Resolution,
    AmbiguousException,
    UnknownLabel,
    DuplicateLabel,
    MultipleRoots,
    LabelCycle,
    Cycle,
    Recursion,
    Type,
    Conflict,
    NeverDefined,
    NoApplicableDefinition,
    Arithmetic,
    Diverged,
    Unsupported,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Error {
    pub kind: ErrorKind,
    pub title: String,
    pub message: Option<String>,
    pub suggestions: Vec<String>,
    pub positions: Vec<(Option<String>, Pos)>,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn new(kind: ErrorKind, title: impl Into<String>) -> Error {
        Error {
            kind,
            title: title.into(),
            message: None,
            suggestions: Vec::new(),
            positions: Vec::new(),
        }
    }

    pub fn at(kind: ErrorKind, title: impl Into<String>, pos: &Pos) -> Error {
        Error::new(kind, title).with_pos(None, pos)
    }

    pub fn with_message(mut self, message: impl Into<String>) -> Error {
        self.message = Some(message.into());
        self
    }

    pub fn with_pos(mut self, label: Option<&str>, pos: &Pos) -> Error {
        self.positions.push((label.map(str::to_owned), pos.clone()));
        self
    }

    pub fn with_opt_pos(self, label: Option<&str>, pos: Option<&Pos>) -> Error {
        match pos {
            Some(p) => self.with_pos(label, p),
            None => self,
        }
    }

    pub fn with_suggestions(mut self, suggestions: Vec<String>) -> Error {
        self.suggestions = suggestions;
        self
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.title)?;
        if let Some(m) = &self.message {
            write!(f, ": {m}")?;
        }
        Ok(())
    }
}

impl std::error::Error for Error {}

/// File contents used to print excerpts, keyed by the path stored in
/// [`Pos::file`].
#[derive(Clone, Debug, Default)]
pub struct SourceMap {
    files: HashMap<Arc<str>, Arc<str>>,
}

impl SourceMap {
    pub fn new() -> SourceMap {
        SourceMap::default()
    }

    pub fn add(&mut self, file: Arc<str>, text: Arc<str>) {
        self.files.insert(file, text);
    }

    pub fn get(&self, file: &str) -> Option<&str> {
        self.files.get(file).map(|t| &**t)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Style {
    pub color: bool,
}

const TAG: &str = "[ERROR]";

/// Render an error deterministically: tag, title, message, suggestion line,
/// then one excerpt per attached position, in order.
pub fn format_error(err: &Error, sources: &SourceMap, style: Style) -> String {
    let tag = if style.color {
        format!("\x1b[1;31m{TAG}\x1b[0m")
    } else {
        TAG.to_owned()
    };
    let mut lines: Vec<String> = vec![err.title.clone()];
    if let Some(m) = &err.message {
        lines.push(format!("Message: {m}"));
    }
    if !err.suggestions.is_empty() {
        let mut s = String::from("Autosuggestion: did you mean ");
        for (i, sug) in err.suggestions.iter().enumerate() {
            if i > 0 {
                s.push_str(", or maybe ");
            }
            let _ = write!(s, "\"{sug}\"");
        }
        lines.push(s);
    }
    for (label, pos) in &err.positions {
        if let Some(l) = label {
            lines.push(format!("{l}:"));
        }
        lines.extend(excerpt(pos, sources));
    }
    let mut out = String::new();
    for l in lines {
        out.push_str(&tag);
        if !l.is_empty() {
            out.push(' ');
            out.push_str(&l);
        }
        out.push('\n');
    }
    out
}

fn excerpt(pos: &Pos, sources: &SourceMap) -> Vec<String> {
    let width = pos.end_line.max(pos.start_line).to_string().len();
    let pad = " ".repeat(width);
    let mut out = vec![format!("{pad}--> {pos}")];
    let Some(text) = sources.get(&pos.file) else {
        out.push(format!("{pad} | (source unavailable) {}:{}", pos.start_line, pos.start_col));
        return out;
    };
    out.push(format!("{pad} |"));
    let src_lines: Vec<&str> = text.lines().collect();
    // Multi-line spans show their first line only, underlined to its end.
    let line_no = pos.start_line as usize;
    let line = src_lines.get(line_no - 1).copied().unwrap_or("");
    out.push(format!("{:>width$} | {line}", pos.start_line));
    let line_len = line.chars().count() as u32;
    let start = pos.start_col.max(1);
    let end = if pos.end_line == pos.start_line {
        pos.end_col.max(start + 1)
    } else {
        (line_len + 1).max(start + 1)
    };
    let lead = " ".repeat((start - 1) as usize);
    let carets = "^".repeat((end - start) as usize);
    out.push(format!("{pad} | {lead}{carets}"));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sources() -> SourceMap {
        let mut s = SourceMap::new();
        s.add("a.catala_en".into(), "first line\nsecond line\n".into());
        s
    }

    fn pos(l: u32, c: u32, l2: u32, c2: u32) -> Pos {
        Pos::new("a.catala_en".into(), l, c, l2, c2)
    }

    #[test]
    fn caret_under_first_character() {
        let e = Error::at(ErrorKind::Type, "bad", &pos(1, 1, 1, 2));
        let out = format_error(&e, &sources(), Style::default());
        assert_eq!(
            out,
            "[ERROR] bad\n[ERROR]  --> a.catala_en:1:1\n[ERROR]   |\n[ERROR] 1 | first line\n[ERROR]   | ^\n"
        );
    }

    #[test]
    fn positions_render_in_input_order() {
        let e = Error::new(ErrorKind::Conflict, "conflict")
            .with_pos(Some("First"), &pos(2, 1, 2, 7))
            .with_pos(Some("Second"), &pos(1, 7, 1, 11));
        let out = format_error(&e, &sources(), Style::default());
        let first = out.find("First:").unwrap();
        let second = out.find("Second:").unwrap();
        assert!(first < second);
        assert!(out.contains("[ERROR] 2 | second line\n[ERROR]   | ^^^^^^\n"));
        assert!(out.contains("[ERROR]   |       ^^^^\n"));
    }

    #[test]
    fn suggestions_line() {
        let e = Error::new(ErrorKind::Syntax, "Syntax error at token \"x\"")
            .with_message("expected something")
            .with_suggestions(vec!["day".into(), "or".into()]);
        let out = format_error(&e, &SourceMap::new(), Style::default());
        assert!(out.contains("[ERROR] Message: expected something\n"));
        assert!(out.contains("[ERROR] Autosuggestion: did you mean \"day\", or maybe \"or\"\n"));
    }

    #[test]
    fn color_wraps_tag_only() {
        let e = Error::new(ErrorKind::Type, "t");
        let out = format_error(&e, &SourceMap::new(), Style { color: true });
        assert!(out.starts_with("\x1b[1;31m[ERROR]\x1b[0m t"));
    }
}

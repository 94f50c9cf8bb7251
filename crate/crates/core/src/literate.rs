//! Literate source files: law text in Markdown with fenced code blocks.
//!
//! Only blocks opened by a line that is exactly ```` ```catala ```` and closed
//! by a line that is exactly ```` ``` ```` are code; everything else,
//! including other fenced languages, is prose.

use std::sync::Arc;

use crate::error::{Error, ErrorKind, Result};
use crate::pos::Pos;

pub const OPEN_FENCE: &str = "```catala";
pub const CLOSE_FENCE: &str = "```";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Block {
    Prose {
        text: String,
        heading_level: Option<usize>,
    },
    Code {
        text: String,
        pos: Pos,
        /// Exact fence lines (with their line terminators) for round-tripping.
        open_fence: String,
        close_fence: String,
        /// Markdown headings in scope at the opening fence, outermost first.
        headings: Vec<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiterateDocument {
    pub file: Arc<str>,
    pub blocks: Vec<Block>,
}

impl LiterateDocument {
    pub fn code_blocks(&self) -> impl Iterator<Item = (&str, &Pos, &[String])> {
        self.blocks.iter().filter_map(|b| match b {
            Block::Code {
                text, pos, headings, ..
            } => Some((text.as_str(), pos, headings.as_slice())),
            Block::Prose { .. } => None,
        })
    }

    /// Inverse of [`extract_blocks`].
    pub fn reassemble(&self) -> String {
        let mut out = String::new();
        for b in &self.blocks {
            match b {
                Block::Prose { text, .. } => out.push_str(text),
                Block::Code {
                    text,
                    open_fence,
                    close_fence,
                    ..
                } => {
                    out.push_str(open_fence);
                    out.push_str(text);
                    out.push_str(close_fence);
                }
            }
        }
        out
    }

    /// Heading breadcrumb for a source line, taken from the code block that
    /// contains it.
    pub fn headings_at(&self, line: u32) -> &[String] {
        for (_, pos, headings) in self.code_blocks() {
            if pos.start_line <= line && line <= pos.end_line {
                return headings;
            }
        }
        &[]
    }
}

fn strip_eol(line: &str) -> &str {
    line.strip_suffix('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .unwrap_or(line)
}

fn heading_level(line: &str) -> Option<(usize, String)> {
    let hashes = line.chars().take_while(|c| *c == '#').count();
    if hashes == 0 || hashes > 6 {
        return None;
    }
    let rest = &line[hashes..];
    if !rest.is_empty() && !rest.starts_with(' ') {
        return None;
    }
    Some((hashes, rest.trim().to_owned()))
}

pub fn extract_blocks(file: &str, input: &str) -> Result<LiterateDocument> {
    let file: Arc<str> = file.into();
    let mut blocks = Vec::new();
    let mut prose = String::new();
    let mut headings: Vec<(usize, String)> = Vec::new();
    let mut lines = input.split_inclusive('\n').enumerate().peekable();

    let flush = |prose: &mut String, blocks: &mut Vec<Block>| {
        if !prose.is_empty() {
            blocks.push(Block::Prose {
                text: std::mem::take(prose),
                heading_level: None,
            });
        }
    };

    while let Some((idx, line)) = lines.next() {
        let content = strip_eol(line);
        if content == OPEN_FENCE {
            flush(&mut prose, &mut blocks);
            let fence_line = idx as u32 + 1;
            let mut code = String::new();
            let mut last_line = fence_line;
            let mut last_len = 0u32;
            let mut close = None;
            for (j, l) in lines.by_ref() {
                if strip_eol(l) == CLOSE_FENCE {
                    close = Some(l.to_owned());
                    break;
                }
                code.push_str(l);
                last_line = j as u32 + 1;
                last_len = strip_eol(l).chars().count() as u32;
            }
            let Some(close_fence) = close else {
                return Err(Error::at(
                    ErrorKind::UnterminatedFence,
                    "Unterminated code block",
                    &Pos::new(file.clone(), fence_line, 1, fence_line, OPEN_FENCE.len() as u32 + 1),
                )
                .with_message("this ```catala fence is never closed by a ``` line"));
            };
            let pos = if code.is_empty() {
                Pos::new(file.clone(), fence_line + 1, 1, fence_line + 1, 1)
            } else {
                Pos::new(file.clone(), fence_line + 1, 1, last_line, last_len + 1)
            };
            blocks.push(Block::Code {
                text: code,
                pos,
                open_fence: line.to_owned(),
                close_fence,
                headings: headings.iter().map(|(_, h)| h.clone()).collect(),
            });
        } else if let Some((level, title)) = heading_level(content) {
            flush(&mut prose, &mut blocks);
            headings.retain(|(l, _)| *l < level);
            headings.push((level, title));
            blocks.push(Block::Prose {
                text: line.to_owned(),
                heading_level: Some(level),
            });
        } else {
            prose.push_str(line);
        }
    }
    flush(&mut prose, &mut blocks);
    Ok(LiterateDocument { file, blocks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_block_positions() {
        let src = "# Law\nSome text\n```catala\na\nb\nc\n```\nmore\n";
        let doc = extract_blocks("f", src).unwrap();
        let codes: Vec<_> = doc.code_blocks().collect();
        assert_eq!(codes.len(), 1);
        assert_eq!(codes[0].0, "a\nb\nc\n");
        assert_eq!(codes[0].1.start_line, 4);
        assert_eq!(codes[0].1.end_line, 6);
        assert_eq!(codes[0].2, ["Law".to_owned()]);
        assert_eq!(doc.reassemble(), src);
    }

    #[test]
    fn zero_fences_is_all_prose() {
        let src = "just\nprose\n";
        let doc = extract_blocks("f", src).unwrap();
        assert_eq!(doc.code_blocks().count(), 0);
        assert!(doc.blocks.iter().all(|b| matches!(b, Block::Prose { .. })));
    }

    #[test]
    fn other_languages_are_prose() {
        let src = "```ocaml\nlet x = 1\n```\n";
        let doc = extract_blocks("f", src).unwrap();
        assert_eq!(doc.code_blocks().count(), 0);
        assert_eq!(doc.reassemble(), src);
    }

    #[test]
    fn unterminated_fence() {
        let err = extract_blocks("f", "x\n```catala\nabc\n").unwrap_err();
        assert_eq!(err.kind, ErrorKind::UnterminatedFence);
        assert_eq!(err.positions[0].1.start_line, 2);
    }

    #[test]
    fn breadcrumb_tracks_heading_levels() {
        let src = "# A\n## B\n```catala\nx\n```\n## C\n### D\n```catala\ny\n```\n";
        let doc = extract_blocks("f", src).unwrap();
        let hs: Vec<_> = doc.code_blocks().map(|(_, _, h)| h.to_vec()).collect();
        assert_eq!(hs[0], ["A", "B"]);
        assert_eq!(hs[1], ["A", "C", "D"]);
        assert_eq!(doc.headings_at(9), ["A", "C", "D"]);
    }

    #[test]
    fn crlf_and_missing_final_newline() {
        let src = "t\r\n```catala\r\nx\r\n```";
        let doc = extract_blocks("f", src).unwrap();
        assert_eq!(doc.code_blocks().next().unwrap().0, "x\r\n");
        assert_eq!(doc.reassemble(), src);
    }
}

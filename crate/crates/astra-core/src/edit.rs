//! Applies generated code at a function's source range under conflict-style
//! markers, and resolves the markers on accept/reject.
//!
//! Everything operates on whole lines. `resolve(apply(f), reject)` is the
//! byte-exact identity, and `apply` never touches a byte outside the
//! replaced range and the inserted marker lines.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::structure::SourceRange;

pub const MARKER_OPEN: &str = "<<<<<<< current";
pub const MARKER_MID: &str = "=======";
pub const MARKER_CLOSE_PREFIX: &str = ">>>>>>> astra:";

#[derive(Debug, Error)]
pub enum EditError {
    #[error("range {start}-{end} is out of bounds for a {lines}-line file")]
    RangeOutOfBounds {
        start: usize,
        end: usize,
        lines: usize,
    },
    #[error("file changed since the proposal was created (line {line} differs)")]
    StaleProposal { line: usize },
    #[error("no conflict markers found")]
    NoMarkers,
    #[error("malformed conflict markers: {0}")]
    MalformedMarkers(String),
    #[error("multiple marker blocks present; resolve them one at a time")]
    MultipleBlocks,
    #[error("replacement text is empty")]
    EmptyReplacement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Reject,
}

/// A pending edit: where, what was there, and what to put in.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EditProposal {
    pub file: std::path::PathBuf,
    pub range: SourceRange,
    pub original_text: String,
    pub replacement_text: String,
    /// Provenance tag rendered into the closing marker, typically the
    /// model name.
    pub marker_label: String,
}

/// File text split into lines without terminators, remembering whether the
/// original ended with a newline so rendering is byte-exact.
struct Lines {
    lines: Vec<String>,
    trailing_newline: bool,
}

impl Lines {
    fn split(text: &str) -> Self {
        if text.is_empty() {
            return Self {
                lines: Vec::new(),
                trailing_newline: false,
            };
        }
        let trailing_newline = text.ends_with('\n');
        let mut lines = text.split('\n').map(str::to_string).collect::<Vec<_>>();
        if trailing_newline {
            lines.pop(); // split leaves one empty tail element
        }
        Self {
            lines,
            trailing_newline,
        }
    }

    fn render(&self) -> String {
        let mut out = self.lines.join("\n");
        if self.trailing_newline && !self.lines.is_empty() {
            out.push('\n');
        }
        out
    }
}

fn replacement_lines(replacement: &str) -> Vec<String> {
    let trimmed = replacement.strip_suffix('\n').unwrap_or(replacement);
    trimmed.split('\n').map(str::to_string).collect()
}

/// Replaces the proposal's line range with a conflict block:
/// `<<<<<<< current`, the original lines, `=======`, the replacement lines,
/// `>>>>>>> astra:<label>`. All other lines pass through byte-identical.
///
/// Fails with `StaleProposal` when the file no longer matches
/// `original_text` at the range.
pub fn apply_with_markers(file_text: &str, proposal: &EditProposal) -> Result<String, EditError> {
    if proposal.replacement_text.trim().is_empty() {
        return Err(EditError::EmptyReplacement);
    }
    let mut file = Lines::split(file_text);
    let SourceRange {
        start_line,
        end_line,
    } = proposal.range;
    if start_line < 1 || end_line < start_line || end_line > file.lines.len() {
        return Err(EditError::RangeOutOfBounds {
            start: start_line,
            end: end_line,
            lines: file.lines.len(),
        });
    }
    let current = &file.lines[start_line - 1..end_line];
    let expected = replacement_lines(&proposal.original_text);
    if current.len() != expected.len() {
        return Err(EditError::StaleProposal { line: start_line });
    }
    for (offset, (found, wanted)) in current.iter().zip(&expected).enumerate() {
        if found != wanted {
            return Err(EditError::StaleProposal {
                line: start_line + offset,
            });
        }
    }

    let mut block = Vec::new();
    block.push(MARKER_OPEN.to_string());
    block.extend(expected);
    block.push(MARKER_MID.to_string());
    block.extend(replacement_lines(&proposal.replacement_text));
    block.push(format!("{MARKER_CLOSE_PREFIX}{}", proposal.marker_label));

    file.lines.splice(start_line - 1..end_line, block);
    Ok(file.render())
}

/// Resolves the single marker block in `file_text`: accept keeps the
/// replacement side, reject restores the original side; all marker lines
/// are removed.
pub fn resolve(file_text: &str, decision: Decision) -> Result<String, EditError> {
    let mut file = Lines::split(file_text);
    let opens: Vec<usize> = file
        .lines
        .iter()
        .enumerate()
        .filter(|(_, l)| l.starts_with("<<<<<<<"))
        .map(|(i, _)| i)
        .collect();
    match opens.len() {
        0 => {
            // A dangling mid/close marker without an opener is malformed,
            // not missing.
            if file
                .lines
                .iter()
                .any(|l| *l == MARKER_MID || l.starts_with(">>>>>>>"))
            {
                return Err(EditError::MalformedMarkers(
                    "separator or closing marker without an opening marker".to_string(),
                ));
            }
            return Err(EditError::NoMarkers);
        }
        1 => {}
        _ => return Err(EditError::MultipleBlocks),
    }
    let open = opens[0];
    let mid = file.lines[open + 1..]
        .iter()
        .position(|l| l == MARKER_MID)
        .map(|p| open + 1 + p)
        .ok_or_else(|| EditError::MalformedMarkers("missing ======= separator".to_string()))?;
    let close = file.lines[mid + 1..]
        .iter()
        .position(|l| l.starts_with(">>>>>>>"))
        .map(|p| mid + 1 + p)
        .ok_or_else(|| EditError::MalformedMarkers("missing >>>>>>> closing marker".to_string()))?;
    if file.lines[open + 1..close]
        .iter()
        .any(|l| l.starts_with("<<<<<<<"))
    {
        return Err(EditError::MalformedMarkers(
            "nested opening marker".to_string(),
        ));
    }

    let keep: Vec<String> = match decision {
        Decision::Reject => file.lines[open + 1..mid].to_vec(),
        Decision::Accept => file.lines[mid + 1..close].to_vec(),
    };
    file.lines.splice(open..=close, keep);
    Ok(file.render())
}

/// A soft structural check on the edited region: counts braces, parens and
/// brackets outside strings, chars, and comments, and reports imbalance as
/// warnings. Never blocks the edit.
pub fn verify_braces(resolved_text: &str, range_hint: SourceRange) -> Vec<String> {
    let mut warnings = Vec::new();
    let mut stack: Vec<(char, usize)> = Vec::new();
    let mut in_block_comment = false;

    for (idx, line) in resolved_text.lines().enumerate() {
        let line_no = idx + 1;
        let in_range = line_no >= range_hint.start_line && line_no <= range_hint.end_line;
        let mut chars = line.chars().peekable();
        let mut in_string = false;
        let mut in_char = false;
        while let Some(c) = chars.next() {
            if in_block_comment {
                if c == '*' && chars.peek() == Some(&'/') {
                    chars.next();
                    in_block_comment = false;
                }
                continue;
            }
            if in_string {
                match c {
                    '\\' => {
                        chars.next();
                    }
                    '"' => in_string = false,
                    _ => {}
                }
                continue;
            }
            if in_char {
                match c {
                    '\\' => {
                        chars.next();
                    }
                    '\'' => in_char = false,
                    _ => {}
                }
                continue;
            }
            match c {
                '"' => in_string = true,
                '\'' => in_char = true,
                '/' if chars.peek() == Some(&'/') => break,
                '/' if chars.peek() == Some(&'*') => {
                    chars.next();
                    in_block_comment = true;
                }
                '{' | '(' | '[' => stack.push((c, line_no)),
                '}' | ')' | ']' => {
                    let expected = match c {
                        '}' => '{',
                        ')' => '(',
                        _ => '[',
                    };
                    match stack.pop() {
                        Some((open, _)) if open == expected => {}
                        Some((open, open_line)) => {
                            if in_range {
                                warnings.push(format!(
                                    "line {line_no}: '{c}' does not match '{open}' opened at line {open_line}"
                                ));
                            }
                        }
                        None => {
                            if in_range {
                                warnings.push(format!("line {line_no}: unmatched '{c}'"));
                            }
                        }
                    }
                }
                _ => {}
            }
        }
    }
    for (open, line_no) in stack {
        if line_no >= range_hint.start_line && line_no <= range_hint.end_line {
            warnings.push(format!("line {line_no}: unclosed '{open}'"));
        }
    }
    warnings
}

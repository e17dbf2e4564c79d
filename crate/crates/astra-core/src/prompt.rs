//! Intent classification and assembly of the four-section prompt.
//!
//! The rendered prompt always carries the same four delimiter lines in the
//! same order; empty sections keep their delimiter so the structure is
//! machine-recoverable.

use serde::Serialize;
use thiserror::Error;

pub const GENERAL_DELIMITER: &str = "----- General instructions -----";
pub const RAG_DELIMITER: &str =
    "----- Context derived from Retrieval Augmented Generation (RAG) -----";
pub const AST_DELIMITER: &str =
    "----- Information derived from Abstract Syntax Tree (AST) analysis -----";
pub const USER_DELIMITER: &str = "----- User prompt -----";

/// Default system-level instructions; overridable via config.
pub const DEFAULT_GENERAL_INSTRUCTIONS: &str = "\
You are assisting with C++ development in a high-performance computing codebase.
Follow the surrounding project's coding style and naming conventions.
Use the retrieved examples and the structural information below as authoritative
references for framework APIs. Modify only the requested function; do not
rewrite unrelated code. Reply with a single fenced code block containing the
complete function definition.";

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("user prompt is blank")]
    BlankPrompt,
    #[error("prompt bundle has an empty user prompt")]
    EmptyUserPrompt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IntentKind {
    Generate,
    Edit,
    Explain,
}

/// What the user wants, inferred from the prompt text.
#[derive(Debug, Clone, Serialize)]
pub struct Intent {
    pub kind: IntentKind,
    pub mentioned_classes: Vec<String>,
    pub mentioned_functions: Vec<String>,
}

const EDIT_WORDS: &[&str] = &["modify", "change", "replace", "port", "rewrite", "edit"];
const EXPLAIN_WORDS: &[&str] = &["explain", "describe"];

fn contains_whole_word_ci(text: &str, word: &str) -> bool {
    text.split(|c: char| !c.is_alphanumeric() && c != '_')
        .any(|t| t.eq_ignore_ascii_case(word))
}

fn contains_whole_word(text: &str, word: &str) -> bool {
    text.split(|c: char| !c.is_alphanumeric() && c != '_')
        .any(|t| t == word)
}

/// Keyword-based intent classification.
///
/// Edit words win over explain words; anything else is a generation
/// request. `known_symbols` is split into class-looking (UpperCamel) and
/// function-looking names by the caller via [`classify_intent`]'s two
/// mention lists.
pub fn classify_intent(
    user_prompt: &str,
    known_classes: &[String],
    known_functions: &[String],
) -> Result<Intent, PromptError> {
    if user_prompt.trim().is_empty() {
        return Err(PromptError::BlankPrompt);
    }
    let kind = if EDIT_WORDS
        .iter()
        .any(|w| contains_whole_word_ci(user_prompt, w))
    {
        IntentKind::Edit
    } else if EXPLAIN_WORDS
        .iter()
        .any(|w| contains_whole_word_ci(user_prompt, w))
        || contains_what_does(user_prompt)
    {
        IntentKind::Explain
    } else {
        IntentKind::Generate
    };
    let mentioned = |symbols: &[String]| {
        symbols
            .iter()
            .filter(|s| contains_whole_word(user_prompt, s))
            .cloned()
            .collect::<Vec<_>>()
    };
    Ok(Intent {
        kind,
        mentioned_classes: mentioned(known_classes),
        mentioned_functions: mentioned(known_functions),
    })
}

/// The phrase "what does" as consecutive whole words.
fn contains_what_does(text: &str) -> bool {
    let words: Vec<String> = text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect();
    words.windows(2).any(|w| w[0] == "what" && w[1] == "does")
}

/// The four ordered prompt sections.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptBundle {
    pub general_instructions: String,
    pub rag_context: String,
    pub ast_context: String,
    pub user_prompt: String,
}

/// Renders the bundle: each section is its delimiter line, then the body,
/// then exactly one newline before the next delimiter. Empty sections keep
/// the delimiter followed by a blank line. Body lines that collide with a
/// delimiter are escaped with a leading space so parsing stays unambiguous.
pub fn compose_prompt(bundle: &PromptBundle) -> Result<String, PromptError> {
    if bundle.user_prompt.trim().is_empty() {
        return Err(PromptError::EmptyUserPrompt);
    }
    let sections = [
        (GENERAL_DELIMITER, &bundle.general_instructions),
        (RAG_DELIMITER, &bundle.rag_context),
        (AST_DELIMITER, &bundle.ast_context),
        (USER_DELIMITER, &bundle.user_prompt),
    ];
    let mut out = String::new();
    for (delimiter, body) in sections {
        out.push_str(delimiter);
        out.push('\n');
        let body = body.trim_end_matches('\n');
        if body.is_empty() {
            out.push('\n');
        } else {
            out.push_str(&escape_delimiters(body));
            out.push('\n');
        }
    }
    Ok(out)
}

fn escape_delimiters(body: &str) -> String {
    let delimiters = [GENERAL_DELIMITER, RAG_DELIMITER, AST_DELIMITER, USER_DELIMITER];
    body.lines()
        .map(|line| {
            if delimiters.contains(&line) {
                format!(" {line}")
            } else {
                line.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Deterministic budget fitting: drop the lowest-ranked retrieval blocks
/// first, then fall back to the focused structural context.
///
/// `rag_blocks` must be in rank order; `ast_focused` is the reduced
/// rendering used when dropping retrieval context is not enough.
pub fn fit_to_budget(
    general_instructions: &str,
    mut rag_blocks: Vec<String>,
    ast_full: &str,
    ast_focused: Option<&str>,
    user_prompt: &str,
    char_budget: usize,
) -> Result<PromptBundle, PromptError> {
    let build = |rag_blocks: &[String], ast: &str| PromptBundle {
        general_instructions: general_instructions.to_string(),
        rag_context: rag_blocks.join("\n\n"),
        ast_context: ast.to_string(),
        user_prompt: user_prompt.to_string(),
    };
    let mut bundle = build(&rag_blocks, ast_full);
    if char_budget == 0 {
        return Ok(bundle);
    }
    while compose_prompt(&bundle)?.len() > char_budget && !rag_blocks.is_empty() {
        rag_blocks.pop();
        bundle = build(&rag_blocks, ast_full);
    }
    if compose_prompt(&bundle)?.len() > char_budget {
        if let Some(focused) = ast_focused {
            bundle = build(&rag_blocks, focused);
        }
    }
    Ok(bundle)
}

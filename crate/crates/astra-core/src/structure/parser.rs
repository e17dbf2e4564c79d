//! Tolerant extraction of classes, fields, methods, and function ranges
//! from a declarative C++ subset.
//!
//! The parse is total: anything outside the subset is skipped with a
//! warning and the report stays best-effort. Macros are not expanded and
//! preprocessor conditionals are taken on their literal text.

use std::path::Path;

use super::lexer::{lex, TokKind, Token};
use super::{Access, ClassInfo, MethodInfo, RecordKind, SourceRange, StructuralReport};

/// Keywords that can never begin or continue a declaration head.
const STATEMENT_KEYWORDS: &[&str] = &[
    "return", "if", "else", "while", "do", "switch", "case", "default", "break", "continue",
    "goto", "new", "delete", "throw", "try", "catch", "sizeof", "static_assert", "public",
    "private", "protected",
];

struct Parser<'s> {
    src: &'s str,
    toks: Vec<Token>,
    warnings: Vec<String>,
}

#[derive(Clone, Copy)]
enum Scope<'a> {
    Global,
    InClass { class_name: &'a str },
}

/// A callable or field parsed out of a declaration.
enum Parsed {
    Method {
        qualifier: Option<String>,
        info: MethodInfo,
    },
    Fields(Vec<(String, String)>), // (name, type_text)
    Nothing,
}

/// Extracts the structural report for one source file. Never fails;
/// constructs outside the supported subset turn into warnings.
pub fn extract_structure(source: &str, path: &Path) -> StructuralReport {
    let mut parser = Parser {
        src: source,
        toks: lex(source),
        warnings: Vec::new(),
    };
    let mut report = StructuralReport {
        file: path.to_path_buf(),
        classes: Vec::new(),
        free_functions: Vec::new(),
        warnings: Vec::new(),
    };
    let end = parser.toks.len();
    let mut qualified = Vec::new();
    parser.parse_scope(0, end, &mut report, &mut qualified);

    // Attach out-of-class definitions (`Cls::fn`) to their class when the
    // class is declared in this file; otherwise keep them as qualified
    // free functions.
    for (qualifier, mut info) in qualified {
        match report.classes.iter_mut().find(|c| c.name == qualifier) {
            Some(class) => {
                if let Some(declared) = class
                    .methods
                    .iter()
                    .find(|m| m.name == info.name && !m.is_definition)
                {
                    info.access = declared.access;
                }
                class.methods.push(info);
            }
            None => {
                info.name = format!("{qualifier}::{}", info.name);
                report.free_functions.push(info);
            }
        }
    }
    report.warnings = parser.warnings;
    report
}

impl<'s> Parser<'s> {
    fn at(&self, i: usize) -> Option<&Token> {
        self.toks.get(i)
    }

    fn is_kw(&self, i: usize, kw: &str) -> bool {
        self.at(i).is_some_and(|t| t.text == kw)
    }

    fn warn(&mut self, line: usize, message: &str) {
        self.warnings.push(format!("line {line}: {message}"));
    }

    /// Raw source between two token indices (inclusive start, exclusive
    /// end), with whitespace runs collapsed to single spaces.
    fn slice_collapsed(&self, start_tok: usize, end_tok: usize) -> String {
        if start_tok >= end_tok || start_tok >= self.toks.len() {
            return String::new();
        }
        let start = self.toks[start_tok].start;
        let end = self.toks[end_tok - 1].end;
        collapse_ws(&self.src[start..end])
    }

    /// Index just past the brace block opening at `open` (which must be `{`).
    /// Returns None when the file ends before the block closes.
    fn matching_close(&self, open: usize, open_text: &str, close_text: &str) -> Option<usize> {
        let mut depth = 0usize;
        let mut i = open;
        while let Some(tok) = self.at(i) {
            if tok.text == open_text {
                depth += 1;
            } else if tok.text == close_text {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            i += 1;
        }
        None
    }

    /// Skips to just past the next `;` at brace depth 0, or past a balanced
    /// `{...}` block — whichever closes the construct first.
    fn skip_past_semicolon(&self, mut i: usize, end: usize) -> usize {
        let mut depth = 0usize;
        let mut entered_block = false;
        while i < end {
            match self.toks[i].text.as_str() {
                "{" => {
                    depth += 1;
                    entered_block = true;
                }
                "}" => {
                    depth = depth.saturating_sub(1);
                    if entered_block && depth == 0 {
                        // Consume a trailing `;` (class/struct/brace-init).
                        if i + 1 < end && self.toks[i + 1].text == ";" {
                            return i + 2;
                        }
                        return i + 1;
                    }
                }
                ";" if depth == 0 => return i + 1,
                _ => {}
            }
            i += 1;
        }
        end
    }

    fn parse_scope(
        &mut self,
        mut i: usize,
        end: usize,
        report: &mut StructuralReport,
        qualified: &mut Vec<(String, MethodInfo)>,
    ) {
        let mut pending_template: Option<usize> = None;
        while i < end {
            let tok = &self.toks[i];
            let line = tok.line;
            match tok.text.as_str() {
                ";" => i += 1,
                "namespace" => {
                    pending_template = None;
                    i += 1;
                    // `namespace a::b {` or anonymous `namespace {` or alias.
                    while self
                        .at(i)
                        .is_some_and(|t| t.is_ident() || t.text == "::")
                    {
                        if self.is_kw(i + 1, "=") {
                            i = self.skip_past_semicolon(i, end);
                            break;
                        }
                        i += 1;
                    }
                    if self.is_kw(i, "{") {
                        match self.matching_close(i, "{", "}") {
                            Some(close) => {
                                self.parse_scope(i + 1, close, report, qualified);
                                i = close + 1;
                            }
                            None => {
                                self.warn(line, "unbalanced braces in namespace");
                                self.parse_scope(i + 1, end, report, qualified);
                                return;
                            }
                        }
                    }
                }
                "template" => {
                    if self.is_kw(i + 1, "<") {
                        match self.matching_close(i + 1, "<", ">") {
                            Some(close) => {
                                pending_template = Some(i);
                                i = close + 1;
                            }
                            None => {
                                self.warn(line, "unterminated template header");
                                i += 1;
                            }
                        }
                    } else {
                        i += 1;
                    }
                }
                "class" | "struct" => {
                    let template = pending_template.take();
                    i = self.parse_record(i, end, template, report, qualified, 1);
                }
                "enum" => {
                    self.warn(line, "skipped enum");
                    i = self.skip_past_semicolon(i, end);
                }
                "using" | "typedef" | "static_assert" => {
                    i = self.skip_past_semicolon(i, end);
                }
                "extern" if self.is_kw(i + 1, "{") => {
                    // extern "C" block: the literal was dropped by the lexer.
                    match self.matching_close(i + 1, "{", "}") {
                        Some(close) => {
                            self.parse_scope(i + 2, close, report, qualified);
                            i = close + 1;
                        }
                        None => {
                            self.warn(line, "unbalanced extern block");
                            i += 2;
                        }
                    }
                }
                "}" => {
                    self.warn(line, "stray closing brace");
                    i += 1;
                }
                _ => {
                    let template = pending_template.take();
                    let (next, parsed) = self.parse_declaration(i, end, Scope::Global, template);
                    match parsed {
                        Parsed::Method {
                            qualifier: Some(q),
                            info,
                        } => qualified.push((q, info)),
                        Parsed::Method {
                            qualifier: None,
                            info,
                        } => report.free_functions.push(info),
                        Parsed::Fields(_) | Parsed::Nothing => {}
                    }
                    i = next;
                }
            }
        }
    }

    /// Parses `class|struct Name ... { ... };` starting at the keyword.
    /// Returns the index just past the record. `depth` guards nesting.
    fn parse_record(
        &mut self,
        kw: usize,
        end: usize,
        template: Option<usize>,
        report: &mut StructuralReport,
        qualified: &mut Vec<(String, MethodInfo)>,
        depth: usize,
    ) -> usize {
        let kind = if self.toks[kw].text == "class" {
            RecordKind::Class
        } else {
            RecordKind::Struct
        };
        let start_line = template
            .map(|t| self.toks[t].line)
            .unwrap_or(self.toks[kw].line);
        let mut i = kw + 1;
        let name = match self.at(i) {
            Some(t) if t.is_ident() => {
                let name = t.text.clone();
                i += 1;
                name
            }
            _ => {
                self.warn(self.toks[kw].line, "anonymous or malformed record skipped");
                return self.skip_past_semicolon(i, end);
            }
        };
        // `class Name;` forward declaration — nothing to report. An
        // elaborated return type (`struct Name fn()` / `struct Name x;`)
        // also lands here and is treated the same way.
        if self.is_kw(i, ";") {
            return i + 1;
        }
        if self.is_kw(i, "final") {
            i += 1;
        }
        if self.is_kw(i, ":") {
            while i < end && !self.is_kw(i, "{") && !self.is_kw(i, ";") {
                i += 1;
            }
        }
        if !self.is_kw(i, "{") {
            self.warn(self.toks[kw].line, &format!("skipped unparsed record {name}"));
            return self.skip_past_semicolon(i, end);
        }
        let Some(close) = self.matching_close(i, "{", "}") else {
            self.warn(self.toks[kw].line, &format!("unbalanced braces in {name}"));
            return end;
        };
        let mut class = ClassInfo {
            name: name.clone(),
            kind,
            fields: Vec::new(),
            methods: Vec::new(),
            range: SourceRange::new(start_line, self.toks[close].line),
        };
        if depth > 2 {
            self.warn(
                self.toks[kw].line,
                &format!("record {name} nested too deeply, members skipped"),
            );
        } else {
            self.parse_record_body(i + 1, close, &mut class, report, qualified, depth);
        }
        report.classes.push(class);
        self.skip_past_semicolon(close, end)
    }

    fn parse_record_body(
        &mut self,
        mut i: usize,
        close: usize,
        class: &mut ClassInfo,
        report: &mut StructuralReport,
        qualified: &mut Vec<(String, MethodInfo)>,
        depth: usize,
    ) {
        let default_access = match class.kind {
            RecordKind::Class => Access::Private,
            RecordKind::Struct => Access::Public,
        };
        let mut access = default_access;
        let mut pending_template: Option<usize> = None;
        while i < close {
            let tok = &self.toks[i];
            let line = tok.line;
            match tok.text.as_str() {
                ";" => i += 1,
                "public" | "private" | "protected" if self.is_kw(i + 1, ":") => {
                    access = match tok.text.as_str() {
                        "public" => Access::Public,
                        "protected" => Access::Protected,
                        _ => Access::Private,
                    };
                    i += 2;
                }
                "template" => {
                    if self.is_kw(i + 1, "<") {
                        match self.matching_close(i + 1, "<", ">") {
                            Some(tc) => {
                                pending_template = Some(i);
                                i = tc + 1;
                            }
                            None => {
                                self.warn(line, "unterminated template header");
                                i += 1;
                            }
                        }
                    } else {
                        i += 1;
                    }
                }
                "class" | "struct" => {
                    let template = pending_template.take();
                    i = self.parse_record(i, close, template, report, qualified, depth + 1);
                }
                "enum" => {
                    self.warn(line, "skipped enum");
                    i = self.skip_past_semicolon(i, close);
                }
                "using" | "typedef" | "friend" | "static_assert" => {
                    i = self.skip_past_semicolon(i, close);
                }
                _ => {
                    let template = pending_template.take();
                    let class_name = class.name.clone();
                    let scope = Scope::InClass {
                        class_name: &class_name,
                    };
                    let (next, parsed) = self.parse_declaration(i, close, scope, template);
                    match parsed {
                        Parsed::Method { info, .. } => {
                            let mut info = info;
                            info.access = access;
                            class.methods.push(info);
                        }
                        Parsed::Fields(fields) => {
                            for (name, type_text) in fields {
                                class.fields.push(super::FieldInfo {
                                    name,
                                    type_text,
                                    access,
                                });
                            }
                        }
                        Parsed::Nothing => {}
                    }
                    i = next;
                }
            }
        }
    }

    /// Parses one declaration starting at `i`: a method/function, a field
    /// list (class scope only), or something to skip. Returns the index
    /// just past the construct.
    fn parse_declaration(
        &mut self,
        start: usize,
        end: usize,
        scope: Scope<'_>,
        template: Option<usize>,
    ) -> (usize, Parsed) {
        let head_start = template.unwrap_or(start);
        let line = self.toks[start].line;

        // Collect the declaration head: everything before the parameter
        // list or declarator terminator.
        let mut j = start;
        let mut saw_head_token = false;
        loop {
            let Some(tok) = self.at(j).filter(|_| j < end) else {
                return (end, Parsed::Nothing);
            };
            if STATEMENT_KEYWORDS.contains(&tok.text.as_str()) {
                return (self.skip_past_semicolon(j, end), Parsed::Nothing);
            }
            match tok.kind {
                TokKind::Ident => {
                    if tok.text == "operator" {
                        // Consume the operator symbol; `operator()` /
                        // `operator[]` are bracket pairs, the rest are
                        // plain punctuation runs.
                        j += 1;
                        if (self.is_kw(j, "(") && self.is_kw(j + 1, ")"))
                            || (self.is_kw(j, "[") && self.is_kw(j + 1, "]"))
                        {
                            j += 2;
                        } else {
                            while self.at(j).is_some_and(|t| {
                                t.kind == TokKind::Punct && !"(;{".contains(t.text.as_str())
                            }) {
                                j += 1;
                            }
                        }
                        saw_head_token = true;
                        continue;
                    }
                    saw_head_token = true;
                    j += 1;
                    // Balanced template argument group directly after a name.
                    if self.is_kw(j, "<") {
                        if let Some(c) = self.matching_close(j, "<", ">").filter(|c| *c < end) {
                            // Reject groups that obviously span statements.
                            if !(j..c).any(|k| self.toks[k].text == ";") {
                                j = c + 1;
                            }
                        }
                    }
                }
                TokKind::Punct => match tok.text.as_str() {
                    "::" | "*" | "&" | "~" => {
                        j += 1;
                        saw_head_token = true;
                    }
                    "(" => break,
                    ";" | "=" | "," | "{" | "[" | ":" => break,
                    _ => {
                        // Expression statement or unsupported construct.
                        return (self.skip_past_semicolon(j, end), Parsed::Nothing);
                    }
                },
                TokKind::Number => {
                    return (self.skip_past_semicolon(j, end), Parsed::Nothing);
                }
            }
        }
        if !saw_head_token {
            return (self.skip_past_semicolon(start, end), Parsed::Nothing);
        }

        let terminator = self.toks[j].text.clone();
        if terminator == "(" {
            self.parse_callable(head_start, j, end, scope, line)
        } else if let Scope::InClass { .. } = scope {
            self.parse_field_list(head_start, j, end)
        } else {
            // Global variable or unrecognized construct: not part of the
            // report.
            (self.skip_past_semicolon(j, end), Parsed::Nothing)
        }
    }

    /// Parses a function/method whose parameter list opens at `paren`.
    fn parse_callable(
        &mut self,
        head_start: usize,
        paren: usize,
        end: usize,
        scope: Scope<'_>,
        line: usize,
    ) -> (usize, Parsed) {
        // Name = the identifier (or operator name) just before the parens;
        // a `Cls::` chain before it becomes the qualifier.
        let (name, qualifier) = match self.callable_name(head_start, paren) {
            Some(pair) => pair,
            None => {
                self.warn(line, "skipped unparsed construct");
                return (self.skip_past_semicolon(paren, end), Parsed::Nothing);
            }
        };
        // A lone name is a constructor/destructor inside its class, or a
        // macro-style invocation otherwise.
        let head_token_count = paren - head_start;
        if head_token_count < 2 {
            let is_ctor_like = match scope {
                Scope::InClass { class_name } => {
                    name == class_name || name.starts_with('~')
                }
                Scope::Global => false,
            };
            if !is_ctor_like {
                self.warn(line, &format!("skipped unparsed construct near {name}"));
                return (self.skip_past_semicolon(paren, end), Parsed::Nothing);
            }
        }
        let Some(param_close) = self.matching_close(paren, "(", ")").filter(|c| *c < end) else {
            self.warn(line, "unbalanced parentheses");
            return (end, Parsed::Nothing);
        };

        // Trailing qualifiers that belong to the signature.
        let mut sig_end = param_close + 1;
        let mut k = param_close + 1;
        while let Some(tok) = self.at(k).filter(|_| k < end) {
            match tok.text.as_str() {
                "const" | "override" | "final" | "&" | "&&" => {
                    k += 1;
                    sig_end = k;
                }
                "noexcept" => {
                    k += 1;
                    if self.is_kw(k, "(") {
                        match self.matching_close(k, "(", ")") {
                            Some(c) => k = c + 1,
                            None => break,
                        }
                    }
                    sig_end = k;
                }
                _ => break,
            }
        }

        // Scan past any remaining annotations to the body, terminator, or
        // constructor initializer list.
        let mut cursor = k;
        loop {
            let Some(tok) = self.at(cursor).filter(|_| cursor < end) else {
                self.warn(line, "declaration runs off end of file");
                return (end, Parsed::Nothing);
            };
            match tok.text.as_str() {
                "{" => {
                    let Some(close) = self.matching_close(cursor, "{", "}").filter(|c| *c <= end)
                    else {
                        self.warn(line, "unbalanced braces in function body");
                        let last_line = self.toks.last().map(|t| t.line).unwrap_or(line);
                        return (
                            end,
                            self.finish_callable(
                                head_start, sig_end, name, qualifier, line, last_line, true,
                            ),
                        );
                    };
                    let end_line = self.toks[close].line;
                    return (
                        close + 1,
                        self.finish_callable(
                            head_start, sig_end, name, qualifier, line, end_line, true,
                        ),
                    );
                }
                ";" => {
                    let end_line = tok.line;
                    return (
                        cursor + 1,
                        self.finish_callable(
                            head_start, sig_end, name, qualifier, line, end_line, false,
                        ),
                    );
                }
                "=" => {
                    // `= 0;`, `= default;`, `= delete;` — declaration-like.
                    let next = self.skip_past_semicolon(cursor, end);
                    let end_line = self.toks[next.saturating_sub(1).min(self.toks.len() - 1)].line;
                    return (
                        next,
                        self.finish_callable(
                            head_start, sig_end, name, qualifier, line, end_line, false,
                        ),
                    );
                }
                ":" => {
                    // Constructor initializer list: items `name(args)` or
                    // `name{args}` separated by commas, then the body. A `{`
                    // directly after an identifier is an initializer;
                    // anywhere else it opens the body.
                    cursor += 1;
                    loop {
                        while self.at(cursor).is_some_and(|t| {
                            t.is_ident() || t.text == "::" || t.text == ","
                        }) {
                            cursor += 1;
                        }
                        match self.at(cursor).map(|t| t.text.as_str()) {
                            Some("(") => match self.matching_close(cursor, "(", ")") {
                                Some(c) => cursor = c + 1,
                                None => {
                                    self.warn(line, "unbalanced initializer list");
                                    return (end, Parsed::Nothing);
                                }
                            },
                            Some("{") if self.prev_is_ident(cursor) => {
                                match self.matching_close(cursor, "{", "}") {
                                    Some(c) => cursor = c + 1,
                                    None => {
                                        self.warn(line, "unbalanced initializer list");
                                        return (end, Parsed::Nothing);
                                    }
                                }
                            }
                            Some("{") => {
                                let Some(c) = self.matching_close(cursor, "{", "}") else {
                                    self.warn(line, "unbalanced braces in function body");
                                    return (end, Parsed::Nothing);
                                };
                                let end_line = self.toks[c].line;
                                return (
                                    c + 1,
                                    self.finish_callable(
                                        head_start, sig_end, name, qualifier, line, end_line,
                                        true,
                                    ),
                                );
                            }
                            _ => {
                                self.warn(line, "malformed initializer list");
                                return (self.skip_past_semicolon(cursor, end), Parsed::Nothing);
                            }
                        }
                    }
                }
                "->" => {
                    // Trailing return type: skip its tokens.
                    cursor += 1;
                    while self.at(cursor).is_some_and(|t| {
                        t.is_ident() || matches!(t.text.as_str(), "::" | "*" | "&" | "<" | ">")
                    }) {
                        cursor += 1;
                    }
                }
                _ if tok.is_ident() => cursor += 1, // annotation macro
                _ => {
                    self.warn(line, &format!("skipped unparsed construct near {name}"));
                    return (self.skip_past_semicolon(cursor, end), Parsed::Nothing);
                }
            }
        }
    }

    fn prev_is_ident(&self, i: usize) -> bool {
        i > 0 && self.toks[i - 1].is_ident()
    }

    #[allow(clippy::too_many_arguments)]
    fn finish_callable(
        &self,
        head_start: usize,
        sig_end: usize,
        name: String,
        qualifier: Option<String>,
        start_line: usize,
        end_line: usize,
        is_definition: bool,
    ) -> Parsed {
        let start_line = self.toks[head_start].line.min(start_line);
        Parsed::Method {
            qualifier,
            info: MethodInfo {
                name,
                signature_text: self.slice_collapsed(head_start, sig_end),
                access: Access::Public,
                range: SourceRange::new(start_line, end_line.max(start_line)),
                is_definition,
            },
        }
    }

    /// The callable's own name plus an optional `Cls::` qualifier,
    /// scanning backwards from the parameter list.
    fn callable_name(&self, head_start: usize, paren: usize) -> Option<(String, Option<String>)> {
        if paren == head_start {
            return None;
        }
        let mut k = paren - 1;
        // operator name: tokens between `operator` and the param list.
        for op_idx in head_start..paren {
            if self.toks[op_idx].text == "operator" && self.toks[op_idx].is_ident() {
                let name = collapse_ws(
                    &self.src[self.toks[op_idx].start..self.toks[paren - 1].end],
                );
                let qualifier = self.qualifier_before(op_idx, head_start);
                return Some((name, qualifier));
            }
        }
        let last = &self.toks[k];
        if !last.is_ident() {
            return None;
        }
        let mut name = last.text.clone();
        if k > head_start && self.toks[k - 1].text == "~" {
            name = format!("~{name}");
            k -= 1;
        }
        let qualifier = self.qualifier_before(k, head_start);
        Some((name, qualifier))
    }

    /// Collects a `A::B` chain ending just before token `k` (exclusive).
    fn qualifier_before(&self, k: usize, head_start: usize) -> Option<String> {
        let mut parts = Vec::new();
        let mut j = k;
        while j >= 2 && j - 1 > head_start && self.toks[j - 1].text == "::" {
            let prev = &self.toks[j - 2];
            if !prev.is_ident() {
                break;
            }
            parts.push(prev.text.clone());
            j -= 2;
        }
        if parts.is_empty() {
            None
        } else {
            parts.reverse();
            Some(parts.join("::"))
        }
    }

    /// Parses `type name [= init] [, name2 ...];` inside a class body.
    /// `after_head` points at the terminator that ended the head scan.
    fn parse_field_list(
        &mut self,
        head_start: usize,
        after_head: usize,
        end: usize,
    ) -> (usize, Parsed) {
        let line = self.toks[head_start].line;
        // The declared name is the last identifier of the head; everything
        // before it is the type.
        if after_head == head_start {
            return (self.skip_past_semicolon(after_head, end), Parsed::Nothing);
        }
        let name_idx = after_head - 1;
        let name_tok = &self.toks[name_idx];
        if !name_tok.is_ident()
            || name_idx == head_start
            || self.toks[name_idx - 1].text == "::"
        {
            self.warn(line, "skipped unparsed member declaration");
            return (self.skip_past_semicolon(after_head, end), Parsed::Nothing);
        }
        let base_type = self.slice_collapsed(head_start, name_idx);
        if base_type.is_empty() {
            self.warn(line, "skipped member with no type");
            return (self.skip_past_semicolon(after_head, end), Parsed::Nothing);
        }
        let mut fields = vec![(name_tok.text.clone(), base_type.clone())];
        let stripped_base = base_type.trim_end_matches(['*', '&', ' ']).to_string();

        let mut i = after_head;
        // Array suffix on the first declarator.
        if self.is_kw(i, "[") {
            if let Some(c) = self.matching_close(i, "[", "]") {
                let suffix = collapse_ws(&self.src[self.toks[i].start..self.toks[c].end]);
                fields[0].1 = format!("{base_type}{suffix}");
                i = c + 1;
            }
        }
        // Initializer and additional declarators.
        loop {
            match self.at(i).filter(|_| i < end).map(|t| t.text.as_str()) {
                Some(";") => return (i + 1, Parsed::Fields(fields)),
                Some("=") | Some(":") => {
                    // Initializer or bit-field width: consume to `,` or `;`
                    // at this level.
                    i += 1;
                    let mut depth = 0usize;
                    while i < end {
                        match self.toks[i].text.as_str() {
                            "(" | "{" | "[" => depth += 1,
                            ")" | "}" | "]" => depth = depth.saturating_sub(1),
                            ";" if depth == 0 => break,
                            "," if depth == 0 => break,
                            _ => {}
                        }
                        i += 1;
                    }
                }
                Some("{") => {
                    // Brace initializer.
                    match self.matching_close(i, "{", "}") {
                        Some(c) => i = c + 1,
                        None => {
                            self.warn(line, "unbalanced brace initializer");
                            return (end, Parsed::Fields(fields));
                        }
                    }
                }
                Some(",") => {
                    i += 1;
                    let mut markers = String::new();
                    while self.at(i).is_some_and(|t| t.text == "*" || t.text == "&") {
                        markers.push_str(&self.toks[i].text);
                        i += 1;
                    }
                    match self.at(i) {
                        Some(t) if t.is_ident() => {
                            let type_text = if markers.is_empty() {
                                stripped_base.clone()
                            } else {
                                format!("{stripped_base} {markers}")
                            };
                            fields.push((t.text.clone(), type_text));
                            i += 1;
                            if self.is_kw(i, "[") {
                                if let Some(c) = self.matching_close(i, "[", "]") {
                                    let suffix = collapse_ws(
                                        &self.src[self.toks[i].start..self.toks[c].end],
                                    );
                                    let last = fields.last_mut().unwrap();
                                    last.1 = format!("{}{suffix}", last.1);
                                    i = c + 1;
                                }
                            }
                        }
                        _ => {
                            self.warn(line, "malformed declarator list");
                            return (self.skip_past_semicolon(i, end), Parsed::Fields(fields));
                        }
                    }
                }
                _ => {
                    self.warn(line, "unterminated member declaration");
                    return (self.skip_past_semicolon(i, end), Parsed::Fields(fields));
                }
            }
        }
    }
}

fn collapse_ws(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_ws = false;
    for c in text.chars() {
        if c.is_whitespace() {
            in_ws = true;
        } else {
            if in_ws && !out.is_empty() {
                out.push(' ');
            }
            in_ws = false;
            out.push(c);
        }
    }
    out
}

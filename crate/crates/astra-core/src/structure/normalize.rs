//! Local-identifier normalization for similarity scoring.
//!
//! Variables declared inside a function body are renamed, in order of first
//! declaration, to `VAR1`, `VAR2`, …. Function parameters, qualified names,
//! member accesses, type names in declarations, and caller-preserved
//! identifiers stay untouched, so two functions that differ only in local
//! naming normalize to identical text.

use std::collections::{HashMap, HashSet};

use super::lexer::{lex, TokKind, Token};
use super::StructureError;

/// Keywords that may appear in the type part of a declaration.
const TYPE_KEYWORDS: &[&str] = &[
    "const", "constexpr", "volatile", "auto", "unsigned", "signed", "int", "long", "short",
    "float", "double", "char", "bool", "void", "static", "mutable", "wchar_t",
];

/// Keywords that can never open a declaration statement.
const NON_DECL_KEYWORDS: &[&str] = &[
    "return", "if", "else", "while", "do", "switch", "case", "default", "break", "continue",
    "goto", "new", "delete", "throw", "try", "catch", "sizeof", "using", "typedef", "class",
    "struct", "enum", "namespace", "template", "operator", "public", "private", "protected",
    "static_assert", "static_cast", "dynamic_cast", "reinterpret_cast", "const_cast", "this",
    "true", "false", "nullptr",
];

/// Control keywords whose parenthesized header is not a parameter list.
const CONTROL_KEYWORDS: &[&str] = &["if", "while", "for", "switch", "catch", "return"];

/// Renames function-local variables to canonical `VARn` placeholders.
///
/// `function_text` must be a single function definition (header + body);
/// `preserve` lists identifiers that must survive unchanged. Replacement is
/// whole-token only and the result is byte-faithful outside renamed tokens.
pub fn normalize_identifiers(
    function_text: &str,
    preserve: &[String],
) -> Result<String, StructureError> {
    normalize_identifiers_with_warnings(function_text, preserve).map(|(text, _)| text)
}

/// [`normalize_identifiers`] plus notes about shadowed redeclarations.
pub fn normalize_identifiers_with_warnings(
    function_text: &str,
    preserve: &[String],
) -> Result<(String, Vec<String>), StructureError> {
    let toks = lex(function_text);
    let body = find_function_body(&toks).ok_or(StructureError::NotAFunction)?;

    let preserve: HashSet<&str> = preserve.iter().map(String::as_str).collect();
    let params = collect_parameter_names(&toks, body.open);

    let mut detector = DeclDetector {
        toks: &toks,
        params: &params,
        preserve: &preserve,
        mapping: HashMap::new(),
        order: Vec::new(),
        type_positions: HashSet::new(),
        warnings: Vec::new(),
    };
    detector.scan_body(body.open, body.close);

    let mapping: HashMap<&str, String> = detector
        .order
        .iter()
        .enumerate()
        .map(|(i, name)| (name.as_str(), format!("VAR{}", i + 1)))
        .collect();

    // Rebuild the text, substituting mapped identifiers at renameable
    // positions and copying everything else verbatim.
    let mut out = String::with_capacity(function_text.len());
    let mut prev_end = 0;
    for (i, tok) in toks.iter().enumerate() {
        out.push_str(&function_text[prev_end..tok.start]);
        prev_end = tok.end;
        let renameable = tok.kind == TokKind::Ident
            && mapping.contains_key(tok.text.as_str())
            && !detector.type_positions.contains(&i)
            && !is_member_or_qualified(&toks, i);
        if renameable {
            out.push_str(&mapping[tok.text.as_str()]);
        } else {
            out.push_str(&tok.text);
        }
    }
    out.push_str(&function_text[prev_end..]);
    Ok((out, detector.warnings))
}

struct BodySpan {
    open: usize,
    close: usize,
}

/// Locates the function's parameter list and body braces: the first `(` at
/// paren depth 0, its match, then the first `{` after any qualifiers or a
/// constructor initializer list.
fn find_function_body(toks: &[Token]) -> Option<BodySpan> {
    let paren = toks.iter().position(|t| t.text == "(")?;
    let paren_close = matching(toks, paren, "(", ")")?;
    let mut i = paren_close + 1;
    let mut depth = 0usize;
    while i < toks.len() {
        match toks[i].text.as_str() {
            "(" | "[" => depth += 1,
            ")" | "]" => depth = depth.saturating_sub(1),
            ";" if depth == 0 => return None,
            "{" if depth == 0 => {
                let close = matching(toks, i, "{", "}")?;
                return Some(BodySpan { open: i, close });
            }
            _ => {}
        }
        i += 1;
    }
    None
}

fn matching(toks: &[Token], open: usize, open_text: &str, close_text: &str) -> Option<usize> {
    let mut depth = 0usize;
    for (i, tok) in toks.iter().enumerate().skip(open) {
        if tok.text == open_text {
            depth += 1;
        } else if tok.text == close_text {
            depth -= 1;
            if depth == 0 {
                return Some(i);
            }
        }
    }
    None
}

/// Whether the identifier at `i` is a member access (`.x`, `->x`) or part
/// of a qualified name (`a::x`, `x::a`).
fn is_member_or_qualified(toks: &[Token], i: usize) -> bool {
    if i > 0 {
        let prior = toks[i - 1].text.as_str();
        if prior == "." || prior == "->" || prior == "::" {
            return true;
        }
    }
    toks.get(i + 1).is_some_and(|t| t.text == "::")
}

/// Names bound by parameter lists anywhere in the text: the function's own
/// header plus every lambda whose parameter close is followed by `{`.
fn collect_parameter_names(toks: &[Token], body_open: usize) -> HashSet<String> {
    let mut names = HashSet::new();
    let mut i = 0;
    while i < toks.len() {
        if toks[i].text != "(" {
            i += 1;
            continue;
        }
        // A control header is not a parameter list.
        let control = i > 0
            && toks[i - 1].kind == TokKind::Ident
            && CONTROL_KEYWORDS.contains(&toks[i - 1].text.as_str());
        let Some(close) = matching(toks, i, "(", ")") else {
            i += 1;
            continue;
        };
        let is_header = i < body_open && close < body_open;
        if !control && (is_header || followed_by_block(toks, close)) {
            extract_param_names(&toks[i + 1..close], &mut names);
        }
        i += 1;
    }
    names
}

/// True when the tokens after a `)` lead to a `{` through qualifier-like
/// tokens only (lambda or nested function-ish construct).
fn followed_by_block(toks: &[Token], close: usize) -> bool {
    let mut i = close + 1;
    while let Some(tok) = toks.get(i) {
        match tok.text.as_str() {
            "{" => return true,
            "const" | "mutable" | "noexcept" | "override" | "final" | "&" | "&&" | "->" | "::"
            | "<" | ">" | "*" => i += 1,
            _ if tok.kind == TokKind::Ident => i += 1,
            _ => return false,
        }
    }
    false
}

/// Pulls declared names out of one parameter list: for each top-level
/// comma-separated segment, the last plain identifier that is not a type
/// keyword and not part of a qualified name, ignoring default arguments.
fn extract_param_names(segment_toks: &[Token], names: &mut HashSet<String>) {
    let mut depth = 0usize;
    let mut segment: Vec<&Token> = Vec::new();
    let mut flush = |segment: &mut Vec<&Token>| {
        let mut candidate: Option<&str> = None;
        for (j, tok) in segment.iter().enumerate() {
            if tok.text == "=" {
                break;
            }
            if tok.kind == TokKind::Ident
                && !TYPE_KEYWORDS.contains(&tok.text.as_str())
                && (j == 0 || segment[j - 1].text != "::")
                && segment.get(j + 1).map(|t| t.text.as_str()) != Some("::")
            {
                candidate = Some(&tok.text);
            }
        }
        if let Some(name) = candidate {
            names.insert(name.to_string());
        }
        segment.clear();
    };
    for tok in segment_toks {
        match tok.text.as_str() {
            "(" | "[" | "{" | "<" => {
                depth += 1;
                segment.push(tok);
            }
            ")" | "]" | "}" | ">" => {
                depth = depth.saturating_sub(1);
                segment.push(tok);
            }
            "," if depth == 0 => flush(&mut segment),
            _ => segment.push(tok),
        }
    }
    flush(&mut segment);
}

/// A `{` opens a lambda body (rather than a brace initializer) when it
/// follows a parameter close, a capture close, or a lambda qualifier.
fn is_lambda_body_open(toks: &[Token], i: usize) -> bool {
    i > 0
        && matches!(
            toks[i - 1].text.as_str(),
            ")" | "]" | "mutable" | "noexcept"
        )
}

struct DeclDetector<'t> {
    toks: &'t [Token],
    params: &'t HashSet<String>,
    preserve: &'t HashSet<&'t str>,
    mapping: HashMap<String, usize>,
    order: Vec<String>,
    type_positions: HashSet<usize>,
    warnings: Vec<String>,
}

impl<'t> DeclDetector<'t> {
    /// Scans the body for declaration statements at statement starts
    /// (after `{`, `}`, `;`) and inside `for (...)` headers.
    fn scan_body(&mut self, open: usize, close: usize) {
        let mut i = open + 1;
        let mut at_statement_start = true;
        while i < close {
            let text = self.toks[i].text.as_str();
            match text {
                "{" | "}" | ";" => {
                    at_statement_start = true;
                    i += 1;
                }
                "for" if self.toks.get(i + 1).is_some_and(|t| t.text == "(") => {
                    // The init part of the for header is a statement start.
                    i += 2;
                    at_statement_start = true;
                }
                _ => {
                    if at_statement_start {
                        i = self.try_declaration(i, close);
                        at_statement_start = false;
                    } else {
                        i += 1;
                    }
                }
            }
        }
    }

    /// Attempts to match `<type tokens> <ident> [= init][, more];` at `i`.
    /// Returns the index to resume scanning from.
    fn try_declaration(&mut self, start: usize, end: usize) -> usize {
        let mut i = start;
        let mut run: Vec<usize> = Vec::new(); // candidate type+name positions

        // Collect the head run: identifiers, `::` chains, type keywords,
        // balanced template-argument groups. `*`/`&` or any other operator
        // abandons the candidate — pointer and reference locals are left
        // as written.
        loop {
            let Some(tok) = self.toks.get(i).filter(|_| i < end) else {
                return start + 1;
            };
            match tok.kind {
                TokKind::Ident => {
                    if NON_DECL_KEYWORDS.contains(&tok.text.as_str()) {
                        return start + 1;
                    }
                    run.push(i);
                    i += 1;
                    // Template argument group belongs to the type.
                    if self.toks.get(i).is_some_and(|t| t.text == "<") {
                        if let Some(c) = matching(self.toks, i, "<", ">").filter(|c| *c < end) {
                            let contains_stmt =
                                (i..c).any(|k| self.toks[k].text == ";");
                            if !contains_stmt {
                                for k in i..=c {
                                    run.push(k);
                                }
                                i = c + 1;
                            }
                        }
                    }
                }
                TokKind::Punct if tok.text == "::" => {
                    run.push(i);
                    i += 1;
                }
                TokKind::Punct
                    if matches!(tok.text.as_str(), "=" | ";" | ",") && run.len() >= 2 =>
                {
                    break;
                }
                _ => return start + 1,
            }
        }

        // The last run entry must be a plain identifier preceded by at
        // least one type token.
        let name_pos = *run.last().unwrap();
        let name_tok = &self.toks[name_pos];
        if name_tok.kind != TokKind::Ident
            || self.toks[name_pos - 1].text == "::"
            || run.len() < 2
        {
            return start + 1;
        }

        // Everything before the name is type context; record it so the
        // rename pass leaves those tokens alone.
        for &pos in &run[..run.len() - 1] {
            self.type_positions.insert(pos);
        }
        self.declare(name_tok);

        // Consume the initializer / additional declarators. The scanner
        // resumes at the terminating `;` so the next statement is seen as
        // a statement start.
        loop {
            match self.toks.get(i).filter(|_| i < end).map(|t| t.text.as_str()) {
                Some(";") => return i,
                Some("=") => {
                    i += 1;
                    let mut depth = 0usize;
                    while i < end {
                        match self.toks[i].text.as_str() {
                            "{" if is_lambda_body_open(self.toks, i) => {
                                // A lambda in the initializer has its own
                                // statements; scan them too.
                                match matching(self.toks, i, "{", "}").filter(|c| *c <= end) {
                                    Some(c) => {
                                        self.scan_body(i, c);
                                        i = c;
                                    }
                                    None => return end,
                                }
                            }
                            "(" | "[" | "{" => depth += 1,
                            ")" | "]" | "}" => {
                                if depth == 0 {
                                    return i; // for-header `)` ends the init
                                }
                                depth -= 1;
                            }
                            ";" if depth == 0 => return i,
                            "," if depth == 0 => break,
                            _ => {}
                        }
                        i += 1;
                    }
                    if i >= end {
                        return i;
                    }
                }
                Some(",") => {
                    i += 1;
                    match self.toks.get(i).filter(|_| i < end) {
                        Some(t)
                            if t.kind == TokKind::Ident
                                && !NON_DECL_KEYWORDS.contains(&t.text.as_str()) =>
                        {
                            let next = self.toks.get(i + 1).map(|n| n.text.as_str());
                            if matches!(next, Some("=") | Some(",") | Some(";")) {
                                self.declare(t);
                                i += 1;
                            } else {
                                return i;
                            }
                        }
                        _ => return i,
                    }
                }
                _ => return i,
            }
        }
    }

    fn declare(&mut self, tok: &Token) {
        let name = tok.text.as_str();
        if self.preserve.contains(name) {
            return;
        }
        if self.params.contains(name) {
            self.warnings
                .push(format!("line {}: {name} shadows a parameter", tok.line));
            return;
        }
        if self.mapping.contains_key(name) {
            self.warnings.push(format!(
                "line {}: {name} redeclared; first declaration wins",
                tok.line
            ));
            return;
        }
        self.mapping.insert(name.to_string(), self.order.len());
        self.order.push(name.to_string());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn normalize(text: &str) -> String {
        normalize_identifiers(text, &[]).unwrap()
    }

    #[test]
    fn single_local_renamed() {
        assert_eq!(
            normalize("int f(int a){int b=a; return b;}"),
            "int f(int a){int VAR1=a; return VAR1;}"
        );
    }

    #[test]
    fn no_locals_is_identity() {
        let text = "int add(int a, int b) {\n    return a + b;\n}";
        assert_eq!(normalize(text), text);
    }

    #[test]
    fn not_a_function_rejected() {
        assert!(matches!(
            normalize_identifiers("int x = 3;", &[]),
            Err(StructureError::NotAFunction)
        ));
        assert!(matches!(
            normalize_identifiers("void f(int a);", &[]),
            Err(StructureError::NotAFunction)
        ));
    }

    #[test]
    fn parallelfor_loop_locals_renamed_in_order() {
        let text = "\
void fill(amrex::MultiFab& mf, amrex::Real const* dx) {
for(amrex::MFIter mfi(mf); mfi.isValid(); ++mfi){
    const amrex::Box& bx = mfi.validbox();
    const amrex::Array4<amrex::Real>& mf_array = mf.array(mfi);

    amrex::ParallelFor(bx, [=] AMREX_GPU_DEVICE(int i, int j, int k){

        amrex::Real x = (i+0.5) * dx[0];
        amrex::Real y = (j+0.5) * dx[1];
        amrex::Real z = (k+0.5) * dx[2];

        amrex::Real r_squared = ((x-0.5)*(x-0.5)+(y-0.5)*(y-0.5)+
                                (z-0.5)*(z-0.5))/0.01;

        mf_array(i,j,k) = 1.0 + std::exp(-r_squared);
    });
}
}
";
        let result = normalize(text);
        // Plain value locals are renamed in declaration order.
        assert!(result.contains("amrex::Real VAR1 = (i+0.5) * dx[0];"));
        assert!(result.contains("amrex::Real VAR2 = (j+0.5) * dx[1];"));
        assert!(result.contains("amrex::Real VAR3 = (k+0.5) * dx[2];"));
        assert!(result.contains("amrex::Real VAR4 = ((VAR1-0.5)*(VAR1-0.5)"));
        assert!(result.contains("std::exp(-VAR4)"));
        // Parameters and qualified names survive.
        assert!(result.contains("amrex::MultiFab& mf"));
        assert!(result.contains("dx[0]"));
        assert!(result.contains("amrex::MFIter mfi(mf)"));
        // Lambda parameters survive.
        assert!(result.contains("AMREX_GPU_DEVICE(int i, int j, int k)"));
        assert!(result.contains("mf_array(i,j,k)"));
    }

    #[test]
    fn preserve_list_wins() {
        let text = "void f() { int counter = 0; counter++; }";
        let kept = normalize_identifiers(text, &["counter".to_string()]).unwrap();
        assert_eq!(kept, text);
    }

    #[test]
    fn member_access_not_renamed() {
        let text = "void f(S s) { int n = 1; s.n = n; s->n = n; }";
        let result = normalize(text);
        assert!(result.contains("int VAR1 = 1;"));
        assert!(result.contains("s.n = VAR1;"));
        assert!(result.contains("s->n = VAR1;"));
    }

    #[test]
    fn for_header_declaration_detected() {
        let text = "void f(int n) { for (int i = 0; i < n; ++i) { use(i); } }";
        let result = normalize(text);
        assert!(result.contains("for (int VAR1 = 0; VAR1 < n; ++VAR1)"));
        assert!(result.contains("use(VAR1);"));
    }

    #[test]
    fn multi_declarator_statement() {
        let text = "void f() { int a = 1, b = 2, c; c = a + b; }";
        let result = normalize(text);
        assert!(result.contains("int VAR1 = 1, VAR2 = 2, VAR3;"));
        assert!(result.contains("VAR3 = VAR1 + VAR2;"));
    }

    #[test]
    fn idempotence() {
        let texts = [
            "int f(int a){int b=a; return b;}",
            "void f() { int a = 1, b = 2; b += a; }",
            "void g(int n) { for (int i = 0; i < n; ++i) { double w = i * 2.0; sink(w); } }",
        ];
        for text in texts {
            let once = normalize(text);
            let twice = normalize(&once);
            assert_eq!(once, twice, "not idempotent for {text:?}");
        }
    }

    #[test]
    fn rename_invariance() {
        let original =
            "double kernel(double dx) { double sum = 0.0; double term = dx * dx; sum += term; return sum; }";
        let renamed =
            "double kernel(double dx) { double acc = 0.0; double t2 = dx * dx; acc += t2; return acc; }";
        assert_eq!(normalize(original), normalize(renamed));
    }

    #[test]
    fn shadowing_maps_first_declaration_only() {
        let text = "void f() { int x = 1; { int x = 2; use(x); } }";
        let result = normalize(text);
        // Both occurrences map to the same placeholder; a warning would
        // note the redeclaration if surfaced.
        assert!(result.contains("int VAR1 = 1;"));
        assert!(result.contains("int VAR1 = 2;"));
    }

    #[test]
    fn qualified_and_template_types_untouched() {
        let text =
            "void f() { std::vector<double> vals = make(); amrex::Real r = 0.0; touch(vals, r); }";
        let result = normalize(text);
        assert!(result.contains("std::vector<double> VAR1 = make();"));
        assert!(result.contains("amrex::Real VAR2 = 0.0;"));
        assert!(result.contains("touch(VAR1, VAR2);"));
    }

    #[test]
    fn pointer_and_reference_locals_left_alone() {
        let text = "void f(T& box) { const T& ref = box; T* ptr = &box; use(ref, ptr); }";
        assert_eq!(normalize(text), text);
    }

    #[test]
    fn locals_inside_lambda_initializers_detected() {
        let text = "\
void apply(int n) {
    int stride = 2;
    auto body = [=](int i) {
        int offset = i * stride;
        use(offset);
    };
    body(n);
}
";
        let result = normalize(text);
        assert!(result.contains("int VAR1 = 2;"));
        assert!(result.contains("auto VAR2 = [=](int i) {"));
        assert!(result.contains("int VAR3 = i * VAR1;"));
        assert!(result.contains("use(VAR3);"));
        assert!(result.contains("VAR2(n);"));
    }
}

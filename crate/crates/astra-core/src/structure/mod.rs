//! Structural facts about C++ sources: classes, member variables with access
//! specifiers, method signatures, and function start/end lines — the context
//! appended to prompts — plus the local-identifier normalizer used by
//! evaluation.
//!
//! Extraction is a tolerant single-pass parse over a declarative C++ subset
//! (namespaces, records one level deep, access sections, fields, methods,
//! free functions, raw template headers). It never fails on arbitrary text;
//! constructs outside the subset become warnings.

mod lexer;
mod normalize;
mod parser;

pub use normalize::{normalize_identifiers, normalize_identifiers_with_warnings};
pub use parser::extract_structure;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StructureError {
    #[error("compile database is not a JSON array")]
    NotAnArray,
    #[error("failed to read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("compile database parse error: {0}")]
    BadJson(#[from] serde_json::Error),
    #[error("no function named {name} found")]
    NotFound { name: String },
    #[error("{name} is ambiguous: candidates at {}", format_candidates(.candidates))]
    Ambiguous {
        name: String,
        candidates: Vec<(String, SourceRange)>,
    },
    #[error("{name} is declared but not defined in this file")]
    NotADefinition { name: String },
    #[error("focused function {name} not found in report")]
    FocusNotFound { name: String },
    #[error("text does not contain a function definition (no parameter list + body)")]
    NotAFunction,
}

fn format_candidates(candidates: &[(String, SourceRange)]) -> String {
    candidates
        .iter()
        .map(|(sig, range)| format!("{sig} (lines {}-{})", range.start_line, range.end_line))
        .collect::<Vec<_>>()
        .join(", ")
}

/// One translation unit from `compile_commands.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompileDbEntry {
    pub file: PathBuf,
    pub directory: PathBuf,
    pub arguments: Vec<String>,
}

/// 1-based, inclusive line range of a definition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRange {
    pub start_line: usize,
    pub end_line: usize,
}

impl SourceRange {
    pub fn new(start_line: usize, end_line: usize) -> Self {
        debug_assert!(start_line >= 1 && start_line <= end_line);
        Self {
            start_line,
            end_line,
        }
    }
}

impl fmt::Display for SourceRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lines {}\u{2013}{}", self.start_line, self.end_line)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Access {
    Public,
    Private,
    Protected,
}

impl fmt::Display for Access {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Access::Public => write!(f, "public"),
            Access::Private => write!(f, "private"),
            Access::Protected => write!(f, "protected"),
        }
    }
}

/// A member variable: name, declared type as written, effective access.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldInfo {
    pub name: String,
    pub type_text: String,
    pub access: Access,
}

/// A method or free function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodInfo {
    pub name: String,
    /// Return type + name + parameter list (and trailing qualifiers) as
    /// written, with whitespace runs collapsed to single spaces.
    pub signature_text: String,
    pub access: Access,
    pub range: SourceRange,
    pub is_definition: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Class,
    Struct,
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecordKind::Class => write!(f, "class"),
            RecordKind::Struct => write!(f, "struct"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassInfo {
    pub name: String,
    pub kind: RecordKind,
    pub fields: Vec<FieldInfo>,
    pub methods: Vec<MethodInfo>,
    pub range: SourceRange,
}

/// Per-file summary of classes, fields, method signatures, and function
/// source ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralReport {
    pub file: PathBuf,
    pub classes: Vec<ClassInfo>,
    pub free_functions: Vec<MethodInfo>,
    pub warnings: Vec<String>,
}

impl StructuralReport {
    pub fn is_empty(&self) -> bool {
        self.classes.is_empty() && self.free_functions.is_empty()
    }

    /// Every class and function name known to this report.
    pub fn known_symbols(&self) -> Vec<String> {
        let mut symbols = Vec::new();
        for class in &self.classes {
            symbols.push(class.name.clone());
            for method in &class.methods {
                symbols.push(method.name.clone());
            }
        }
        for function in &self.free_functions {
            symbols.push(function.name.clone());
        }
        symbols.sort();
        symbols.dedup();
        symbols
    }
}

/// Loads `compile_commands.json`: a JSON array of
/// `{directory, file, command | arguments}` objects.
///
/// Entries without a `file` are skipped with a warning; duplicate files keep
/// the first entry seen.
pub fn load_compile_db(path: &Path) -> Result<(Vec<CompileDbEntry>, Vec<String>), StructureError> {
    let text = std::fs::read_to_string(path).map_err(|source| StructureError::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let array = value.as_array().ok_or(StructureError::NotAnArray)?;

    let mut entries: Vec<CompileDbEntry> = Vec::new();
    let mut warnings = Vec::new();
    for (i, item) in array.iter().enumerate() {
        let Some(object) = item.as_object() else {
            warnings.push(format!("entry {i}: not an object, skipped"));
            continue;
        };
        let Some(file) = object.get("file").and_then(|v| v.as_str()).filter(|s| !s.is_empty())
        else {
            warnings.push(format!("entry {i}: missing file, skipped"));
            continue;
        };
        let arguments = if let Some(args) = object.get("arguments").and_then(|v| v.as_array()) {
            args.iter()
                .filter_map(|a| a.as_str().map(str::to_string))
                .collect()
        } else if let Some(command) = object.get("command").and_then(|v| v.as_str()) {
            split_command(command)
        } else {
            warnings.push(format!("entry {i} ({file}): no command or arguments, skipped"));
            continue;
        };
        if entries.iter().any(|e| e.file == Path::new(file)) {
            warnings.push(format!("entry {i}: duplicate file {file}, keeping first"));
            continue;
        }
        let directory = object
            .get("directory")
            .and_then(|v| v.as_str())
            .unwrap_or(".");
        entries.push(CompileDbEntry {
            file: PathBuf::from(file),
            directory: PathBuf::from(directory),
            arguments,
        });
    }
    Ok((entries, warnings))
}

/// Shell-style word split with basic single/double quote handling.
fn split_command(command: &str) -> Vec<String> {
    let mut words = Vec::new();
    let mut current = String::new();
    let mut chars = command.chars().peekable();
    let mut quote: Option<char> = None;
    while let Some(c) = chars.next() {
        match quote {
            Some(q) => {
                if c == q {
                    quote = None;
                } else if c == '\\' && q == '"' {
                    if let Some(next) = chars.next() {
                        current.push(next);
                    }
                } else {
                    current.push(c);
                }
            }
            None => match c {
                '\'' | '"' => quote = Some(c),
                '\\' => {
                    if let Some(next) = chars.next() {
                        current.push(next);
                    }
                }
                c if c.is_whitespace() => {
                    if !current.is_empty() {
                        words.push(std::mem::take(&mut current));
                    }
                }
                _ => current.push(c),
            },
        }
    }
    if !current.is_empty() {
        words.push(current);
    }
    words
}

/// Finds the unique definition of `fn_name`, optionally scoped to a class.
///
/// Declaration-only matches are rejected with `NotADefinition`; several
/// definitions are reported as `Ambiguous` with their locations.
pub fn find_function_range(
    report: &StructuralReport,
    class_name: Option<&str>,
    fn_name: &str,
) -> Result<SourceRange, StructureError> {
    let candidates = collect_candidates(report, class_name, fn_name);
    if candidates.is_empty() {
        let name = qualified_name(class_name, fn_name);
        return Err(StructureError::NotFound { name });
    }
    let definitions: Vec<&MethodInfo> = candidates
        .iter()
        .copied()
        .filter(|m| m.is_definition)
        .collect();
    match definitions.len() {
        0 => Err(StructureError::NotADefinition {
            name: qualified_name(class_name, fn_name),
        }),
        1 => Ok(definitions[0].range),
        _ => Err(StructureError::Ambiguous {
            name: qualified_name(class_name, fn_name),
            candidates: definitions
                .iter()
                .map(|m| (m.signature_text.clone(), m.range))
                .collect(),
        }),
    }
}

fn qualified_name(class_name: Option<&str>, fn_name: &str) -> String {
    match class_name {
        Some(class) => format!("{class}::{fn_name}"),
        None => fn_name.to_string(),
    }
}

fn collect_candidates<'r>(
    report: &'r StructuralReport,
    class_name: Option<&str>,
    fn_name: &str,
) -> Vec<&'r MethodInfo> {
    let mut candidates = Vec::new();
    for class in &report.classes {
        if class_name.is_some_and(|c| c != class.name) {
            continue;
        }
        candidates.extend(class.methods.iter().filter(|m| m.name == fn_name));
    }
    // Out-of-class definitions for classes not declared in this file are
    // kept as qualified free functions.
    let qualified = class_name.map(|c| format!("{c}::{fn_name}"));
    for function in &report.free_functions {
        let hit = match (&qualified, class_name) {
            (Some(q), _) => function.name == *q,
            (None, None) => function.name == fn_name,
            _ => false,
        };
        if hit {
            candidates.push(function);
        }
    }
    // Unscoped lookup falls back to methods when no free function matched.
    if class_name.is_none() && candidates.is_empty() {
        for class in &report.classes {
            candidates.extend(class.methods.iter().filter(|m| m.name == fn_name));
        }
    }
    candidates
}

/// Focus selector for [`format_ast_context`].
#[derive(Debug, Clone)]
pub struct Focus {
    pub class_name: Option<String>,
    pub fn_name: String,
}

/// Renders the report as deterministic plain text for the prompt's
/// syntax-tree section. With a focus, the focused function's signature and
/// range lead the output under `TARGET FUNCTION:`.
pub fn format_ast_context(
    report: &StructuralReport,
    focus: Option<&Focus>,
) -> Result<String, StructureError> {
    let mut out = String::new();
    if let Some(focus) = focus {
        let candidates = collect_candidates(report, focus.class_name.as_deref(), &focus.fn_name);
        let target = candidates
            .iter()
            .find(|m| m.is_definition)
            .or_else(|| candidates.first())
            .ok_or_else(|| StructureError::FocusNotFound {
                name: qualified_name(focus.class_name.as_deref(), &focus.fn_name),
            })?;
        out.push_str("TARGET FUNCTION:\n");
        out.push_str(&format!("  {} ({})\n\n", target.signature_text, target.range));
    }
    let mut sections = Vec::new();
    for class in &report.classes {
        let mut section = format!("{} {} ({})\n", class.kind, class.name, class.range);
        if !class.fields.is_empty() {
            section.push_str("fields:\n");
            for field in &class.fields {
                section.push_str(&format!(
                    "  {} {} {}\n",
                    field.access, field.type_text, field.name
                ));
            }
        }
        if !class.methods.is_empty() {
            section.push_str("methods:\n");
            for method in &class.methods {
                section.push_str(&format!(
                    "  {} {} ({})\n",
                    method.access, method.signature_text, method.range
                ));
            }
        }
        sections.push(section);
    }
    if !report.free_functions.is_empty() {
        let mut section = String::from("free functions:\n");
        for function in &report.free_functions {
            section.push_str(&format!(
                "  {} ({})\n",
                function.signature_text, function.range
            ));
        }
        sections.push(section);
    }
    out.push_str(&sections.join("\n"));
    Ok(out.trim_end().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn report_for(src: &str) -> StructuralReport {
        extract_structure(src, &PathBuf::from("t.cpp"))
    }

    #[test]
    fn find_range_returns_unique_definition() {
        let src = "\
class Solver {
public:
    void step(double dt);
};

void Solver::step(double dt) {
    t_ += dt;
}
";
        let report = report_for(src);
        let range = find_function_range(&report, Some("Solver"), "step").unwrap();
        assert_eq!(range, SourceRange::new(6, 8));
    }

    #[test]
    fn find_range_rejects_declaration_only() {
        let report = report_for("class A {\npublic:\n    void f();\n};\n");
        assert!(matches!(
            find_function_range(&report, Some("A"), "f"),
            Err(StructureError::NotADefinition { .. })
        ));
    }

    #[test]
    fn find_range_reports_overloads_as_ambiguous() {
        let src = "\
int scale(int v) {
    return 2 * v;
}
double scale(double v) {
    return 2.0 * v;
}
";
        let report = report_for(src);
        match find_function_range(&report, None, "scale") {
            Err(StructureError::Ambiguous { candidates, .. }) => {
                assert_eq!(candidates.len(), 2);
                assert_eq!(candidates[0].1, SourceRange::new(1, 3));
                assert_eq!(candidates[1].1, SourceRange::new(4, 6));
            }
            other => panic!("expected Ambiguous, got {other:?}"),
        }
    }

    #[test]
    fn find_range_unknown_name_not_found() {
        let report = report_for("int f() { return 1; }\n");
        assert!(matches!(
            find_function_range(&report, None, "missing"),
            Err(StructureError::NotFound { .. })
        ));
    }

    #[test]
    fn empty_report_renders_empty_context() {
        let report = report_for("");
        assert_eq!(format_ast_context(&report, None).unwrap(), "");
    }

    #[test]
    fn unknown_focus_is_an_error() {
        let report = report_for("struct S { int x; };\n");
        let focus = Focus {
            class_name: None,
            fn_name: "nope".to_string(),
        };
        assert!(matches!(
            format_ast_context(&report, Some(&focus)),
            Err(StructureError::FocusNotFound { .. })
        ));
    }

    #[test]
    fn one_class_one_field_renders_two_sections() {
        let report = report_for("class A {\n    int x;\n};\n");
        let text = format_ast_context(&report, None).unwrap();
        assert_eq!(text, "class A (lines 1\u{2013}3)\nfields:\n  private int x");
    }

    #[test]
    fn compile_db_empty_array() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("compile_commands.json");
        std::fs::write(&path, "[]").unwrap();
        let (entries, warnings) = load_compile_db(&path).unwrap();
        assert!(entries.is_empty());
        assert!(warnings.is_empty());
    }

    #[test]
    fn compile_db_dedups_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("compile_commands.json");
        std::fs::write(
            &path,
            r#"[
                {"directory": "/b", "file": "a.cpp", "command": "g++ -c a.cpp"},
                {"directory": "/b", "file": "a.cpp", "command": "g++ -O2 -c a.cpp"}
            ]"#,
        )
        .unwrap();
        let (entries, warnings) = load_compile_db(&path).unwrap();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].arguments, vec!["g++", "-c", "a.cpp"]);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("duplicate"));
    }

    #[test]
    fn compile_db_rejects_non_array() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("compile_commands.json");
        std::fs::write(&path, r#"{"file": "a.cpp"}"#).unwrap();
        assert!(matches!(
            load_compile_db(&path),
            Err(StructureError::NotAnArray)
        ));
    }

    #[test]
    fn compile_db_skips_missing_file_and_parses_quotes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("compile_commands.json");
        std::fs::write(
            &path,
            r#"[
                {"directory": "/b", "command": "g++ -c x.cpp"},
                {"directory": "/b", "file": "y.cpp",
                 "command": "g++ -DNAME=\"two words\" -c y.cpp"},
                {"directory": "/b", "file": "z.cpp",
                 "arguments": ["clang++", "-std=c++17", "-c", "z.cpp"]}
            ]"#,
        )
        .unwrap();
        let (entries, warnings) = load_compile_db(&path).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].arguments[1], "-DNAME=two words");
        assert_eq!(entries[1].arguments[1], "-std=c++17");
        assert_eq!(warnings.len(), 1);
    }
}

//! C ABI over the astra pipeline so other languages can bind the core
//! operations: index loading and querying, structure extraction, identifier
//! normalization, prompt composition, marker editing, and similarity
//! scoring.
//!
//! Conventions:
//! - Functions return [`AstraStatus`]; `ASTRA_STATUS_OK` is 0.
//! - Output strings are heap-allocated, NUL-terminated, and must be released
//!   with [`astra_string_free`]. Handles have their own `_free` functions.
//! - On any non-OK status, [`astra_last_error_message`] returns a
//!   thread-local description valid until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, c_double, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use astra_core::corpus::{load_index, ChunkIndex};
use astra_core::edit::{apply_with_markers, resolve, Decision, EditProposal};
use astra_core::embedding::{cosine_similarity, embed_text, EmbedderConfig, EmbeddingVector};
use astra_core::eval::score_pair;
use astra_core::model::extract_code_block;
use astra_core::prompt::{compose_prompt, PromptBundle};
use astra_core::retrieval::retrieve_top_k;
use astra_core::structure::{
    extract_structure, find_function_range, normalize_identifiers, SourceRange,
};

/// Result code of every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AstraStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    NotFound = 5,
    InvalidArgument = 6,
    Internal = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: impl std::fmt::Display) {
    let text = CString::new(message.to_string().replace('\0', " "))
        .unwrap_or_else(|_| CString::new("error message unavailable").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = text);
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn astra_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn astra_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must be a pointer previously returned by an astra function, or null.
#[no_mangle]
pub unsafe extern "C" fn astra_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn required_str<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, AstraStatus> {
    if ptr.is_null() {
        set_error(format!("{name} must not be null"));
        return Err(AstraStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(format!("{name} is not valid UTF-8"));
        AstraStatus::InvalidUtf8
    })
}

unsafe fn optional_str<'a>(ptr: *const c_char, name: &str) -> Result<Option<&'a str>, AstraStatus> {
    if ptr.is_null() {
        return Ok(None);
    }
    required_str(ptr, name).map(Some)
}

fn export_string(text: String, out: *mut *mut c_char) -> AstraStatus {
    if out.is_null() {
        set_error("output pointer must not be null");
        return AstraStatus::NullArgument;
    }
    match CString::new(text) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            AstraStatus::Ok
        }
        Err(_) => {
            set_error("result contains an interior NUL byte");
            AstraStatus::Internal
        }
    }
}

fn guarded(f: impl FnOnce() -> AstraStatus) -> AstraStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            AstraStatus::Internal
        }
    }
}

/// Opaque handle over a loaded retrieval index.
pub struct AstraIndex {
    inner: ChunkIndex,
    embedder: EmbedderConfig,
}

/// Loads a retrieval index from a JSON file produced by `astra index`.
/// Returns null on failure (see [`astra_last_error_message`]).
///
/// # Safety
/// `path` must be a valid NUL-terminated string or null.
#[no_mangle]
pub unsafe extern "C" fn astra_index_load(path: *const c_char) -> *mut AstraIndex {
    let result = catch_unwind(AssertUnwindSafe(|| {
        let path = match required_str(path, "path") {
            Ok(p) => p,
            Err(_) => return std::ptr::null_mut(),
        };
        match load_index(&PathBuf::from(path)) {
            Ok(inner) => {
                let embedder = EmbedderConfig::deterministic(inner.dimension);
                Box::into_raw(Box::new(AstraIndex { inner, embedder }))
            }
            Err(e) => {
                set_error(e);
                std::ptr::null_mut()
            }
        }
    }));
    result.unwrap_or(std::ptr::null_mut())
}

/// Releases an index handle.
///
/// # Safety
/// `index` must come from [`astra_index_load`], or be null.
#[no_mangle]
pub unsafe extern "C" fn astra_index_free(index: *mut AstraIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

/// Number of chunks in the index; 0 for null.
///
/// # Safety
/// `index` must come from [`astra_index_load`], or be null.
#[no_mangle]
pub unsafe extern "C" fn astra_index_chunk_count(index: *const AstraIndex) -> usize {
    index.as_ref().map_or(0, |i| i.inner.chunks.len())
}

/// Embedding dimension of the index; 0 for null.
///
/// # Safety
/// `index` must come from [`astra_index_load`], or be null.
#[no_mangle]
pub unsafe extern "C" fn astra_index_dimension(index: *const AstraIndex) -> usize {
    index.as_ref().map_or(0, |i| i.inner.dimension)
}

/// Ranks the index against `prompt` with the deterministic embedder and
/// writes a JSON array `[{"chunk_id", "score", "rank"}, ...]` to `out_json`.
///
/// # Safety
/// `index` must come from [`astra_index_load`]; `prompt` must be a valid
/// NUL-terminated string; `out_json` must be a valid output slot.
#[no_mangle]
pub unsafe extern "C" fn astra_index_query(
    index: *const AstraIndex,
    prompt: *const c_char,
    top_k: usize,
    out_json: *mut *mut c_char,
) -> AstraStatus {
    guarded(|| {
        let Some(index) = index.as_ref() else {
            set_error("index must not be null");
            return AstraStatus::NullArgument;
        };
        let prompt = match required_str(prompt, "prompt") {
            Ok(p) => p,
            Err(status) => return status,
        };
        let query = match embed_text(prompt, &index.embedder) {
            Ok(q) => q,
            Err(e) => {
                set_error(e);
                return AstraStatus::InvalidArgument;
            }
        };
        match retrieve_top_k(&index.inner, &query, top_k.max(1)) {
            Ok(results) => export_string(
                serde_json::to_string(&results).expect("results serialize"),
                out_json,
            ),
            Err(e) => {
                set_error(e);
                AstraStatus::InvalidArgument
            }
        }
    })
}

/// Extracts the structural report of a C++ source and writes it as JSON.
///
/// # Safety
/// `source` and `path` must be valid NUL-terminated strings (`path` may be
/// null); `out_json` must be a valid output slot.
#[no_mangle]
pub unsafe extern "C" fn astra_extract_structure_json(
    source: *const c_char,
    path: *const c_char,
    out_json: *mut *mut c_char,
) -> AstraStatus {
    guarded(|| {
        let source = match required_str(source, "source") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let path = match optional_str(path, "path") {
            Ok(p) => p.unwrap_or("<memory>"),
            Err(status) => return status,
        };
        let report = extract_structure(source, Path::new(path));
        export_string(
            serde_json::to_string(&report).expect("report serializes"),
            out_json,
        )
    })
}

/// Finds the definition range of a function (optionally scoped to a class)
/// in a C++ source; writes the 1-based line range to the output pointers.
///
/// # Safety
/// String arguments must be valid NUL-terminated strings (`class_name` may
/// be null); `out_start_line` and `out_end_line` must be valid output slots.
#[no_mangle]
pub unsafe extern "C" fn astra_function_range(
    source: *const c_char,
    class_name: *const c_char,
    function: *const c_char,
    out_start_line: *mut usize,
    out_end_line: *mut usize,
) -> AstraStatus {
    guarded(|| {
        let source = match required_str(source, "source") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let class_name = match optional_str(class_name, "class_name") {
            Ok(c) => c,
            Err(status) => return status,
        };
        let function = match required_str(function, "function") {
            Ok(f) => f,
            Err(status) => return status,
        };
        if out_start_line.is_null() || out_end_line.is_null() {
            set_error("output pointers must not be null");
            return AstraStatus::NullArgument;
        }
        let report = extract_structure(source, Path::new("<memory>"));
        match find_function_range(&report, class_name, function) {
            Ok(range) => {
                *out_start_line = range.start_line;
                *out_end_line = range.end_line;
                AstraStatus::Ok
            }
            Err(e) => {
                set_error(e);
                AstraStatus::NotFound
            }
        }
    })
}

fn parse_preserve(preserve_csv: Option<&str>) -> Vec<String> {
    preserve_csv
        .map(|csv| {
            csv.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect()
        })
        .unwrap_or_default()
}

/// Renames function-local variables to canonical placeholders.
/// `preserve_csv` is an optional comma-separated identifier list.
///
/// # Safety
/// `function_text` must be a valid NUL-terminated string; `preserve_csv`
/// may be null; `out_text` must be a valid output slot.
#[no_mangle]
pub unsafe extern "C" fn astra_normalize_identifiers(
    function_text: *const c_char,
    preserve_csv: *const c_char,
    out_text: *mut *mut c_char,
) -> AstraStatus {
    guarded(|| {
        let text = match required_str(function_text, "function_text") {
            Ok(t) => t,
            Err(status) => return status,
        };
        let preserve = match optional_str(preserve_csv, "preserve_csv") {
            Ok(p) => parse_preserve(p),
            Err(status) => return status,
        };
        match normalize_identifiers(text, &preserve) {
            Ok(normalized) => export_string(normalized, out_text),
            Err(e) => {
                set_error(e);
                AstraStatus::Parse
            }
        }
    })
}

/// Cosine similarity of two equal-length vectors.
///
/// # Safety
/// `a` and `b` must point to `len_a` / `len_b` readable doubles; `out_score`
/// must be a valid output slot.
#[no_mangle]
pub unsafe extern "C" fn astra_cosine_similarity(
    a: *const c_double,
    len_a: usize,
    b: *const c_double,
    len_b: usize,
    out_score: *mut c_double,
) -> AstraStatus {
    guarded(|| {
        if a.is_null() || b.is_null() || out_score.is_null() {
            set_error("vector and output pointers must not be null");
            return AstraStatus::NullArgument;
        }
        let slice_a = std::slice::from_raw_parts(a, len_a);
        let slice_b = std::slice::from_raw_parts(b, len_b);
        let va = match EmbeddingVector::new(slice_a.to_vec()) {
            Ok(v) => v,
            Err(e) => {
                set_error(e);
                return AstraStatus::InvalidArgument;
            }
        };
        let vb = match EmbeddingVector::new(slice_b.to_vec()) {
            Ok(v) => v,
            Err(e) => {
                set_error(e);
                return AstraStatus::InvalidArgument;
            }
        };
        match cosine_similarity(&va, &vb) {
            Ok(score) => {
                *out_score = score;
                AstraStatus::Ok
            }
            Err(e) => {
                set_error(e);
                AstraStatus::InvalidArgument
            }
        }
    })
}

/// Embeds `text` with the deterministic provider into a caller-allocated
/// buffer of exactly `dimension` doubles.
///
/// # Safety
/// `text` must be a valid NUL-terminated string; `out_values` must point to
/// `dimension` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn astra_embed_text(
    text: *const c_char,
    out_values: *mut c_double,
    dimension: usize,
) -> AstraStatus {
    guarded(|| {
        let text = match required_str(text, "text") {
            Ok(t) => t,
            Err(status) => return status,
        };
        if out_values.is_null() {
            set_error("out_values must not be null");
            return AstraStatus::NullArgument;
        }
        if dimension == 0 {
            set_error("dimension must be positive");
            return AstraStatus::InvalidArgument;
        }
        match embed_text(text, &EmbedderConfig::deterministic(dimension)) {
            Ok(vector) => {
                let out = std::slice::from_raw_parts_mut(out_values, dimension);
                out.copy_from_slice(vector.values());
                AstraStatus::Ok
            }
            Err(e) => {
                set_error(e);
                AstraStatus::InvalidArgument
            }
        }
    })
}

/// Replaces lines `[start_line, end_line]` of `file_text` with `replacement`
/// under conflict-style markers labelled `astra:<label>`.
///
/// # Safety
/// String arguments must be valid NUL-terminated strings; `out_text` must
/// be a valid output slot.
#[no_mangle]
pub unsafe extern "C" fn astra_apply_with_markers(
    file_text: *const c_char,
    start_line: usize,
    end_line: usize,
    replacement: *const c_char,
    label: *const c_char,
    out_text: *mut *mut c_char,
) -> AstraStatus {
    guarded(|| {
        let file_text = match required_str(file_text, "file_text") {
            Ok(t) => t,
            Err(status) => return status,
        };
        let replacement = match required_str(replacement, "replacement") {
            Ok(t) => t,
            Err(status) => return status,
        };
        let label = match optional_str(label, "label") {
            Ok(l) => l.unwrap_or("ffi"),
            Err(status) => return status,
        };
        if start_line < 1 || end_line < start_line {
            set_error("invalid line range");
            return AstraStatus::InvalidArgument;
        }
        // The original side is taken from the text itself, so the proposal
        // is never stale.
        let mut lines: Vec<&str> = file_text.split('\n').collect();
        if file_text.ends_with('\n') {
            lines.pop();
        }
        if end_line > lines.len() {
            set_error(format!(
                "range {start_line}-{end_line} out of bounds for {} lines",
                lines.len()
            ));
            return AstraStatus::InvalidArgument;
        }
        let original: String = lines[start_line - 1..end_line]
            .iter()
            .map(|l| format!("{l}\n"))
            .collect();
        let proposal = EditProposal {
            file: PathBuf::from("<memory>"),
            range: SourceRange::new(start_line, end_line),
            original_text: original,
            replacement_text: replacement.to_string(),
            marker_label: label.to_string(),
        };
        match apply_with_markers(file_text, &proposal) {
            Ok(marked) => export_string(marked, out_text),
            Err(e) => {
                set_error(e);
                AstraStatus::InvalidArgument
            }
        }
    })
}

/// Resolves the single marker block in `file_text`; `accept != 0` keeps the
/// replacement side, otherwise the original side is restored.
///
/// # Safety
/// `file_text` must be a valid NUL-terminated string; `out_text` must be a
/// valid output slot.
#[no_mangle]
pub unsafe extern "C" fn astra_resolve_markers(
    file_text: *const c_char,
    accept: i32,
    out_text: *mut *mut c_char,
) -> AstraStatus {
    guarded(|| {
        let file_text = match required_str(file_text, "file_text") {
            Ok(t) => t,
            Err(status) => return status,
        };
        let decision = if accept != 0 {
            Decision::Accept
        } else {
            Decision::Reject
        };
        match resolve(file_text, decision) {
            Ok(resolved) => export_string(resolved, out_text),
            Err(e) => {
                set_error(e);
                AstraStatus::InvalidArgument
            }
        }
    })
}

/// Isolates code from a model response (first fenced block, else the
/// longest brace-balanced run, else the whole response).
///
/// # Safety
/// `response` must be a valid NUL-terminated string; `out_code` must be a
/// valid output slot.
#[no_mangle]
pub unsafe extern "C" fn astra_extract_code_block(
    response: *const c_char,
    out_code: *mut *mut c_char,
) -> AstraStatus {
    guarded(|| {
        let response = match required_str(response, "response") {
            Ok(r) => r,
            Err(status) => return status,
        };
        match extract_code_block(response) {
            Ok(code) => export_string(code, out_code),
            Err(e) => {
                set_error(e);
                AstraStatus::InvalidArgument
            }
        }
    })
}

/// Renders the four-section prompt from its parts.
///
/// # Safety
/// Section arguments may be null (treated as empty) except `user_prompt`;
/// all non-null arguments must be valid NUL-terminated strings; `out_text`
/// must be a valid output slot.
#[no_mangle]
pub unsafe extern "C" fn astra_compose_prompt(
    general_instructions: *const c_char,
    rag_context: *const c_char,
    ast_context: *const c_char,
    user_prompt: *const c_char,
    out_text: *mut *mut c_char,
) -> AstraStatus {
    guarded(|| {
        let general = match optional_str(general_instructions, "general_instructions") {
            Ok(s) => s.unwrap_or(""),
            Err(status) => return status,
        };
        let rag = match optional_str(rag_context, "rag_context") {
            Ok(s) => s.unwrap_or(""),
            Err(status) => return status,
        };
        let ast = match optional_str(ast_context, "ast_context") {
            Ok(s) => s.unwrap_or(""),
            Err(status) => return status,
        };
        let user = match required_str(user_prompt, "user_prompt") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let bundle = PromptBundle {
            general_instructions: general.to_string(),
            rag_context: rag.to_string(),
            ast_context: ast.to_string(),
            user_prompt: user.to_string(),
        };
        match compose_prompt(&bundle) {
            Ok(text) => export_string(text, out_text),
            Err(e) => {
                set_error(e);
                AstraStatus::InvalidArgument
            }
        }
    })
}

/// Identifier-normalized cosine similarity between two function texts,
/// using the deterministic embedder at `dimension`.
///
/// # Safety
/// `generated` and `reference` must be valid NUL-terminated strings;
/// `preserve_csv` may be null; `out_score` must be a valid output slot.
#[no_mangle]
pub unsafe extern "C" fn astra_score_pair(
    generated: *const c_char,
    reference: *const c_char,
    preserve_csv: *const c_char,
    dimension: usize,
    out_score: *mut c_double,
) -> AstraStatus {
    guarded(|| {
        let generated = match required_str(generated, "generated") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let reference = match required_str(reference, "reference") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let preserve = match optional_str(preserve_csv, "preserve_csv") {
            Ok(p) => parse_preserve(p),
            Err(status) => return status,
        };
        if out_score.is_null() {
            set_error("out_score must not be null");
            return AstraStatus::NullArgument;
        }
        if dimension == 0 {
            set_error("dimension must be positive");
            return AstraStatus::InvalidArgument;
        }
        match score_pair(
            generated,
            reference,
            &preserve,
            &EmbedderConfig::deterministic(dimension),
        ) {
            Ok(score) => {
                *out_score = score;
                AstraStatus::Ok
            }
            Err(e) => {
                set_error(e);
                AstraStatus::Parse
            }
        }
    })
}

//! Annotated-snippet parsing and the persisted retrieval index.
//!
//! Corpus files carry one or more `AI_METADATA` comment blocks, each
//! followed by the code it describes. A block looks like:
//!
//! ```text
//! // AI_METADATA
//! // task_type: MULTIFAB_FILL_PARALLELFOR
//! // user_intent:
//! // 1) Fill a multifab using ParallelFor
//! // keywords: MFIter, ParallelFor
//! // inputs: MultiFab mf
//! // outputs: mf data initialized
//! ```
//!
//! Only the joined `user_intent` entries are embedded; everything else is
//! metadata carried alongside the chunk for prompt rendering.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{embed_text, embedder_id, EmbedderConfig, EmbeddingError, EmbeddingVector};

pub const INDEX_FORMAT_VERSION: u32 = 1;
const METADATA_MARKER: &str = "AI_METADATA";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("no {METADATA_MARKER} marker at the start of the snippet")]
    MissingMarker,
    #[error("metadata block has no user_intent entries")]
    EmptyIntent,
    #[error("line {line}: malformed metadata pair: {text:?}")]
    MalformedPair { line: usize, text: String },
    #[error("line {line}: task_type {value:?} must match [A-Z0-9_]+")]
    InvalidTaskType { line: usize, value: String },
    #[error("snippet {id} has an empty code body")]
    EmptyBody { id: String },
    #[error("duplicate chunk id {0}")]
    DuplicateId(String),
    #[error("embedder produced dimension {actual} for {id}, index dimension is {expected}")]
    DimensionMismatch {
        id: String,
        expected: usize,
        actual: usize,
    },
    #[error("index format version {found}, this build reads version {INDEX_FORMAT_VERSION}")]
    FormatVersionMismatch { found: u32 },
    #[error("chunk {id}: embedding has {actual} values, index dimension is {expected}")]
    CorruptEmbedding {
        id: String,
        expected: usize,
        actual: usize,
    },
    #[error("failed to read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("failed to write {path}: {source}")]
    Unwritable {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path} is not a valid index file: {source}")]
    BadIndexFile {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

/// The structured comment header of a snippet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkMetadata {
    #[serde(default)]
    pub example: String,
    pub task_type: String,
    pub user_intent: Vec<String>,
    #[serde(default)]
    pub keywords: String,
    #[serde(default)]
    pub inputs: String,
    #[serde(default)]
    pub outputs: String,
    /// Keys this build does not recognize, preserved as written.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, String>,
}

impl ChunkMetadata {
    /// The text that gets embedded: intent entries joined by single newlines.
    pub fn joined_intent(&self) -> String {
        self.user_intent.join("\n")
    }
}

/// One retrievable snippet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeChunk {
    pub id: String,
    pub text: String,
    pub metadata: ChunkMetadata,
    pub embedding: EmbeddingVector,
}

/// The persisted retrieval database. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkIndex {
    pub version: u32,
    pub dimension: usize,
    pub embedder_id: String,
    pub chunks: Vec<CodeChunk>,
}

impl ChunkIndex {
    pub fn chunk_by_id(&self, id: &str) -> Option<&CodeChunk> {
        self.chunks.iter().find(|c| c.id == id)
    }
}

/// A parsed snippet plus its stable id, ready for indexing.
#[derive(Debug, Clone)]
pub struct AnnotatedSnippet {
    /// `<relative path>#<0-based ordinal within file>`
    pub id: String,
    pub metadata: ChunkMetadata,
    pub body: String,
    /// Body with the metadata comment header still attached.
    pub body_with_header: String,
}

/// Outcome of parsing one snippet: metadata, code body, soft warnings.
#[derive(Debug, Clone)]
pub struct ParsedSnippet {
    pub metadata: ChunkMetadata,
    pub body: String,
    pub warnings: Vec<String>,
}

fn is_valid_task_type(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
}

/// Strips `// ` comment lead-in, returning None for non-comment lines.
fn comment_payload(line: &str) -> Option<&str> {
    let t = line.trim_start();
    t.strip_prefix("//").map(|rest| rest.strip_prefix(' ').unwrap_or(rest))
}

/// Numbered intent entry: `N) text`.
fn intent_entry(payload: &str) -> Option<&str> {
    let t = payload.trim_start();
    let digits: usize = t.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits == 0 {
        return None;
    }
    let rest = &t[digits..];
    rest.strip_prefix(')').map(str::trim)
}

/// `key: value` where key is a plain identifier.
fn key_value(payload: &str) -> Option<(&str, &str)> {
    let t = payload.trim_start();
    let colon = t.find(':')?;
    let key = &t[..colon];
    if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return None;
    }
    Some((key, t[colon + 1..].trim()))
}

/// Parses one annotated snippet: a leading `AI_METADATA` comment block and
/// the code body after it.
///
/// Recognized keys fill [`ChunkMetadata`]; unknown keys land in `extra`;
/// missing keys default to empty with a warning. Intent entries are numbered
/// `N)` lines; unnumbered comment lines continue the previous entry.
pub fn parse_annotated_snippet(text: &str) -> Result<ParsedSnippet, CorpusError> {
    let mut lines = text.lines().enumerate().peekable();

    // The block must open with a comment line naming the marker.
    match lines.peek() {
        Some((_, first)) => {
            let payload = comment_payload(first);
            match payload {
                Some(p) if p.contains(METADATA_MARKER) => {
                    lines.next();
                }
                _ => return Err(CorpusError::MissingMarker),
            }
        }
        None => return Err(CorpusError::MissingMarker),
    }

    let mut example = String::new();
    let mut task_type: Option<(usize, String)> = None;
    let mut keywords = String::new();
    let mut inputs: Option<String> = None;
    let mut outputs: Option<String> = None;
    let mut intents: Vec<String> = Vec::new();
    let mut extra = BTreeMap::new();
    let mut in_intent = false;
    let mut warnings = Vec::new();
    let mut body_start = text.len();

    for (idx, line) in lines {
        let payload = match comment_payload(line) {
            Some(p) => p,
            None => {
                // First non-comment line ends the block; body starts here.
                body_start = line_offset(text, idx);
                break;
            }
        };
        if let Some(entry) = intent_entry(payload) {
            if in_intent {
                intents.push(entry.to_string());
                continue;
            }
            return Err(CorpusError::MalformedPair {
                line: idx + 1,
                text: line.trim().to_string(),
            });
        }
        if let Some((key, value)) = key_value(payload) {
            in_intent = false;
            match key {
                "example" => example = value.to_string(),
                "task_type" => task_type = Some((idx + 1, value.to_string())),
                "keywords" => keywords = value.to_string(),
                "inputs" => inputs = Some(value.to_string()),
                "outputs" => outputs = Some(value.to_string()),
                "user_intent" => {
                    in_intent = true;
                    if !value.is_empty() {
                        intents.push(value.to_string());
                    }
                }
                other => {
                    extra.insert(other.to_string(), value.to_string());
                }
            }
            continue;
        }
        // Wrapped continuation of the previous intent entry.
        if in_intent {
            if let Some(last) = intents.last_mut() {
                let cont = payload.trim();
                if !cont.is_empty() {
                    last.push(' ');
                    last.push_str(cont);
                }
                continue;
            }
        }
        if payload.trim().is_empty() {
            continue;
        }
        return Err(CorpusError::MalformedPair {
            line: idx + 1,
            text: line.trim().to_string(),
        });
    }

    if intents.is_empty() || intents.iter().any(|e| e.trim().is_empty()) {
        return Err(CorpusError::EmptyIntent);
    }
    let (tt_line, task_type) = task_type.unwrap_or((1, String::new()));
    if !is_valid_task_type(&task_type) {
        return Err(CorpusError::InvalidTaskType {
            line: tt_line,
            value: task_type,
        });
    }
    if inputs.is_none() {
        warnings.push("metadata has no inputs: key".to_string());
    }
    if outputs.is_none() {
        warnings.push("metadata has no outputs: key".to_string());
    }
    if example.is_empty() {
        warnings.push("metadata has no example: key".to_string());
    }

    let body = text[body_start..].trim_start_matches(['\n', '\r']).to_string();
    Ok(ParsedSnippet {
        metadata: ChunkMetadata {
            example,
            task_type,
            user_intent: intents,
            keywords,
            inputs: inputs.unwrap_or_default(),
            outputs: outputs.unwrap_or_default(),
            extra,
        },
        body,
        warnings,
    })
}

/// Byte offset where line `idx` (0-based) starts.
fn line_offset(text: &str, idx: usize) -> usize {
    let mut offset = 0;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        if i == idx {
            return offset;
        }
        offset += line.len();
    }
    text.len()
}

/// Splits a corpus file into its annotated snippets, assigning ids
/// `<rel_path>#<ordinal>`. A snippet's text runs from its marker line to the
/// next marker (or end of file).
pub fn split_corpus_file(
    text: &str,
    rel_path: &str,
) -> Result<Vec<AnnotatedSnippet>, CorpusError> {
    let mut starts = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if comment_payload(line).is_some_and(|p| p.contains(METADATA_MARKER)) {
            starts.push(offset);
        }
        offset += line.len();
    }
    if starts.is_empty() {
        return Err(CorpusError::MissingMarker);
    }
    let mut snippets = Vec::new();
    for (ordinal, window) in starts.windows(2).chain(std::iter::once(&starts[starts.len() - 1..])).enumerate() {
        let start = window[0];
        let end = if window.len() == 2 { window[1] } else { text.len() };
        let raw = &text[start..end];
        let parsed = parse_annotated_snippet(raw)?;
        snippets.push(AnnotatedSnippet {
            id: format!("{rel_path}#{ordinal}"),
            metadata: parsed.metadata,
            body: parsed.body,
            body_with_header: raw.to_string(),
        });
    }
    Ok(snippets)
}

/// Options for [`build_index`].
#[derive(Debug, Clone, Copy, Default)]
pub struct IndexOptions {
    /// Keep the metadata comment header inside chunk `text`.
    pub keep_header: bool,
}

/// Embeds each snippet's joined user_intent and assembles the index.
/// Chunk order equals input order.
pub fn build_index(
    snippets: &[AnnotatedSnippet],
    embedder: &EmbedderConfig,
    options: IndexOptions,
) -> Result<ChunkIndex, CorpusError> {
    let mut chunks: Vec<CodeChunk> = Vec::with_capacity(snippets.len());
    for snippet in snippets {
        if snippet.body.trim().is_empty() {
            return Err(CorpusError::EmptyBody {
                id: snippet.id.clone(),
            });
        }
        if chunks.iter().any(|c| c.id == snippet.id) {
            return Err(CorpusError::DuplicateId(snippet.id.clone()));
        }
        let embedding = embed_text(&snippet.metadata.joined_intent(), embedder)?;
        if embedding.dimension() != embedder.dimension {
            return Err(CorpusError::DimensionMismatch {
                id: snippet.id.clone(),
                expected: embedder.dimension,
                actual: embedding.dimension(),
            });
        }
        let text = if options.keep_header {
            snippet.body_with_header.clone()
        } else {
            snippet.body.clone()
        };
        chunks.push(CodeChunk {
            id: snippet.id.clone(),
            text,
            metadata: snippet.metadata.clone(),
            embedding,
        });
    }
    Ok(ChunkIndex {
        version: INDEX_FORMAT_VERSION,
        dimension: embedder.dimension,
        embedder_id: embedder_id(embedder),
        chunks,
    })
}

/// Walks `dir` for annotated files and builds the index over every snippet
/// found, in sorted path order. Files without a marker are skipped with a
/// warning rather than failing the whole build.
pub fn index_corpus_dir(
    dir: &Path,
    embedder: &EmbedderConfig,
    options: IndexOptions,
) -> Result<(ChunkIndex, Vec<String>), CorpusError> {
    let mut files = Vec::new();
    collect_files(dir, &mut files).map_err(|source| CorpusError::Unreadable {
        path: dir.to_path_buf(),
        source,
    })?;
    files.sort();
    let mut snippets = Vec::new();
    let mut warnings = Vec::new();
    for file in &files {
        let text = match fs::read_to_string(file) {
            Ok(t) => t,
            Err(e) => {
                warnings.push(format!("skipping {}: {e}", file.display()));
                continue;
            }
        };
        let rel = file
            .strip_prefix(dir)
            .unwrap_or(file)
            .to_string_lossy()
            .replace('\\', "/");
        match split_corpus_file(&text, &rel) {
            Ok(found) => snippets.extend(found),
            Err(CorpusError::MissingMarker) => {
                warnings.push(format!("skipping {rel}: no {METADATA_MARKER} block"));
            }
            Err(e) => return Err(e),
        }
    }
    let index = build_index(&snippets, embedder, options)?;
    Ok((index, warnings))
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        if path.is_dir() {
            collect_files(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

/// Writes the index as pretty JSON. Floats round-trip at full precision.
pub fn save_index(index: &ChunkIndex, path: &Path) -> Result<(), CorpusError> {
    let json = serde_json::to_string_pretty(index).expect("index serializes");
    fs::write(path, json).map_err(|source| CorpusError::Unwritable {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads an index back, validating version, embedding lengths, and id
/// uniqueness.
pub fn load_index(path: &Path) -> Result<ChunkIndex, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    let index: ChunkIndex =
        serde_json::from_str(&text).map_err(|source| CorpusError::BadIndexFile {
            path: path.to_path_buf(),
            source,
        })?;
    if index.version != INDEX_FORMAT_VERSION {
        return Err(CorpusError::FormatVersionMismatch {
            found: index.version,
        });
    }
    let mut seen = std::collections::HashSet::new();
    for chunk in &index.chunks {
        if chunk.embedding.dimension() != index.dimension {
            return Err(CorpusError::CorruptEmbedding {
                id: chunk.id.clone(),
                expected: index.dimension,
                actual: chunk.embedding.dimension(),
            });
        }
        if !seen.insert(&chunk.id) {
            return Err(CorpusError::DuplicateId(chunk.id.clone()));
        }
    }
    Ok(index)
}

//! Streaming model clients: a local runtime speaking newline-delimited
//! JSON, an OpenAI-style remote API speaking server-sent events, and a
//! replay client that serves recorded responses keyed by prompt digest so
//! the whole pipeline runs offline and deterministically.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("endpoint config for {kind:?} requires {missing}")]
    IncompleteConfig { kind: EndpointKind, missing: &'static str },
    #[error("endpoint unreachable at {url}: {detail}")]
    EndpointUnreachable { url: String, detail: String },
    #[error("API key env var {0} is not set")]
    AuthMissing(String),
    #[error("no replay entry for prompt digest {digest} in {dir}")]
    ReplayMiss { digest: String, dir: PathBuf },
    #[error("malformed stream from {url}: {detail}")]
    ProtocolError { url: String, detail: String },
    #[error("model response is empty")]
    EmptyResponse,
    #[error("replay store io error at {path}: {source}")]
    ReplayIo {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointKind {
    LocalRuntime,
    RemoteApi,
    Replay,
}

/// Where and how to run inference.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelEndpointConfig {
    pub kind: EndpointKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_url: Option<String>,
    pub model_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replay_dir: Option<PathBuf>,
}

impl ModelEndpointConfig {
    pub fn replay(dir: impl Into<PathBuf>, model_name: impl Into<String>) -> Self {
        Self {
            kind: EndpointKind::Replay,
            base_url: None,
            model_name: model_name.into(),
            api_key_env: None,
            replay_dir: Some(dir.into()),
        }
    }

    pub fn local(base_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            kind: EndpointKind::LocalRuntime,
            base_url: Some(base_url.into()),
            model_name: model_name.into(),
            api_key_env: None,
            replay_dir: None,
        }
    }
}

/// A completed generation: the full text and the fragments it streamed in.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationResult {
    pub full_text: String,
    pub chunks: Vec<String>,
    pub model_name: String,
}

/// First 16 hex characters of the SHA-256 of the prompt; the replay store
/// key.
pub fn prompt_digest(prompt: &str) -> String {
    let hash = Sha256::digest(prompt.as_bytes());
    hash.iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect::<String>()
}

/// Sends `prompt` to the configured endpoint, invoking `on_chunk` for every
/// streamed fragment in arrival order. The concatenation of fragments
/// always equals the returned `full_text`.
pub fn generate(
    prompt: &str,
    config: &ModelEndpointConfig,
    on_chunk: &mut dyn FnMut(&str),
) -> Result<GenerationResult, ModelError> {
    if prompt.is_empty() {
        return Err(ModelError::EmptyPrompt);
    }
    match config.kind {
        EndpointKind::Replay => generate_replay(prompt, config, on_chunk),
        EndpointKind::LocalRuntime => generate_local(prompt, config, on_chunk),
        EndpointKind::RemoteApi => generate_remote(prompt, config, on_chunk),
    }
}

fn base_url(config: &ModelEndpointConfig) -> Result<String, ModelError> {
    let url = std::env::var("ASTRA_MODEL_ENDPOINT")
        .ok()
        .or_else(|| config.base_url.clone())
        .ok_or(ModelError::IncompleteConfig {
            kind: config.kind,
            missing: "base_url",
        })?;
    Ok(url.trim_end_matches('/').to_string())
}

// ---------------------------------------------------------------------------
// Replay store
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ReplayMeta {
    model_name: String,
    /// Byte lengths of the streamed fragments, in order.
    fragments: Vec<usize>,
}

/// Records a response so later [`generate`] calls with the same prompt can
/// replay it. `fragments` gives the streamed chunk boundaries; when empty,
/// the whole response is a single fragment.
pub fn record_replay(
    replay_dir: &Path,
    prompt: &str,
    response: &str,
    model_name: &str,
    fragments: &[usize],
) -> Result<String, ModelError> {
    fs::create_dir_all(replay_dir).map_err(|source| ModelError::ReplayIo {
        path: replay_dir.to_path_buf(),
        source,
    })?;
    let digest = prompt_digest(prompt);
    let text_path = replay_dir.join(format!("{digest}.txt"));
    fs::write(&text_path, response).map_err(|source| ModelError::ReplayIo {
        path: text_path.clone(),
        source,
    })?;
    let meta = ReplayMeta {
        model_name: model_name.to_string(),
        fragments: if fragments.is_empty() {
            vec![response.len()]
        } else {
            fragments.to_vec()
        },
    };
    let meta_path = replay_dir.join(format!("{digest}.meta.json"));
    fs::write(&meta_path, serde_json::to_string_pretty(&meta).unwrap()).map_err(|source| {
        ModelError::ReplayIo {
            path: meta_path,
            source,
        }
    })?;
    Ok(digest)
}

fn generate_replay(
    prompt: &str,
    config: &ModelEndpointConfig,
    on_chunk: &mut dyn FnMut(&str),
) -> Result<GenerationResult, ModelError> {
    let dir = config
        .replay_dir
        .as_ref()
        .ok_or(ModelError::IncompleteConfig {
            kind: EndpointKind::Replay,
            missing: "replay_dir",
        })?;
    let digest = prompt_digest(prompt);
    let text_path = dir.join(format!("{digest}.txt"));
    if !text_path.exists() {
        return Err(ModelError::ReplayMiss {
            digest,
            dir: dir.clone(),
        });
    }
    let full_text = fs::read_to_string(&text_path).map_err(|source| ModelError::ReplayIo {
        path: text_path,
        source,
    })?;
    let meta_path = dir.join(format!("{digest}.meta.json"));
    let meta: ReplayMeta = match fs::read_to_string(&meta_path) {
        Ok(text) => serde_json::from_str(&text).unwrap_or(ReplayMeta {
            model_name: config.model_name.clone(),
            fragments: vec![full_text.len()],
        }),
        Err(_) => ReplayMeta {
            model_name: config.model_name.clone(),
            fragments: vec![full_text.len()],
        },
    };
    let mut chunks = Vec::new();
    let mut offset = 0;
    for len in &meta.fragments {
        let end = (offset + len).min(full_text.len());
        if offset >= end {
            break;
        }
        // Fragment boundaries were recorded on char boundaries; fall back
        // to one fragment if they no longer line up.
        if !full_text.is_char_boundary(end) {
            chunks.clear();
            break;
        }
        chunks.push(full_text[offset..end].to_string());
        offset = end;
    }
    if offset < full_text.len() || chunks.is_empty() {
        if chunks.is_empty() {
            chunks.push(full_text.clone());
        } else {
            chunks.push(full_text[offset..].to_string());
        }
    }
    for chunk in &chunks {
        on_chunk(chunk);
    }
    Ok(GenerationResult {
        full_text,
        chunks,
        model_name: meta.model_name,
    })
}

// ---------------------------------------------------------------------------
// Local runtime: POST {base}/api/generate, NDJSON stream
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct LocalGenerateRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    stream: bool,
}

#[derive(Deserialize)]
struct LocalGenerateChunk {
    #[serde(default)]
    response: String,
    #[serde(default)]
    done: bool,
}

fn generate_local(
    prompt: &str,
    config: &ModelEndpointConfig,
    on_chunk: &mut dyn FnMut(&str),
) -> Result<GenerationResult, ModelError> {
    let url = format!("{}/api/generate", base_url(config)?);
    let response = ureq::post(&url)
        .config()
        .timeout_global(Some(std::time::Duration::from_secs(300)))
        .build()
        .send_json(LocalGenerateRequest {
            model: &config.model_name,
            prompt,
            stream: true,
        })
        .map_err(|e| ModelError::EndpointUnreachable {
            url: url.clone(),
            detail: e.to_string(),
        })?;
    let reader = BufReader::new(response.into_body().into_reader());
    let mut chunks = Vec::new();
    let mut full_text = String::new();
    for line in reader.lines() {
        let line = line.map_err(|e| ModelError::ProtocolError {
            url: url.clone(),
            detail: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: LocalGenerateChunk =
            serde_json::from_str(&line).map_err(|e| ModelError::ProtocolError {
                url: url.clone(),
                detail: format!("bad NDJSON line: {e}"),
            })?;
        if !parsed.response.is_empty() {
            on_chunk(&parsed.response);
            full_text.push_str(&parsed.response);
            chunks.push(parsed.response);
        }
        if parsed.done {
            break;
        }
    }
    Ok(GenerationResult {
        full_text,
        chunks,
        model_name: config.model_name.clone(),
    })
}

// ---------------------------------------------------------------------------
// Remote API: POST {base}/v1/chat/completions, SSE stream
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    stream: bool,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatChunk {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    #[serde(default)]
    delta: ChatDelta,
}

#[derive(Deserialize, Default)]
struct ChatDelta {
    #[serde(default)]
    content: Option<String>,
}

fn generate_remote(
    prompt: &str,
    config: &ModelEndpointConfig,
    on_chunk: &mut dyn FnMut(&str),
) -> Result<GenerationResult, ModelError> {
    // Auth is checked before any network activity.
    let key_env = config
        .api_key_env
        .clone()
        .unwrap_or_else(|| "ASTRA_API_KEY".to_string());
    let api_key =
        std::env::var(&key_env).map_err(|_| ModelError::AuthMissing(key_env.clone()))?;
    let url = format!("{}/v1/chat/completions", base_url(config)?);
    let response = ureq::post(&url)
        .config()
        .timeout_global(Some(std::time::Duration::from_secs(300)))
        .build()
        .header("authorization", &format!("Bearer {api_key}"))
        .send_json(ChatRequest {
            model: &config.model_name,
            messages: vec![ChatMessage {
                role: "user",
                content: prompt,
            }],
            stream: true,
        })
        .map_err(|e| ModelError::EndpointUnreachable {
            url: url.clone(),
            detail: e.to_string(),
        })?;
    let reader = BufReader::new(response.into_body().into_reader());
    let mut chunks = Vec::new();
    let mut full_text = String::new();
    for line in reader.lines() {
        let line = line.map_err(|e| ModelError::ProtocolError {
            url: url.clone(),
            detail: e.to_string(),
        })?;
        let Some(data) = line.strip_prefix("data:").map(str::trim) else {
            continue;
        };
        if data.is_empty() {
            continue;
        }
        if data == "[DONE]" {
            break;
        }
        let parsed: ChatChunk =
            serde_json::from_str(data).map_err(|e| ModelError::ProtocolError {
                url: url.clone(),
                detail: format!("bad SSE data: {e}"),
            })?;
        if let Some(content) = parsed
            .choices
            .first()
            .and_then(|c| c.delta.content.as_deref())
        {
            if !content.is_empty() {
                on_chunk(content);
                full_text.push_str(content);
                chunks.push(content.to_string());
            }
        }
    }
    Ok(GenerationResult {
        full_text,
        chunks,
        model_name: config.model_name.clone(),
    })
}

/// Isolates code from a model response.
///
/// Returns the contents of the first fenced block when present (language
/// tag ignored). Otherwise falls back to the longest run of lines whose
/// braces balance and that contains at least one `;`, else the whole
/// response. Leading/trailing blank lines are trimmed.
pub fn extract_code_block(response: &str) -> Result<String, ModelError> {
    if response.trim().is_empty() {
        return Err(ModelError::EmptyResponse);
    }
    if let Some(fenced) = first_fenced_block(response) {
        return Ok(trim_blank_lines(&fenced));
    }
    if let Some(run) = longest_balanced_run(response) {
        return Ok(trim_blank_lines(&run));
    }
    Ok(trim_blank_lines(response))
}

fn first_fenced_block(response: &str) -> Option<String> {
    let mut in_block = false;
    let mut collected: Vec<&str> = Vec::new();
    for line in response.lines() {
        if line.trim_start().starts_with("```") {
            if in_block {
                return Some(collected.join("\n"));
            }
            in_block = true;
            continue;
        }
        if in_block {
            collected.push(line);
        }
    }
    // An unterminated fence still yields its contents.
    if in_block && !collected.is_empty() {
        return Some(collected.join("\n"));
    }
    None
}

/// Longest maximal run of consecutive lines whose brace depth never goes
/// negative, ends at depth zero, and contains at least one `;`.
fn longest_balanced_run(response: &str) -> Option<String> {
    let lines: Vec<&str> = response.lines().collect();
    let mut best: Option<(usize, usize)> = None; // (start, end) inclusive
    for start in 0..lines.len() {
        let mut depth: i64 = 0;
        let mut has_semicolon = false;
        let mut has_content = false;
        for (offset, line) in lines[start..].iter().enumerate() {
            for c in line.chars() {
                match c {
                    '{' => depth += 1,
                    '}' => depth -= 1,
                    ';' => has_semicolon = true,
                    _ => {}
                }
            }
            if depth < 0 {
                break;
            }
            if !line.trim().is_empty() {
                has_content = true;
            }
            if depth == 0 && has_semicolon && has_content {
                let candidate = (start, start + offset);
                let len = candidate.1 - candidate.0;
                if best.is_none_or(|(bs, be)| len > be - bs) {
                    best = Some(candidate);
                }
            }
        }
    }
    best.map(|(s, e)| lines[s..=e].join("\n"))
}

fn trim_blank_lines(text: &str) -> String {
    let lines: Vec<&str> = text.lines().collect();
    let start = lines
        .iter()
        .position(|l| !l.trim().is_empty())
        .unwrap_or(lines.len());
    let end = lines
        .iter()
        .rposition(|l| !l.trim().is_empty())
        .map(|i| i + 1)
        .unwrap_or(start);
    lines[start..end].join("\n")
}

//! Text embeddings behind a pluggable provider, plus the cosine-similarity
//! primitive used by both retrieval and evaluation.
//!
//! Two providers exist: a deterministic hashed bag-of-tokens embedder that
//! works offline and is bit-reproducible across platforms, and a remote
//! provider speaking the `/api/embeddings` convention of local model
//! runtimes. An index built with one provider must never be queried with
//! another; callers compare [`embedder_id`] strings to enforce that.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_DIMENSION: usize = 384;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("input text is blank")]
    BlankInput,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("remote embedder unavailable at {endpoint}: {detail}")]
    RemoteUnavailable { endpoint: String, detail: String },
    #[error("remote embedder config requires endpoint and model_name")]
    IncompleteRemoteConfig,
    #[error("embedding value at position {0} is not finite")]
    NonFiniteValue(usize),
}

/// A fixed-length vector of finite reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    /// Wraps raw values, rejecting non-finite components.
    pub fn new(values: Vec<f64>) -> Result<Self, EmbeddingError> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFiniteValue(pos));
        }
        Ok(Self { values })
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderKind {
    Deterministic,
    Remote,
}

/// Which provider to use and how to reach it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbedderConfig {
    pub kind: EmbedderKind,
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_name: Option<String>,
}

impl EmbedderConfig {
    pub fn deterministic(dimension: usize) -> Self {
        Self {
            kind: EmbedderKind::Deterministic,
            dimension,
            endpoint: None,
            model_name: None,
        }
    }

    pub fn remote(dimension: usize, endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            kind: EmbedderKind::Remote,
            dimension,
            endpoint: Some(endpoint.into()),
            model_name: Some(model.into()),
        }
    }
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        Self::deterministic(DEFAULT_DIMENSION)
    }
}

/// Stable identifier for the provider/config pair that produced a vector set.
pub fn embedder_id(config: &EmbedderConfig) -> String {
    match config.kind {
        EmbedderKind::Deterministic => format!("det-bow-fnv1a-{}", config.dimension),
        EmbedderKind::Remote => format!(
            "remote:{}@{}",
            config.model_name.as_deref().unwrap_or("?"),
            config.endpoint.as_deref().unwrap_or("?")
        ),
    }
}

/// Embeds `text` with the configured provider.
///
/// The deterministic provider is a pure function of the token multiset:
/// lowercase, split on non-alphanumerics, FNV-1a 64 each token into bucket
/// `h % dimension` with sign taken from bit 63, accumulate, L2-normalize.
/// Token order never matters; adding an unseen token always changes the
/// vector.
pub fn embed_text(text: &str, config: &EmbedderConfig) -> Result<EmbeddingVector, EmbeddingError> {
    if text.trim().is_empty() {
        return Err(EmbeddingError::BlankInput);
    }
    match config.kind {
        EmbedderKind::Deterministic => embed_deterministic(text, config.dimension),
        EmbedderKind::Remote => embed_remote(text, config),
    }
}

fn embed_deterministic(text: &str, dimension: usize) -> Result<EmbeddingVector, EmbeddingError> {
    let mut acc = vec![0.0f64; dimension];
    let mut saw_token = false;
    for token in tokenize(text) {
        saw_token = true;
        let h = fnv1a64(token.as_bytes());
        let bucket = (h % dimension as u64) as usize;
        let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
        acc[bucket] += sign;
    }
    // Text made only of punctuation carries no tokens to hash.
    if !saw_token {
        return Err(EmbeddingError::BlankInput);
    }
    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        // Opposite-sign collisions cancelled every bucket; keep the raw
        // counts' parity visible instead of emitting a zero vector.
        return Err(EmbeddingError::ZeroVector);
    }
    for v in &mut acc {
        *v /= norm;
    }
    EmbeddingVector::new(acc)
}

/// Lowercased alphanumeric runs of the input.
fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Wire format of the remote embedding endpoint.
#[derive(Serialize)]
struct EmbedRequest<'a> {
    model: &'a str,
    prompt: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponse {
    embedding: Vec<f64>,
}

fn embed_remote(text: &str, config: &EmbedderConfig) -> Result<EmbeddingVector, EmbeddingError> {
    let (endpoint, model) = match (&config.endpoint, &config.model_name) {
        (Some(e), Some(m)) => (e.clone(), m.clone()),
        _ => return Err(EmbeddingError::IncompleteRemoteConfig),
    };
    let endpoint = std::env::var("ASTRA_EMBED_ENDPOINT").unwrap_or(endpoint);
    let url = format!("{}/api/embeddings", endpoint.trim_end_matches('/'));
    let mut response = ureq::post(&url)
        .send_json(EmbedRequest {
            model: &model,
            prompt: text,
        })
        .map_err(|e| EmbeddingError::RemoteUnavailable {
            endpoint: endpoint.clone(),
            detail: e.to_string(),
        })?;
    let parsed: EmbedResponse =
        response
            .body_mut()
            .read_json()
            .map_err(|e| EmbeddingError::RemoteUnavailable {
                endpoint: endpoint.clone(),
                detail: format!("bad response body: {e}"),
            })?;
    if parsed.embedding.len() != config.dimension {
        return Err(EmbeddingError::DimensionMismatch {
            expected: config.dimension,
            actual: parsed.embedding.len(),
        });
    }
    EmbeddingVector::new(parsed.embedding)
}

/// dot(a,b) / (‖a‖·‖b‖), in [-1, 1].
pub fn cosine_similarity(
    a: &EmbeddingVector,
    b: &EmbeddingVector,
) -> Result<f64, EmbeddingError> {
    if a.dimension() != b.dimension() {
        return Err(EmbeddingError::DimensionMismatch {
            expected: a.dimension(),
            actual: b.dimension(),
        });
    }
    if a.is_zero() || b.is_zero() {
        return Err(EmbeddingError::ZeroVector);
    }
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.values().iter().zip(b.values()) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    let score = dot / (na.sqrt() * nb.sqrt());
    // Rounding can push |score| a hair past 1.
    Ok(score.clamp(-1.0, 1.0))
}

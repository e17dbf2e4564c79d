//! Top-k ranking of indexed chunks against a query embedding, and the
//! rendering of ranked chunks into prompt context.
//!
//! The corpus is small by construction, so ranking is an exact linear scan.

use serde::Serialize;
use thiserror::Error;

use crate::corpus::ChunkIndex;
use crate::embedding::{cosine_similarity, EmbeddingError, EmbeddingVector};

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("index contains no chunks")]
    EmptyIndex,
    #[error("query dimension {query} does not match index dimension {index}")]
    DimensionMismatch { query: usize, index: usize },
    #[error("no chunk with id {0}")]
    UnknownChunkId(String),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

/// One ranked hit. Ranks are 1-based and consecutive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalResult {
    pub chunk_id: String,
    pub score: f64,
    pub rank: usize,
}

/// Scores every chunk against `query` and returns the best `min(k, n)`,
/// highest score first. Ties keep index order, so results are deterministic.
pub fn retrieve_top_k(
    index: &ChunkIndex,
    query: &EmbeddingVector,
    k: usize,
) -> Result<Vec<RetrievalResult>, RetrievalError> {
    if index.chunks.is_empty() {
        return Err(RetrievalError::EmptyIndex);
    }
    if query.dimension() != index.dimension {
        return Err(RetrievalError::DimensionMismatch {
            query: query.dimension(),
            index: index.dimension,
        });
    }
    let mut scored: Vec<(usize, f64)> = Vec::with_capacity(index.chunks.len());
    for (ordinal, chunk) in index.chunks.iter().enumerate() {
        scored.push((ordinal, cosine_similarity(query, &chunk.embedding)?));
    }
    // Stable sort: equal scores stay in ascending ordinal order.
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    scored.truncate(k);
    Ok(scored
        .into_iter()
        .enumerate()
        .map(|(i, (ordinal, score))| RetrievalResult {
            chunk_id: index.chunks[ordinal].id.clone(),
            score,
            rank: i + 1,
        })
        .collect())
}

/// Renders ranked chunks as prompt context. Each block is a header line
/// `### Retrieved example <rank> (task_type: <t>, score: <s>)` followed by
/// the chunk text; blocks are separated by one blank line.
pub fn format_rag_context(
    index: &ChunkIndex,
    results: &[RetrievalResult],
) -> Result<String, RetrievalError> {
    let blocks = rag_context_blocks(index, results)?;
    Ok(blocks.join("\n\n"))
}

/// The individual blocks of [`format_rag_context`], exposed so a caller can
/// drop low-ranked blocks when fitting a prompt budget.
pub fn rag_context_blocks(
    index: &ChunkIndex,
    results: &[RetrievalResult],
) -> Result<Vec<String>, RetrievalError> {
    let mut blocks = Vec::with_capacity(results.len());
    for result in results {
        let chunk = index
            .chunk_by_id(&result.chunk_id)
            .ok_or_else(|| RetrievalError::UnknownChunkId(result.chunk_id.clone()))?;
        blocks.push(format!(
            "### Retrieved example {} (task_type: {}, score: {:.4})\n{}",
            result.rank,
            chunk.metadata.task_type,
            result.score,
            chunk.text.trim_end()
        ));
    }
    Ok(blocks)
}

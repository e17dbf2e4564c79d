//! Shared helpers for the integration suites: a deterministic PRNG,
//! independent re-implementations of the embedding/cosine math used as
//! oracles, and a whole-token renamer for rename-invariance checks.
//!
//! The oracles here deliberately avoid calling into the library's
//! implementation paths.
#![allow(dead_code)] // each test binary uses a different subset

use std::path::PathBuf;

pub fn fixture_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

/// SplitMix64: tiny, seedable, stable across platforms.
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, bound).
    pub fn below(&mut self, bound: usize) -> usize {
        (self.next_u64() % bound.max(1) as u64) as usize
    }

    /// Uniform float in [-1, 1).
    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() as f64 / u64::MAX as f64) * 2.0 - 1.0
    }
}

/// Independent hashed bag-of-tokens embedding (FNV-1a 64, bucket = h mod
/// dim, sign = bit 63, L2 normalized), written without reference to the
/// library code.
pub fn oracle_embed(text: &str, dim: usize) -> Vec<f64> {
    let mut acc = vec![0.0f64; dim];
    for raw in text.split(|c: char| !c.is_alphanumeric()) {
        if raw.is_empty() {
            continue;
        }
        let token = raw.to_lowercase();
        let mut h: u64 = 14695981039346656037;
        for b in token.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(1099511628211);
        }
        let sign = if h & (1u64 << 63) != 0 { -1.0 } else { 1.0 };
        acc[(h % dim as u64) as usize] += sign;
    }
    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in &mut acc {
            *v /= norm;
        }
    }
    acc
}

/// Plain-loop cosine similarity.
pub fn oracle_cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Whole-token rename over C-like source, independent of the library's
/// lexer: replaces `from` wherever it appears as a maximal identifier run.
/// Fixture functions contain no string literals, so a plain scan suffices.
pub fn rename_token(text: &str, from: &str, to: &str) -> String {
    let bytes = text.as_bytes();
    let is_ident = |b: u8| b.is_ascii_alphanumeric() || b == b'_';
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < bytes.len() {
        if is_ident(bytes[i]) {
            let start = i;
            while i < bytes.len() && is_ident(bytes[i]) {
                i += 1;
            }
            let word = &text[start..i];
            if word == from {
                out.push_str(to);
            } else {
                out.push_str(word);
            }
        } else {
            out.push(text[i..].chars().next().unwrap());
            i += text[i..].chars().next().unwrap().len_utf8();
        }
    }
    out
}

/// Applies a consistent renaming of `locals` using fresh names derived from
/// the PRNG; returns the renamed text.
pub fn rename_locals_consistently(text: &str, locals: &[String], rng: &mut SplitMix64) -> String {
    let mut renamed = text.to_string();
    for (i, local) in locals.iter().enumerate() {
        let fresh = format!("zz{}_{}", rng.below(100_000), i);
        renamed = rename_token(&renamed, local, &fresh);
    }
    renamed
}

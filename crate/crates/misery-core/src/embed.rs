//! Sentence embeddings for exemplar retrieval: the provider trait,
//! cosine similarity, and a deterministic hash embedder for offline
//! runs and tests.
//!
//! The hash embedder maps text to a fixed-dimension vector like so:
//! lowercase, split on non-alphanumeric characters; slot 0 holds
//! `1 + token_count` so no vector has zero norm; every unigram and
//! adjacent-pair bigram is hashed with 64-bit FNV-1a, lands in slot
//! `1 + hash % (dim - 1)`, and adds `+1` or `-1` by the hash's top
//! bit; the result is L2-normalized. It captures token overlap, not
//! meaning, which is all retrieval tests need.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// A fixed-length real vector produced by an embedding provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|v| v * v).sum())
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EmbedError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("zero-norm vector has no direction")]
    ZeroNorm,
    #[error("embedding dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("embedding provider failure: {0}")]
    Provider(String),
}

/// Batch text-to-vector provider. Implementations must be
/// deterministic per (provider id, text) so cached vectors stay valid.
pub trait Embedder {
    /// Stable identity used to key the embedding cache.
    fn id(&self) -> String;

    /// Embeds each text, preserving order. All vectors share one
    /// dimension.
    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError>;
}

/// `dot(a, b) / (|a| |b|)`, defined only for equal-dimension vectors
/// with nonzero norms.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbedError> {
    if a.dim() != b.dim() {
        return Err(EmbedError::DimensionMismatch(a.dim(), b.dim()));
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(EmbedError::ZeroNorm);
    }
    let dot: f64 = a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum();
    Ok(dot / (na * nb))
}

/// Deterministic, network-free embedder. See the module docs for the
/// exact construction.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
}

impl HashEmbedder {
    pub const DEFAULT_DIM: usize = 64;

    pub fn new(dim: usize) -> Result<Self, EmbedError> {
        if dim < 2 {
            return Err(EmbedError::DimensionTooSmall(dim));
        }
        Ok(Self { dim })
    }

    pub fn embed_one(&self, text: &str) -> EmbeddingVector {
        let lower = text.to_lowercase();
        let tokens: Vec<&str> = lower
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .collect();

        let mut values = alloc::vec![0.0; self.dim];
        values[0] = 1.0 + tokens.len() as f64;
        let mut add_feature = |feature: &str| {
            let h = fnv1a_64(feature.as_bytes());
            let idx = 1 + (h % (self.dim as u64 - 1)) as usize;
            values[idx] += if h >> 63 == 1 { -1.0 } else { 1.0 };
        };
        for token in &tokens {
            add_feature(token);
        }
        for pair in tokens.windows(2) {
            let mut bigram = String::with_capacity(pair[0].len() + pair[1].len() + 1);
            bigram.push_str(pair[0]);
            bigram.push(' ');
            bigram.push_str(pair[1]);
            add_feature(&bigram);
        }

        let norm = libm::sqrt(values.iter().map(|v| v * v).sum());
        for v in &mut values {
            *v /= norm;
        }
        EmbeddingVector::new(values)
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self {
            dim: Self::DEFAULT_DIM,
        }
    }
}

impl Embedder for HashEmbedder {
    fn id(&self) -> String {
        alloc::format!("hash-{}", self.dim)
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

fn fnv1a_64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

//! Per-message document vectors for content-similarity analysis.
//!
//! Two vector sources share one cosine interface: an L2-normalized
//! term-frequency vectorizer (the default analysis path — cheap, exact,
//! and deterministic) and trainable neural document embeddings
//! ([`train_embeddings`]) for corpora large enough to benefit.

mod persist;
mod train;

pub use persist::{read_vectors, write_vectors, PersistError};
pub use train::{train_embeddings, EmbeddingParams, TrainedEmbeddings};

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::tokenize;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("vector dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("cosine undefined: both vectors are zero")]
    UndefinedSimilarity,
    #[error("unknown message id `{0}`")]
    UnknownMessage(String),
    #[error("vocabulary is empty after applying min_count")]
    EmptyVocabulary,
    #[error("invalid embedding parameter: {0}")]
    InvalidParams(&'static str),
}

/// Dense per-message vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocVector {
    pub message_id: String,
    pub values: Vec<f32>,
}

/// Cosine similarity of two dense vectors. Errors on dimension mismatch
/// and when both vectors are zero; the result is clamped into [-1, 1]
/// against rounding.
pub fn cosine(u: &[f32], v: &[f32]) -> Result<f64, EmbeddingError> {
    if u.len() != v.len() {
        return Err(EmbeddingError::DimensionMismatch(u.len(), v.len()));
    }
    let mut dot = 0.0f64;
    let mut nu = 0.0f64;
    let mut nv = 0.0f64;
    for (&a, &b) in u.iter().zip(v) {
        dot += f64::from(a) * f64::from(b);
        nu += f64::from(a) * f64::from(a);
        nv += f64::from(b) * f64::from(b);
    }
    if nu == 0.0 && nv == 0.0 {
        return Err(EmbeddingError::UndefinedSimilarity);
    }
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// Sparse L2-normalized term-frequency vectors over the corpus
/// vocabulary. Cosine semantics are identical to the densified form.
#[derive(Debug, Clone)]
pub struct TfVectors {
    vocab: BTreeMap<String, u32>,
    vectors: HashMap<String, Vec<(u32, f64)>>,
    pub empty_bodies: u64,
}

impl TfVectors {
    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn contains(&self, message_id: &str) -> bool {
        self.vectors.contains_key(message_id)
    }

    pub fn is_zero(&self, message_id: &str) -> Option<bool> {
        self.vectors.get(message_id).map(|v| v.is_empty())
    }

    pub fn cosine(&self, a: &str, b: &str) -> Result<f64, EmbeddingError> {
        let va = self
            .vectors
            .get(a)
            .ok_or_else(|| EmbeddingError::UnknownMessage(a.to_string()))?;
        let vb = self
            .vectors
            .get(b)
            .ok_or_else(|| EmbeddingError::UnknownMessage(b.to_string()))?;
        if va.is_empty() && vb.is_empty() {
            return Err(EmbeddingError::UndefinedSimilarity);
        }
        // vectors are unit-norm, so the dot product is the cosine
        let mut dot = 0.0f64;
        let (mut i, mut j) = (0, 0);
        while i < va.len() && j < vb.len() {
            match va[i].0.cmp(&vb[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    dot += va[i].1 * vb[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(dot.clamp(-1.0, 1.0))
    }

    /// Dense form of one vector (vocabulary-sized; mostly for tests and
    /// persistence of small corpora).
    pub fn densify(&self, message_id: &str) -> Result<DocVector, EmbeddingError> {
        let sparse = self
            .vectors
            .get(message_id)
            .ok_or_else(|| EmbeddingError::UnknownMessage(message_id.to_string()))?;
        let mut values = vec![0.0f32; self.vocab.len()];
        for &(term, w) in sparse {
            values[term as usize] = w as f32;
        }
        Ok(DocVector {
            message_id: message_id.to_string(),
            values,
        })
    }

    pub fn message_ids(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }
}

/// Builds L2-normalized term-frequency vectors for `(message_id, body)`
/// pairs. Empty bodies produce zero vectors and are counted in
/// `empty_bodies`.
pub fn tf_vectorize<'a, I>(docs: I) -> TfVectors
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let docs: Vec<(&str, Vec<String>)> = docs
        .into_iter()
        .map(|(id, body)| (id, tokenize::lowercase_tokens(body).collect()))
        .collect();
    let mut vocab: BTreeMap<String, u32> = BTreeMap::new();
    for (_, tokens) in &docs {
        for tok in tokens {
            let next = vocab.len() as u32;
            vocab.entry(tok.clone()).or_insert(next);
        }
    }
    let mut empty_bodies = 0u64;
    let mut vectors = HashMap::with_capacity(docs.len());
    for (id, tokens) in docs {
        let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
        for tok in &tokens {
            *counts.entry(vocab[tok]).or_default() += 1;
        }
        let norm = counts
            .values()
            .map(|&c| f64::from(c) * f64::from(c))
            .sum::<f64>()
            .sqrt();
        let sparse: Vec<(u32, f64)> = if norm == 0.0 {
            empty_bodies += 1;
            Vec::new()
        } else {
            counts
                .into_iter()
                .map(|(t, c)| (t, f64::from(c) / norm))
                .collect()
        };
        vectors.insert(id.to_string(), sparse);
    }
    TfVectors {
        vocab,
        vectors,
        empty_bodies,
    }
}

/// Dense vector table keyed by message id, as produced by embedding
/// training or loaded from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVectors {
    dim: usize,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f32>,
}

impl DenseVectors {
    pub fn new(dim: usize) -> DenseVectors {
        DenseVectors {
            dim,
            ids: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn push(&mut self, id: &str, values: &[f32]) {
        assert_eq!(values.len(), self.dim);
        self.index.insert(id.to_string(), self.ids.len());
        self.ids.push(id.to_string());
        self.data.extend_from_slice(values);
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        let &i = self.index.get(id)?;
        Some(&self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.ids.iter().map(String::as_str)
    }

    pub fn cosine(&self, a: &str, b: &str) -> Result<f64, EmbeddingError> {
        let va = self
            .get(a)
            .ok_or_else(|| EmbeddingError::UnknownMessage(a.to_string()))?;
        let vb = self
            .get(b)
            .ok_or_else(|| EmbeddingError::UnknownMessage(b.to_string()))?;
        cosine(va, vb)
    }
}

/// Uniform handle over the two vector sources.
#[derive(Debug, Clone)]
pub enum VectorSet {
    Tf(TfVectors),
    Dense(DenseVectors),
}

impl VectorSet {
    pub fn cosine(&self, a: &str, b: &str) -> Result<f64, EmbeddingError> {
        match self {
            VectorSet::Tf(v) => v.cosine(a, b),
            VectorSet::Dense(v) => v.cosine(a, b),
        }
    }

    /// Cosine as an option, for callers that skip undefined pairs.
    pub fn cosine_opt(&self, a: &str, b: &str) -> Option<f64> {
        self.cosine(a, b).ok()
    }
}

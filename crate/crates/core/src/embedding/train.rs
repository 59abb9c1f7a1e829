//! Trainable document embeddings.
//!
//! Words are trained to predict their neighbors inside a sliding window
//! while each document contributes a global-context vector that is
//! updated with every word of the document, using negative sampling
//! against a unigram^0.75 noise distribution. The projection is the
//! mean of the context word vectors and the document vector.
//!
//! Determinism: training is single-worker and every random stream is
//! derived from the seed. After the simultaneous pass, document vectors
//! are re-inferred against the frozen word matrices with streams keyed
//! by document *content* (token ids) and iteration, so identical
//! documents end with identical vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DenseVectors, EmbeddingError};
use crate::ingest::tokenize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingParams {
    /// Embedding dimension. 32 is a desk-scale default; 300 matches
    /// web-scale corpora.
    pub dim: usize,
    /// Context neighborhood radius.
    pub window: usize,
    /// Training passes over the corpus.
    pub iterations: usize,
    /// Negative samples per prediction.
    pub negatives: usize,
    /// Initial learning rate, decayed linearly per iteration.
    pub learning_rate: f32,
    /// Words rarer than this are dropped from the vocabulary.
    pub min_count: u32,
    pub seed: u64,
}

impl Default for EmbeddingParams {
    fn default() -> Self {
        EmbeddingParams {
            dim: 32,
            window: 5,
            iterations: 10,
            negatives: 5,
            learning_rate: 0.025,
            min_count: 5,
            seed: 0,
        }
    }
}

impl EmbeddingParams {
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        if self.dim < 1 {
            return Err(EmbeddingError::InvalidParams("dim must be >= 1"));
        }
        if self.window < 1 {
            return Err(EmbeddingError::InvalidParams("window must be >= 1"));
        }
        if self.iterations < 1 {
            return Err(EmbeddingError::InvalidParams("iterations must be >= 1"));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(EmbeddingError::InvalidParams("learning_rate must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainedEmbeddings {
    /// One vector per input document, keyed by message id.
    pub docs: DenseVectors,
    /// One vector per vocabulary word.
    pub words: DenseVectors,
    /// Mean negative log-likelihood per iteration.
    pub epoch_loss: Vec<f64>,
}

fn derive_seed(base: u64, tag: &str, payload: &[u8]) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update(tag.as_bytes());
    h.update(payload);
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().unwrap())
}

fn doc_payload(ids: &[u32], epoch: usize) -> Vec<u8> {
    let mut payload = Vec::with_capacity(ids.len() * 4 + 8);
    payload.extend_from_slice(&(epoch as u64).to_le_bytes());
    for &id in ids {
        payload.extend_from_slice(&id.to_le_bytes());
    }
    payload
}

fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

/// Trains word and document vectors over `(message_id, body)` pairs.
pub fn train_embeddings<'a, I>(
    corpus: I,
    params: &EmbeddingParams,
) -> Result<TrainedEmbeddings, EmbeddingError>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    params.validate()?;
    let docs_tok: Vec<(&str, Vec<String>)> = corpus
        .into_iter()
        .map(|(id, body)| (id, tokenize::lowercase_tokens(body).collect()))
        .collect();

    // Vocabulary: tokens at or above min_count, most frequent first.
    let mut freq: std::collections::HashMap<&str, u64> = std::collections::HashMap::new();
    for (_, toks) in &docs_tok {
        for t in toks {
            *freq.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut vocab: Vec<(&str, u64)> = freq
        .into_iter()
        .filter(|&(_, c)| c >= u64::from(params.min_count))
        .collect();
    vocab.sort_by(|a, b| (std::cmp::Reverse(a.1), a.0).cmp(&(std::cmp::Reverse(b.1), b.0)));
    if vocab.is_empty() {
        return Err(EmbeddingError::EmptyVocabulary);
    }
    let word_of: std::collections::HashMap<&str, u32> = vocab
        .iter()
        .enumerate()
        .map(|(i, &(w, _))| (w, i as u32))
        .collect();
    let vocab_len = vocab.len();

    // Unigram^0.75 cumulative table for negative sampling.
    let mut noise_cum = Vec::with_capacity(vocab_len);
    let mut acc = 0.0f64;
    for &(_, c) in &vocab {
        acc += (c as f64).powf(0.75);
        noise_cum.push(acc);
    }
    let noise_total = acc;

    let doc_ids: Vec<Vec<u32>> = docs_tok
        .iter()
        .map(|(_, toks)| {
            toks.iter()
                .filter_map(|t| word_of.get(t.as_str()).copied())
                .collect()
        })
        .collect();

    let dim = params.dim;
    let span = 1.0 / dim as f32;
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, "word-init", &[]));
    let mut word_in: Vec<f32> = (0..vocab_len * dim)
        .map(|_| (init_rng.random::<f32>() - 0.5) * span)
        .collect();
    let mut word_out = vec![0.0f32; vocab_len * dim];
    let mut doc_vecs: Vec<Vec<f32>> = doc_ids
        .iter()
        .map(|ids| {
            let mut r =
                ChaCha8Rng::seed_from_u64(derive_seed(params.seed, "doc-init", &doc_payload(ids, 0)));
            (0..dim).map(|_| (r.random::<f32>() - 0.5) * span).collect()
        })
        .collect();

    let mut epoch_loss = Vec::with_capacity(params.iterations);
    let mut h = vec![0.0f32; dim];
    let mut err = vec![0.0f32; dim];
    for epoch in 0..params.iterations {
        let alpha = (params.learning_rate
            * (1.0 - epoch as f32 / params.iterations as f32))
            .max(params.learning_rate * 1e-4);
        let mut loss = 0.0f64;
        let mut predictions = 0u64;
        for (d, ids) in doc_ids.iter().enumerate() {
            if ids.is_empty() {
                continue;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                params.seed,
                "doc-epoch",
                &doc_payload(ids, epoch + 1),
            ));
            let dv = &mut doc_vecs[d];
            for t in 0..ids.len() {
                let center = ids[t] as usize;
                let lo = t.saturating_sub(params.window);
                let hi = (t + params.window + 1).min(ids.len());

                // projection: mean of context words and the doc vector
                h.copy_from_slice(dv);
                let mut contributors = 1.0f32;
                for c in lo..hi {
                    if c == t {
                        continue;
                    }
                    let row = ids[c] as usize * dim;
                    for k in 0..dim {
                        h[k] += word_in[row + k];
                    }
                    contributors += 1.0;
                }
                let inv = 1.0 / contributors;
                for k in 0..dim {
                    h[k] *= inv;
                }

                err.iter_mut().for_each(|e| *e = 0.0);
                for neg in 0..=params.negatives {
                    let (target, label) = if neg == 0 {
                        (center, 1.0f32)
                    } else {
                        let r = rng.random::<f64>() * noise_total;
                        let sampled = noise_cum.partition_point(|&c| c <= r).min(vocab_len - 1);
                        if sampled == center {
                            continue;
                        }
                        (sampled, 0.0f32)
                    };
                    let row = target * dim;
                    let mut dot = 0.0f32;
                    for k in 0..dim {
                        dot += h[k] * word_out[row + k];
                    }
                    let f = sigmoid(dot);
                    let g = (label - f) * alpha;
                    for k in 0..dim {
                        err[k] += g * word_out[row + k];
                        word_out[row + k] += g * h[k];
                    }
                    let p = if label > 0.5 { f } else { 1.0 - f };
                    loss -= f64::from(p.clamp(1e-7, 1.0)).ln();
                    predictions += 1;
                }

                // distribute the accumulated gradient to the global
                // context (the doc vector) and every context word
                for k in 0..dim {
                    dv[k] += err[k];
                }
                for c in lo..hi {
                    if c == t {
                        continue;
                    }
                    let row = ids[c] as usize * dim;
                    for k in 0..dim {
                        word_in[row + k] += err[k];
                    }
                }
            }
        }
        epoch_loss.push(if predictions == 0 {
            0.0
        } else {
            loss / predictions as f64
        });
    }

    // Re-infer each document vector against the frozen word matrices.
    // Inference updates only the document vector and is keyed by content,
    // making duplicate documents bitwise identical and the whole output
    // independent of document order.
    for (d, ids) in doc_ids.iter().enumerate() {
        let mut r = ChaCha8Rng::seed_from_u64(derive_seed(
            params.seed,
            "doc-init",
            &doc_payload(ids, 0),
        ));
        let dv = &mut doc_vecs[d];
        for k in 0..dim {
            dv[k] = (r.random::<f32>() - 0.5) * span;
        }
        if ids.is_empty() {
            continue;
        }
        for epoch in 0..params.iterations {
            let alpha = (params.learning_rate
                * (1.0 - epoch as f32 / params.iterations as f32))
                .max(params.learning_rate * 1e-4);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                params.seed,
                "doc-infer",
                &doc_payload(ids, epoch + 1),
            ));
            for t in 0..ids.len() {
                let center = ids[t] as usize;
                let lo = t.saturating_sub(params.window);
                let hi = (t + params.window + 1).min(ids.len());
                h.copy_from_slice(dv);
                let mut contributors = 1.0f32;
                for c in lo..hi {
                    if c == t {
                        continue;
                    }
                    let row = ids[c] as usize * dim;
                    for k in 0..dim {
                        h[k] += word_in[row + k];
                    }
                    contributors += 1.0;
                }
                let inv = 1.0 / contributors;
                for k in 0..dim {
                    h[k] *= inv;
                }
                err.iter_mut().for_each(|e| *e = 0.0);
                for neg in 0..=params.negatives {
                    let (target, label) = if neg == 0 {
                        (center, 1.0f32)
                    } else {
                        let r = rng.random::<f64>() * noise_total;
                        let sampled = noise_cum.partition_point(|&c| c <= r).min(vocab_len - 1);
                        if sampled == center {
                            continue;
                        }
                        (sampled, 0.0f32)
                    };
                    let row = target * dim;
                    let mut dot = 0.0f32;
                    for k in 0..dim {
                        dot += h[k] * word_out[row + k];
                    }
                    let g = (label - sigmoid(dot)) * alpha;
                    for k in 0..dim {
                        err[k] += g * word_out[row + k];
                    }
                }
                for k in 0..dim {
                    dv[k] += err[k];
                }
            }
        }
    }

    let mut docs = DenseVectors::new(dim);
    for ((id, _), vec) in docs_tok.iter().zip(&doc_vecs) {
        docs.push(id, vec);
    }
    let mut words = DenseVectors::new(dim);
    for (i, &(w, _)) in vocab.iter().enumerate() {
        words.push(w, &word_in[i * dim..(i + 1) * dim]);
    }
    Ok(TrainedEmbeddings {
        docs,
        words,
        epoch_loss,
    })
}

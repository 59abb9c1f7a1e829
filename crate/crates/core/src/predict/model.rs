//! Bagged ensemble of decision trees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{Dataset, DecisionTree, TreeParams};
use super::{ClassScheme, PredictError, Task};
use crate::features::{FeatureCatalog, FeatureVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: u32,
    /// With bootstrapping off every tree sees the full training set, so
    /// a one-tree ensemble reduces to the single-tree learner.
    pub bootstrap: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            n_trees: 50,
            max_depth: 12,
            min_leaf: 5,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Model {
    pub task: Task,
    pub scheme: ClassScheme,
    pub n_classes: usize,
    pub n_features: usize,
    pub catalog_hash: [u8; 32],
    pub hyper: Hyperparams,
    pub seed: u64,
    pub trees: Vec<DecisionTree>,
}

/// Trains a bagged tree ensemble. Each tree is grown on an independent
/// bootstrap resample drawn from a per-tree stream seeded `seed + tree
/// index`; the whole procedure is deterministic.
pub fn train(
    vectors: &[&FeatureVector],
    task: Task,
    scheme: &ClassScheme,
    catalog: &FeatureCatalog,
    hyper: &Hyperparams,
    seed: u64,
) -> Result<Model, PredictError> {
    let n_features = catalog.len();
    let n = vectors.len();
    let y: Vec<u8> = vectors.iter().map(|v| v.label(task)).collect();
    let mut seen = [false; 256];
    let mut distinct = 0usize;
    for &label in &y {
        if !seen[label as usize] {
            seen[label as usize] = true;
            distinct += 1;
        }
    }
    if distinct < 2 {
        return Err(PredictError::SingleClassTrainSet);
    }
    let mut x = Vec::with_capacity(n * n_features);
    for v in vectors {
        if v.values.len() != n_features {
            return Err(PredictError::DimensionMismatch {
                got: v.values.len(),
                expected: n_features,
            });
        }
        x.extend_from_slice(&v.values);
    }
    let n_classes = scheme.n_classes();
    let ds = Dataset {
        x: &x,
        n_features,
        y: &y,
        n_classes,
    };
    let params = TreeParams {
        max_depth: hyper.max_depth,
        min_leaf: hyper.min_leaf,
    };

    let mut trees = Vec::with_capacity(hyper.n_trees);
    for i in 0..hyper.n_trees {
        let weights = if hyper.bootstrap {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let mut w = vec![0u32; n];
            for _ in 0..n {
                w[rng.random_range(0..n)] += 1;
            }
            w
        } else {
            vec![1u32; n]
        };
        trees.push(DecisionTree::fit(&ds, &weights, params));
    }
    Ok(Model {
        task,
        scheme: scheme.clone(),
        n_classes,
        n_features,
        catalog_hash: catalog.hash(),
        hyper: *hyper,
        seed,
        trees,
    })
}

/// Averaged per-tree class probabilities and the argmax class, ties
/// broken toward the lower class index.
pub fn predict(model: &Model, values: &[f64]) -> Result<(u8, Vec<f64>), PredictError> {
    if values.len() != model.n_features {
        return Err(PredictError::DimensionMismatch {
            got: values.len(),
            expected: model.n_features,
        });
    }
    let mut probs = vec![0.0f64; model.n_classes];
    for tree in &model.trees {
        for (acc, p) in probs.iter_mut().zip(tree.leaf_probs(values)) {
            *acc += p;
        }
    }
    let inv = 1.0 / model.trees.len() as f64;
    for p in &mut probs {
        *p *= inv;
    }
    let mut best = 0u8;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best as usize] {
            best = i as u8;
        }
    }
    Ok((best, probs))
}

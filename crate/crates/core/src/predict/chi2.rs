//! Chi-square feature ranking against the class label.
//!
//! Continuous features are quantile-binned (10 bins by default), so the
//! statistic is invariant under strictly monotone transforms; features
//! with few distinct values collapse to their native categories. Missing
//! values form their own bin. A perfectly class-determining binary
//! feature over N balanced samples scores exactly N.

use super::{PredictError, Task};
use crate::features::{FeatureCatalog, FeatureVector};

/// Quantile bin edges of an ascending sample: values at ranks
/// `ceil(k*n/bins)` for k in 1..bins, deduplicated.
fn quantile_edges(sorted: &[f64], bins: usize) -> Vec<f64> {
    let n = sorted.len();
    let mut edges = Vec::with_capacity(bins.saturating_sub(1));
    for k in 1..bins {
        let pos = (k * n).div_ceil(bins);
        if pos == 0 || pos > n {
            continue;
        }
        edges.push(sorted[pos - 1]);
    }
    edges.dedup_by(|a, b| a == b);
    edges
}

/// Pearson chi-square of the bin x class contingency table.
fn chi2_of(values: &[f64], labels: &[u8], n_classes: usize, n_bins: usize) -> f64 {
    let mut present: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    present.sort_unstable_by(f64::total_cmp);
    let edges = quantile_edges(&present, n_bins);
    let has_missing = present.len() < values.len();
    // bins: edges.len()+1 value bins, plus one for missing
    let value_bins = edges.len() + 1;
    let total_bins = value_bins + usize::from(has_missing);

    let mut table = vec![0u64; total_bins * n_classes];
    for (&v, &y) in values.iter().zip(labels) {
        let bin = if v.is_nan() {
            value_bins
        } else {
            edges.partition_point(|&e| e < v)
        };
        table[bin * n_classes + y as usize] += 1;
    }

    let n = values.len() as f64;
    let mut row_tot = vec![0u64; total_bins];
    let mut col_tot = vec![0u64; n_classes];
    for b in 0..total_bins {
        for c in 0..n_classes {
            let o = table[b * n_classes + c];
            row_tot[b] += o;
            col_tot[c] += o;
        }
    }
    let mut chi2 = 0.0f64;
    for b in 0..total_bins {
        if row_tot[b] == 0 {
            continue;
        }
        for c in 0..n_classes {
            if col_tot[c] == 0 {
                continue;
            }
            let e = row_tot[b] as f64 * col_tot[c] as f64 / n;
            let o = table[b * n_classes + c] as f64;
            chi2 += (o - e) * (o - e) / e;
        }
    }
    chi2
}

/// Ranks all features by the chi-square statistic of their binned
/// contingency with the class, descending (ties by feature index).
pub fn chi2_rank(
    vectors: &[&FeatureVector],
    task: Task,
    n_bins: usize,
) -> Result<Vec<(usize, f64)>, PredictError> {
    let labels: Vec<u8> = vectors.iter().map(|v| v.label(task)).collect();
    let distinct = {
        let mut seen = [false; 256];
        labels.iter().for_each(|&l| seen[l as usize] = true);
        seen.iter().filter(|&&s| s).count()
    };
    if distinct < 2 {
        return Err(PredictError::SingleClassTrainSet);
    }
    let n_classes = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(2);
    let n_features = vectors.first().map(|v| v.values.len()).unwrap_or(0);
    let mut ranked: Vec<(usize, f64)> = (0..n_features)
        .map(|f| {
            let values: Vec<f64> = vectors.iter().map(|v| v.values[f]).collect();
            (f, chi2_of(&values, &labels, n_classes, n_bins))
        })
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ranked)
}

/// The catalog/projection pair for retraining on the top-k features.
#[derive(Debug, Clone)]
pub struct ReducedCatalog {
    /// Original feature indices, in rank order.
    pub indices: Vec<usize>,
    pub catalog: FeatureCatalog,
}

impl ReducedCatalog {
    pub fn project_values(&self, values: &[f64]) -> Vec<f64> {
        self.indices.iter().map(|&i| values[i]).collect()
    }

    pub fn project(&self, v: &FeatureVector) -> FeatureVector {
        FeatureVector {
            values: self.project_values(&v.values),
            ..v.clone()
        }
    }
}

/// Keeps the `k` best-ranked features. `k` must be in `1..=catalog len`.
pub fn top_k_selection(
    ranked: &[(usize, f64)],
    k: usize,
    catalog: &FeatureCatalog,
) -> Result<ReducedCatalog, PredictError> {
    if k == 0 || k > catalog.len() || k > ranked.len() {
        return Err(PredictError::InvalidTopK {
            got: k,
            max: catalog.len().min(ranked.len()),
        });
    }
    let indices: Vec<usize> = ranked[..k].iter().map(|&(i, _)| i).collect();
    Ok(ReducedCatalog {
        catalog: catalog.subset(&indices),
        indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predict::model::test_support::{pad83, vector};

    fn vectors_from(feature_cols: Vec<Vec<f64>>, labels: &[u8]) -> Vec<FeatureVector> {
        labels
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                let head: Vec<f64> = feature_cols.iter().map(|col| col[i]).collect();
                vector(pad83(head), y)
            })
            .collect()
    }

    #[test]
    fn perfect_binary_feature_scores_n() {
        // N=300 balanced binary labels; feature 0 equals the class.
        let labels: Vec<u8> = (0..300).map(|i| (i % 2) as u8).collect();
        let col: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
        let data = vectors_from(vec![col], &labels);
        let refs: Vec<&FeatureVector> = data.iter().collect();
        let ranked = chi2_rank(&refs, Task::ReplyTime, 10).unwrap();
        assert_eq!(ranked[0].0, 0);
        assert!((ranked[0].1 - 300.0).abs() < 1e-6, "chi2 {}", ranked[0].1);
        // all padded-constant features score zero
        for &(f, v) in &ranked[1..] {
            assert!(v.abs() < 1e-9, "feature {f} scored {v}");
        }
    }

    #[test]
    fn constant_feature_scores_zero() {
        let labels: Vec<u8> = (0..40).map(|i| (i % 2) as u8).collect();
        let col = vec![7.5; 40];
        let data = vectors_from(vec![col], &labels);
        let refs: Vec<&FeatureVector> = data.iter().collect();
        let ranked = chi2_rank(&refs, Task::ReplyTime, 10).unwrap();
        let (_, score) = ranked.iter().find(|&&(f, _)| f == 0).copied().unwrap();
        assert_eq!(score, 0.0);
    }

    #[test]
    fn monotone_transforms_do_not_change_chi2() {
        let labels: Vec<u8> = (0..90).map(|i| (i % 3) as u8).collect();
        let col: Vec<f64> = (0..90).map(|i| f64::from(i) * 0.37 + 2.0).collect();
        let transforms: [fn(f64) -> f64; 3] = [|x| x, |x| x * x * x, |x| -1.0 / (x + 10.0)];
        let mut scores = Vec::new();
        for t in transforms {
            let data = vectors_from(vec![col.iter().map(|&x| t(x)).collect()], &labels);
            let refs: Vec<&FeatureVector> = data.iter().collect();
            let ranked = chi2_rank(&refs, Task::ReplyTime, 10).unwrap();
            let (_, score) = ranked.iter().find(|&&(f, _)| f == 0).copied().unwrap();
            scores.push(score);
        }
        assert!((scores[0] - scores[1]).abs() < 1e-9);
        assert!((scores[0] - scores[2]).abs() < 1e-9);
    }

    #[test]
    fn informative_feature_outranks_noise() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 600;
        let labels: Vec<u8> = (0..n).map(|i| (i % 3) as u8).collect();
        let informative: Vec<f64> = labels
            .iter()
            .map(|&l| f64::from(l) * 2.0 + rng.random::<f64>() * 0.5)
            .collect();
        let noise: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let data = vectors_from(vec![noise, informative], &labels);
        let refs: Vec<&FeatureVector> = data.iter().collect();
        let ranked = chi2_rank(&refs, Task::ReplyTime, 10).unwrap();
        assert_eq!(ranked[0].0, 1, "informative feature must rank first");
        assert!(ranked[0].1 > 10.0 * ranked.iter().find(|&&(f, _)| f == 0).unwrap().1);
    }

    #[test]
    fn top_k_bounds() {
        let catalog = FeatureCatalog::default();
        let ranked: Vec<(usize, f64)> = (0..83).map(|i| (i, (83 - i) as f64)).collect();
        assert!(top_k_selection(&ranked, 0, &catalog).is_err());
        assert!(top_k_selection(&ranked, 84, &catalog).is_err());
        let identity = top_k_selection(&ranked, 83, &catalog).unwrap();
        assert_eq!(identity.indices.len(), 83);
        let one = top_k_selection(&ranked, 1, &catalog).unwrap();
        assert_eq!(one.catalog.len(), 1);
        let projected = one.project_values(&(0..83).map(f64::from).collect::<Vec<_>>());
        assert_eq!(projected, vec![0.0]);
    }

    #[test]
    fn missing_values_form_their_own_bin() {
        // feature: NaN exactly when class==1; perfectly informative
        let labels: Vec<u8> = (0..100).map(|i| (i % 2) as u8).collect();
        let col: Vec<f64> = labels
            .iter()
            .map(|&l| if l == 1 { f64::NAN } else { 1.0 })
            .collect();
        let data = vectors_from(vec![col], &labels);
        let refs: Vec<&FeatureVector> = data.iter().collect();
        let ranked = chi2_rank(&refs, Task::ReplyTime, 10).unwrap();
        assert_eq!(ranked[0].0, 0);
        assert!((ranked[0].1 - 100.0).abs() < 1e-6);
    }
}

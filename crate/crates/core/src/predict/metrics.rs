//! Evaluation: accuracy, weighted one-vs-rest AUC, RMSE, confusion
//! matrix, history baselines, and the two-class variant that drops the
//! middle class.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{class_value, predict, Model, PredictError, Task};
use crate::features::{FeatureMatrix, FeatureVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineAccuracies {
    /// Always predict the most frequent training class.
    pub majority: f64,
    /// Predict the class of the replier's previous reply in the dyad.
    pub last_reply: f64,
    /// Predict the replier's modal historical class (ties -> the class
    /// used more recently).
    pub most_used: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoClassReport {
    /// Accuracy over test events of the first and last class only,
    /// deciding by the larger of the two predicted probabilities.
    pub accuracy: f64,
    /// Share of the larger of the two classes in that subset.
    pub majority_baseline: f64,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub class_names: Vec<String>,
    pub n_test: usize,
    pub accuracy: f64,
    /// One-vs-rest AUC averaged with class-support weights; classes
    /// absent from the test set (or covering it entirely) are skipped.
    pub weighted_auc: f64,
    /// RMSE over classes encoded as equally spaced reals in [0, 1].
    pub rmse: f64,
    /// `confusion[true_class][predicted_class]`.
    pub confusion: Vec<Vec<u32>>,
    pub baselines: BaselineAccuracies,
    /// Present for three-class tasks only.
    pub two_class: Option<TwoClassReport>,
}

/// Mann-Whitney AUC with average-rank tie handling. `None` when either
/// class is empty.
fn auc_binary(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n = scores.len();
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0usize;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks are 1-based; ties share the average rank
        let avg_rank = (i + j + 2) as f64 / 2.0;
        for &s in &order[i..=j] {
            if positive[s] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let auc = (rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0) / (n_pos as f64 * n_neg as f64);
    Some(auc)
}

/// Evaluates a model on test vectors. Baseline accuracies are computed
/// separately (they need dyad history) and embedded in the report.
pub fn evaluate(
    model: &Model,
    test: &[&FeatureVector],
    baselines: BaselineAccuracies,
) -> Result<EvalReport, PredictError> {
    if test.is_empty() {
        return Err(PredictError::EmptyTestSet);
    }
    let n_classes = model.n_classes;
    let mut confusion = vec![vec![0u32; n_classes]; n_classes];
    let mut correct = 0usize;
    let mut sq_err = 0.0f64;
    let mut probs_all: Vec<Vec<f64>> = Vec::with_capacity(test.len());
    let mut truth: Vec<u8> = Vec::with_capacity(test.len());
    for v in test {
        let (pred, probs) = predict(model, &v.values)?;
        let t = v.label(model.task);
        confusion[t as usize][pred as usize] += 1;
        if pred == t {
            correct += 1;
        }
        let d = class_value(pred, n_classes) - class_value(t, n_classes);
        sq_err += d * d;
        probs_all.push(probs);
        truth.push(t);
    }
    let n_test = test.len();
    let accuracy = correct as f64 / n_test as f64;
    let rmse = (sq_err / n_test as f64).sqrt();

    let mut auc_weighted = 0.0f64;
    let mut weight_total = 0.0f64;
    for c in 0..n_classes {
        let scores: Vec<f64> = probs_all.iter().map(|p| p[c]).collect();
        let positive: Vec<bool> = truth.iter().map(|&t| t as usize == c).collect();
        if let Some(auc) = auc_binary(&scores, &positive) {
            let support = positive.iter().filter(|&&p| p).count() as f64;
            auc_weighted += auc * support;
            weight_total += support;
        }
    }
    let weighted_auc = if weight_total > 0.0 {
        auc_weighted / weight_total
    } else {
        0.0
    };

    let two_class = if n_classes == 3 {
        let last = n_classes - 1;
        let subset: Vec<(usize, u8)> = truth
            .iter()
            .enumerate()
            .filter(|(_, &t)| t == 0 || t as usize == last)
            .map(|(i, &t)| (i, t))
            .collect();
        if subset.is_empty() {
            None
        } else {
            let mut correct2 = 0usize;
            let mut count0 = 0usize;
            for &(i, t) in &subset {
                let pred = if probs_all[i][0] >= probs_all[i][last] {
                    0
                } else {
                    last as u8
                };
                if pred == t {
                    correct2 += 1;
                }
                if t == 0 {
                    count0 += 1;
                }
            }
            let n2 = subset.len();
            Some(TwoClassReport {
                accuracy: correct2 as f64 / n2 as f64,
                majority_baseline: count0.max(n2 - count0) as f64 / n2 as f64,
                n_test: n2,
            })
        }
    } else {
        None
    };

    Ok(EvalReport {
        task: model.task,
        class_names: model.scheme.class_names().iter().map(|s| s.to_string()).collect(),
        n_test,
        accuracy,
        weighted_auc,
        rmse,
        confusion,
        baselines,
        two_class,
    })
}

/// Accuracies of the majority / last-reply / most-used baselines over
/// the test events of a split feature matrix.
///
/// History baselines condition on the dyad: the replier's previous
/// replies within the same pair, strictly earlier in time. Events with
/// no dyad history fall back to the replier's cross-dyad history when
/// `global_fallback` is set, then to the majority class.
pub fn baselines(matrix: &FeatureMatrix, task: Task, global_fallback: bool) -> BaselineAccuracies {
    // majority class of the training split
    let mut train_counts: HashMap<u8, usize> = HashMap::new();
    for v in matrix.train_vectors() {
        *train_counts.entry(v.label(task)).or_default() += 1;
    }
    let majority_class = train_counts
        .iter()
        .max_by(|a, b| (a.1, std::cmp::Reverse(a.0)).cmp(&(b.1, std::cmp::Reverse(b.0))))
        .map(|(&c, _)| c)
        .unwrap_or(0);

    // replier -> chronological (ts, label) across all dyads
    let mut global_hist: HashMap<&str, Vec<(i64, u8)>> = HashMap::new();
    if global_fallback {
        let mut all: Vec<&FeatureVector> = matrix.dyads.iter().flat_map(|d| d.vectors.iter()).collect();
        all.sort_by_key(|v| v.event_timestamp_utc);
        for v in all {
            global_hist
                .entry(v.replier())
                .or_default()
                .push((v.event_timestamp_utc, v.label(task)));
        }
    }

    let mut n_test = 0usize;
    let mut majority_hits = 0usize;
    let mut last_hits = 0usize;
    let mut most_used_hits = 0usize;
    for dyad in &matrix.dyads {
        for (i, v) in dyad.vectors.iter().enumerate() {
            if i < dyad.n_train {
                continue;
            }
            n_test += 1;
            let label = v.label(task);
            if label == majority_class {
                majority_hits += 1;
            }

            // strictly earlier events by the same replier in this dyad
            let hist: Vec<u8> = dyad.vectors[..i]
                .iter()
                .filter(|h| {
                    h.replier_side == v.replier_side
                        && h.event_timestamp_utc < v.event_timestamp_utc
                })
                .map(|h| h.label(task))
                .collect();
            let fallback: Vec<u8> = if hist.is_empty() && global_fallback {
                global_hist
                    .get(v.replier())
                    .map(|seq| {
                        seq.iter()
                            .filter(|(ts, _)| *ts < v.event_timestamp_utc)
                            .map(|&(_, l)| l)
                            .collect()
                    })
                    .unwrap_or_default()
            } else {
                Vec::new()
            };
            let effective = if hist.is_empty() { &fallback } else { &hist };

            let last_pred = effective.last().copied().unwrap_or(majority_class);
            if last_pred == label {
                last_hits += 1;
            }
            let most_used_pred = modal_most_recent(effective).unwrap_or(majority_class);
            if most_used_pred == label {
                most_used_hits += 1;
            }
        }
    }
    let denom = n_test.max(1) as f64;
    BaselineAccuracies {
        majority: majority_hits as f64 / denom,
        last_reply: last_hits as f64 / denom,
        most_used: most_used_hits as f64 / denom,
    }
}

/// Modal class of a chronological label sequence; ties resolve to the
/// tied class used most recently.
fn modal_most_recent(labels: &[u8]) -> Option<u8> {
    if labels.is_empty() {
        return None;
    }
    let mut counts: HashMap<u8, usize> = HashMap::new();
    let mut last_seen: HashMap<u8, usize> = HashMap::new();
    for (i, &l) in labels.iter().enumerate() {
        *counts.entry(l).or_default() += 1;
        last_seen.insert(l, i);
    }
    counts
        .iter()
        .max_by_key(|(&l, &c)| (c, last_seen[&l]))
        .map(|(&l, _)| l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_perfect_and_inverted() {
        let scores = [0.9, 0.8, 0.2, 0.1];
        let pos = [true, true, false, false];
        assert_eq!(auc_binary(&scores, &pos), Some(1.0));
        let inv = [false, false, true, true];
        assert_eq!(auc_binary(&scores, &inv), Some(0.0));
    }

    #[test]
    fn auc_handles_ties() {
        // all equal scores: AUC 0.5
        let scores = [0.5, 0.5, 0.5, 0.5];
        let pos = [true, false, true, false];
        assert_eq!(auc_binary(&scores, &pos), Some(0.5));
    }

    #[test]
    fn auc_none_when_single_class() {
        assert_eq!(auc_binary(&[0.1, 0.2], &[true, true]), None);
    }

    #[test]
    fn modal_ties_resolve_to_more_recent() {
        assert_eq!(modal_most_recent(&[0, 1, 0, 1]), Some(1));
        assert_eq!(modal_most_recent(&[1, 0, 1, 0]), Some(0));
        assert_eq!(modal_most_recent(&[2, 2, 0]), Some(2));
        assert_eq!(modal_most_recent(&[]), None);
    }
}

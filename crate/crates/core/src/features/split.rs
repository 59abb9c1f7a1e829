//! Per-pair temporal train/test split.

/// Statistics of one split pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SplitStats {
    /// Dyads with fewer than four events: everything goes to training.
    pub degenerate_dyads: usize,
    pub train_events: usize,
    pub test_events: usize,
}

use super::FeatureMatrix;

/// Sends the first `ceil(train_fraction * n)` events of each dyad to
/// training and the rest to test. Dyads with fewer than four events are
/// flagged and kept entirely in training.
pub fn split_train_test(matrix: &mut FeatureMatrix, train_fraction: f64) -> SplitStats {
    let mut stats = SplitStats::default();
    for dyad in &mut matrix.dyads {
        let n = dyad.vectors.len();
        dyad.n_train = if n < 4 {
            if n > 0 {
                stats.degenerate_dyads += 1;
            }
            n
        } else {
            ((n as f64 * train_fraction).ceil() as usize).min(n)
        };
        stats.train_events += dyad.n_train;
        stats.test_events += n - dyad.n_train;
    }
    stats
}

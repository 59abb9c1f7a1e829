//! Figure-equivalent output container: a binned curve with one statistic
//! and a spread per bin.

use serde::{Deserialize, Serialize};

use super::stats;

/// Which statistic a curve carries per bin: medians come with
/// 25th/75th percentiles, means with a 95% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StatKind {
    Median,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveBin {
    pub label: String,
    pub value: f64,
    /// 25th percentile (median curves) or CI lower bound (mean curves).
    pub lo: f64,
    /// 75th percentile or CI upper bound.
    pub hi: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryCurve {
    pub name: String,
    pub kind: StatKind,
    pub bins: Vec<CurveBin>,
}

impl SummaryCurve {
    /// Builds a curve from per-bin samples, dropping empty bins.
    pub fn from_groups(
        name: impl Into<String>,
        kind: StatKind,
        groups: Vec<(String, Vec<f64>)>,
    ) -> SummaryCurve {
        let bins = groups
            .into_iter()
            .filter(|(_, values)| !values.is_empty())
            .map(|(label, mut values)| match kind {
                StatKind::Median => {
                    stats::sort(&mut values);
                    CurveBin {
                        label,
                        value: stats::median_sorted(&values),
                        lo: stats::percentile_sorted(&values, 0.25),
                        hi: stats::percentile_sorted(&values, 0.75),
                        n: values.len(),
                    }
                }
                StatKind::Mean => {
                    let m = stats::mean(&values);
                    let half = stats::ci95_half(stats::population_sd(&values, m), values.len());
                    CurveBin {
                        label,
                        value: m,
                        lo: m - half,
                        hi: m + half,
                        n: values.len(),
                    }
                }
            })
            .collect();
        SummaryCurve {
            name: name.into(),
            kind,
            bins,
        }
    }

    pub fn total_n(&self) -> usize {
        self.bins.iter().map(|b| b.n).sum()
    }

    pub fn bin(&self, label: &str) -> Option<&CurveBin> {
        self.bins.iter().find(|b| b.label == label)
    }
}

/// Bin edges over a numeric axis. `edges` has `n_bins + 1` entries; bin
/// `i` covers `[edges[i], edges[i+1])` with the final bin closed.
#[derive(Debug, Clone, PartialEq)]
pub struct BinGrid {
    pub edges: Vec<f64>,
    pub log: bool,
}

impl BinGrid {
    pub fn linear(lo: f64, hi: f64, n_bins: usize) -> BinGrid {
        assert!(n_bins >= 1);
        if lo >= hi {
            return BinGrid {
                edges: vec![lo, lo],
                log: false,
            };
        }
        let step = (hi - lo) / n_bins as f64;
        let edges = (0..=n_bins).map(|i| lo + step * i as f64).collect();
        BinGrid { edges, log: false }
    }

    /// Geometrically spaced edges; `lo` must be positive.
    pub fn log_spaced(lo: f64, hi: f64, n_bins: usize) -> BinGrid {
        assert!(n_bins >= 1);
        assert!(lo > 0.0);
        if lo >= hi {
            return BinGrid {
                edges: vec![lo, lo],
                log: true,
            };
        }
        let ratio = (hi / lo).ln() / n_bins as f64;
        let edges = (0..=n_bins).map(|i| lo * (ratio * i as f64).exp()).collect();
        BinGrid { edges, log: true }
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() - 1
    }

    /// Bin index for a value, clamped into range (values below the first
    /// edge land in bin 0, values at or above the last edge in the final
    /// bin).
    pub fn index(&self, x: f64) -> usize {
        let n = self.n_bins();
        if n == 0 {
            return 0;
        }
        let i = self.edges[1..n].partition_point(|&e| e <= x);
        i.min(n - 1)
    }

    /// True when `x` falls outside `[first_edge, last_edge]`.
    pub fn out_of_range(&self, x: f64) -> bool {
        x < self.edges[0] || x > *self.edges.last().unwrap()
    }

    pub fn label(&self, i: usize) -> String {
        format!("{:.6}..{:.6}", self.edges[i], self.edges[i + 1])
    }

    pub fn bounds(&self, i: usize) -> (f64, f64) {
        (self.edges[i], self.edges[i + 1])
    }
}

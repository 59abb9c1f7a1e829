//! Descriptive statistics of replying behavior: distributions, thread
//! evolution, circadian/demographic/device/attachment breakdowns, email
//! load and overload, and within-thread synchronization.
//!
//! All operations are fold-style aggregations over immutable inputs with
//! deterministic output order; grouped accumulations use ordered maps so
//! results are independent of input permutation.

mod curves;
mod descriptive;
mod load;
mod stats;
mod sync;

pub use curves::{BinGrid, CurveBin, StatKind, SummaryCurve};
pub use descriptive::{
    circadian_stats, distribution, group_stats, step_stats, time_length_correlation, Circadian,
    Distribution, GroupBy, GroupStats, GroupSummary, Measure, StepStats, TimeByLength,
    MAX_THREAD_STEPS,
};
pub use load::{
    activity_tertiles, compute_daily_loads, compute_daily_loads_with_contacts, contact_sets,
    overload_curves, DailyLoad, DayCounts, LoadFamily, LoadTable, OverloadCurves,
    OverloadOptions, Tertile,
};
pub use stats::{ci95_half, mean, median, population_sd, summarize, Summary};
pub use sync::{
    content_similarity_curve, dyad_from_events, marker_coordination, synchronization_curve,
    ContentSimilarity, SyncCurve, SyncOptions,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("{0}: empty input")]
    EmptyInput(&'static str),
}

//! Descriptive reply-behavior statistics: distributions, thread-step
//! evolution, time/length correlation, circadian and group breakdowns.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::curves::{BinGrid, StatKind, SummaryCurve};
use super::stats::{self, Summary};
use super::AnalyticsError;
use crate::profile::{Gender, ProfileTable};
use crate::threading::{Dyad, ReplyEvent};
use crate::time::DayOfWeek;

/// Which reply measure an analysis runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measure {
    ReplyTime,
    ReplyLength,
}

impl Measure {
    pub fn of(self, ev: &ReplyEvent) -> f64 {
        match self {
            Measure::ReplyTime => ev.reply_time_minutes,
            Measure::ReplyLength => f64::from(ev.reply_length_words),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Measure::ReplyTime => "reply_time",
            Measure::ReplyLength => "reply_length",
        }
    }
}

/// Histogram (PDF and CDF) plus summary statistics of one measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub measure: Measure,
    pub log_binning: bool,
    /// `n_bins + 1` edges; bin i covers `[edges[i], edges[i+1])`, final
    /// bin closed. With log binning, non-positive values join bin 0.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub pdf: Vec<f64>,
    pub cdf: Vec<f64>,
    pub summary: Summary,
}

/// PDF/CDF tables plus mean/median/sd of reply time or length.
pub fn distribution(
    events: &[&ReplyEvent],
    measure: Measure,
    log_binning: bool,
    n_bins: usize,
) -> Result<Distribution, AnalyticsError> {
    if events.is_empty() {
        return Err(AnalyticsError::EmptyInput("distribution"));
    }
    let values: Vec<f64> = events.iter().map(|e| measure.of(e)).collect();
    let summary = stats::summarize(&values).unwrap();

    let grid = if log_binning {
        let lo = values
            .iter()
            .copied()
            .filter(|&v| v > 0.0)
            .fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo.is_finite() && hi > lo {
            BinGrid::log_spaced(lo, hi, n_bins)
        } else {
            // all values equal (or none positive): single degenerate bin
            BinGrid::linear(hi.min(0.0).min(summary.median), hi, 1)
        }
    } else {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        BinGrid::linear(lo, hi, n_bins.max(1))
    };

    let mut counts = vec![0u64; grid.n_bins()];
    for &v in &values {
        counts[grid.index(v)] += 1;
    }
    let total = values.len() as f64;
    let pdf: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let mut acc = 0.0;
    let cdf: Vec<f64> = pdf
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();

    Ok(Distribution {
        measure,
        log_binning,
        edges: grid.edges,
        counts,
        pdf,
        cdf,
        summary,
    })
}

/// Per-step medians for threads of a given length, plus the median of
/// the measure as a function of thread length. Threads with 50 or more
/// steps are excluded.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepStats {
    pub measure: Measure,
    /// One curve per thread length (number of reply events), x = step.
    pub per_length: Vec<(u32, SummaryCurve)>,
    /// x = thread length, samples = every event of threads of that length.
    pub by_thread_length: SummaryCurve,
}

pub const MAX_THREAD_STEPS: usize = 50;

pub fn step_stats(dyads: &[Dyad], measure: Measure) -> StepStats {
    // (thread length, step) -> samples
    let mut per: BTreeMap<u32, BTreeMap<u32, Vec<f64>>> = BTreeMap::new();
    let mut by_len: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for d in dyads {
        for t in &d.threads {
            let n = t.n_steps();
            if n == 0 || n >= MAX_THREAD_STEPS {
                continue;
            }
            let len = n as u32;
            for ev in &t.reply_events {
                per.entry(len)
                    .or_default()
                    .entry(ev.step)
                    .or_default()
                    .push(measure.of(ev));
                by_len.entry(len).or_default().push(measure.of(ev));
            }
        }
    }

    let per_length = per
        .into_iter()
        .map(|(len, steps)| {
            let groups = steps
                .into_iter()
                .map(|(step, values)| (step.to_string(), values))
                .collect();
            (
                len,
                SummaryCurve::from_groups(
                    format!("{}_steps_len_{len}", measure.name()),
                    StatKind::Median,
                    groups,
                ),
            )
        })
        .collect();
    let by_thread_length = SummaryCurve::from_groups(
        format!("{}_by_thread_length", measure.name()),
        StatKind::Median,
        by_len
            .into_iter()
            .map(|(len, values)| (len.to_string(), values))
            .collect(),
    );
    StepStats {
        measure,
        per_length,
        by_thread_length,
    }
}

/// Median reply time binned by the reply's own length and by the length
/// of the received message. Bins of `bin_width` words; empty bins are
/// omitted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeByLength {
    pub by_reply_length: SummaryCurve,
    pub by_received_length: SummaryCurve,
}

pub fn time_length_correlation(events: &[&ReplyEvent], bin_width: u32) -> TimeByLength {
    let bin_width = bin_width.max(1);
    let curve = |pick: &dyn Fn(&ReplyEvent) -> u32, name: &str| {
        let mut groups: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
        for ev in events {
            groups
                .entry(pick(ev) / bin_width)
                .or_default()
                .push(ev.reply_time_minutes);
        }
        SummaryCurve::from_groups(
            name,
            StatKind::Median,
            groups
                .into_iter()
                .map(|(bin, values)| {
                    let lo = bin * bin_width;
                    (format!("{lo}..{}", lo + bin_width), values)
                })
                .collect(),
        )
    };
    TimeByLength {
        by_reply_length: curve(&|e| e.reply_length_words, "reply_time_by_reply_length"),
        by_received_length: curve(&|e| e.received_length_words, "reply_time_by_received_length"),
    }
}

/// Median reply time and length by day of week and by local hour the
/// replied-to message was received.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Circadian {
    pub time_by_day: SummaryCurve,
    pub length_by_day: SummaryCurve,
    pub time_by_hour: SummaryCurve,
    pub length_by_hour: SummaryCurve,
}

pub fn circadian_stats(events: &[&ReplyEvent]) -> Circadian {
    let by_day = |measure: Measure, name: &str| {
        let mut groups: BTreeMap<DayOfWeek, Vec<f64>> = BTreeMap::new();
        for ev in events {
            groups
                .entry(ev.received_day_of_week)
                .or_default()
                .push(measure.of(ev));
        }
        SummaryCurve::from_groups(
            name,
            StatKind::Median,
            groups
                .into_iter()
                .map(|(d, values)| (d.name().to_string(), values))
                .collect(),
        )
    };
    let by_hour = |measure: Measure, name: &str| {
        let mut groups: BTreeMap<u8, Vec<f64>> = BTreeMap::new();
        for ev in events {
            groups
                .entry(ev.received_local_hour)
                .or_default()
                .push(measure.of(ev));
        }
        SummaryCurve::from_groups(
            name,
            StatKind::Median,
            groups
                .into_iter()
                .map(|(h, values)| (h.to_string(), values))
                .collect(),
        )
    };
    Circadian {
        time_by_day: by_day(Measure::ReplyTime, "reply_time_by_day"),
        length_by_day: by_day(Measure::ReplyLength, "reply_length_by_day"),
        time_by_hour: by_hour(Measure::ReplyTime, "reply_time_by_hour"),
        length_by_hour: by_hour(Measure::ReplyLength, "reply_length_by_hour"),
    }
}

/// Grouping axis for [`group_stats`]. Demographic axes use the replier's
/// profile; events without a profile fall into an "unknown" group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupBy {
    AgeGroup,
    Gender,
    Device,
    HasAttachment,
}

impl GroupBy {
    pub fn name(self) -> &'static str {
        match self {
            GroupBy::AgeGroup => "age_group",
            GroupBy::Gender => "gender",
            GroupBy::Device => "device",
            GroupBy::HasAttachment => "attachment",
        }
    }

    fn key(self, ev: &ReplyEvent, profiles: &ProfileTable) -> String {
        match self {
            GroupBy::AgeGroup => profiles
                .get(&ev.replier)
                .map(|p| p.age_group().name().to_string())
                .unwrap_or_else(|| "unknown".to_string()),
            GroupBy::Gender => profiles
                .get(&ev.replier)
                .map(|p| p.gender)
                .unwrap_or(Gender::Unknown)
                .name()
                .to_string(),
            GroupBy::Device => ev.replier_device.name().to_string(),
            GroupBy::HasAttachment => if ev.n_attachments_received > 0 {
                "with_attachment"
            } else {
                "without_attachment"
            }
            .to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub n: usize,
    pub reply_time: Summary,
    pub reply_length: Summary,
}

/// Per-group distribution summaries plus the median reply time as a
/// function of reply length within each group.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupStats {
    pub group_by: GroupBy,
    pub summaries: Vec<GroupSummary>,
    pub time_by_length: Vec<(String, SummaryCurve)>,
}

pub fn group_stats(
    events: &[&ReplyEvent],
    profiles: &ProfileTable,
    group_by: GroupBy,
    length_bin_width: u32,
) -> GroupStats {
    let bin_width = length_bin_width.max(1);
    let mut times: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut lengths: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut by_len: BTreeMap<String, BTreeMap<u32, Vec<f64>>> = BTreeMap::new();
    for ev in events {
        let key = group_by.key(ev, profiles);
        times.entry(key.clone()).or_default().push(ev.reply_time_minutes);
        lengths
            .entry(key.clone())
            .or_default()
            .push(f64::from(ev.reply_length_words));
        by_len
            .entry(key)
            .or_default()
            .entry(ev.reply_length_words / bin_width)
            .or_default()
            .push(ev.reply_time_minutes);
    }

    let summaries = times
        .iter()
        .map(|(group, t)| GroupSummary {
            group: group.clone(),
            n: t.len(),
            reply_time: stats::summarize(t).unwrap(),
            reply_length: stats::summarize(&lengths[group]).unwrap(),
        })
        .collect();
    let time_by_length = by_len
        .into_iter()
        .map(|(group, bins)| {
            let curve = SummaryCurve::from_groups(
                format!("reply_time_by_length_{group}"),
                StatKind::Median,
                bins.into_iter()
                    .map(|(bin, values)| {
                        let lo = bin * bin_width;
                        (format!("{lo}..{}", lo + bin_width), values)
                    })
                    .collect(),
            );
            (group, curve)
        })
        .collect();
    GroupStats {
        group_by,
        summaries,
        time_by_length,
    }
}

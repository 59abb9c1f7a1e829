//! Within-thread synchronization: do the two sides of a conversation
//! become more similar as it progresses?
//!
//! Each qualifying thread is divided into ten equal segments. For reply
//! time and length, per-step values are first normalized by the
//! replier's corpus-wide median (medians resist the heavy tail), and the
//! absolute difference between consecutive normalized values — one from
//! each user — is assigned to the segment of the later step. Marker
//! coordination compares usage rates between each reply and the message
//! it answers; content convergence averages cosine similarity of
//! consecutive replies.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::curves::{StatKind, SummaryCurve};
use super::descriptive::Measure;
use super::stats;
use crate::record::{EmailRecord, MarkerCategory};
use crate::threading::{Dyad, Thread};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SyncOptions {
    /// Threads with fewer reply events than this are skipped.
    pub min_steps: usize,
    pub segments: usize,
}

impl Default for SyncOptions {
    fn default() -> Self {
        SyncOptions {
            min_steps: 10,
            segments: 10,
        }
    }
}

/// Segment of the (1-based) step `s` inside an `n`-step thread.
fn segment(s: usize, n: usize, segments: usize) -> usize {
    (segments * (s - 1) / n).min(segments - 1)
}

/// Accumulates per-thread segment means, then reports mean and 95% CI
/// across threads per segment.
struct SegmentAccumulator {
    per_thread_means: Vec<Vec<f64>>,
    sums: Vec<f64>,
    counts: Vec<usize>,
}

impl SegmentAccumulator {
    fn new(segments: usize) -> SegmentAccumulator {
        SegmentAccumulator {
            per_thread_means: vec![Vec::new(); segments],
            sums: vec![0.0; segments],
            counts: vec![0; segments],
        }
    }

    fn add(&mut self, segment: usize, value: f64) {
        self.sums[segment] += value;
        self.counts[segment] += 1;
    }

    /// Closes out one thread: every segment it touched contributes its
    /// mean as one sample.
    fn finish_thread(&mut self) {
        for s in 0..self.sums.len() {
            if self.counts[s] > 0 {
                self.per_thread_means[s].push(self.sums[s] / self.counts[s] as f64);
            }
            self.sums[s] = 0.0;
            self.counts[s] = 0;
        }
    }

    fn curve(self, name: &str) -> SummaryCurve {
        let groups = self
            .per_thread_means
            .into_iter()
            .enumerate()
            .map(|(i, values)| ((i + 1).to_string(), values))
            .collect();
        SummaryCurve::from_groups(name, StatKind::Mean, groups)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyncCurve {
    pub measure: Measure,
    pub curve: SummaryCurve,
    pub threads_used: usize,
    /// Users whose corpus-wide median of the measure was not positive;
    /// their threads are skipped.
    pub users_skipped_zero_median: usize,
    pub threads_skipped: usize,
}

/// Corpus-wide median of the measure per replier.
fn replier_medians(dyads: &[Dyad], measure: Measure) -> HashMap<&str, f64> {
    let mut values: HashMap<&str, Vec<f64>> = HashMap::new();
    for d in dyads {
        for t in &d.threads {
            for ev in &t.reply_events {
                values
                    .entry(ev.replier.as_str())
                    .or_default()
                    .push(measure.of(ev));
            }
        }
    }
    values
        .into_iter()
        .map(|(user, vals)| (user, stats::median(&vals).unwrap()))
        .collect()
}

/// Ten-segment mean absolute difference of median-normalized consecutive
/// reply values, with normal-approximation 95% CIs across threads.
pub fn synchronization_curve(dyads: &[Dyad], measure: Measure, opts: &SyncOptions) -> SyncCurve {
    let medians = replier_medians(dyads, measure);
    let users_skipped = medians.values().filter(|&&m| m <= 0.0).count();

    let mut acc = SegmentAccumulator::new(opts.segments);
    let mut threads_used = 0usize;
    let mut threads_skipped = 0usize;
    for d in dyads {
        let usable = |user: &str| medians.get(user).copied().unwrap_or(0.0) > 0.0;
        for t in &d.threads {
            let n = t.n_steps();
            if n < opts.min_steps.max(2) {
                continue;
            }
            if !usable(&d.user_a) || !usable(&d.user_b) {
                threads_skipped += 1;
                continue;
            }
            let normalized: Vec<f64> = t
                .reply_events
                .iter()
                .map(|ev| measure.of(ev) / medians[ev.replier.as_str()])
                .collect();
            for s in 2..=n {
                let diff = (normalized[s - 1] - normalized[s - 2]).abs();
                acc.add(segment(s, n, opts.segments), diff);
            }
            acc.finish_thread();
            threads_used += 1;
        }
    }
    SyncCurve {
        measure,
        curve: acc.curve(&format!("{}_synchronization", measure.name())),
        threads_used,
        users_skipped_zero_median: users_skipped,
        threads_skipped,
    }
}

/// Per-marker ten-segment curves of |usage rate of the reply − usage
/// rate of the message replied to|. Pairs where either side has an empty
/// body are skipped (the rate is undefined).
pub fn marker_coordination(
    records: &[EmailRecord],
    dyads: &[Dyad],
    opts: &SyncOptions,
) -> Vec<(MarkerCategory, SummaryCurve)> {
    let mut accs: Vec<SegmentAccumulator> = MarkerCategory::ALL
        .iter()
        .map(|_| SegmentAccumulator::new(opts.segments))
        .collect();
    for d in dyads {
        for t in &d.threads {
            let n = t.n_steps();
            if n < opts.min_steps.max(1) {
                continue;
            }
            for ev in &t.reply_events {
                let reply = &records[ev.reply_msg_idx];
                let received = &records[ev.received_msg_idx];
                if reply.word_count == 0 || received.word_count == 0 {
                    continue;
                }
                let seg = segment(ev.step as usize, n, opts.segments);
                for cat in MarkerCategory::ALL {
                    let diff = (reply.marker_rate(cat).unwrap()
                        - received.marker_rate(cat).unwrap())
                    .abs();
                    accs[cat.index()].add(seg, diff);
                }
            }
            for acc in &mut accs {
                acc.finish_thread();
            }
        }
    }
    MarkerCategory::ALL
        .iter()
        .zip(accs)
        .map(|(&cat, acc)| {
            let curve = acc.curve(&format!("marker_{}_coordination", cat.name()));
            (cat, curve)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContentSimilarity {
    pub curve: SummaryCurve,
    /// Consecutive-reply pairs skipped because a vector was missing or
    /// zero (undefined cosine).
    pub pairs_skipped: usize,
}

/// Ten-segment mean cosine similarity of consecutive replies. `cosine`
/// returns `None` for unknown or zero vectors; such pairs are skipped.
pub fn content_similarity_curve(
    dyads: &[Dyad],
    opts: &SyncOptions,
    mut cosine: impl FnMut(&str, &str) -> Option<f64>,
) -> ContentSimilarity {
    let mut acc = SegmentAccumulator::new(opts.segments);
    let mut pairs_skipped = 0usize;
    for d in dyads {
        for t in &d.threads {
            let n = t.n_steps();
            if n < opts.min_steps.max(2) {
                continue;
            }
            for s in 2..=n {
                let prev = &t.reply_events[s - 2].reply_message_id;
                let cur = &t.reply_events[s - 1].reply_message_id;
                match cosine(prev, cur) {
                    Some(sim) => acc.add(segment(s, n, opts.segments), sim),
                    None => pairs_skipped += 1,
                }
            }
            acc.finish_thread();
        }
    }
    ContentSimilarity {
        curve: acc.curve("content_similarity"),
        pairs_skipped,
    }
}

/// Helper for tests and synthetic fixtures: a dyad with one thread whose
/// reply events are supplied directly.
pub fn dyad_from_events(
    user_a: &str,
    user_b: &str,
    events: Vec<crate::threading::ReplyEvent>,
) -> Dyad {
    let (mut a_to_b, mut b_to_a) = (0, 0);
    for ev in &events {
        if ev.replier == user_a {
            a_to_b += 1;
        } else {
            b_to_a += 1;
        }
    }
    Dyad {
        user_a: user_a.to_string(),
        user_b: user_b.to_string(),
        threads: vec![Thread {
            subject_root: "t".to_string(),
            message_idx: Vec::new(),
            reply_events: events,
            span_hours: 0.0,
        }],
        replies_a_to_b: a_to_b,
        replies_b_to_a: b_to_a,
    }
}

//! Feature assembly: one 83-vector per reply event.
//!
//! Events are processed in global reply-time order while a record sweep
//! maintains, per user, day-bucketed activity aggregates from all
//! records with a strictly earlier timestamp. A feature therefore
//! depends only on records before the event; per-day statistics
//! additionally exclude the event's own calendar day, so they describe
//! completed days.

use std::collections::{BTreeMap, HashMap, HashSet};

use chrono::NaiveDate;

use super::{DyadVectors, FeatureCatalog, FeatureMatrix, FeatureVector, MISSING};
use crate::predict::{ClassScheme, Task};
use crate::profile::{Gender, ProfileTable};
use crate::record::EmailRecord;
use crate::threading::Dyad;
use crate::time;

#[derive(Debug, Clone)]
pub struct AssembleOptions {
    pub time_scheme: ClassScheme,
    pub length_scheme: ClassScheme,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        AssembleOptions {
            time_scheme: ClassScheme::default_for(Task::ReplyTime),
            length_scheme: ClassScheme::default_for(Task::ReplyLength),
        }
    }
}

#[derive(Debug, Default)]
struct DayAgg {
    received: u32,
    sent: u32,
    replied: u32,
    words_received: u64,
    words_sent: u64,
    words_replied: u64,
    contacts_emailed: HashSet<u32>,
    contacts_received_from: HashSet<u32>,
}

/// 9 per-day measures x (mean, median, max).
const DAY_MEASURES: usize = 9;
type DayStats = [f64; DAY_MEASURES * 3];

#[derive(Debug, Default)]
struct UserState {
    days: BTreeMap<NaiveDate, DayAgg>,
    sent_to_ever: HashSet<u32>,
    /// date -> number of counterparts first emailed that day.
    first_contact: BTreeMap<NaiveDate, u32>,
    version: u64,
    cache: Option<(u64, NaiveDate, DayStats)>,
}

impl UserState {
    fn day_stats(&mut self, cutoff: NaiveDate) -> DayStats {
        if let Some((version, date, stats)) = &self.cache {
            if *version == self.version && *date == cutoff {
                return *stats;
            }
        }
        let stats = self.compute_day_stats(cutoff);
        self.cache = Some((self.version, cutoff, stats));
        stats
    }

    fn compute_day_stats(&self, cutoff: NaiveDate) -> DayStats {
        let mut per_day: [Vec<f64>; DAY_MEASURES] = Default::default();
        let mut cum_contacts = 0u32;
        let mut fc = self.first_contact.range(..cutoff).peekable();
        for (&date, agg) in self.days.range(..cutoff) {
            while let Some(&(&d, &c)) = fc.peek() {
                if d <= date {
                    cum_contacts += c;
                    fc.next();
                } else {
                    break;
                }
            }
            per_day[0].push(f64::from(agg.received));
            per_day[1].push(f64::from(agg.sent));
            per_day[2].push(f64::from(agg.replied));
            per_day[3].push(agg.contacts_emailed.len() as f64);
            per_day[4].push(agg.contacts_received_from.len() as f64);
            per_day[5].push(f64::from(cum_contacts));
            per_day[6].push(agg.words_received as f64);
            per_day[7].push(agg.words_sent as f64);
            per_day[8].push(agg.words_replied as f64);
        }
        let mut out = [MISSING; DAY_MEASURES * 3];
        for (m, values) in per_day.iter_mut().enumerate() {
            if values.is_empty() {
                continue;
            }
            values.sort_unstable_by(f64::total_cmp);
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let median = if values.len() % 2 == 1 {
                values[values.len() / 2]
            } else {
                (values[values.len() / 2 - 1] + values[values.len() / 2]) / 2.0
            };
            out[m * 3] = mean;
            out[m * 3 + 1] = median;
            out[m * 3 + 2] = *values.last().unwrap();
        }
        out
    }
}

#[derive(Debug, Default, Clone)]
struct PairHist {
    times: Vec<f64>,
    lengths: Vec<f64>,
}

/// [mean, median, last, second_last, third_last] of a chronological
/// value list; entries that do not exist yet are NaN.
fn hist_stats(values: &[f64]) -> [f64; 5] {
    let mut out = [MISSING; 5];
    let n = values.len();
    if n == 0 {
        return out;
    }
    out[0] = values.iter().sum::<f64>() / n as f64;
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    out[1] = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    out[2] = values[n - 1];
    if n >= 2 {
        out[3] = values[n - 2];
    }
    if n >= 3 {
        out[4] = values[n - 3];
    }
    out
}

#[derive(Debug, Default)]
struct PairState {
    /// (ts, side, time, length) of events awaiting a strictly later
    /// event before entering history.
    pending: Vec<(i64, u8, f64, f64)>,
    hist: [PairHist; 2],
}

impl PairState {
    fn flush_before(&mut self, ts: i64) {
        let keep = self.pending.iter().position(|&(t, _, _, _)| t >= ts);
        let drain_to = keep.unwrap_or(self.pending.len());
        for (_, side, time, length) in self.pending.drain(..drain_to) {
            let h = &mut self.hist[usize::from(side)];
            h.times.push(time);
            h.lengths.push(length);
        }
    }
}

/// Assembles the feature matrix for every reply event of `dyads`.
/// `records` must be the full parsed record set; activity statistics
/// deliberately look beyond the dyad-filtered corpus.
pub fn assemble_features(
    records: &[EmailRecord],
    dyads: &[Dyad],
    profiles: &ProfileTable,
    opts: &AssembleOptions,
) -> FeatureMatrix {
    let catalog = FeatureCatalog::default();

    let mut intern: HashMap<&str, u32> = HashMap::new();
    for rec in records {
        for id in [rec.sender_id.as_str(), rec.recipient_id.as_str()] {
            let next = intern.len() as u32;
            intern.entry(id).or_insert(next);
        }
    }
    let mut states: Vec<UserState> = (0..intern.len()).map(|_| UserState::default()).collect();
    let mut first_mobile: Vec<Option<i64>> = vec![None; intern.len()];

    let mut record_order: Vec<usize> = (0..records.len()).collect();
    record_order.sort_by(|&a, &b| {
        (records[a].timestamp_utc, &records[a].message_id)
            .cmp(&(records[b].timestamp_utc, &records[b].message_id))
    });

    struct TaskRef<'a> {
        dyad: usize,
        thread: usize,
        ev: usize,
        ts: i64,
        mid: &'a str,
    }
    let mut tasks: Vec<TaskRef> = Vec::new();
    for (di, dyad) in dyads.iter().enumerate() {
        for (ti, thread) in dyad.threads.iter().enumerate() {
            for (ei, ev) in thread.reply_events.iter().enumerate() {
                tasks.push(TaskRef {
                    dyad: di,
                    thread: ti,
                    ev: ei,
                    ts: ev.reply_timestamp_utc,
                    mid: &ev.reply_message_id,
                });
            }
        }
    }
    tasks.sort_by(|a, b| (a.ts, a.mid).cmp(&(b.ts, b.mid)));

    let mut pair_states: Vec<PairState> = (0..dyads.len()).map(|_| PairState::default()).collect();
    let mut out: Vec<Vec<FeatureVector>> = (0..dyads.len()).map(|_| Vec::new()).collect();
    let mut ptr = 0usize;

    for task in &tasks {
        while ptr < record_order.len() {
            let rec = &records[record_order[ptr]];
            if rec.timestamp_utc >= task.ts {
                break;
            }
            apply_record(rec, &intern, &mut states, &mut first_mobile);
            ptr += 1;
        }

        let dyad = &dyads[task.dyad];
        let ev = &dyad.threads[task.thread].reply_events[task.ev];
        let pair = &mut pair_states[task.dyad];
        pair.flush_before(task.ts);

        let replier_side: u8 = if ev.replier == dyad.user_a { 0 } else { 1 };
        let replier = ev.replier.as_str();
        let receiver = ev.receiver.as_str();
        let cutoff = time::local_date(ev.reply_timestamp_utc, ev.reply_tz_offset_minutes)
            .expect("record timestamps validated at parse time");

        let mut values = Vec::with_capacity(super::FEATURE_COUNT);
        for side in [replier_side, 1 - replier_side] {
            let h = &pair.hist[usize::from(side)];
            values.extend_from_slice(&hist_stats(&h.times));
            values.extend_from_slice(&hist_stats(&h.lengths));
        }
        for user in [replier, receiver] {
            match profiles.get(user) {
                Some(p) => {
                    values.push(f64::from(p.age_years));
                    values.push(match p.gender {
                        Gender::F => 0.0,
                        Gender::M => 1.0,
                        Gender::Unknown => MISSING,
                    });
                }
                None => {
                    values.push(MISSING);
                    values.push(MISSING);
                }
            }
        }
        values.push(f64::from(ev.step));

        let replier_uid = intern[replier] as usize;
        let receiver_uid = intern[receiver] as usize;
        let rs = states[replier_uid].day_stats(cutoff);
        let cs = states[receiver_uid].day_stats(cutoff);
        for (lo, hi) in [(0, 9), (9, 18), (18, 27)] {
            values.extend_from_slice(&rs[lo..hi]);
            values.extend_from_slice(&cs[lo..hi]);
        }

        values.push(f64::from(ev.received_local_hour));
        values.push(f64::from(ev.received_day_of_week.index()));
        values.push(f64::from(ev.n_attachments_received));
        values.push(if first_mobile[replier_uid].is_some_and(|t| t < task.ts) {
            1.0
        } else {
            0.0
        });
        debug_assert_eq!(values.len(), super::FEATURE_COUNT);

        let time_class = opts
            .time_scheme
            .bin_time(ev.reply_time_minutes)
            .expect("reply events carry positive reply times");
        let length_class = opts.length_scheme.bin_length(ev.reply_length_words);

        out[task.dyad].push(FeatureVector {
            dyad_a: dyad.user_a.clone(),
            dyad_b: dyad.user_b.clone(),
            reply_message_id: ev.reply_message_id.clone(),
            event_timestamp_utc: ev.reply_timestamp_utc,
            values,
            time_class,
            length_class,
            is_last: ev.is_last,
            replier_side,
        });
        pair.pending.push((
            task.ts,
            replier_side,
            ev.reply_time_minutes,
            f64::from(ev.reply_length_words),
        ));
    }

    let dyad_vectors = dyads
        .iter()
        .zip(out)
        .map(|(d, vectors)| DyadVectors {
            user_a: d.user_a.clone(),
            user_b: d.user_b.clone(),
            n_train: vectors.len(),
            vectors,
        })
        .collect();
    FeatureMatrix {
        catalog,
        dyads: dyad_vectors,
    }
}

fn apply_record(
    rec: &EmailRecord,
    intern: &HashMap<&str, u32>,
    states: &mut [UserState],
    first_mobile: &mut [Option<i64>],
) {
    let sender = intern[rec.sender_id.as_str()];
    let recipient = intern[rec.recipient_id.as_str()];
    let date = rec
        .sender_local_date()
        .expect("record timestamps validated at parse time");
    let wc = u64::from(rec.word_count);

    let s = &mut states[sender as usize];
    let day = s.days.entry(date).or_default();
    day.sent += 1;
    day.words_sent += wc;
    if rec.is_reply_subject {
        day.replied += 1;
        day.words_replied += wc;
    }
    day.contacts_emailed.insert(recipient);
    if s.sent_to_ever.insert(recipient) {
        *s.first_contact.entry(date).or_default() += 1;
    }
    s.version += 1;
    if rec.device.is_mobile() && first_mobile[sender as usize].is_none() {
        first_mobile[sender as usize] = Some(rec.timestamp_utc);
    }

    let r = &mut states[recipient as usize];
    let day = r.days.entry(date).or_default();
    day.received += 1;
    day.words_received += wc;
    day.contacts_received_from.insert(sender);
    r.version += 1;
}

//! Thread reconstruction and reply-event extraction within dyads.
//!
//! Records are grouped into unordered user pairs, then into threads by
//! subject root (the subject with reply prefixes removed), and ordered
//! by send time with message-id tie-breaks. Within a thread, consecutive
//! messages by the same sender collapse into a run; each time the other
//! endpoint sends after a run, one reply event is emitted. Reply time is
//! measured from the first message of the preceding run (configurable to
//! the last), reply length is the word count of the replying message,
//! and the received length is the word count of the run's final message.
//!
//! Two same-subject threads between a pair intentionally merge into one,
//! and in-line replies are not detected; both match the source data
//! semantics this pipeline reproduces.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::record::{Device, EmailRecord};
use crate::time::{self, DayOfWeek};

/// Which message of the preceding sender run the reply time is measured
/// from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReplyTimeBase {
    FirstOfRun,
    LastOfRun,
}

#[derive(Debug, Clone)]
pub struct ThreadingOptions {
    /// Dyads with fewer reply events than this in either direction are
    /// dropped by [`filter_dyads`].
    pub min_replies_each_direction: u32,
    pub reply_time_base: ReplyTimeBase,
}

impl Default for ThreadingOptions {
    fn default() -> Self {
        ThreadingOptions {
            min_replies_each_direction: 5,
            reply_time_base: ReplyTimeBase::FirstOfRun,
        }
    }
}

/// One directed reply within a thread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplyEvent {
    /// 1-based index among the thread's reply events.
    pub step: u32,
    pub replier: String,
    pub receiver: String,
    /// Strictly positive; events with a non-positive delta are discarded.
    pub reply_time_minutes: f64,
    /// Word count of the replying message.
    pub reply_length_words: u32,
    /// Word count of the last message of the preceding run.
    pub received_length_words: u32,
    /// Timestamp of the message the reply time is measured from.
    pub received_timestamp_utc: i64,
    /// Local hour 0-23 of the received message, under the received
    /// record's own tz offset.
    pub received_local_hour: u8,
    pub received_day_of_week: DayOfWeek,
    /// Attachments on the last message of the preceding run.
    pub n_attachments_received: u32,
    pub replier_device: Device,
    pub is_last: bool,
    pub reply_timestamp_utc: i64,
    pub reply_tz_offset_minutes: i32,
    pub reply_message_id: String,
    /// Arena index of the replying message. Only meaningful for events
    /// built in-process; not serialized.
    #[serde(skip)]
    pub reply_msg_idx: usize,
    /// Arena index of the last message of the preceding run.
    #[serde(skip)]
    pub received_msg_idx: usize,
}

/// One subject-rooted thread inside a dyad.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Thread {
    pub subject_root: String,
    /// Arena indices of the thread's messages, time-ordered.
    pub message_idx: Vec<usize>,
    pub reply_events: Vec<ReplyEvent>,
    pub span_hours: f64,
}

impl Thread {
    pub fn n_messages(&self) -> usize {
        self.message_idx.len()
    }

    pub fn n_steps(&self) -> usize {
        self.reply_events.len()
    }
}

/// An unordered user pair and all threads between them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dyad {
    /// Lexicographically smaller user id.
    pub user_a: String,
    pub user_b: String,
    pub threads: Vec<Thread>,
    pub replies_a_to_b: u32,
    pub replies_b_to_a: u32,
}

impl Dyad {
    pub fn total_replies(&self) -> u32 {
        self.replies_a_to_b + self.replies_b_to_a
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreadingStats {
    /// Records whose sender equals the recipient, excluded from dyads.
    pub self_pair_records: u64,
    /// Reply events discarded because the time delta was not positive.
    pub nonpositive_reply_time_discarded: u64,
    pub dyads_before_filter: usize,
    pub dyads_after_filter: usize,
}

#[derive(Debug, Clone)]
pub struct ThreadingOutput {
    pub dyads: Vec<Dyad>,
    pub stats: ThreadingStats,
}

/// Groups arena records into threads for one dyad: one thread per
/// subject root, messages ordered by `(timestamp, message_id)`.
pub fn build_threads(records: &[EmailRecord], member_idx: &[usize]) -> Vec<Thread> {
    let mut by_root: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for &i in member_idx {
        by_root.entry(&records[i].subject_root).or_default().push(i);
    }
    by_root
        .into_iter()
        .map(|(root, mut idx)| {
            idx.sort_by(|&a, &b| {
                let ra = &records[a];
                let rb = &records[b];
                (ra.timestamp_utc, &ra.message_id).cmp(&(rb.timestamp_utc, &rb.message_id))
            });
            let span_hours = match (idx.first(), idx.last()) {
                (Some(&f), Some(&l)) => {
                    (records[l].timestamp_utc - records[f].timestamp_utc) as f64 / 3600.0
                }
                _ => 0.0,
            };
            Thread {
                subject_root: root.to_string(),
                message_idx: idx,
                reply_events: Vec::new(),
                span_hours,
            }
        })
        .collect()
}

/// Extracts the thread's reply events in place. Returns the number of
/// events discarded for a non-positive reply time.
pub fn extract_reply_events(
    records: &[EmailRecord],
    thread: &mut Thread,
    base: ReplyTimeBase,
) -> u64 {
    let mut events = Vec::new();
    let mut discarded = 0u64;
    // (first, last) arena indices of the current same-sender run.
    let mut run: Option<(usize, usize)> = None;
    for &i in &thread.message_idx {
        let msg = &records[i];
        run = Some(match run {
            Some((first, _)) if records[first].sender_id == msg.sender_id => {
                (first, i)
            }
            Some((first, last)) => {
                let base_idx = match base {
                    ReplyTimeBase::FirstOfRun => first,
                    ReplyTimeBase::LastOfRun => last,
                };
                let received = &records[base_idx];
                let delta_secs = msg.timestamp_utc - received.timestamp_utc;
                if delta_secs > 0 {
                    let (_, hour, day) = time::local_parts(
                        received.timestamp_utc,
                        received.tz_offset_minutes,
                    )
                    .expect("record timestamps validated at parse time");
                    events.push(ReplyEvent {
                        step: events.len() as u32 + 1,
                        replier: msg.sender_id.clone(),
                        receiver: received.sender_id.clone(),
                        reply_time_minutes: delta_secs as f64 / 60.0,
                        reply_length_words: msg.word_count,
                        received_length_words: records[last].word_count,
                        received_timestamp_utc: received.timestamp_utc,
                        received_local_hour: hour,
                        received_day_of_week: day,
                        n_attachments_received: records[last].n_attachments,
                        replier_device: msg.device,
                        is_last: false,
                        reply_timestamp_utc: msg.timestamp_utc,
                        reply_tz_offset_minutes: msg.tz_offset_minutes,
                        reply_message_id: msg.message_id.clone(),
                        reply_msg_idx: i,
                        received_msg_idx: last,
                    });
                } else {
                    discarded += 1;
                }
                (i, i)
            }
            None => (i, i),
        });
    }
    if let Some(last) = events.last_mut() {
        last.is_last = true;
    }
    thread.reply_events = events;
    discarded
}

/// Keeps dyads with at least `min` reply events in both directions.
pub fn filter_dyads(dyads: Vec<Dyad>, min: u32) -> Vec<Dyad> {
    dyads
        .into_iter()
        .filter(|d| d.replies_a_to_b >= min && d.replies_b_to_a >= min)
        .collect()
}

/// Full threading pass over a record arena: dyad grouping, thread
/// construction, reply extraction, and the dyad filter. Output order is
/// deterministic (dyads by canonical pair, threads by subject root) and
/// independent of input record order.
pub fn thread_corpus(records: &[EmailRecord], opts: &ThreadingOptions) -> ThreadingOutput {
    let mut stats = ThreadingStats::default();
    let mut pairs: BTreeMap<(&str, &str), Vec<usize>> = BTreeMap::new();
    for (i, rec) in records.iter().enumerate() {
        if rec.sender_id == rec.recipient_id {
            stats.self_pair_records += 1;
            continue;
        }
        let key = if rec.sender_id < rec.recipient_id {
            (rec.sender_id.as_str(), rec.recipient_id.as_str())
        } else {
            (rec.recipient_id.as_str(), rec.sender_id.as_str())
        };
        pairs.entry(key).or_default().push(i);
    }

    let mut dyads = Vec::with_capacity(pairs.len());
    for ((user_a, user_b), member_idx) in pairs {
        let mut threads = build_threads(records, &member_idx);
        let mut a_to_b = 0u32;
        let mut b_to_a = 0u32;
        for thread in &mut threads {
            stats.nonpositive_reply_time_discarded +=
                extract_reply_events(records, thread, opts.reply_time_base);
            for ev in &thread.reply_events {
                if ev.replier == user_a {
                    a_to_b += 1;
                } else {
                    b_to_a += 1;
                }
            }
        }
        dyads.push(Dyad {
            user_a: user_a.to_string(),
            user_b: user_b.to_string(),
            threads,
            replies_a_to_b: a_to_b,
            replies_b_to_a: b_to_a,
        });
    }
    stats.dyads_before_filter = dyads.len();
    let dyads = filter_dyads(dyads, opts.min_replies_each_direction);
    stats.dyads_after_filter = dyads.len();
    ThreadingOutput { dyads, stats }
}

/// Flattens all reply events of a dyad set, in deterministic order.
pub fn all_events(dyads: &[Dyad]) -> Vec<&ReplyEvent> {
    let mut out = Vec::new();
    for d in dyads {
        for t in &d.threads {
            out.extend(t.reply_events.iter());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::RecordParser;

    pub(crate) fn rec(id: &str, from: &str, to: &str, ts: i64, subject: &str, body: &str) -> EmailRecord {
        let parser = RecordParser::default();
        let line = serde_json::json!({
            "message_id": id, "sender_id": from, "recipient_id": to,
            "timestamp_utc": ts, "tz_offset_minutes": 0,
            "subject": subject, "body": body, "n_attachments": 0,
        })
        .to_string();
        parser.parse_record(&line, 1).unwrap()
    }

    fn unfiltered() -> ThreadingOptions {
        ThreadingOptions {
            min_replies_each_direction: 0,
            ..ThreadingOptions::default()
        }
    }

    #[test]
    fn groups_replies_with_their_root() {
        let records = vec![
            rec("m1", "a", "b", 0, "Lunch", "want lunch?"),
            rec("m2", "b", "a", 600, "Re: Lunch", "sure"),
            rec("m3", "a", "b", 1200, "Re: Lunch", "noon then"),
        ];
        let out = thread_corpus(&records, &unfiltered());
        assert_eq!(out.dyads.len(), 1);
        let dyad = &out.dyads[0];
        assert_eq!(dyad.threads.len(), 1);
        let t = &dyad.threads[0];
        assert_eq!(t.subject_root, "Lunch");
        assert_eq!(t.message_idx, vec![0, 1, 2]);
        assert_eq!(t.n_steps(), 2);
    }

    #[test]
    fn single_message_thread_has_no_events() {
        let records = vec![rec("m1", "a", "b", 0, "Hi", "hello")];
        let out = thread_corpus(&records, &unfiltered());
        assert_eq!(out.dyads[0].threads[0].n_steps(), 0);
        assert_eq!(out.dyads[0].total_replies(), 0);
    }

    #[test]
    fn distinct_roots_make_distinct_threads() {
        let records = vec![
            rec("m1", "a", "b", 0, "Lunch", "x"),
            rec("m2", "a", "b", 10, "Dinner", "y"),
        ];
        let out = thread_corpus(&records, &unfiltered());
        assert_eq!(out.dyads[0].threads.len(), 2);
    }

    #[test]
    fn run_collapses_to_first_message_reply_time() {
        // A@0, A@10min, B@30min: one event, 30 minutes from the first of
        // the run; the last-message base gives 20 minutes.
        let records = vec![
            rec("m1", "a", "b", 0, "T", "one two"),
            rec("m2", "a", "b", 600, "Re: T", "three"),
            rec("m3", "b", "a", 1800, "Re: T", "reply body here"),
        ];
        let out = thread_corpus(&records, &unfiltered());
        let t = &out.dyads[0].threads[0];
        assert_eq!(t.n_steps(), 1);
        let ev = &t.reply_events[0];
        assert_eq!(ev.reply_time_minutes, 30.0);
        assert_eq!(ev.replier, "b");
        assert_eq!(ev.receiver, "a");
        assert_eq!(ev.reply_length_words, 3);
        // received length comes from the last message of the run
        assert_eq!(ev.received_length_words, 1);
        assert!(ev.is_last);

        let opts = ThreadingOptions {
            min_replies_each_direction: 0,
            reply_time_base: ReplyTimeBase::LastOfRun,
        };
        let out = thread_corpus(&records, &opts);
        assert_eq!(out.dyads[0].threads[0].reply_events[0].reply_time_minutes, 20.0);
    }

    #[test]
    fn alternating_messages_emit_one_event_each() {
        let records = vec![
            rec("m1", "a", "b", 0, "T", "x"),
            rec("m2", "b", "a", 300, "Re: T", "y"),
            rec("m3", "a", "b", 420, "Re: T", "z"),
        ];
        let out = thread_corpus(&records, &unfiltered());
        let times: Vec<f64> = out.dyads[0].threads[0]
            .reply_events
            .iter()
            .map(|e| e.reply_time_minutes)
            .collect();
        assert_eq!(times, vec![5.0, 2.0]);
    }

    #[test]
    fn seven_alternating_messages_make_six_steps() {
        let mut records = Vec::new();
        for k in 0..7 {
            let (from, to) = if k % 2 == 0 { ("a", "b") } else { ("b", "a") };
            let subject = if k == 0 { "T".to_string() } else { "Re: T".to_string() };
            records.push(rec(&format!("m{k}"), from, to, k as i64 * 60, &subject, "w"));
        }
        let out = thread_corpus(&records, &unfiltered());
        let evs = &out.dyads[0].threads[0].reply_events;
        assert_eq!(evs.len(), 6);
        assert_eq!(evs.iter().map(|e| e.step).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5, 6]);
        assert_eq!(evs.iter().filter(|e| e.is_last).count(), 1);
        assert!(evs[5].is_last);
    }

    #[test]
    fn dyad_filter_boundaries() {
        // 5 replies each direction: kept. 5 and 4: dropped.
        let mk = |n_a: usize, n_b: usize| -> Vec<EmailRecord> {
            let mut records = vec![rec("r", "a", "b", 0, "T", "x")];
            let mut ts = 0i64;
            let mut id = 0;
            // strict alternation b,a,b,a... produces events alternating
            for k in 0..(n_a + n_b) {
                ts += 60;
                id += 1;
                let (from, to) = if k % 2 == 0 { ("b", "a") } else { ("a", "b") };
                records.push(rec(&format!("m{id}"), from, to, ts, "Re: T", "x"));
            }
            records
        };
        // 10 alternating replies -> 5 from each side
        let out = thread_corpus(&mk(5, 5), &ThreadingOptions::default());
        assert_eq!(out.dyads.len(), 1);
        assert_eq!(out.stats.dyads_before_filter, 1);

        // 9 replies -> 5 from b, 4 from a
        let out = thread_corpus(&mk(4, 5), &ThreadingOptions::default());
        assert!(out.dyads.is_empty());
        assert_eq!(out.stats.dyads_after_filter, 0);

        // threshold 0 keeps everything
        let out = thread_corpus(&mk(0, 1), &unfiltered());
        assert_eq!(out.dyads.len(), 1);
    }

    #[test]
    fn simultaneous_reply_is_discarded_with_counter() {
        let records = vec![
            rec("m1", "a", "b", 100, "T", "x"),
            rec("m2", "b", "a", 100, "Re: T", "y"),
            rec("m3", "a", "b", 200, "Re: T", "z"),
        ];
        let out = thread_corpus(&records, &unfiltered());
        assert_eq!(out.stats.nonpositive_reply_time_discarded, 1);
        let evs = &out.dyads[0].threads[0].reply_events;
        // the surviving event is a replying to b's run
        assert_eq!(evs.len(), 1);
        assert_eq!(evs[0].replier, "a");
        assert_eq!(evs[0].step, 1);
        assert!(evs[0].is_last);
    }

    #[test]
    fn timestamp_ties_break_by_message_id() {
        let records = vec![
            rec("m2", "b", "a", 100, "Re: T", "y"),
            rec("m1", "a", "b", 100, "T", "x"),
        ];
        let out = thread_corpus(&records, &unfiltered());
        let t = &out.dyads[0].threads[0];
        assert_eq!(records[t.message_idx[0]].message_id, "m1");
        assert_eq!(records[t.message_idx[1]].message_id, "m2");
    }

    #[test]
    fn event_order_is_input_order_independent() {
        let mut records = vec![
            rec("m1", "a", "b", 0, "T", "one"),
            rec("m2", "b", "a", 300, "Re: T", "two"),
            rec("m3", "a", "b", 900, "Re: T", "three"),
            rec("m4", "b", "a", 1500, "Re: T", "four"),
            rec("m5", "a", "b", 1560, "Re: Other", "five"),
            rec("m6", "b", "a", 1800, "Other", "six"),
        ];
        let base = thread_corpus(&records, &unfiltered());
        records.reverse();
        let rev = thread_corpus(&records, &unfiltered());
        let strip = |o: &ThreadingOutput| -> Vec<(String, Vec<(u32, String, f64)>)> {
            o.dyads[0]
                .threads
                .iter()
                .map(|t| {
                    (
                        t.subject_root.clone(),
                        t.reply_events
                            .iter()
                            .map(|e| (e.step, e.replier.clone(), e.reply_time_minutes))
                            .collect(),
                    )
                })
                .collect()
        };
        assert_eq!(strip(&base), strip(&rev));
    }

    #[test]
    fn local_hour_uses_received_record_offset() {
        let parser = RecordParser::default();
        let mk = |id: &str, from: &str, to: &str, ts: i64, off: i32, subject: &str| {
            let line = serde_json::json!({
                "message_id": id, "sender_id": from, "recipient_id": to,
                "timestamp_utc": ts, "tz_offset_minutes": off,
                "subject": subject, "body": "x", "n_attachments": 0,
            })
            .to_string();
            parser.parse_record(&line, 1).unwrap()
        };
        // received at 23:30 UTC with +120 offset -> local hour 1
        let records = vec![
            mk("m1", "a", "b", 23 * 3600 + 1800, 120, "T"),
            mk("m2", "b", "a", 23 * 3600 + 5400, -60, "Re: T"),
        ];
        let out = thread_corpus(&records, &unfiltered());
        let ev = &out.dyads[0].threads[0].reply_events[0];
        assert_eq!(ev.received_local_hour, 1);
        assert_eq!(ev.received_day_of_week, DayOfWeek::Fri);
    }

    #[test]
    fn reply_times_bounded_by_thread_span() {
        let records = vec![
            rec("m1", "a", "b", 0, "T", "a"),
            rec("m2", "b", "a", 3600, "Re: T", "b"),
            rec("m3", "a", "b", 7200, "Re: T", "c"),
        ];
        let out = thread_corpus(&records, &unfiltered());
        let t = &out.dyads[0].threads[0];
        for ev in &t.reply_events {
            assert!(ev.reply_time_minutes <= t.span_hours * 60.0);
        }
    }
}

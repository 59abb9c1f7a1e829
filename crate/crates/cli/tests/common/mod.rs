//! Shared helpers for the acceptance suite: an independent brute-force
//! threading reference and corpus plumbing.

use std::collections::BTreeMap;

use mailconv_core::ingest::RecordParser;
use mailconv_core::record::{Device, EmailRecord};

/// One reply event as derived by the reference implementation.
#[derive(Debug, Clone, PartialEq)]
pub struct RefEvent {
    pub step: u32,
    pub replier: String,
    pub receiver: String,
    pub reply_time_minutes: f64,
    pub reply_length_words: u32,
    pub received_length_words: u32,
    pub received_timestamp_utc: i64,
    pub received_local_hour: u8,
    pub received_day_of_week: u8,
    pub n_attachments_received: u32,
    pub replier_device: Device,
    pub is_last: bool,
    pub reply_message_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefThread {
    pub subject_root: String,
    pub message_ids: Vec<String>,
    pub events: Vec<RefEvent>,
}

/// Independent subject-root computation: strip leading "re:" tokens.
fn root_of(subject: &str) -> String {
    let mut s = subject.trim();
    while s.len() >= 3 && s[..3].eq_ignore_ascii_case("re:") {
        s = s[3..].trim_start();
    }
    s.trim().to_string()
}

/// Independent local-time math: hour of day and Monday-based weekday of
/// a zone-shifted timestamp.
fn local_hour_dow(ts: i64, tz_offset_minutes: i32) -> (u8, u8) {
    let local = ts + i64::from(tz_offset_minutes) * 60;
    let secs = local.rem_euclid(86_400);
    let days = (local - secs) / 86_400;
    let hour = (secs / 3600) as u8;
    // 1970-01-01 was a Thursday; Monday = 0
    let dow = (days.rem_euclid(7) + 3) % 7;
    (hour, dow as u8)
}

/// Brute-force reference: sorts the whole corpus, groups per unordered
/// pair and subject root, splits each thread into same-sender runs, and
/// emits one event per run boundary with the time measured from the
/// first message of the preceding run.
pub fn reference_threads(
    records: &[EmailRecord],
) -> BTreeMap<(String, String), Vec<RefThread>> {
    let mut order: Vec<&EmailRecord> = records.iter().collect();
    order.sort_by(|a, b| {
        (a.timestamp_utc, &a.message_id).cmp(&(b.timestamp_utc, &b.message_id))
    });

    let mut groups: BTreeMap<(String, String), BTreeMap<String, Vec<&EmailRecord>>> =
        BTreeMap::new();
    for rec in order {
        if rec.sender_id == rec.recipient_id {
            continue;
        }
        let pair = if rec.sender_id < rec.recipient_id {
            (rec.sender_id.clone(), rec.recipient_id.clone())
        } else {
            (rec.recipient_id.clone(), rec.sender_id.clone())
        };
        groups
            .entry(pair)
            .or_default()
            .entry(root_of(&rec.subject_raw))
            .or_default()
            .push(rec);
    }

    let mut out = BTreeMap::new();
    for (pair, roots) in groups {
        let mut threads = Vec::new();
        for (root, msgs) in roots {
            // split into same-sender runs
            let mut runs: Vec<Vec<&EmailRecord>> = Vec::new();
            for m in &msgs {
                match runs.last_mut() {
                    Some(run) if run[0].sender_id == m.sender_id => run.push(m),
                    _ => runs.push(vec![m]),
                }
            }
            let mut events = Vec::new();
            for w in runs.windows(2) {
                let (prev, next) = (&w[0], &w[1]);
                let received = prev[0];
                let reply = next[0];
                let delta = reply.timestamp_utc - received.timestamp_utc;
                if delta <= 0 {
                    continue;
                }
                let (hour, dow) =
                    local_hour_dow(received.timestamp_utc, received.tz_offset_minutes);
                events.push(RefEvent {
                    step: events.len() as u32 + 1,
                    replier: reply.sender_id.clone(),
                    receiver: received.sender_id.clone(),
                    reply_time_minutes: delta as f64 / 60.0,
                    reply_length_words: reply.word_count,
                    received_length_words: prev.last().unwrap().word_count,
                    received_timestamp_utc: received.timestamp_utc,
                    received_local_hour: hour,
                    received_day_of_week: dow,
                    n_attachments_received: prev.last().unwrap().n_attachments,
                    replier_device: reply.device,
                    is_last: false,
                    reply_message_id: reply.message_id.clone(),
                });
            }
            if let Some(last) = events.last_mut() {
                last.is_last = true;
            }
            threads.push(RefThread {
                subject_root: root,
                message_ids: msgs.iter().map(|m| m.message_id.clone()).collect(),
                events,
            });
        }
        out.insert(pair, threads);
    }
    out
}

pub fn parse_lines(lines: &[String]) -> Vec<EmailRecord> {
    let parser = RecordParser::default();
    lines
        .iter()
        .enumerate()
        .map(|(i, l)| parser.parse_record(l, i as u64 + 1).expect("generated records parse"))
        .collect()
}

//! Synthetic corpus generator with ground-truth sidecars.
//!
//! Emits raw record and profile files in the pipeline's input formats
//! plus sidecar tables carrying the true thread structure and reply
//! events, so tests can compare reconstruction output against what was
//! actually generated. All sampling flows from the seed through named
//! sub-streams; identical parameters produce byte-identical files.
//!
//! The planted reply-time mode makes each user's next reply gap a noisy
//! function of their running median within the dyad, drifting upward so
//! classes migrate over a conversation's life. Trees reading the
//! numeric median feature can track the drift; stale modal baselines
//! cannot.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Planted {
    /// Log-normal reply gaps with no user-level signal.
    None,
    /// Reply time and length follow per-user drifting personas.
    ReplyTimeSignal,
}

#[derive(Debug, Clone)]
pub struct GenParams {
    pub n_dyads: usize,
    pub seed: u64,
    /// Mean number of threads per dyad (geometric, at least 1).
    pub threads_per_dyad_mean: f64,
    /// Mean messages per thread (geometric, at least 1). Ignored in
    /// planted mode, which fixes the conversation shape.
    pub thread_len_mean: f64,
    /// Planted mode: messages per thread (strictly alternating).
    pub planted_thread_len: usize,
    /// Corpus window in days.
    pub days: u32,
    pub planted: Planted,
    /// Adds one thread with replies at exactly the 15- and 164-minute
    /// class boundaries, recorded in the sidecar.
    pub boundary_replies: bool,
    /// Mean unanswered background messages per dyad user per window.
    pub background_per_user: f64,
    /// Probability that the next message extends the current sender's
    /// run instead of switching speakers (0 in planted mode).
    pub run_prob: f64,
    pub quote_prob: f64,
    pub signature_prob: f64,
    pub attach_prob: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            n_dyads: 100,
            seed: 0,
            threads_per_dyad_mean: 1.6,
            thread_len_mean: 4.0,
            planted_thread_len: 13,
            days: 60,
            planted: Planted::None,
            boundary_replies: false,
            background_per_user: 0.0,
            run_prob: 0.15,
            quote_prob: 0.5,
            signature_prob: 0.12,
            attach_prob: 0.12,
        }
    }
}

/// Monday 2014-01-06 00:00 UTC.
pub const START_TS: i64 = 1_388_966_400;

const TZ_POOL: [i32; 8] = [-480, -300, -120, 0, 60, 120, 330, 540];

const VOCAB: [&str; 40] = [
    "the", "a", "you", "i", "we", "and", "or", "of", "to", "in", "is", "are", "will", "can",
    "some", "all", "meeting", "plan", "report", "coffee", "lunch", "project", "update", "note",
    "friday", "monday", "photos", "trip", "family", "game", "call", "time", "work", "home",
    "ready", "great", "thanks", "soon", "maybe", "tomorrow",
];

#[derive(Debug, Clone)]
pub struct TruthEvent {
    pub dyad_a: String,
    pub dyad_b: String,
    pub subject_root: String,
    pub step: u32,
    pub replier: String,
    pub reply_message_id: String,
    pub reply_time_minutes: f64,
    pub reply_length_words: u32,
    pub time_class: u8,
    pub length_class: u8,
    pub is_last: bool,
}

#[derive(Debug, Clone)]
pub struct TruthThread {
    pub dyad_a: String,
    pub dyad_b: String,
    pub subject_root: String,
    pub message_ids: Vec<String>,
}

#[derive(Debug, Default)]
pub struct GeneratedCorpus {
    /// Raw JSONL record lines, in generation order (not time order).
    pub record_lines: Vec<String>,
    pub profile_lines: Vec<String>,
    pub truth_threads: Vec<TruthThread>,
    pub truth_events: Vec<TruthEvent>,
    pub n_messages: usize,
}

struct UserGen {
    id: String,
    tz: i32,
    device_signature: Option<&'static str>,
    /// planted personas
    time_base: f64,
    words_base: f64,
    /// realized reply times within the dyad, chronological
    times: Vec<f64>,
    words: Vec<f64>,
}

fn geometric(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 1.0 {
        return 1;
    }
    let p = 1.0 / mean;
    let u: f64 = rng.random::<f64>().max(1e-12);
    1 + (u.ln() / (1.0 - p).ln()).floor() as usize
}

fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

fn bin_time(minutes: f64) -> u8 {
    if minutes <= 15.0 {
        0
    } else if minutes <= 164.0 {
        1
    } else {
        2
    }
}

fn bin_length(words: u32) -> u8 {
    if words <= 21 {
        0
    } else if words <= 88 {
        1
    } else {
        2
    }
}

fn body_of(rng: &mut ChaCha8Rng, n_words: usize) -> String {
    let mut out = String::new();
    for i in 0..n_words {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(VOCAB[rng.random_range(0..VOCAB.len())]);
    }
    out
}

fn record_line(
    id: &str,
    from: &UserGen,
    to: &UserGen,
    ts: i64,
    subject: &str,
    body: &str,
    attachments: u32,
) -> String {
    serde_json::json!({
        "message_id": id,
        "sender_id": from.id,
        "recipient_id": to.id,
        "timestamp_utc": ts,
        "tz_offset_minutes": from.tz,
        "subject": subject,
        "body": body,
        "n_attachments": attachments,
    })
    .to_string()
}

/// Planted reply gap in minutes: a noisy, drifting function of the
/// replier's running median, with 10% label noise into a random other
/// class.
fn planted_gap(rng: &mut ChaCha8Rng, user: &UserGen) -> f64 {
    const GROWTH: f64 = 1.35;
    const SIGMA: f64 = 0.15;
    let m = match median(&user.times) {
        Some(m) => m * GROWTH,
        None => user.time_base,
    };
    if rng.random::<f64>() < 0.10 {
        // label noise: land in a uniformly chosen *other* class
        let own = bin_time(m);
        let other = match (own, rng.random_range(0..2u8)) {
            (0, 0) => 1,
            (0, _) => 2,
            (1, 0) => 0,
            (1, _) => 2,
            (_, 0) => 0,
            (_, _) => 1,
        };
        let (lo, hi) = match other {
            0 => (0.8f64, 15.0f64),
            1 => (15.2, 164.0),
            _ => (165.0, 4000.0),
        };
        lo * (hi / lo).powf(rng.random::<f64>())
    } else {
        let jitter = (SIGMA * normal(rng)).exp();
        (m * jitter).clamp(0.8, 4000.0)
    }
}

fn planted_words(rng: &mut ChaCha8Rng, user: &UserGen) -> u32 {
    const GROWTH: f64 = 1.12;
    const SIGMA: f64 = 0.10;
    let m = match median(&user.words) {
        Some(m) => m * GROWTH,
        None => user.words_base,
    };
    if rng.random::<f64>() < 0.10 {
        let (lo, hi): (f64, f64) = match (bin_length(m.round() as u32), rng.random_range(0..2u8)) {
            (0, 0) | (1, 0) => (22.0, 88.0),
            (0, _) => (89.0, 400.0),
            (1, _) | (2, 1) => (1.0, 21.0),
            (_, _) => (89.0, 400.0),
        };
        (lo * (hi / lo).powf(rng.random::<f64>())).round().max(1.0) as u32
    } else {
        let jitter = (SIGMA * normal(rng)).exp();
        (m * jitter).round().clamp(1.0, 400.0) as u32
    }
}

/// Standard normal via Box-Muller.
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-12);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn generate_corpus(params: &GenParams) -> GeneratedCorpus {
    let mut out = GeneratedCorpus::default();
    let window_secs = i64::from(params.days) * 86_400;

    for d in 0..params.n_dyads {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, &format!("dyad-{d}")));
        let mut users = [new_user(&mut rng, 2 * d), new_user(&mut rng, 2 * d + 1)];
        for u in &users {
            let gender = ["f", "m", "u"][rng.random_range(0..3)];
            let age = rng.random_range(13..76);
            out.profile_lines.push(format!("{}\t{}\t{}", u.id, age, gender));
        }

        let n_threads = match params.planted {
            Planted::ReplyTimeSignal => 1,
            Planted::None => geometric(&mut rng, params.threads_per_dyad_mean),
        };
        for k in 0..n_threads {
            let root = format!("t{d}k{k} {}", VOCAB[rng.random_range(20..VOCAB.len())]);
            let n_msgs = match params.planted {
                Planted::ReplyTimeSignal => params.planted_thread_len,
                Planted::None => geometric(&mut rng, params.thread_len_mean).min(180),
            };
            let start = START_TS + rng.random_range(0..window_secs.max(1));
            emit_thread(params, &mut rng, &mut users, d, k, &root, start, n_msgs, &mut out);
        }

        if params.boundary_replies && d == 0 {
            emit_boundary_thread(&mut rng, &users, d, &mut out);
        }

        // unanswered background mail from bot senders
        if params.background_per_user > 0.0 {
            let n_bg = geometric(&mut rng, params.background_per_user + 1.0) - 1;
            for (ui, user) in users.iter().enumerate() {
                for b in 0..n_bg {
                    let bot = UserGen {
                        id: format!("spam{:04}", rng.random_range(0..500)),
                        tz: 0,
                        device_signature: None,
                        time_base: 0.0,
                        words_base: 0.0,
                        times: Vec::new(),
                        words: Vec::new(),
                    };
                    let ts = START_TS + rng.random_range(0..window_secs.max(1));
                    let n_words = rng.random_range(5..40);
                    let body = body_of(&mut rng, n_words);
                    out.record_lines.push(record_line(
                        &format!("d{d}bg{ui}x{b}"),
                        &bot,
                        user,
                        ts,
                        "News for you",
                        &body,
                        0,
                    ));
                    out.n_messages += 1;
                }
            }
        }
    }
    out
}

fn new_user(rng: &mut ChaCha8Rng, index: usize) -> UserGen {
    let device_signature = if rng.random::<f64>() < 0.35 {
        Some(if rng.random::<f64>() < 0.7 {
            "Sent from my iPhone"
        } else {
            "Sent from my iPad"
        })
    } else {
        None
    };
    UserGen {
        id: format!("u{index:07}"),
        tz: TZ_POOL[rng.random_range(0..TZ_POOL.len())],
        device_signature,
        time_base: 1.0 * (80.0f64 / 1.0).powf(rng.random::<f64>()),
        words_base: 3.0 * (250.0f64 / 3.0).powf(rng.random::<f64>()),
        times: Vec::new(),
        words: Vec::new(),
    }
}

#[allow(clippy::too_many_arguments)]
fn emit_thread(
    params: &GenParams,
    rng: &mut ChaCha8Rng,
    users: &mut [UserGen; 2],
    dyad: usize,
    thread: usize,
    root: &str,
    start: i64,
    n_msgs: usize,
    out: &mut GeneratedCorpus,
) {
    let dyad_a = users[0].id.clone().min(users[1].id.clone());
    let dyad_b = users[0].id.clone().max(users[1].id.clone());
    let mut ts = start;
    let mut sender = rng.random_range(0..2usize);
    let mut mids: Vec<String> = Vec::new();
    let mut run_first_ts = start;
    let mut events: Vec<TruthEvent> = Vec::new();

    for j in 0..n_msgs {
        let mid = format!("d{dyad}t{thread}m{j:03}");
        let is_root = j == 0;
        let subject = if is_root {
            root.to_string()
        } else {
            format!("Re: {root}")
        };

        let own_words = match params.planted {
            Planted::ReplyTimeSignal => planted_words(rng, &users[sender]) as usize,
            Planted::None => 1 + geometric(rng, 18.0).min(399),
        }
        .max(1);
        let mut body = body_of(rng, own_words);
        if let Some(sig) = users[sender].device_signature {
            if rng.random::<f64>() < params.signature_prob {
                body.push('\n');
                body.push_str(sig);
            }
        }
        if !is_root && rng.random::<f64>() < params.quote_prob {
            let _ = write!(
                body,
                "\nOn Monday January 6, 2014 {}@example.com wrote:\n> {}",
                users[1 - sender].id,
                body_of(rng, 6)
            );
        }
        let attachments = if rng.random::<f64>() < params.attach_prob {
            rng.random_range(1..4u32)
        } else {
            0
        };
        out.record_lines.push(record_line(
            &mid,
            &users[sender],
            &users[1 - sender],
            ts,
            &subject,
            &body,
            attachments,
        ));
        out.n_messages += 1;

        // this message answers the event recorded when its timing was
        // decided; fill in the realized length
        if let Some(ev) = events.last_mut() {
            if ev.reply_message_id == mid {
                ev.reply_length_words = own_words as u32;
                ev.length_class = bin_length(own_words as u32);
                users[sender].words.push(own_words as f64);
            }
        }
        mids.push(mid);

        if j + 1 == n_msgs {
            break;
        }

        // decide the next message's sender and timestamp
        let extend_run = params.planted == Planted::None && rng.random::<f64>() < params.run_prob;
        if extend_run {
            // same sender continues; run start is unchanged
            ts += 60 + (60.0 * 10.0f64.powf(rng.random::<f64>())) as i64;
        } else {
            let replier = 1 - sender;
            let gap_minutes = match params.planted {
                Planted::ReplyTimeSignal => planted_gap(rng, &users[replier]),
                Planted::None => {
                    let g = (1.3 * normal(rng) + (30.0f64).ln()).exp();
                    g.clamp(1.0, 10_000.0)
                }
            };
            let reply_ts = ts + (gap_minutes * 60.0).round().max(60.0) as i64;
            let true_gap = (reply_ts - run_first_ts) as f64 / 60.0;
            users[replier].times.push(true_gap);
            events.push(TruthEvent {
                dyad_a: dyad_a.clone(),
                dyad_b: dyad_b.clone(),
                subject_root: root.to_string(),
                step: events.len() as u32 + 1,
                replier: users[replier].id.clone(),
                reply_message_id: format!("d{dyad}t{thread}m{:03}", j + 1),
                reply_time_minutes: true_gap,
                reply_length_words: 0, // patched when the message is emitted
                time_class: bin_time(true_gap),
                length_class: 0,
                is_last: false,
            });
            ts = reply_ts;
            run_first_ts = reply_ts;
            sender = replier;
        }
    }

    if let Some(last) = events.last_mut() {
        last.is_last = true;
    }
    out.truth_threads.push(TruthThread {
        dyad_a,
        dyad_b,
        subject_root: root.to_string(),
        message_ids: mids,
    });
    out.truth_events.extend(events);
}

/// A thread whose two replies land exactly on the 15- and 164-minute
/// boundaries.
fn emit_boundary_thread(
    rng: &mut ChaCha8Rng,
    users: &[UserGen; 2],
    dyad: usize,
    out: &mut GeneratedCorpus,
) {
    let root = format!("t{dyad}boundary check");
    let start = START_TS + 3600;
    let plan = [
        (0usize, start, 0.0f64),
        (1, start + 15 * 60, 15.0),
        (0, start + 15 * 60 + 164 * 60, 164.0),
    ];
    let mut mids = Vec::new();
    for (j, &(sender, ts, _)) in plan.iter().enumerate() {
        let mid = format!("d{dyad}tbm{j:03}");
        let subject = if j == 0 {
            root.clone()
        } else {
            format!("Re: {root}")
        };
        let body = body_of(rng, 8);
        out.record_lines.push(record_line(
            &mid,
            &users[sender],
            &users[1 - sender],
            ts,
            &subject,
            &body,
            0,
        ));
        out.n_messages += 1;
        mids.push(mid);
    }
    for (step, (mid, &(_, _, minutes))) in mids[1..].iter().zip(&plan[1..]).enumerate() {
        out.truth_events.push(TruthEvent {
            dyad_a: users[0].id.clone().min(users[1].id.clone()),
            dyad_b: users[0].id.clone().max(users[1].id.clone()),
            subject_root: root.clone(),
            step: step as u32 + 1,
            replier: if plan[step + 1].0 == 0 {
                users[0].id.clone()
            } else {
                users[1].id.clone()
            },
            reply_message_id: mid.clone(),
            reply_time_minutes: minutes,
            reply_length_words: 8,
            time_class: bin_time(minutes),
            length_class: bin_length(8),
            is_last: step == 1,
        });
    }
    out.truth_threads.push(TruthThread {
        dyad_a: users[0].id.clone().min(users[1].id.clone()),
        dyad_b: users[0].id.clone().max(users[1].id.clone()),
        subject_root: root,
        message_ids: mids,
    });
}

/// Writes the generated corpus and sidecars into a directory. Returns
/// the list of (file name, row count) pairs.
pub fn write_corpus(dir: &Path, corpus: &GeneratedCorpus) -> Result<Vec<(String, u64)>> {
    fs::create_dir_all(dir)?;
    let mut outputs = Vec::new();

    let records = corpus.record_lines.join("\n") + "\n";
    fs::write(dir.join("records.jsonl"), records)?;
    outputs.push(("records.jsonl".to_string(), corpus.record_lines.len() as u64));

    let mut profiles = corpus.profile_lines.clone();
    profiles.sort();
    profiles.dedup();
    let text = profiles.join("\n") + "\n";
    fs::write(dir.join("profiles.tsv"), text)?;
    outputs.push(("profiles.tsv".to_string(), profiles.len() as u64));

    let mut threads = String::from("dyad_a\tdyad_b\tsubject_root\tmessage_ids\n");
    for t in &corpus.truth_threads {
        let _ = writeln!(
            threads,
            "{}\t{}\t{}\t{}",
            t.dyad_a,
            t.dyad_b,
            t.subject_root,
            t.message_ids.join(",")
        );
    }
    fs::write(dir.join("truth_threads.tsv"), threads)?;
    outputs.push(("truth_threads.tsv".to_string(), corpus.truth_threads.len() as u64));

    let mut events = String::from(
        "dyad_a\tdyad_b\tsubject_root\tstep\treplier\treply_message_id\treply_time_minutes\treply_length_words\ttime_class\tlength_class\tis_last\n",
    );
    for e in &corpus.truth_events {
        let _ = writeln!(
            events,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            e.dyad_a,
            e.dyad_b,
            e.subject_root,
            e.step,
            e.replier,
            e.reply_message_id,
            e.reply_time_minutes,
            e.reply_length_words,
            e.time_class,
            e.length_class,
            u8::from(e.is_last)
        );
    }
    fs::write(dir.join("truth_events.tsv"), events)?;
    outputs.push(("truth_events.tsv".to_string(), corpus.truth_events.len() as u64));
    Ok(outputs)
}

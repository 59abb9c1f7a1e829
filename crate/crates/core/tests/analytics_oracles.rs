//! Naive-recomputation oracles for the analytics tables: every binned
//! statistic must equal a direct single-pass recomputation on the same
//! events, and the planted-shape fixtures must reproduce their shapes.

use mailconv_core::analytics::{
    circadian_stats, content_similarity_curve, distribution, dyad_from_events, group_stats,
    marker_coordination, step_stats, synchronization_curve, time_length_correlation, GroupBy,
    Measure, StatKind, SummaryCurve, SyncOptions,
};
use mailconv_core::embedding::tf_vectorize;
use mailconv_core::ingest::RecordParser;
use mailconv_core::profile::{Gender, ProfileTable, UserProfile};
use mailconv_core::record::Device;
use mailconv_core::threading::{thread_corpus, Dyad, ReplyEvent, ThreadingOptions};
use mailconv_core::time::DayOfWeek;

fn ev(replier: &str, receiver: &str, step: u32, time_min: f64, length: u32) -> ReplyEvent {
    ReplyEvent {
        step,
        replier: replier.to_string(),
        receiver: receiver.to_string(),
        reply_time_minutes: time_min,
        reply_length_words: length,
        received_length_words: length,
        received_timestamp_utc: 0,
        received_local_hour: 9,
        received_day_of_week: DayOfWeek::Mon,
        n_attachments_received: 0,
        replier_device: Device::Desktop,
        is_last: false,
        reply_timestamp_utc: i64::from(step) * 600,
        reply_tz_offset_minutes: 0,
        reply_message_id: format!("m{step}"),
        reply_msg_idx: 0,
        received_msg_idx: 0,
    }
}

fn naive_median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

// deterministic pseudo-random stream, independent of the crate's RNGs
struct Lcg(u64);
impl Lcg {
    fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

#[test]
fn distribution_summary_matches_naive_pass() {
    let mut lcg = Lcg(42);
    let events: Vec<ReplyEvent> = (0..500)
        .map(|i| {
            // heavy-tailed synthetic reply times
            let t = (-2.0 * lcg.next_f64().max(1e-12).ln()).exp() * 20.0;
            ev("a", "b", i + 1, t, (i % 50) * 3)
        })
        .collect();
    let refs: Vec<&ReplyEvent> = events.iter().collect();
    let dist = distribution(&refs, Measure::ReplyTime, true, 30).unwrap();

    let values: Vec<f64> = events.iter().map(|e| e.reply_time_minutes).collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let sd = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64)
        .sqrt();
    assert!((dist.summary.mean - mean).abs() < 1e-9 * mean.abs());
    assert!((dist.summary.median - naive_median(&values)).abs() < 1e-12);
    assert!((dist.summary.sd - sd).abs() < 1e-9 * sd.abs());

    // histogram integrity: counts sum to n, pdf to 1, cdf ends at 1
    assert_eq!(dist.counts.iter().sum::<u64>(), 500);
    assert!((dist.pdf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!((dist.cdf.last().unwrap() - 1.0).abs() < 1e-12);
    // every count matches a direct recount against the edges
    for (i, &count) in dist.counts.iter().enumerate() {
        let lo = dist.edges[i];
        let hi = dist.edges[i + 1];
        let last = i + 1 == dist.counts.len();
        let recount = values
            .iter()
            .filter(|&&v| {
                if last {
                    v >= lo || i == 0
                } else if i == 0 {
                    v < hi
                } else {
                    v >= lo && v < hi
                }
            })
            .count() as u64;
        assert_eq!(count, recount, "bin {i}");
    }
}

#[test]
fn distribution_single_event() {
    let events = vec![ev("a", "b", 1, 47.0, 10)];
    let refs: Vec<&ReplyEvent> = events.iter().collect();
    let d = distribution(&refs, Measure::ReplyTime, false, 10).unwrap();
    assert_eq!(d.summary.mean, 47.0);
    assert_eq!(d.summary.median, 47.0);
    assert_eq!(d.summary.sd, 0.0);
    assert!(distribution(&[], Measure::ReplyTime, false, 10).is_err());
}

#[test]
fn step_stats_identical_threads() {
    // every thread has reply times 5,4,3,20 at steps 1..4
    let dyads: Vec<Dyad> = (0..6)
        .map(|d| {
            let a = format!("a{d}");
            let b = format!("b{d}");
            let events = vec![
                ev(&a, &b, 1, 5.0, 10),
                ev(&b, &a, 2, 4.0, 12),
                ev(&a, &b, 3, 3.0, 14),
                ev(&b, &a, 4, 20.0, 16),
            ];
            dyad_from_events(&a, &b, events)
        })
        .collect();
    let stats = step_stats(&dyads, Measure::ReplyTime);
    assert_eq!(stats.per_length.len(), 1);
    let (len, curve) = &stats.per_length[0];
    assert_eq!(*len, 4);
    let medians: Vec<f64> = curve.bins.iter().map(|b| b.value).collect();
    assert_eq!(medians, vec![5.0, 4.0, 3.0, 20.0]);
}

#[test]
fn step_stats_matches_brute_force_on_mixed_set() {
    let mut lcg = Lcg(7);
    let mut dyads = Vec::new();
    let mut all: Vec<(usize, u32, f64)> = Vec::new(); // (thread len, step, time)
    for d in 0..40 {
        let a = format!("a{d}");
        let b = format!("b{d}");
        let n = 1 + (lcg.next_f64() * 8.0) as usize;
        let mut events = Vec::new();
        for s in 1..=n {
            let t = 1.0 + lcg.next_f64() * 100.0;
            all.push((n, s as u32, t));
            let (rep, rec) = if s % 2 == 1 { (&a, &b) } else { (&b, &a) };
            events.push(ev(rep, rec, s as u32, t, 5));
        }
        dyads.push(dyad_from_events(&a, &b, events));
    }
    let stats = step_stats(&dyads, Measure::ReplyTime);
    for (len, curve) in &stats.per_length {
        for bin in &curve.bins {
            let step: u32 = bin.label.parse().unwrap();
            let expected: Vec<f64> = all
                .iter()
                .filter(|(n, s, _)| *n == *len as usize && *s == step)
                .map(|&(_, _, t)| t)
                .collect();
            assert_eq!(bin.n, expected.len());
            assert!((bin.value - naive_median(&expected)).abs() < 1e-12);
        }
    }
    // by-thread-length medians
    for bin in &stats.by_thread_length.bins {
        let len: usize = bin.label.parse().unwrap();
        let expected: Vec<f64> = all
            .iter()
            .filter(|(n, _, _)| *n == len)
            .map(|&(_, _, t)| t)
            .collect();
        assert!((bin.value - naive_median(&expected)).abs() < 1e-12);
    }
}

#[test]
fn time_length_correlation_shapes() {
    // constant time -> flat curve
    let events: Vec<ReplyEvent> = (0..60).map(|i| ev("a", "b", i + 1, 10.0, i)).collect();
    let refs: Vec<&ReplyEvent> = events.iter().collect();
    let flat = time_length_correlation(&refs, 10);
    for bin in &flat.by_reply_length.bins {
        assert_eq!(bin.value, 10.0);
    }

    // planted time = 2 * length -> monotone medians matching the oracle
    let events: Vec<ReplyEvent> = (0..200)
        .map(|i| {
            let words = i % 100;
            ev("a", "b", i + 1, 2.0 * f64::from(words) + 1.0, words)
        })
        .collect();
    let refs: Vec<&ReplyEvent> = events.iter().collect();
    let curves = time_length_correlation(&refs, 10);
    let mut prev = f64::NEG_INFINITY;
    for bin in &curves.by_reply_length.bins {
        let lo: u32 = bin.label.split("..").next().unwrap().parse().unwrap();
        let expected: Vec<f64> = events
            .iter()
            .filter(|e| e.reply_length_words / 10 == lo / 10)
            .map(|e| e.reply_time_minutes)
            .collect();
        assert!((bin.value - naive_median(&expected)).abs() < 1e-12);
        assert!(bin.value > prev, "curve must rise");
        prev = bin.value;
    }

    // sparse lengths leave empty bins out of the table entirely
    let events = vec![ev("a", "b", 1, 5.0, 0), ev("a", "b", 2, 5.0, 95)];
    let refs: Vec<&ReplyEvent> = events.iter().collect();
    let sparse = time_length_correlation(&refs, 10);
    assert_eq!(sparse.by_reply_length.bins.len(), 2);
}

#[test]
fn circadian_single_bin_and_weekend_effect() {
    let mut monday = ev("a", "b", 1, 5.0, 10);
    monday.received_local_hour = 9;
    monday.received_day_of_week = DayOfWeek::Mon;
    let refs = [&monday];
    let c = circadian_stats(&refs);
    assert_eq!(c.time_by_day.bins.len(), 1);
    assert_eq!(c.time_by_day.bins[0].label, "mon");
    assert_eq!(c.time_by_hour.bins.len(), 1);
    assert_eq!(c.time_by_hour.bins[0].label, "9");

    // weekend replies planted slower and shorter
    let mut events = Vec::new();
    for i in 0..50u32 {
        let mut e = ev("a", "b", i + 1, 20.0, 40);
        e.received_day_of_week = DayOfWeek::Tue;
        events.push(e);
        let mut e = ev("a", "b", i + 51, 90.0, 12);
        e.received_day_of_week = DayOfWeek::Sat;
        events.push(e);
    }
    let refs: Vec<&ReplyEvent> = events.iter().collect();
    let c = circadian_stats(&refs);
    let tue = c.time_by_day.bin("tue").unwrap().value;
    let sat = c.time_by_day.bin("sat").unwrap().value;
    assert!(sat > tue);
    let tue_len = c.length_by_day.bin("tue").unwrap().value;
    let sat_len = c.length_by_day.bin("sat").unwrap().value;
    assert!(sat_len < tue_len);
}

#[test]
fn group_stats_by_demographics() {
    let mut profiles = ProfileTable::new();
    for (u, age) in [("teen1", 15), ("teen2", 16), ("old1", 60), ("old2", 70)] {
        profiles.insert(
            u.to_string(),
            UserProfile {
                user_id: u.to_string(),
                age_years: age,
                gender: Gender::F,
            },
        );
    }
    let mut events = Vec::new();
    for i in 0..20u32 {
        events.push(ev(if i % 2 == 0 { "teen1" } else { "teen2" }, "x", i + 1, 13.0, 17));
        events.push(ev(if i % 2 == 0 { "old1" } else { "old2" }, "x", i + 21, 47.0, 40));
    }
    let refs: Vec<&ReplyEvent> = events.iter().collect();
    let stats = group_stats(&refs, &profiles, GroupBy::AgeGroup, 10);
    let teen = stats.summaries.iter().find(|s| s.group == "teen").unwrap();
    let mature = stats.summaries.iter().find(|s| s.group == "mature").unwrap();
    assert_eq!(teen.reply_time.median, 13.0);
    assert_eq!(mature.reply_time.median, 47.0);
    assert!(teen.reply_length.median < mature.reply_length.median);

    // users without profiles fall into a single unknown group
    let anon = events.clone();
    let refs: Vec<&ReplyEvent> = anon.iter().collect();
    let stats = group_stats(&refs, &ProfileTable::new(), GroupBy::AgeGroup, 10);
    assert_eq!(stats.summaries.len(), 1);
    assert_eq!(stats.summaries[0].group, "unknown");
    assert_eq!(stats.summaries[0].n, events.len());
}

#[test]
fn group_stats_by_device_and_attachment() {
    let mut events = Vec::new();
    for i in 0..12u32 {
        let mut e = ev("a", "b", i + 1, 28.0, 20);
        e.replier_device = Device::Phone;
        events.push(e);
        let mut e = ev("a", "b", i + 13, 62.0, 60);
        e.replier_device = Device::Desktop;
        e.n_attachments_received = 1;
        events.push(e);
    }
    let refs: Vec<&ReplyEvent> = events.iter().collect();
    let by_dev = group_stats(&refs, &ProfileTable::new(), GroupBy::Device, 10);
    assert_eq!(by_dev.summaries.iter().find(|s| s.group == "phone").unwrap().reply_time.median, 28.0);
    assert_eq!(by_dev.summaries.iter().find(|s| s.group == "desktop").unwrap().reply_time.median, 62.0);
    let by_att = group_stats(&refs, &ProfileTable::new(), GroupBy::HasAttachment, 10);
    assert!(
        by_att.summaries.iter().find(|s| s.group == "with_attachment").unwrap().reply_time.median
            > by_att.summaries.iter().find(|s| s.group == "without_attachment").unwrap().reply_time.median
    );
}

// ---- synchronization ----------------------------------------------------

/// Builds one two-user thread with the given reply times; users are
/// unique to the thread so corpus medians are controlled exactly.
fn sync_thread(idx: usize, times: &[f64]) -> Dyad {
    let a = format!("u{idx}a");
    let b = format!("u{idx}b");
    let events: Vec<ReplyEvent> = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let (rep, rec) = if i % 2 == 0 { (&a, &b) } else { (&b, &a) };
            ev(rep, rec, i as u32 + 1, t, 10)
        })
        .collect();
    dyad_from_events(&a, &b, events)
}

#[test]
fn synchronized_users_produce_zero_curve() {
    // both users always reply at exactly their personal median
    let dyads: Vec<Dyad> = (0..20)
        .map(|i| {
            let times: Vec<f64> = (0..12).map(|s| if s % 2 == 0 { 8.0 } else { 24.0 }).collect();
            let _ = i;
            sync_thread(i, &times)
        })
        .collect();
    let sync = synchronization_curve(&dyads, Measure::ReplyTime, &SyncOptions::default());
    assert!(sync.threads_used == 20);
    for bin in &sync.curve.bins {
        assert!(bin.value.abs() < 1e-12, "segment {} nonzero", bin.label);
    }
}

#[test]
fn v_shaped_differences_reproduce_a_v() {
    // deviations strictly alternate sign per step, so one user sits
    // above their median and the other below; the consecutive
    // normalized difference then tracks the planted amplitude, which
    // shrinks to the middle of the thread and grows back out
    let n = 20usize;
    let dyads: Vec<Dyad> = (0..50)
        .map(|d| {
            let times: Vec<f64> = (0..n)
                .map(|i| {
                    let pos = i as f64 / (n - 1) as f64;
                    let amplitude = 0.8 * (pos - 0.5).abs() + 0.05;
                    // signs alternate per step and flip at the midpoint,
                    // giving both users symmetric deviation sets (equal
                    // medians) while consecutive steps stay cross-signed
                    let sign = if (i < n / 2) == (i % 2 == 0) { 1.0 } else { -1.0 };
                    10.0 * (1.0 + sign * amplitude / 2.0)
                })
                .collect();
            sync_thread(d, &times)
        })
        .collect();
    let sync = synchronization_curve(&dyads, Measure::ReplyTime, &SyncOptions::default());
    let value = |label: &str| sync.curve.bin(label).unwrap().value;
    assert!(value("5") < value("1"), "segment 5 {} vs 1 {}", value("5"), value("1"));
    assert!(value("6") < value("10"), "segment 6 {} vs 10 {}", value("6"), value("10"));
    assert!(value("6") < value("2"));
}

#[test]
fn sync_is_invariant_under_endpoint_relabeling() {
    let mut lcg = Lcg(13);
    let times: Vec<Vec<f64>> = (0..10)
        .map(|_| (0..14).map(|_| 1.0 + 40.0 * lcg.next_f64()).collect())
        .collect();
    let dyads_ab: Vec<Dyad> = times.iter().enumerate().map(|(i, t)| sync_thread(i, t)).collect();
    // relabel: swap which user speaks first by renaming endpoints
    let dyads_ba: Vec<Dyad> = dyads_ab
        .iter()
        .map(|d| {
            let mut swapped = d.clone();
            std::mem::swap(&mut swapped.user_a, &mut swapped.user_b);
            swapped
        })
        .collect();
    let a = synchronization_curve(&dyads_ab, Measure::ReplyTime, &SyncOptions::default());
    let b = synchronization_curve(&dyads_ba, Measure::ReplyTime, &SyncOptions::default());
    for (x, y) in a.curve.bins.iter().zip(&b.curve.bins) {
        assert_eq!(x.value, y.value);
        assert_eq!(x.n, y.n);
    }
}

#[test]
fn zero_median_users_are_skipped_with_counter() {
    // reply lengths all zero -> length median 0 -> thread skipped
    let dyads = vec![sync_thread(0, &vec![10.0; 12])];
    let mut zero_len = dyads.clone();
    for t in &mut zero_len[0].threads {
        for e in &mut t.reply_events {
            e.reply_length_words = 0;
        }
    }
    let sync = synchronization_curve(&zero_len, Measure::ReplyLength, &SyncOptions::default());
    assert_eq!(sync.threads_used, 0);
    assert!(sync.users_skipped_zero_median >= 2);
    assert_eq!(sync.threads_skipped, 1);
}

// ---- markers and content --------------------------------------------------

fn marker_corpus(bodies: &[(&str, &str)]) -> (Vec<mailconv_core::record::EmailRecord>, Vec<Dyad>) {
    let p = RecordParser::default();
    let mut records = Vec::new();
    for (i, (from, body)) in bodies.iter().enumerate() {
        let to = if *from == "a" { "b" } else { "a" };
        let subject = if i == 0 { "T".to_string() } else { "Re: T".to_string() };
        let line = serde_json::json!({
            "message_id": format!("m{i:02}"), "sender_id": from, "recipient_id": to,
            "timestamp_utc": 1000 + i as i64 * 600, "tz_offset_minutes": 0,
            "subject": subject, "body": body, "n_attachments": 0,
        })
        .to_string();
        records.push(p.parse_record(&line, 1).unwrap());
    }
    let out = thread_corpus(
        &records,
        &ThreadingOptions {
            min_replies_each_direction: 0,
            ..ThreadingOptions::default()
        },
    );
    (records, out.dyads)
}

#[test]
fn identical_texts_have_zero_marker_difference() {
    let body = "the cat and the dog are in a box with some hay";
    let bodies: Vec<(&str, &str)> = (0..12).map(|i| (if i % 2 == 0 { "a" } else { "b" }, body)).collect();
    let (records, dyads) = marker_corpus(&bodies);
    let curves = marker_coordination(&records, &dyads, &SyncOptions { min_steps: 1, segments: 10 });
    for (cat, curve) in &curves {
        for bin in &curve.bins {
            assert!(bin.value.abs() < 1e-12, "{cat} segment {}", bin.label);
        }
    }
}

#[test]
fn opposite_article_usage_has_difference_one() {
    // one side writes only articles, the other none
    let bodies: Vec<(&str, &str)> = (0..12)
        .map(|i| {
            if i % 2 == 0 {
                ("a", "the the the the")
            } else {
                ("b", "cat dog fish bird")
            }
        })
        .collect();
    let (records, dyads) = marker_corpus(&bodies);
    let curves = marker_coordination(&records, &dyads, &SyncOptions { min_steps: 1, segments: 10 });
    let articles = curves
        .iter()
        .find(|(c, _)| *c == mailconv_core::record::MarkerCategory::Articles)
        .map(|(_, c)| c)
        .unwrap();
    for bin in &articles.bins {
        assert!((bin.value - 1.0).abs() < 1e-12);
    }
}

#[test]
fn converging_marker_rates_produce_decreasing_curve() {
    // article rate difference shrinks linearly along the thread
    let n = 22usize;
    let mut owned: Vec<(String, String)> = Vec::new();
    for i in 0..n {
        let from = if i % 2 == 0 { "a" } else { "b" };
        // body of 20 words, k of them articles
        let k = if i % 2 == 0 { 10 } else { 10 - (10 - i * 10 / n).min(10) };
        let mut words: Vec<&str> = Vec::new();
        for j in 0..20 {
            words.push(if j < k { "the" } else { "cat" });
        }
        owned.push((from.to_string(), words.join(" ")));
    }
    let bodies: Vec<(&str, &str)> = owned.iter().map(|(f, b)| (f.as_str(), b.as_str())).collect();
    let (records, dyads) = marker_corpus(&bodies);
    let curves = marker_coordination(&records, &dyads, &SyncOptions { min_steps: 1, segments: 10 });
    let articles = curves
        .iter()
        .find(|(c, _)| *c == mailconv_core::record::MarkerCategory::Articles)
        .map(|(_, c)| c)
        .unwrap();
    let first = articles.bins.first().unwrap().value;
    let last = articles.bins.last().unwrap().value;
    assert!(last < first, "expected decreasing article difference: {first} -> {last}");
}

#[test]
fn content_similarity_shapes() {
    // identical bodies -> cosine 1 everywhere
    let bodies: Vec<(&str, &str)> = (0..12)
        .map(|i| (if i % 2 == 0 { "a" } else { "b" }, "same text every time"))
        .collect();
    let (records, dyads) = marker_corpus(&bodies);
    let tf = tf_vectorize(records.iter().map(|r| (r.message_id.as_str(), r.body_stripped.as_str())));
    let sim = content_similarity_curve(&dyads, &SyncOptions::default(), |a, b| {
        tf.cosine(a, b).ok()
    });
    assert!(sim.pairs_skipped == 0);
    for bin in &sim.curve.bins {
        assert!((bin.value - 1.0).abs() < 1e-9);
    }

    // disjoint vocabularies -> cosine 0
    let bodies: Vec<(&str, &str)> = (0..12)
        .map(|i| {
            if i % 2 == 0 {
                ("a", "alpha beta gamma")
            } else {
                ("b", "delta epsilon zeta")
            }
        })
        .collect();
    let (records, dyads) = marker_corpus(&bodies);
    let tf = tf_vectorize(records.iter().map(|r| (r.message_id.as_str(), r.body_stripped.as_str())));
    let sim = content_similarity_curve(&dyads, &SyncOptions::default(), |a, b| {
        tf.cosine(a, b).ok()
    });
    for bin in &sim.curve.bins {
        assert!(bin.value.abs() < 1e-12);
    }

    // two-topic corpus converging mid-thread -> odd/even replies share
    // progressively more vocabulary, so similarity rises
    let n = 24usize;
    let mut owned: Vec<(String, String)> = Vec::new();
    for i in 0..n {
        let from = if i % 2 == 0 { "a" } else { "b" };
        let shared = (i * 10 / n).min(9);
        let mut words = Vec::new();
        for j in 0..10 {
            if j < shared {
                words.push("common".to_string());
            } else if i % 2 == 0 {
                words.push(format!("alpha{j}"));
            } else {
                words.push(format!("beta{j}"));
            }
        }
        owned.push((from.to_string(), words.join(" ")));
    }
    let bodies: Vec<(&str, &str)> = owned.iter().map(|(f, b)| (f.as_str(), b.as_str())).collect();
    let (records, dyads) = marker_corpus(&bodies);
    let tf = tf_vectorize(records.iter().map(|r| (r.message_id.as_str(), r.body_stripped.as_str())));
    let sim = content_similarity_curve(&dyads, &SyncOptions::default(), |a, b| {
        tf.cosine(a, b).ok()
    });
    let first = sim.curve.bins.first().unwrap().value;
    let last = sim.curve.bins.last().unwrap().value;
    assert!(last > first, "similarity should rise: {first} -> {last}");
}

#[test]
fn mean_curves_carry_ci_kind() {
    let dyads = vec![sync_thread(0, &vec![10.0; 12])];
    let sync = synchronization_curve(&dyads, Measure::ReplyTime, &SyncOptions::default());
    assert_eq!(sync.curve.kind, StatKind::Mean);
    let _: &SummaryCurve = &sync.curve;
}

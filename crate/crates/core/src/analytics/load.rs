//! Email load: per user-day received/sent/replied aggregates and the
//! overload curve family built on top of them.
//!
//! Load tables are computed over the *full* record set, not only the
//! dyad-filtered corpus, because incoming volume is the quantity of
//! interest. A sent record counts as "replied" when its subject carries
//! a reply prefix. A contact is a counterpart the user has sent at least
//! one email to anywhere in the corpus; day bucketing uses each record's
//! own sender-local date.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::curves::{BinGrid, StatKind, SummaryCurve};
use super::stats;
use crate::profile::ProfileTable;
use crate::record::EmailRecord;
use crate::threading::ReplyEvent;
use crate::time;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DayCounts {
    pub received: u32,
    pub received_from_contacts: u32,
    pub sent: u32,
    pub replied: u32,
}

/// One user-day row of the load table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DailyLoad {
    pub user: String,
    pub date: NaiveDate,
    pub received: u32,
    pub received_from_contacts: u32,
    pub sent: u32,
    pub replied: u32,
}

/// Per user-day load aggregates with an associative merge, so partitions
/// of the record set can be aggregated independently (the contact set
/// must come from the full corpus either way).
#[derive(Debug, Clone, Default)]
pub struct LoadTable {
    days: BTreeMap<(String, NaiveDate), DayCounts>,
}

impl LoadTable {
    /// Adds counts for one user-day (summing with any existing row);
    /// used by synthetic fixtures.
    pub fn insert_row(&mut self, user: &str, date: NaiveDate, counts: DayCounts) {
        let slot = self.days.entry((user.to_string(), date)).or_default();
        slot.received += counts.received;
        slot.received_from_contacts += counts.received_from_contacts;
        slot.sent += counts.sent;
        slot.replied += counts.replied;
    }

    pub fn merge(&mut self, other: LoadTable) {
        for (key, counts) in other.days {
            let slot = self.days.entry(key).or_default();
            slot.received += counts.received;
            slot.received_from_contacts += counts.received_from_contacts;
            slot.sent += counts.sent;
            slot.replied += counts.replied;
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = DailyLoad> + '_ {
        self.days.iter().map(|((user, date), c)| DailyLoad {
            user: user.clone(),
            date: *date,
            received: c.received,
            received_from_contacts: c.received_from_contacts,
            sent: c.sent,
            replied: c.replied,
        })
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn get(&self, user: &str, date: NaiveDate) -> Option<DayCounts> {
        self.days.get(&(user.to_string(), date)).copied()
    }

    /// Total sent per user across the table.
    pub fn total_sent(&self) -> BTreeMap<&str, u64> {
        let mut totals: BTreeMap<&str, u64> = BTreeMap::new();
        for ((user, _), c) in &self.days {
            *totals.entry(user.as_str()).or_default() += u64::from(c.sent);
        }
        totals
    }

    /// Users with any day exceeding `max_sent` sent messages.
    pub fn users_over_daily_sent(&self, max_sent: u32) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for ((user, _), c) in &self.days {
            if c.sent > max_sent {
                out.insert(user.clone());
            }
        }
        out
    }
}

/// The contact sets needed by [`compute_daily_loads_with_contacts`]:
/// `contacts[u]` is everyone `u` has sent at least one email to.
pub fn contact_sets(records: &[EmailRecord]) -> HashMap<&str, HashSet<&str>> {
    let mut contacts: HashMap<&str, HashSet<&str>> = HashMap::new();
    for rec in records {
        contacts
            .entry(rec.sender_id.as_str())
            .or_default()
            .insert(rec.recipient_id.as_str());
    }
    contacts
}

pub fn compute_daily_loads(records: &[EmailRecord]) -> LoadTable {
    compute_daily_loads_with_contacts(records, &contact_sets(records))
}

/// Aggregates one record slice against a (corpus-wide) contact map.
pub fn compute_daily_loads_with_contacts(
    records: &[EmailRecord],
    contacts: &HashMap<&str, HashSet<&str>>,
) -> LoadTable {
    let mut table = LoadTable::default();
    for rec in records {
        let date = rec
            .sender_local_date()
            .expect("record timestamps validated at parse time");
        let sender = table
            .days
            .entry((rec.sender_id.clone(), date))
            .or_default();
        sender.sent += 1;
        if rec.is_reply_subject {
            sender.replied += 1;
        }
        let receiver = table
            .days
            .entry((rec.recipient_id.clone(), date))
            .or_default();
        receiver.received += 1;
        let from_contact = contacts
            .get(rec.recipient_id.as_str())
            .is_some_and(|set| set.contains(rec.sender_id.as_str()));
        if from_contact {
            receiver.received_from_contacts += 1;
        }
    }
    table
}

/// Activity tertile by total sent volume over the corpus window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tertile {
    Low,
    Mid,
    High,
}

impl Tertile {
    pub fn name(self) -> &'static str {
        match self {
            Tertile::Low => "low",
            Tertile::Mid => "mid",
            Tertile::High => "high",
        }
    }
}

/// Ranks users by total sent (ties by user id) and splits them into
/// thirds: bottom third low activity, top third high.
pub fn activity_tertiles(loads: &LoadTable) -> HashMap<String, Tertile> {
    let totals = loads.total_sent();
    let mut ranked: Vec<(&str, u64)> = totals.into_iter().collect();
    ranked.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
    let n = ranked.len();
    ranked
        .into_iter()
        .enumerate()
        .map(|(i, (user, _))| {
            let t = if i * 3 < n {
                Tertile::Low
            } else if i * 3 >= 2 * n {
                Tertile::High
            } else {
                Tertile::Mid
            };
            (user.to_string(), t)
        })
        .collect()
}

/// One overload curve family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LoadFamily {
    /// Mean emails sent per day vs received that day.
    Sent,
    /// Mean replies sent per day vs received that day.
    Replied,
    /// Mean fraction of received emails replied to, all mail.
    FractionAll,
    /// Fraction replied with both sides restricted to contact mail.
    FractionContacts,
    /// Median reply time of dyadic events vs the replier's load that day.
    ReplyTime,
    /// Median reply length vs load.
    ReplyLength,
}

impl LoadFamily {
    pub const ALL: [LoadFamily; 6] = [
        LoadFamily::Sent,
        LoadFamily::Replied,
        LoadFamily::FractionAll,
        LoadFamily::FractionContacts,
        LoadFamily::ReplyTime,
        LoadFamily::ReplyLength,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LoadFamily::Sent => "sent",
            LoadFamily::Replied => "replied",
            LoadFamily::FractionAll => "fraction_all",
            LoadFamily::FractionContacts => "fraction_contacts",
            LoadFamily::ReplyTime => "reply_time",
            LoadFamily::ReplyLength => "reply_length",
        }
    }

    fn stat_kind(self) -> StatKind {
        match self {
            LoadFamily::ReplyTime | LoadFamily::ReplyLength => StatKind::Median,
            _ => StatKind::Mean,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OverloadOptions {
    pub n_bins: usize,
    /// Load bins span up to this percentile of the observed loads;
    /// samples beyond it are dropped.
    pub cap_percentile: f64,
    /// Users sending more than this many emails in any single day are
    /// excluded from every overload curve.
    pub max_sent_per_day: u32,
}

impl Default for OverloadOptions {
    fn default() -> Self {
        OverloadOptions {
            n_bins: 20,
            cap_percentile: 0.99,
            max_sent_per_day: 1000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverloadCurves {
    /// (family, slice) -> curve; slices are "all", "activity:*",
    /// "age:*", "gender:*".
    pub curves: Vec<(LoadFamily, String, SummaryCurve)>,
    pub excluded_users: BTreeSet<String>,
}

impl OverloadCurves {
    pub fn curve(&self, family: LoadFamily, slice: &str) -> Option<&SummaryCurve> {
        self.curves
            .iter()
            .find(|(f, s, _)| *f == family && s == slice)
            .map(|(_, _, c)| c)
    }
}

/// Every overload curve of the suite: activity vs load, fraction
/// replied vs load (all mail and contacts only), and reply time/length
/// vs load, each sliced by activity tertile, age group, and gender.
pub fn overload_curves(
    loads: &LoadTable,
    events: &[&ReplyEvent],
    profiles: &ProfileTable,
    opts: &OverloadOptions,
) -> OverloadCurves {
    let excluded = loads.users_over_daily_sent(opts.max_sent_per_day);
    let tertiles = activity_tertiles(loads);

    let slices_of = |user: &str| -> Vec<String> {
        let mut slices = vec!["all".to_string()];
        if let Some(t) = tertiles.get(user) {
            slices.push(format!("activity:{}", t.name()));
        }
        match profiles.get(user) {
            Some(p) => {
                slices.push(format!("age:{}", p.age_group().name()));
                slices.push(format!("gender:{}", p.gender.name()));
            }
            None => {
                slices.push("age:unknown".to_string());
                slices.push("gender:unknown".to_string());
            }
        }
        slices
    };

    // (family) -> (load, value, slices) samples
    let mut samples: HashMap<LoadFamily, Vec<(f64, f64, Vec<String>)>> = HashMap::new();
    for row in loads.rows() {
        if excluded.contains(&row.user) {
            continue;
        }
        let slices = slices_of(&row.user);
        if row.received > 0 {
            let load = f64::from(row.received);
            samples
                .entry(LoadFamily::Sent)
                .or_default()
                .push((load, f64::from(row.sent), slices.clone()));
            samples
                .entry(LoadFamily::Replied)
                .or_default()
                .push((load, f64::from(row.replied), slices.clone()));
            // Replies answer mail from any day, so a day's ratio can pass
            // 1; clamp to keep the fraction a fraction.
            let frac = (f64::from(row.replied) / f64::from(row.received)).min(1.0);
            samples
                .entry(LoadFamily::FractionAll)
                .or_default()
                .push((load, frac, slices.clone()));
        }
        if row.received_from_contacts > 0 {
            let load = f64::from(row.received_from_contacts);
            let frac =
                (f64::from(row.replied) / f64::from(row.received_from_contacts)).min(1.0);
            samples
                .entry(LoadFamily::FractionContacts)
                .or_default()
                .push((load, frac, slices));
        }
    }

    for ev in events {
        if excluded.contains(&ev.replier) {
            continue;
        }
        let date = match time::local_date(ev.reply_timestamp_utc, ev.reply_tz_offset_minutes) {
            Some(d) => d,
            None => continue,
        };
        let received = match loads.get(&ev.replier, date) {
            Some(c) if c.received > 0 => f64::from(c.received),
            _ => continue,
        };
        let slices = slices_of(&ev.replier);
        samples
            .entry(LoadFamily::ReplyTime)
            .or_default()
            .push((received, ev.reply_time_minutes, slices.clone()));
        samples
            .entry(LoadFamily::ReplyLength)
            .or_default()
            .push((received, f64::from(ev.reply_length_words), slices));
    }

    let mut curves = Vec::new();
    for family in LoadFamily::ALL {
        let Some(fam_samples) = samples.get(&family) else {
            continue;
        };
        if fam_samples.is_empty() {
            continue;
        }
        // One grid per family, shared across slices for comparability.
        let mut load_values: Vec<f64> = fam_samples.iter().map(|(l, _, _)| *l).collect();
        stats::sort(&mut load_values);
        let lo = load_values[0];
        let cap = stats::percentile_sorted(&load_values, opts.cap_percentile.clamp(0.0, 1.0));
        let grid = if cap > lo {
            BinGrid::log_spaced(lo.max(1.0).min(cap), cap.max(1.0), opts.n_bins)
        } else {
            BinGrid::linear(lo, cap, 1)
        };

        let mut by_slice: BTreeMap<&str, Vec<Vec<f64>>> = BTreeMap::new();
        for (load, value, slices) in fam_samples {
            if grid.out_of_range(*load) {
                continue;
            }
            let bin = grid.index(*load);
            for slice in slices {
                by_slice
                    .entry(slice.as_str())
                    .or_insert_with(|| vec![Vec::new(); grid.n_bins()])[bin]
                    .push(*value);
            }
        }
        for (slice, bins) in by_slice {
            let groups = bins
                .into_iter()
                .enumerate()
                .map(|(i, values)| (grid.label(i), values))
                .collect();
            curves.push((
                family,
                slice.to_string(),
                SummaryCurve::from_groups(
                    format!("overload_{}_{slice}", family.name()),
                    family.stat_kind(),
                    groups,
                ),
            ));
        }
    }

    OverloadCurves {
        curves,
        excluded_users: excluded,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::RecordParser;

    fn rec(id: &str, from: &str, to: &str, ts: i64, subject: &str) -> EmailRecord {
        let parser = RecordParser::default();
        let line = serde_json::json!({
            "message_id": id, "sender_id": from, "recipient_id": to,
            "timestamp_utc": ts, "tz_offset_minutes": 0,
            "subject": subject, "body": "hello there", "n_attachments": 0,
        })
        .to_string();
        parser.parse_record(&line, 1).unwrap()
    }

    const DAY: i64 = 86_400;

    #[test]
    fn counts_received_sent_replied() {
        // u receives 10, sends 3, of which 2 are replies, all on day 0.
        let mut records = Vec::new();
        for i in 0..10 {
            records.push(rec(&format!("r{i}"), &format!("x{i}"), "u", 1000 + i, "Hi"));
        }
        records.push(rec("s0", "u", "x0", 2000, "Re: Hi"));
        records.push(rec("s1", "u", "x1", 2001, "Re: Hi"));
        records.push(rec("s2", "u", "x9", 2002, "News"));
        let loads = compute_daily_loads(&records);
        let day0 = time::local_date(1000, 0).unwrap();
        let c = loads.get("u", day0).unwrap();
        assert_eq!(
            (c.received, c.sent, c.replied),
            (10, 3, 2)
        );
        // contacts: u sent to x0, x1, x9 -> only their mail counts
        assert_eq!(c.received_from_contacts, 3);
    }

    #[test]
    fn no_activity_no_row() {
        let records = vec![rec("m", "a", "b", 0, "Hi")];
        let loads = compute_daily_loads(&records);
        let day1 = time::local_date(DAY, 0).unwrap();
        assert!(loads.get("a", day1).is_none());
        assert!(loads.get("c", time::local_date(0, 0).unwrap()).is_none());
    }

    #[test]
    fn contacts_only_counting_matches_hand_enumeration() {
        // a sends to b (so b's mail to a is contact mail for a; a's mail
        // to b makes b... contact of a only). c never receives from its
        // contacts.
        let records = vec![
            rec("m1", "a", "b", 0, "Hi"),        // a -> b
            rec("m2", "b", "a", 10, "Re: Hi"),   // b -> a (b is a's contact)
            rec("m3", "c", "a", 20, "Spam"),     // c -> a (c not a contact of a)
        ];
        let loads = compute_daily_loads(&records);
        let d = time::local_date(0, 0).unwrap();
        let a = loads.get("a", d).unwrap();
        assert_eq!(a.received, 2);
        assert_eq!(a.received_from_contacts, 1);
        let b = loads.get("b", d).unwrap();
        // b received from a; b sent to a, so a is b's contact.
        assert_eq!(b.received_from_contacts, 1);
    }

    #[test]
    fn merge_partitions_equals_whole() {
        let mut records = Vec::new();
        for i in 0..40i64 {
            let (from, to) = if i % 3 == 0 { ("a", "b") } else { ("b", "a") };
            let subject = if i % 2 == 0 { "Re: T" } else { "T" };
            records.push(rec(&format!("m{i}"), from, to, i * 7000, subject));
        }
        let whole = compute_daily_loads(&records);
        let contacts = contact_sets(&records);
        let mut merged = compute_daily_loads_with_contacts(&records[..17], &contacts);
        merged.merge(compute_daily_loads_with_contacts(&records[17..], &contacts));
        let a: Vec<DailyLoad> = whole.rows().collect();
        let b: Vec<DailyLoad> = merged.rows().collect();
        assert_eq!(a, b);
    }

    #[test]
    fn tertiles_split_by_total_sent() {
        let mut records = Vec::new();
        for (user, n) in [("u1", 1), ("u2", 2), ("u3", 3), ("u4", 4), ("u5", 5), ("u6", 6)] {
            for i in 0..n {
                records.push(rec(&format!("{user}m{i}"), user, "sink", i as i64, "Hi"));
            }
        }
        let loads = compute_daily_loads(&records);
        let t = activity_tertiles(&loads);
        assert_eq!(t["u1"], Tertile::Low);
        assert_eq!(t["u2"], Tertile::Low);
        assert_eq!(t["u5"], Tertile::High);
        assert_eq!(t["u6"], Tertile::High);
        assert_eq!(t["u3"], Tertile::Mid);
        // "sink" never sends; it ranks lowest
        assert_eq!(t["sink"], Tertile::Low);
    }

    #[test]
    fn exclusion_removes_exactly_heavy_senders() {
        let mut records = Vec::new();
        // "bot" sends 1001 messages in one day; "human" sends 3.
        for i in 0..1001i64 {
            records.push(rec(&format!("b{i}"), "bot", "u", i, "Hi"));
        }
        for i in 0..3i64 {
            records.push(rec(&format!("h{i}"), "human", "u", i, "Hi"));
            records.push(rec(&format!("hr{i}"), "u", "human", 100 + i, "Re: Hi"));
        }
        let loads = compute_daily_loads(&records);
        let curves = overload_curves(&loads, &[], &ProfileTable::new(), &OverloadOptions::default());
        assert!(curves.excluded_users.contains("bot"));
        assert!(!curves.excluded_users.contains("human"));
        assert!(!curves.excluded_users.contains("u"));
        assert_eq!(curves.excluded_users.len(), 1);
    }

    fn day(n: i64) -> NaiveDate {
        time::local_date(n * DAY, 0).unwrap()
    }

    #[test]
    fn full_replier_has_fraction_one() {
        let mut loads = LoadTable::default();
        for i in 1..=30u32 {
            loads.insert_row(
                "u",
                day(i as i64),
                DayCounts {
                    received: i,
                    received_from_contacts: i,
                    sent: i,
                    replied: i,
                },
            );
        }
        let curves = overload_curves(&loads, &[], &ProfileTable::new(), &OverloadOptions::default());
        let c = curves.curve(LoadFamily::FractionAll, "all").unwrap();
        assert!(!c.bins.is_empty());
        for bin in &c.bins {
            assert_eq!(bin.value, 1.0, "bin {}", bin.label);
        }
    }

    #[test]
    fn half_replier_day_contributes_half() {
        let mut loads = LoadTable::default();
        for d in 0..6i64 {
            loads.insert_row(
                "u",
                day(d),
                DayCounts {
                    received: 10,
                    received_from_contacts: 10,
                    sent: 5,
                    replied: 5,
                },
            );
        }
        let curves = overload_curves(&loads, &[], &ProfileTable::new(), &OverloadOptions::default());
        let c = curves.curve(LoadFamily::FractionAll, "all").unwrap();
        let populated: Vec<_> = c.bins.iter().filter(|b| b.n > 0).collect();
        assert_eq!(populated.len(), 1);
        assert_eq!(populated[0].value, 0.5);
        assert_eq!(populated[0].n, 6);
    }

    #[test]
    fn fraction_is_clamped_to_one() {
        // replying today to yesterday's mail: replied > received
        let mut loads = LoadTable::default();
        for d in 0..4i64 {
            loads.insert_row(
                "u",
                day(d),
                DayCounts {
                    received: 2,
                    received_from_contacts: 2,
                    sent: 9,
                    replied: 9,
                },
            );
        }
        let curves = overload_curves(&loads, &[], &ProfileTable::new(), &OverloadOptions::default());
        for family in [LoadFamily::FractionAll, LoadFamily::FractionContacts] {
            let c = curves.curve(family, "all").unwrap();
            for bin in &c.bins {
                assert!(bin.value >= 0.0 && bin.value <= 1.0);
            }
        }
    }
}

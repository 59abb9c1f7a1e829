//! File formats: record and profile inputs, tab-separated analysis
//! tables, the feature matrix, and the output manifest.
//!
//! Every table is TSV with a single header row naming its columns.
//! Floats are written with enough digits to round-trip exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use mailconv_core::analytics::{DailyLoad, Distribution, StatKind, SummaryCurve};
use mailconv_core::features::{
    DyadVectors, FeatureCatalog, FeatureMatrix, FeatureVector, MISSING,
};
use mailconv_core::ingest::{IngestError, RecordParser};
use mailconv_core::profile::{Gender, ProfileTable, UserProfile};
use mailconv_core::record::EmailRecord;
use mailconv_core::threading::{Dyad, ReplyEvent};
use serde::Serialize;

/// Canonical float rendering: shortest representation that parses back
/// to the same value.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        let mut s = format!("{x}");
        if !s.contains('.') && !s.contains('e') && !s.contains("inf") {
            s.push_str(".0");
        }
        s
    }
}

pub struct TableWriter {
    out: BufWriter<File>,
    pub rows: u64,
}

impl TableWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<TableWriter> {
        let file = File::create(path)
            .with_context(|| format!("creating {}", path.display()))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{}", header.join("\t"))?;
        Ok(TableWriter { out, rows: 0 })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        writeln!(self.out, "{}", fields.join("\t"))?;
        self.rows += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<u64> {
        self.out.flush()?;
        Ok(self.rows)
    }
}

// ---- inputs ---------------------------------------------------------------

pub struct IngestResult {
    pub records: Vec<EmailRecord>,
    pub rejects: Vec<IngestError>,
}

/// Parses a raw JSONL record file; malformed lines become per-line
/// rejects rather than failures.
pub fn read_raw_records(path: &Path, parser: &RecordParser) -> Result<IngestResult> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut records = Vec::new();
    let mut rejects = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        match parser.parse_record(&line, i as u64 + 1) {
            Ok(rec) => records.push(rec),
            Err(e) => rejects.push(e),
        }
    }
    Ok(IngestResult { records, rejects })
}

/// Profiles: one `user_id <tab> age_years <tab> gender` row per line,
/// `#` comments allowed. Gender tokens: f/m/u (case-insensitive).
pub fn read_profiles(path: &Path) -> Result<ProfileTable> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut table = ProfileTable::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (user, age, gender) = match (parts.next(), parts.next(), parts.next()) {
            (Some(u), Some(a), Some(g)) => (u, a, g),
            _ => bail!("profiles line {}: expected `user age gender`", i + 1),
        };
        let age_years: u32 = age
            .parse()
            .map_err(|_| anyhow!("profiles line {}: bad age `{age}`", i + 1))?;
        let gender = Gender::from_token(gender)
            .ok_or_else(|| anyhow!("profiles line {}: bad gender `{gender}`", i + 1))?;
        table.insert(
            user.to_string(),
            UserProfile {
                user_id: user.to_string(),
                age_years,
                gender,
            },
        );
    }
    Ok(table)
}

// ---- outputs --------------------------------------------------------------

pub fn write_canonical_records(path: &Path, records: &[EmailRecord]) -> Result<u64> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    for rec in records {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(records.len() as u64)
}

pub fn write_rejects(path: &Path, rejects: &[IngestError]) -> Result<u64> {
    let mut w = TableWriter::create(path, &["line", "error"])?;
    for r in rejects {
        w.row(&[r.line().to_string(), r.to_string().replace('\t', " ")])?;
    }
    w.finish()
}

#[derive(Serialize)]
struct EventRow<'a> {
    dyad_a: &'a str,
    dyad_b: &'a str,
    subject_root: &'a str,
    #[serde(flatten)]
    event: &'a ReplyEvent,
}

pub fn write_events(path: &Path, dyads: &[Dyad]) -> Result<u64> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    let mut rows = 0u64;
    for d in dyads {
        for t in &d.threads {
            for ev in &t.reply_events {
                serde_json::to_writer(
                    &mut out,
                    &EventRow {
                        dyad_a: &d.user_a,
                        dyad_b: &d.user_b,
                        subject_root: &t.subject_root,
                        event: ev,
                    },
                )?;
                out.write_all(b"\n")?;
                rows += 1;
            }
        }
    }
    out.flush()?;
    Ok(rows)
}

pub fn write_threads(path: &Path, records: &[EmailRecord], dyads: &[Dyad]) -> Result<u64> {
    let mut w = TableWriter::create(
        path,
        &["dyad_a", "dyad_b", "subject_root", "n_messages", "n_replies", "span_hours", "message_ids"],
    )?;
    for d in dyads {
        for t in &d.threads {
            let mids: Vec<&str> = t
                .message_idx
                .iter()
                .map(|&i| records[i].message_id.as_str())
                .collect();
            w.row(&[
                d.user_a.clone(),
                d.user_b.clone(),
                t.subject_root.clone(),
                t.n_messages().to_string(),
                t.n_steps().to_string(),
                fmt_f64(t.span_hours),
                mids.join(","),
            ])?;
        }
    }
    w.finish()
}

/// Generic curve table: `bin  value  lo  hi  n` with statistic-specific
/// column names, plus optional leading key columns.
pub fn write_curves(
    path: &Path,
    key_names: &[&str],
    curves: &[(Vec<String>, &SummaryCurve)],
) -> Result<u64> {
    let kind = curves
        .first()
        .map(|(_, c)| c.kind)
        .unwrap_or(StatKind::Median);
    let stat_cols: [&str; 3] = match kind {
        StatKind::Median => ["median", "q25", "q75"],
        StatKind::Mean => ["mean", "ci_lo", "ci_hi"],
    };
    let mut header: Vec<&str> = key_names.to_vec();
    header.push("bin");
    header.extend_from_slice(&stat_cols);
    header.push("n");
    let mut w = TableWriter::create(path, &header)?;
    for (keys, curve) in curves {
        for bin in &curve.bins {
            let mut row = keys.clone();
            row.push(bin.label.clone());
            row.push(fmt_f64(bin.value));
            row.push(fmt_f64(bin.lo));
            row.push(fmt_f64(bin.hi));
            row.push(bin.n.to_string());
            w.row(&row)?;
        }
    }
    w.finish()
}

pub fn write_distribution(path: &Path, dist: &Distribution) -> Result<u64> {
    let mut w = TableWriter::create(path, &["bin_lo", "bin_hi", "count", "pdf", "cdf"])?;
    for i in 0..dist.counts.len() {
        w.row(&[
            fmt_f64(dist.edges[i]),
            fmt_f64(dist.edges[i + 1]),
            dist.counts[i].to_string(),
            fmt_f64(dist.pdf[i]),
            fmt_f64(dist.cdf[i]),
        ])?;
    }
    w.finish()
}

pub fn write_daily_loads(path: &Path, rows: impl Iterator<Item = DailyLoad>) -> Result<u64> {
    let mut w = TableWriter::create(
        path,
        &["user", "date", "received", "received_from_contacts", "sent", "replied"],
    )?;
    for r in rows {
        w.row(&[
            r.user,
            r.date.to_string(),
            r.received.to_string(),
            r.received_from_contacts.to_string(),
            r.sent.to_string(),
            r.replied.to_string(),
        ])?;
    }
    w.finish()
}

pub fn write_chi2(path: &Path, catalog: &FeatureCatalog, ranked: &[(usize, f64)]) -> Result<u64> {
    let mut w = TableWriter::create(path, &["rank", "feature", "chi2"])?;
    for (i, &(feature, score)) in ranked.iter().enumerate() {
        w.row(&[
            (i + 1).to_string(),
            catalog.defs()[feature].name.clone(),
            fmt_f64(score),
        ])?;
    }
    w.finish()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<u64> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(1)
}

// ---- feature matrix -------------------------------------------------------

const FEATURE_KEY_COLS: [&str; 8] = [
    "dyad_a",
    "dyad_b",
    "reply_message_id",
    "event_ts",
    "split",
    "time_class",
    "length_class",
    "is_last",
];

/// Catalog-ordered TSV with key and label columns in front; missing
/// features render as empty fields.
pub fn write_features(path: &Path, matrix: &FeatureMatrix) -> Result<u64> {
    let mut header: Vec<&str> = FEATURE_KEY_COLS.to_vec();
    header.extend(matrix.catalog.names());
    let mut w = TableWriter::create(path, &header)?;
    for dyad in &matrix.dyads {
        for (i, v) in dyad.vectors.iter().enumerate() {
            let mut row = vec![
                v.dyad_a.clone(),
                v.dyad_b.clone(),
                v.reply_message_id.clone(),
                v.event_timestamp_utc.to_string(),
                if i < dyad.n_train { "train" } else { "test" }.to_string(),
                v.time_class.to_string(),
                v.length_class.to_string(),
                u8::from(v.is_last).to_string(),
            ];
            row.extend(v.values.iter().map(|&x| fmt_f64(x)));
            w.row(&row)?;
        }
    }
    w.finish()
}

/// Reads a feature matrix back, regrouping rows by dyad in file order
/// and reconstructing the train/test boundary.
pub fn read_features(path: &Path) -> Result<FeatureMatrix> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| anyhow!("{}: empty feature file", path.display()))??;
    let cols: Vec<&str> = header.split('\t').collect();
    let catalog = FeatureCatalog::default();
    let expected: Vec<&str> = FEATURE_KEY_COLS
        .iter()
        .copied()
        .chain(catalog.names())
        .collect();
    if cols != expected {
        bail!(
            "{}: feature header does not match the {}-feature catalog",
            path.display(),
            catalog.len()
        );
    }

    let mut dyads: Vec<DyadVectors> = Vec::new();
    let mut index: std::collections::HashMap<(String, String), usize> =
        std::collections::HashMap::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != expected.len() {
            bail!("{}: line {}: wrong column count", path.display(), lineno + 2);
        }
        let parse_ctx = |what: &str| format!("{}: line {}: bad {what}", path.display(), lineno + 2);
        let values: Vec<f64> = fields[8..]
            .iter()
            .map(|s| {
                if s.is_empty() {
                    Ok(MISSING)
                } else {
                    s.parse::<f64>().with_context(|| parse_ctx("feature value"))
                }
            })
            .collect::<Result<_>>()?;
        let is_test = match fields[4] {
            "train" => false,
            "test" => true,
            other => bail!("{}: line {}: bad split `{other}`", path.display(), lineno + 2),
        };
        let v = FeatureVector {
            dyad_a: fields[0].to_string(),
            dyad_b: fields[1].to_string(),
            reply_message_id: fields[2].to_string(),
            event_timestamp_utc: fields[3].parse().with_context(|| parse_ctx("event_ts"))?,
            values,
            time_class: fields[5].parse().with_context(|| parse_ctx("time_class"))?,
            length_class: fields[6].parse().with_context(|| parse_ctx("length_class"))?,
            is_last: fields[7] == "1",
            replier_side: 0,
        };
        let key = (v.dyad_a.clone(), v.dyad_b.clone());
        let at = *index.entry(key).or_insert_with(|| {
            dyads.push(DyadVectors {
                user_a: v.dyad_a.clone(),
                user_b: v.dyad_b.clone(),
                vectors: Vec::new(),
                n_train: 0,
            });
            dyads.len() - 1
        });
        if !is_test {
            if dyads[at].n_train != dyads[at].vectors.len() {
                bail!(
                    "{}: line {}: train row after test rows for the same dyad",
                    path.display(),
                    lineno + 2
                );
            }
            dyads[at].n_train += 1;
        }
        dyads[at].vectors.push(v);
    }
    Ok(FeatureMatrix { catalog, dyads })
}

// ---- manifest -------------------------------------------------------------

pub fn file_digest(path: &Path) -> Result<String> {
    use sha2::{Digest, Sha256};
    let mut file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    let out = hasher.finalize();
    Ok(out.iter().map(|b| format!("{b:02x}")).collect())
}

/// Manifest table: one `(path, sha256, rows)` line per output file,
/// sorted by path.
pub fn write_manifest(path: &Path, entries: &[(String, String, u64)]) -> Result<u64> {
    let mut w = TableWriter::create(path, &["path", "sha256", "rows"])?;
    let mut sorted = entries.to_vec();
    sorted.sort();
    for (rel, digest, rows) in &sorted {
        w.row(&[rel.clone(), digest.clone(), rows.to_string()])?;
    }
    w.finish()
}

pub fn read_manifest(path: &Path) -> Result<Vec<(String, String, u64)>> {
    let file = File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if i == 0 || line.is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let rel = parts.next().unwrap_or_default().to_string();
        let digest = parts.next().unwrap_or_default().to_string();
        let rows: u64 = parts.next().unwrap_or("0").parse()?;
        out.push((rel, digest, rows));
    }
    Ok(out)
}

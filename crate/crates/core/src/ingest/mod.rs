//! Corpus ingestion: raw record lines to canonical [`EmailRecord`]s.
//!
//! The input record format is JSON Lines, one message per line:
//!
//! ```json
//! {"message_id":"m1","sender_id":"a","recipient_id":"b",
//!  "timestamp_utc":1398902400,"tz_offset_minutes":-420,
//!  "subject":"Re: Lunch","body":"ok\nSent from my iPhone","n_attachments":0}
//! ```
//!
//! Parsing is a pure function of the line and the parser configuration,
//! so records may be parsed in any order or partition; malformed lines
//! are rejected individually with the line number.

mod lexicon;
mod templates;
pub mod tokenize;

pub use lexicon::{LexiconError, LexiconSet, MarkerLexicon};
pub use templates::{MarkerKind, StripTemplates, TemplateError};
pub use tokenize::{tokens, word_count};

use serde::Deserialize;
use thiserror::Error;

use crate::record::EmailRecord;
use crate::time;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("line {line}: field `{field}` must not be empty")]
    EmptyField { line: u64, field: &'static str },
    #[error("line {line}: timestamp {value} out of representable range")]
    TimestampOutOfRange { line: u64, value: i64 },
}

impl IngestError {
    pub fn line(&self) -> u64 {
        match self {
            IngestError::Malformed { line, .. }
            | IngestError::EmptyField { line, .. }
            | IngestError::TimestampOutOfRange { line, .. } => *line,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    message_id: String,
    sender_id: String,
    recipient_id: String,
    timestamp_utc: i64,
    tz_offset_minutes: i32,
    subject: String,
    body: String,
    n_attachments: u32,
}

/// Strips leading reply prefixes ("Re:", case-insensitive) iteratively
/// and trims surrounding whitespace. Returns the subject root and
/// whether at least one prefix was removed. Idempotent on its root
/// output.
pub fn normalize_subject(subject: &str) -> (String, bool) {
    let mut rest = subject.trim();
    let mut is_reply = false;
    loop {
        let lower = rest.as_bytes();
        if lower.len() >= 3
            && lower[0].eq_ignore_ascii_case(&b'r')
            && lower[1].eq_ignore_ascii_case(&b'e')
            && lower[2] == b':'
        {
            is_reply = true;
            rest = rest[3..].trim_start();
        } else {
            break;
        }
    }
    (rest.to_string(), is_reply)
}

/// A configured record parser: strip templates plus marker lexicons.
#[derive(Debug, Clone, Default)]
pub struct RecordParser {
    templates: StripTemplates,
    lexicons: LexiconSet,
}

impl RecordParser {
    pub fn new(templates: StripTemplates, lexicons: LexiconSet) -> RecordParser {
        RecordParser { templates, lexicons }
    }

    pub fn templates(&self) -> &StripTemplates {
        &self.templates
    }

    pub fn lexicons(&self) -> &LexiconSet {
        &self.lexicons
    }

    /// Parses one record line. `line_no` is 1-based and only used for
    /// diagnostics.
    pub fn parse_record(&self, line: &str, line_no: u64) -> Result<EmailRecord, IngestError> {
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| IngestError::Malformed {
            line: line_no,
            reason: e.to_string(),
        })?;
        for (field, value) in [
            ("message_id", &raw.message_id),
            ("sender_id", &raw.sender_id),
            ("recipient_id", &raw.recipient_id),
        ] {
            if value.is_empty() {
                return Err(IngestError::EmptyField { line: line_no, field });
            }
        }
        if !time::timestamp_in_range(raw.timestamp_utc) {
            return Err(IngestError::TimestampOutOfRange {
                line: line_no,
                value: raw.timestamp_utc,
            });
        }

        let (stripped, device) = self.templates.strip_and_classify(&raw.body);
        let body_stripped = stripped.to_string();
        let word_count = tokenize::word_count(&body_stripped);
        let marker_counts = self.lexicons.count_markers(&body_stripped);
        let (subject_root, is_reply_subject) = normalize_subject(&raw.subject);

        Ok(EmailRecord {
            message_id: raw.message_id,
            sender_id: raw.sender_id,
            recipient_id: raw.recipient_id,
            timestamp_utc: raw.timestamp_utc,
            tz_offset_minutes: raw.tz_offset_minutes,
            subject_raw: raw.subject,
            subject_root,
            is_reply_subject,
            body_raw: raw.body,
            body_stripped,
            word_count,
            n_attachments: raw.n_attachments,
            device,
            marker_counts,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::{Device, MarkerCategory};

    fn line(subject: &str, body: &str) -> String {
        serde_json::json!({
            "message_id": "m1",
            "sender_id": "a",
            "recipient_id": "b",
            "timestamp_utc": 1_398_902_400,
            "tz_offset_minutes": -420,
            "subject": subject,
            "body": body,
            "n_attachments": 0,
        })
        .to_string()
    }

    #[test]
    fn parses_phone_signature_record() {
        let p = RecordParser::default();
        let rec = p.parse_record(&line("hi", "ok\nSent from my iPhone"), 1).unwrap();
        assert_eq!(rec.device, Device::Phone);
        assert_eq!(rec.body_stripped, "ok");
        assert_eq!(rec.word_count, 1);
    }

    #[test]
    fn empty_body_yields_zero_counts() {
        let p = RecordParser::default();
        let rec = p.parse_record(&line("hi", ""), 1).unwrap();
        assert_eq!(rec.word_count, 0);
        assert_eq!(rec.marker_counts.total(), 0);
        assert_eq!(rec.device, Device::Desktop);
    }

    #[test]
    fn missing_timestamp_is_rejected_with_line_number() {
        let p = RecordParser::default();
        let bad = r#"{"message_id":"m","sender_id":"a","recipient_id":"b","tz_offset_minutes":0,"subject":"s","body":"","n_attachments":0}"#;
        let err = p.parse_record(bad, 7).unwrap_err();
        assert_eq!(err.line(), 7);
        let msg = err.to_string();
        assert!(msg.contains("timestamp_utc"), "diagnostic was: {msg}");
    }

    #[test]
    fn empty_ids_are_rejected() {
        let p = RecordParser::default();
        let bad = serde_json::json!({
            "message_id": "", "sender_id": "a", "recipient_id": "b",
            "timestamp_utc": 0, "tz_offset_minutes": 0,
            "subject": "s", "body": "", "n_attachments": 0,
        })
        .to_string();
        assert!(matches!(
            p.parse_record(&bad, 3),
            Err(IngestError::EmptyField { line: 3, field: "message_id" })
        ));
    }

    #[test]
    fn subject_normalization() {
        assert_eq!(normalize_subject("Re: Lunch"), ("Lunch".to_string(), true));
        assert_eq!(normalize_subject("Lunch"), ("Lunch".to_string(), false));
        assert_eq!(normalize_subject("Re: Re: Lunch"), ("Lunch".to_string(), true));
        assert_eq!(normalize_subject("re:RE:  Lunch "), ("Lunch".to_string(), true));
        assert_eq!(normalize_subject("  spacing  "), ("spacing".to_string(), false));
        // "re:" embedded mid-subject is not a prefix.
        assert_eq!(normalize_subject("More: Lunch"), ("More: Lunch".to_string(), false));
    }

    #[test]
    fn subject_root_is_idempotent() {
        for s in ["Re: Re: a", "a", "RE:b", "re: "] {
            let (root, _) = normalize_subject(s);
            let (root2, again) = normalize_subject(&root);
            assert_eq!(root, root2);
            assert!(!again);
        }
    }

    #[test]
    fn quoted_text_does_not_leak_into_counts() {
        let p = RecordParser::default();
        let body = "the plan\nOn Thursday May 1, 2014 a@yahoo.com wrote:\n> the the the";
        let rec = p.parse_record(&line("x", body), 1).unwrap();
        assert_eq!(rec.body_stripped, "the plan");
        assert_eq!(rec.word_count, 2);
        assert_eq!(rec.marker_counts.get(MarkerCategory::Articles), 1);
    }

    #[test]
    fn marker_counts_bounded_by_word_count() {
        let p = RecordParser::default();
        let rec = p
            .parse_record(&line("x", "the and you of some is all with"), 1)
            .unwrap();
        for (_, count) in rec.marker_counts.iter() {
            assert!(count <= rec.word_count);
        }
    }
}

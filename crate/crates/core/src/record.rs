//! Canonical message records shared by every stage of the pipeline.

use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::time;

/// Device class inferred from a mobile signature line, `Desktop` when no
/// signature is present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Device {
    Phone,
    Tablet,
    Desktop,
}

impl Device {
    pub fn name(self) -> &'static str {
        match self {
            Device::Phone => "phone",
            Device::Tablet => "tablet",
            Device::Desktop => "desktop",
        }
    }

    pub fn is_mobile(self) -> bool {
        matches!(self, Device::Phone | Device::Tablet)
    }
}

impl fmt::Display for Device {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The six linguistic style-marker categories tracked per message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MarkerCategory {
    Articles,
    AuxiliaryVerbs,
    Conjunctions,
    PersonalPronouns,
    Prepositions,
    Quantifiers,
}

impl MarkerCategory {
    pub const ALL: [MarkerCategory; 6] = [
        MarkerCategory::Articles,
        MarkerCategory::AuxiliaryVerbs,
        MarkerCategory::Conjunctions,
        MarkerCategory::PersonalPronouns,
        MarkerCategory::Prepositions,
        MarkerCategory::Quantifiers,
    ];

    pub fn index(self) -> usize {
        match self {
            MarkerCategory::Articles => 0,
            MarkerCategory::AuxiliaryVerbs => 1,
            MarkerCategory::Conjunctions => 2,
            MarkerCategory::PersonalPronouns => 3,
            MarkerCategory::Prepositions => 4,
            MarkerCategory::Quantifiers => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MarkerCategory::Articles => "articles",
            MarkerCategory::AuxiliaryVerbs => "auxiliary_verbs",
            MarkerCategory::Conjunctions => "conjunctions",
            MarkerCategory::PersonalPronouns => "personal_pronouns",
            MarkerCategory::Prepositions => "prepositions",
            MarkerCategory::Quantifiers => "quantifiers",
        }
    }

    pub fn from_name(name: &str) -> Option<MarkerCategory> {
        MarkerCategory::ALL.iter().copied().find(|c| c.name() == name)
    }
}

impl fmt::Display for MarkerCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-category marker token counts for one stripped body.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkerCounts(pub [u32; 6]);

impl MarkerCounts {
    pub fn get(&self, cat: MarkerCategory) -> u32 {
        self.0[cat.index()]
    }

    pub fn set(&mut self, cat: MarkerCategory, count: u32) {
        self.0[cat.index()] = count;
    }

    pub fn iter(&self) -> impl Iterator<Item = (MarkerCategory, u32)> + '_ {
        MarkerCategory::ALL.iter().map(move |&c| (c, self.0[c.index()]))
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }
}

/// One parsed, quote-stripped, signature-classified message.
///
/// `body_stripped` is the sender's own text: everything from the first
/// quote-header or device-signature marker onward has been removed and
/// trailing whitespace trimmed, so it is a prefix of `body_raw` modulo
/// that trim. `word_count` and `marker_counts` are computed over
/// `body_stripped` with the crate tokenizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmailRecord {
    pub message_id: String,
    pub sender_id: String,
    pub recipient_id: String,
    pub timestamp_utc: i64,
    /// Minutes east of UTC of the sender's local time.
    pub tz_offset_minutes: i32,
    pub subject_raw: String,
    /// Subject with all leading reply prefixes removed.
    pub subject_root: String,
    pub is_reply_subject: bool,
    pub body_raw: String,
    pub body_stripped: String,
    pub word_count: u32,
    pub n_attachments: u32,
    pub device: Device,
    pub marker_counts: MarkerCounts,
}

impl EmailRecord {
    /// Calendar date at the sender's local time; records are validated at
    /// parse time so this cannot fail for ingested data.
    pub fn sender_local_date(&self) -> Option<NaiveDate> {
        time::local_date(self.timestamp_utc, self.tz_offset_minutes)
    }

    /// Marker usage rate (count / word_count); `None` for empty bodies.
    pub fn marker_rate(&self, cat: MarkerCategory) -> Option<f64> {
        if self.word_count == 0 {
            None
        } else {
            Some(f64::from(self.marker_counts.get(cat)) / f64::from(self.word_count))
        }
    }
}

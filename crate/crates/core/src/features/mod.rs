//! The 83-feature predictor input and its catalog.
//!
//! Features describe, at the moment a reply happens, the communication
//! history between the pair, the demographics of both sides, the thread
//! position, per-day activity/contact/volume statistics of both users,
//! when the replied-to message was received, its attachments, and the
//! replier's mobile-device history. Every feature is computed from
//! records strictly earlier than the reply, so training never leaks the
//! future.

mod assemble;
mod split;

pub use assemble::{assemble_features, AssembleOptions};
pub use split::{split_train_test, SplitStats};

use serde::{Deserialize, Serialize};

pub const FEATURE_COUNT: usize = 83;

/// Out-of-band marker for a feature whose value does not exist yet
/// (e.g. pair history before the first reply). Rendered as an empty
/// field in exports; trees route missing values by training mass.
pub const MISSING: f64 = f64::NAN;

pub fn is_missing(x: f64) -> bool {
    x.is_nan()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureGroup {
    PairHistory,
    Demographics,
    ThreadStep,
    CountStats,
    ContactStats,
    LengthStats,
    ReceivedTime,
    Attachments,
    DeviceHistory,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 9] = [
        FeatureGroup::PairHistory,
        FeatureGroup::Demographics,
        FeatureGroup::ThreadStep,
        FeatureGroup::CountStats,
        FeatureGroup::ContactStats,
        FeatureGroup::LengthStats,
        FeatureGroup::ReceivedTime,
        FeatureGroup::Attachments,
        FeatureGroup::DeviceHistory,
    ];

    /// Cardinality of each group; the groups sum to 83.
    pub fn expected_count(self) -> usize {
        match self {
            FeatureGroup::PairHistory => 20,
            FeatureGroup::Demographics => 4,
            FeatureGroup::ThreadStep => 1,
            FeatureGroup::CountStats => 18,
            FeatureGroup::ContactStats => 18,
            FeatureGroup::LengthStats => 18,
            FeatureGroup::ReceivedTime => 2,
            FeatureGroup::Attachments => 1,
            FeatureGroup::DeviceHistory => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDef {
    pub name: String,
    pub group: FeatureGroup,
}

/// Ordered list of the 83 feature definitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureCatalog {
    defs: Vec<FeatureDef>,
}

const ROLES: [&str; 2] = ["replier", "receiver"];
const HIST_STATS: [&str; 5] = ["mean", "median", "last", "second_last", "third_last"];
const DAY_STATS: [&str; 3] = ["mean", "median", "max"];

impl Default for FeatureCatalog {
    fn default() -> Self {
        let mut defs = Vec::with_capacity(FEATURE_COUNT);
        let mut push = |name: String, group: FeatureGroup| defs.push(FeatureDef { name, group });

        for role in ROLES {
            for measure in ["time", "length"] {
                for stat in HIST_STATS {
                    push(
                        format!("{role}_reply_{measure}_{stat}"),
                        FeatureGroup::PairHistory,
                    );
                }
            }
        }
        for role in ROLES {
            push(format!("{role}_age"), FeatureGroup::Demographics);
            push(format!("{role}_gender"), FeatureGroup::Demographics);
        }
        push("thread_step".to_string(), FeatureGroup::ThreadStep);
        for role in ROLES {
            for measure in ["received", "sent", "replied"] {
                for stat in DAY_STATS {
                    push(
                        format!("{role}_{measure}_per_day_{stat}"),
                        FeatureGroup::CountStats,
                    );
                }
            }
        }
        for role in ROLES {
            for measure in ["contacts_emailed_per_day", "contacts_received_from_per_day", "contacts_cumulative"] {
                for stat in DAY_STATS {
                    push(format!("{role}_{measure}_{stat}"), FeatureGroup::ContactStats);
                }
            }
        }
        for role in ROLES {
            for measure in ["words_received", "words_sent", "words_replied"] {
                for stat in DAY_STATS {
                    push(
                        format!("{role}_{measure}_per_day_{stat}"),
                        FeatureGroup::LengthStats,
                    );
                }
            }
        }
        push("received_hour".to_string(), FeatureGroup::ReceivedTime);
        push("received_day_of_week".to_string(), FeatureGroup::ReceivedTime);
        push("n_attachments_received".to_string(), FeatureGroup::Attachments);
        push("replier_used_mobile_before".to_string(), FeatureGroup::DeviceHistory);

        debug_assert_eq!(defs.len(), FEATURE_COUNT);
        FeatureCatalog { defs }
    }
}

impl FeatureCatalog {
    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub fn defs(&self) -> &[FeatureDef] {
        &self.defs
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.defs.iter().map(|d| d.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.defs.iter().position(|d| d.name == name)
    }

    /// Subset catalog preserving the given order of indices.
    pub fn subset(&self, indices: &[usize]) -> FeatureCatalog {
        FeatureCatalog {
            defs: indices.iter().map(|&i| self.defs[i].clone()).collect(),
        }
    }

    /// SHA-256 over the newline-joined feature names; stored in model
    /// files so a model cannot silently run against a different layout.
    pub fn hash(&self) -> [u8; 32] {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for d in &self.defs {
            h.update(d.name.as_bytes());
            h.update(b"\n");
        }
        h.finalize().into()
    }
}

/// One event's features plus its three labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub dyad_a: String,
    pub dyad_b: String,
    pub reply_message_id: String,
    pub event_timestamp_utc: i64,
    /// Catalog-ordered values; missing entries are NaN.
    pub values: Vec<f64>,
    pub time_class: u8,
    pub length_class: u8,
    pub is_last: bool,
    /// 0 when the replier is `dyad_a`, 1 when `dyad_b`.
    pub replier_side: u8,
}

impl FeatureVector {
    pub fn label(&self, task: crate::predict::Task) -> u8 {
        match task {
            crate::predict::Task::ReplyTime => self.time_class,
            crate::predict::Task::ReplyLength => self.length_class,
            crate::predict::Task::LastEmail => u8::from(self.is_last),
        }
    }

    pub fn replier(&self) -> &str {
        if self.replier_side == 0 {
            &self.dyad_a
        } else {
            &self.dyad_b
        }
    }
}

/// Feature vectors of one dyad in event-time order, with the train/test
/// boundary set by [`split_train_test`].
#[derive(Debug, Clone)]
pub struct DyadVectors {
    pub user_a: String,
    pub user_b: String,
    pub vectors: Vec<FeatureVector>,
    /// First `n_train` vectors are training data; set by the split.
    pub n_train: usize,
}

#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub catalog: FeatureCatalog,
    pub dyads: Vec<DyadVectors>,
}

impl FeatureMatrix {
    pub fn n_events(&self) -> usize {
        self.dyads.iter().map(|d| d.vectors.len()).sum()
    }

    pub fn train_vectors(&self) -> Vec<&FeatureVector> {
        self.dyads
            .iter()
            .flat_map(|d| d.vectors[..d.n_train].iter())
            .collect()
    }

    pub fn test_vectors(&self) -> Vec<&FeatureVector> {
        self.dyads
            .iter()
            .flat_map(|d| d.vectors[d.n_train..].iter())
            .collect()
    }
}

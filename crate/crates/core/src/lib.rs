//! Reconstruction and analysis of dyadic email conversations.
//!
//! The crate takes a corpus of normalized email records, rebuilds
//! subject-rooted threads within user pairs, and derives reply events
//! (who replied, after how long, with how many words). On top of that
//! sit descriptive analytics (distributions, thread evolution, circadian
//! and demographic breakdowns, email-load/overload curves, behavioral
//! synchronization), document vectors for content-convergence analysis,
//! an 83-feature extractor, and bagged decision-tree predictors for
//! reply time, reply length, and thread termination.
//!
//! Everything is deterministic: all randomness is seeded, collections
//! iterate in stable orders, and aggregate computations are built from
//! mergeable partial accumulators.

pub mod analytics;
pub mod embedding;
pub mod features;
pub mod ingest;
pub mod predict;
pub mod profile;
pub mod record;
pub mod threading;
pub mod time;

pub use record::{Device, EmailRecord, MarkerCategory, MarkerCounts};
pub use threading::{Dyad, ReplyEvent, Thread};

//! Reply prediction: class binning, bagged decision trees, baselines,
//! evaluation metrics, and chi-square feature ranking.

mod chi2;
mod metrics;
mod model;
mod persist;
mod tree;

pub use chi2::{chi2_rank, top_k_selection, ReducedCatalog};
pub use metrics::{baselines, evaluate, BaselineAccuracies, EvalReport, TwoClassReport};
pub use model::{predict, train, Hyperparams, Model};
pub use persist::{read_model, write_model, ModelPersistError};
pub use tree::DecisionTree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("reply time must be positive, got {0}")]
    NonPositiveReplyTime(f64),
    #[error("training set contains fewer than two classes")]
    SingleClassTrainSet,
    #[error("feature vector has {got} values, model expects {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("top-k selection requires 1 <= k <= {max}, got {got}")]
    InvalidTopK { got: usize, max: usize },
    #[error("class boundaries must be increasing")]
    InvalidBoundaries,
    #[error("model was trained with {expected} trees, file carries {got}")]
    CorruptModel { expected: usize, got: usize },
}

/// The three prediction tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    ReplyTime,
    ReplyLength,
    LastEmail,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::ReplyTime => "reply_time",
            Task::ReplyLength => "reply_length",
            Task::LastEmail => "last_email",
        }
    }

    pub fn from_name(name: &str) -> Option<Task> {
        match name {
            "reply_time" => Some(Task::ReplyTime),
            "reply_length" => Some(Task::ReplyLength),
            "last_email" => Some(Task::LastEmail),
        _ => None,
        }
    }
}

/// Class boundaries for one task. Three-class tasks carry two upper
/// bounds: values at or below `b_lo` fall in class 0, values at or below
/// `b_hi` in class 1, the rest in class 2. The defaults split reply
/// times at 15 and 164 minutes and reply lengths at 21 and 88 words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScheme {
    pub task: Task,
    pub b_lo: f64,
    pub b_hi: f64,
}

impl ClassScheme {
    pub const DEFAULT_TIME_BOUNDS: (f64, f64) = (15.0, 164.0);
    pub const DEFAULT_LENGTH_BOUNDS: (f64, f64) = (21.0, 88.0);

    pub fn reply_time(b_lo: f64, b_hi: f64) -> Result<ClassScheme, PredictError> {
        if b_lo.is_nan() || b_hi.is_nan() || b_lo >= b_hi || b_lo <= 0.0 {
            return Err(PredictError::InvalidBoundaries);
        }
        Ok(ClassScheme {
            task: Task::ReplyTime,
            b_lo,
            b_hi,
        })
    }

    pub fn reply_length(b_lo: f64, b_hi: f64) -> Result<ClassScheme, PredictError> {
        if b_lo.is_nan() || b_hi.is_nan() || b_lo >= b_hi || b_lo < 0.0 {
            return Err(PredictError::InvalidBoundaries);
        }
        Ok(ClassScheme {
            task: Task::ReplyLength,
            b_lo,
            b_hi,
        })
    }

    pub fn last_email() -> ClassScheme {
        ClassScheme {
            task: Task::LastEmail,
            b_lo: 0.0,
            b_hi: 0.0,
        }
    }

    pub fn default_for(task: Task) -> ClassScheme {
        match task {
            Task::ReplyTime => {
                let (lo, hi) = Self::DEFAULT_TIME_BOUNDS;
                ClassScheme::reply_time(lo, hi).unwrap()
            }
            Task::ReplyLength => {
                let (lo, hi) = Self::DEFAULT_LENGTH_BOUNDS;
                ClassScheme::reply_length(lo, hi).unwrap()
            }
            Task::LastEmail => ClassScheme::last_email(),
        }
    }

    pub fn n_classes(&self) -> usize {
        match self.task {
            Task::LastEmail => 2,
            _ => 3,
        }
    }

    pub fn class_names(&self) -> &'static [&'static str] {
        match self.task {
            Task::ReplyTime => &["immediate", "fast", "slow"],
            Task::ReplyLength => &["short", "medium", "long"],
            Task::LastEmail => &["not_last", "last"],
        }
    }

    fn bin3(&self, value: f64) -> u8 {
        if value <= self.b_lo {
            0
        } else if value <= self.b_hi {
            1
        } else {
            2
        }
    }

    /// Bins a reply time in minutes; errors on non-positive input.
    pub fn bin_time(&self, minutes: f64) -> Result<u8, PredictError> {
        debug_assert_eq!(self.task, Task::ReplyTime);
        if minutes.is_nan() || minutes <= 0.0 {
            return Err(PredictError::NonPositiveReplyTime(minutes));
        }
        Ok(self.bin3(minutes))
    }

    /// Bins a reply length in words; total.
    pub fn bin_length(&self, words: u32) -> u8 {
        debug_assert_eq!(self.task, Task::ReplyLength);
        self.bin3(f64::from(words))
    }
}

/// Reply-time class under the default 15/164-minute boundaries:
/// 0 immediate (within 15), 1 fast (over 15 up to 164), 2 slow.
pub fn bin_reply_time(minutes: f64) -> Result<u8, PredictError> {
    ClassScheme::default_for(Task::ReplyTime).bin_time(minutes)
}

/// Reply-length class under the default 21/88-word boundaries:
/// 0 short (up to 21), 1 medium (over 21 up to 88), 2 long.
pub fn bin_reply_length(words: u32) -> u8 {
    ClassScheme::default_for(Task::ReplyLength).bin_length(words)
}

/// Class encoding for RMSE: classes as equally spaced reals in [0, 1].
pub fn class_value(class: u8, n_classes: usize) -> f64 {
    if n_classes <= 1 {
        0.0
    } else {
        f64::from(class) / (n_classes - 1) as f64
    }
}

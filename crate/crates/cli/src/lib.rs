//! Pipeline orchestration, file formats, and the synthetic-corpus
//! generator behind the `mailconv` binary.

pub mod config;
pub mod formats;
pub mod generate;
pub mod pipeline;

use thiserror::Error;

/// Top-level failure classes, mapped onto process exit codes: input
/// errors exit 1, stage failures exit 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(#[source] anyhow::Error),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: anyhow::Error,
    },
}

impl CliError {
    pub fn input(err: impl Into<anyhow::Error>) -> CliError {
        CliError::Input(err.into())
    }

    pub fn stage(stage: &'static str, err: impl Into<anyhow::Error>) -> CliError {
        CliError::Stage {
            stage,
            source: err.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Stage { .. } => 2,
        }
    }
}

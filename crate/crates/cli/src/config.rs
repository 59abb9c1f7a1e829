//! Run configuration: defaults, an optional flat TOML file, and
//! command-line overrides, in that precedence order (flags win).

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use mailconv_core::embedding::EmbeddingParams;
use mailconv_core::predict::{ClassScheme, Hyperparams, Task};
use mailconv_core::threading::{ReplyTimeBase, ThreadingOptions};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Master seed; every random stream derives from it by name.
    /// Mandatory for any run that trains (models or embeddings).
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub records: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub lexicons: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    /// Worker-count knob; 0 means "available parallelism". Stages are
    /// organized as mergeable aggregations and currently execute
    /// single-worker, so this does not change results.
    pub workers: usize,
    /// Forces single-worker embedding training (the deterministic path).
    pub deterministic: bool,

    pub dyad_min_replies: u32,
    /// "first" measures reply time from the first message of the
    /// preceding sender run, "last" from the final one.
    pub reply_time_base: String,

    pub time_bounds: [f64; 2],
    pub length_bounds: [f64; 2],
    pub train_fraction: f64,

    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: u32,
    pub bootstrap: bool,
    pub chi2_bins: usize,
    /// 0 disables top-k feature selection output.
    pub top_k: usize,
    pub baseline_global_fallback: bool,

    pub histogram_bins: usize,
    pub length_bin_width: u32,
    pub load_bins: usize,
    pub load_cap_percentile: f64,
    pub max_sent_per_day: u32,
    pub sync_min_steps: usize,

    pub embed_dim: usize,
    pub embed_window: usize,
    pub embed_iterations: usize,
    pub embed_negatives: usize,
    pub embed_learning_rate: f32,
    pub embed_min_count: u32,
    pub use_trained_embeddings: bool,
    pub emit_vectors: bool,

    pub emit_records: bool,
    pub emit_events: bool,
    pub analyze_distributions: bool,
    pub analyze_steps: bool,
    pub analyze_time_length: bool,
    pub analyze_circadian: bool,
    pub analyze_groups: bool,
    pub analyze_loads: bool,
    pub analyze_overload: bool,
    pub analyze_sync: bool,
    pub analyze_markers: bool,
    pub analyze_content: bool,
    pub do_features: bool,
    pub do_train: bool,
    pub do_rank: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            out_dir: PathBuf::from("out"),
            records: None,
            profiles: None,
            lexicons: None,
            templates: None,
            workers: 0,
            deterministic: false,
            dyad_min_replies: 5,
            reply_time_base: "first".to_string(),
            time_bounds: [15.0, 164.0],
            length_bounds: [21.0, 88.0],
            train_fraction: 0.75,
            n_trees: 50,
            max_depth: 12,
            min_leaf: 5,
            bootstrap: true,
            chi2_bins: 10,
            top_k: 0,
            baseline_global_fallback: false,
            histogram_bins: 50,
            length_bin_width: 10,
            load_bins: 20,
            load_cap_percentile: 0.99,
            max_sent_per_day: 1000,
            sync_min_steps: 10,
            embed_dim: 32,
            embed_window: 5,
            embed_iterations: 10,
            embed_negatives: 5,
            embed_learning_rate: 0.025,
            embed_min_count: 5,
            use_trained_embeddings: false,
            emit_vectors: false,
            emit_records: true,
            emit_events: true,
            analyze_distributions: true,
            analyze_steps: true,
            analyze_time_length: true,
            analyze_circadian: true,
            analyze_groups: true,
            analyze_loads: true,
            analyze_overload: true,
            analyze_sync: true,
            analyze_markers: true,
            analyze_content: true,
            do_features: true,
            do_train: true,
            do_rank: true,
        }
    }
}

impl RunConfig {
    /// Defaults, overlaid with the TOML file when given. Unknown keys
    /// are rejected.
    pub fn load(path: Option<&Path>) -> Result<RunConfig, CliError> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))
                    .map_err(CliError::input)?;
                toml::from_str(&text)
                    .with_context(|| format!("parsing config {}", p.display()))
                    .map_err(CliError::input)
            }
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(CliError::input(anyhow!(
                "train_fraction must be in (0, 1], got {}",
                self.train_fraction
            )));
        }
        if self.reply_time_base != "first" && self.reply_time_base != "last" {
            return Err(CliError::input(anyhow!(
                "reply_time_base must be `first` or `last`, got `{}`",
                self.reply_time_base
            )));
        }
        if self.n_trees == 0 {
            return Err(CliError::input(anyhow!("n_trees must be at least 1")));
        }
        self.time_scheme()?;
        self.length_scheme()?;
        Ok(())
    }

    /// The mandatory-seed rule for training runs.
    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| {
            CliError::input(anyhow!("a seed is required for training runs (set `seed`)"))
        })
    }

    pub fn trains_anything(&self) -> bool {
        self.do_train || self.do_rank || self.use_trained_embeddings
    }

    pub fn threading_options(&self) -> ThreadingOptions {
        ThreadingOptions {
            min_replies_each_direction: self.dyad_min_replies,
            reply_time_base: if self.reply_time_base == "last" {
                ReplyTimeBase::LastOfRun
            } else {
                ReplyTimeBase::FirstOfRun
            },
        }
    }

    pub fn time_scheme(&self) -> Result<ClassScheme, CliError> {
        ClassScheme::reply_time(self.time_bounds[0], self.time_bounds[1]).map_err(CliError::input)
    }

    pub fn length_scheme(&self) -> Result<ClassScheme, CliError> {
        ClassScheme::reply_length(self.length_bounds[0], self.length_bounds[1])
            .map_err(CliError::input)
    }

    pub fn scheme_for(&self, task: Task) -> Result<ClassScheme, CliError> {
        match task {
            Task::ReplyTime => self.time_scheme(),
            Task::ReplyLength => self.length_scheme(),
            Task::LastEmail => Ok(ClassScheme::last_email()),
        }
    }

    pub fn hyperparams(&self) -> Hyperparams {
        Hyperparams {
            n_trees: self.n_trees,
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
            bootstrap: self.bootstrap,
        }
    }

    pub fn embedding_params(&self, seed: u64) -> EmbeddingParams {
        EmbeddingParams {
            dim: self.embed_dim,
            window: self.embed_window,
            iterations: self.embed_iterations,
            negatives: self.embed_negatives,
            learning_rate: self.embed_learning_rate,
            min_count: self.embed_min_count,
            seed,
        }
    }

    /// Switches every stage output off; the base state for override
    /// style subcommands and tests.
    pub fn with_all_toggles(mut self, on: bool) -> RunConfig {
        self.emit_records = on;
        self.emit_events = on;
        self.analyze_distributions = on;
        self.analyze_steps = on;
        self.analyze_time_length = on;
        self.analyze_circadian = on;
        self.analyze_groups = on;
        self.analyze_loads = on;
        self.analyze_overload = on;
        self.analyze_sync = on;
        self.analyze_markers = on;
        self.analyze_content = on;
        self.do_features = on;
        self.do_train = on;
        self.do_rank = on;
        self
    }
}

/// Named derivation of sub-seeds from the master seed, so every stage
/// draws from an independent, reproducible stream.
pub fn derive_seed(base: u64, name: &str) -> u64 {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update(name.as_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().unwrap())
}

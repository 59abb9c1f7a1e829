//! End-to-end pipeline: ingest -> thread -> analyze -> features ->
//! train/evaluate -> rank, with tracked outputs and a digest manifest.
//!
//! Every stage appends its files to a tracker; on stage failure all
//! files written so far are removed, so an output directory never holds
//! a partial run. The manifest lists (path, sha256, row count) for every
//! emitted file, sorted by path.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use mailconv_core::analytics::{
    self, GroupBy, LoadFamily, Measure, OverloadOptions, SyncOptions,
};
use mailconv_core::embedding::{self, VectorSet};
use mailconv_core::features::{
    assemble_features, split_train_test, AssembleOptions, FeatureMatrix, FeatureVector,
};
use mailconv_core::ingest::{LexiconSet, RecordParser, StripTemplates};
use mailconv_core::predict::{self, Model, Task};
use mailconv_core::profile::ProfileTable;
use mailconv_core::record::EmailRecord;
use mailconv_core::threading::{self, Dyad, ThreadingStats};

use crate::config::{derive_seed, RunConfig};
use crate::formats;
use crate::CliError;

pub const TASKS: [Task; 3] = [Task::ReplyTime, Task::ReplyLength, Task::LastEmail];

/// Tracked output files of one run.
struct Tracker {
    dir: PathBuf,
    entries: Vec<(String, u64)>,
}

impl Tracker {
    fn new(dir: &Path) -> Tracker {
        Tracker {
            dir: dir.to_path_buf(),
            entries: Vec::new(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn add(&mut self, name: &str, rows: u64) {
        self.entries.push((name.to_string(), rows));
    }

    /// Removes every file written so far (stage-failure cleanup).
    fn cleanup(&self) {
        for (name, _) in &self.entries {
            let _ = fs::remove_file(self.dir.join(name));
        }
    }
}

#[derive(Debug)]
pub struct PipelineReport {
    pub manifest_path: PathBuf,
    pub outputs: Vec<(String, String, u64)>,
    pub n_records: usize,
    pub n_rejects: usize,
    pub threading: ThreadingStats,
    pub n_events: usize,
}

pub struct Inputs {
    pub parser: RecordParser,
    pub records: Vec<EmailRecord>,
    pub rejects: Vec<mailconv_core::ingest::IngestError>,
    pub profiles: ProfileTable,
}

/// Reads and validates every input the configuration names. All
/// failures here are input errors (exit 1).
pub fn load_inputs(cfg: &RunConfig) -> Result<Inputs, CliError> {
    let templates = match &cfg.templates {
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading templates {}", p.display()))
                .map_err(CliError::input)?;
            StripTemplates::parse(&text).map_err(CliError::input)?
        }
        None => StripTemplates::default(),
    };
    let lexicons = match &cfg.lexicons {
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading lexicons {}", p.display()))
                .map_err(CliError::input)?;
            LexiconSet::parse(&text).map_err(CliError::input)?
        }
        None => LexiconSet::default(),
    };
    let parser = RecordParser::new(templates, lexicons);

    let records_path = cfg
        .records
        .as_ref()
        .ok_or_else(|| CliError::input(anyhow!("no records file configured (set `records`)")))?;
    let ingest = formats::read_raw_records(records_path, &parser).map_err(CliError::input)?;

    let profiles = match &cfg.profiles {
        Some(p) => formats::read_profiles(p).map_err(CliError::input)?,
        None => ProfileTable::new(),
    };
    Ok(Inputs {
        parser,
        records: ingest.records,
        rejects: ingest.rejects,
        profiles,
    })
}

/// Runs every enabled stage and writes the manifest.
pub fn run_pipeline(cfg: &RunConfig) -> Result<PipelineReport, CliError> {
    cfg.validate()?;
    let seed = if cfg.trains_anything() {
        Some(cfg.require_seed()?)
    } else {
        cfg.seed
    };
    let inputs = load_inputs(cfg)?;
    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))
        .map_err(CliError::input)?;

    let mut tracker = Tracker::new(&cfg.out_dir);
    match run_stages(cfg, seed, &inputs, &mut tracker) {
        Ok((threading_stats, n_events)) => {
            let manifest_path = tracker.path("manifest.tsv");
            let outputs = finish_manifest(&tracker, &manifest_path).map_err(|e| {
                tracker.cleanup();
                CliError::stage("manifest", e)
            })?;
            Ok(PipelineReport {
                manifest_path,
                outputs,
                n_records: inputs.records.len(),
                n_rejects: inputs.rejects.len(),
                threading: threading_stats,
                n_events,
            })
        }
        Err(err) => {
            tracker.cleanup();
            Err(err)
        }
    }
}

fn finish_manifest(tracker: &Tracker, manifest_path: &Path) -> Result<Vec<(String, String, u64)>> {
    let mut outputs = Vec::new();
    for (name, rows) in &tracker.entries {
        let digest = formats::file_digest(&tracker.path(name))?;
        outputs.push((name.clone(), digest, *rows));
    }
    formats::write_manifest(manifest_path, &outputs)?;
    outputs.sort();
    Ok(outputs)
}

fn run_stages(
    cfg: &RunConfig,
    seed: Option<u64>,
    inputs: &Inputs,
    t: &mut Tracker,
) -> Result<(ThreadingStats, usize), CliError> {
    // ingest outputs
    if cfg.emit_records {
        let rows = formats::write_canonical_records(&t.path("canonical_records.jsonl"), &inputs.records)
            .map_err(|e| CliError::stage("ingest", e))?;
        t.add("canonical_records.jsonl", rows);
        if !inputs.rejects.is_empty() {
            let rows = formats::write_rejects(&t.path("rejects.tsv"), &inputs.rejects)
                .map_err(|e| CliError::stage("ingest", e))?;
            t.add("rejects.tsv", rows);
        }
    }

    // threading
    let out = threading::thread_corpus(&inputs.records, &cfg.threading_options());
    let dyads = out.dyads;
    let threading_stats = out.stats;
    if cfg.emit_events {
        let rows = formats::write_threads(&t.path("threads.tsv"), &inputs.records, &dyads)
            .map_err(|e| CliError::stage("thread", e))?;
        t.add("threads.tsv", rows);
        let rows = formats::write_events(&t.path("events.jsonl"), &dyads)
            .map_err(|e| CliError::stage("thread", e))?;
        t.add("events.jsonl", rows);
    }
    let events = threading::all_events(&dyads);

    run_analyses(cfg, seed, inputs, &dyads, &events, t)?;

    // features + prediction
    if cfg.do_features || cfg.do_train || cfg.do_rank {
        let matrix = build_matrix(cfg, &inputs.records, &dyads, &inputs.profiles)
            .map_err(|e| CliError::stage("features", e))?;
        if cfg.do_features {
            let rows = formats::write_features(&t.path("features.tsv"), &matrix)
                .map_err(|e| CliError::stage("features", e))?;
            t.add("features.tsv", rows);
        }
        if cfg.do_train {
            let seed = seed.expect("checked in run_pipeline");
            for task in TASKS {
                let (model, report) = train_and_evaluate(cfg, &matrix, task, seed)
                    .map_err(|e| CliError::stage("train", e))?;
                let name = format!("model_{}.bin", task.name());
                let file = fs::File::create(t.path(&name)).map_err(|e| CliError::stage("train", e))?;
                predict::write_model(std::io::BufWriter::new(file), &model)
                    .map_err(|e| CliError::stage("train", e))?;
                t.add(&name, model.trees.len() as u64);
                let name = format!("eval_{}.json", task.name());
                let rows = formats::write_json(&t.path(&name), &report)
                    .map_err(|e| CliError::stage("train", e))?;
                t.add(&name, rows);
            }
        }
        if cfg.do_rank {
            let train = matrix.train_vectors();
            for task in TASKS {
                let ranked = predict::chi2_rank(&train, task, cfg.chi2_bins)
                    .map_err(|e| CliError::stage("rank", e))?;
                let name = format!("chi2_{}.tsv", task.name());
                let rows = formats::write_chi2(&t.path(&name), &matrix.catalog, &ranked)
                    .map_err(|e| CliError::stage("rank", e))?;
                t.add(&name, rows);
                if cfg.top_k > 0 {
                    let reduced = predict::top_k_selection(&ranked, cfg.top_k, &matrix.catalog)
                        .map_err(|e| CliError::stage("rank", e))?;
                    let name = format!("selected_{}.tsv", task.name());
                    let mut w = formats::TableWriter::create(&t.path(&name), &["rank", "feature"])
                        .map_err(|e| CliError::stage("rank", e))?;
                    for (i, def) in reduced.catalog.defs().iter().enumerate() {
                        w.row(&[(i + 1).to_string(), def.name.clone()])
                            .map_err(|e| CliError::stage("rank", e))?;
                    }
                    let rows = w.finish().map_err(|e| CliError::stage("rank", e))?;
                    t.add(&name, rows);
                }
            }
        }
    }

    Ok((threading_stats, events.len()))
}

fn run_analyses(
    cfg: &RunConfig,
    seed: Option<u64>,
    inputs: &Inputs,
    dyads: &[Dyad],
    events: &[&threading::ReplyEvent],
    t: &mut Tracker,
) -> Result<(), CliError> {
    let profiles = &inputs.profiles;

    if cfg.analyze_distributions {
        let mut summaries = Vec::new();
        for (measure, log_binning, name) in [
            (Measure::ReplyTime, true, "distribution_reply_time.tsv"),
            (Measure::ReplyLength, true, "distribution_reply_length.tsv"),
        ] {
            let dist = analytics::distribution(events, measure, log_binning, cfg.histogram_bins)
                .map_err(|e| CliError::stage("analyze", e))?;
            let rows =
                formats::write_distribution(&t.path(name), &dist).map_err(|e| CliError::stage("analyze", e))?;
            t.add(name, rows);
            summaries.push((measure, dist.summary));
        }
        let mut w = formats::TableWriter::create(
            &t.path("summaries.tsv"),
            &["measure", "n", "mean", "median", "sd"],
        )
        .map_err(|e| CliError::stage("analyze", e))?;
        for (measure, s) in summaries {
            w.row(&[
                measure.name().to_string(),
                s.n.to_string(),
                formats::fmt_f64(s.mean),
                formats::fmt_f64(s.median),
                formats::fmt_f64(s.sd),
            ])
            .map_err(|e| CliError::stage("analyze", e))?;
        }
        let rows = w.finish().map_err(|e| CliError::stage("analyze", e))?;
        t.add("summaries.tsv", rows);
    }

    if cfg.analyze_steps {
        for (measure, per_name, len_name) in [
            (Measure::ReplyTime, "steps_reply_time.tsv", "thread_length_reply_time.tsv"),
            (Measure::ReplyLength, "steps_reply_length.tsv", "thread_length_reply_length.tsv"),
        ] {
            let stats = analytics::step_stats(dyads, measure);
            let curves: Vec<(Vec<String>, &analytics::SummaryCurve)> = stats
                .per_length
                .iter()
                .map(|(len, c)| (vec![len.to_string()], c))
                .collect();
            let rows = formats::write_curves(&t.path(per_name), &["thread_len"], &curves)
                .map_err(|e| CliError::stage("analyze", e))?;
            t.add(per_name, rows);
            let rows = formats::write_curves(
                &t.path(len_name),
                &[],
                &[(Vec::new(), &stats.by_thread_length)],
            )
            .map_err(|e| CliError::stage("analyze", e))?;
            t.add(len_name, rows);
        }
    }

    if cfg.analyze_time_length {
        let curves = analytics::time_length_correlation(events, cfg.length_bin_width);
        for (name, curve) in [
            ("time_by_reply_length.tsv", &curves.by_reply_length),
            ("time_by_received_length.tsv", &curves.by_received_length),
        ] {
            let rows = formats::write_curves(&t.path(name), &[], &[(Vec::new(), curve)])
                .map_err(|e| CliError::stage("analyze", e))?;
            t.add(name, rows);
        }
    }

    if cfg.analyze_circadian {
        let c = analytics::circadian_stats(events);
        for (name, curve) in [
            ("circadian_day_reply_time.tsv", &c.time_by_day),
            ("circadian_day_reply_length.tsv", &c.length_by_day),
            ("circadian_hour_reply_time.tsv", &c.time_by_hour),
            ("circadian_hour_reply_length.tsv", &c.length_by_hour),
        ] {
            let rows = formats::write_curves(&t.path(name), &[], &[(Vec::new(), curve)])
                .map_err(|e| CliError::stage("analyze", e))?;
            t.add(name, rows);
        }
    }

    if cfg.analyze_groups {
        for group_by in [GroupBy::AgeGroup, GroupBy::Gender, GroupBy::Device, GroupBy::HasAttachment] {
            let stats = analytics::group_stats(events, profiles, group_by, cfg.length_bin_width);
            let name = format!("groups_{}.tsv", group_by.name());
            let mut w = formats::TableWriter::create(
                &t.path(&name),
                &[
                    "group", "n", "time_mean", "time_median", "time_sd", "length_mean",
                    "length_median", "length_sd",
                ],
            )
            .map_err(|e| CliError::stage("analyze", e))?;
            for s in &stats.summaries {
                w.row(&[
                    s.group.clone(),
                    s.n.to_string(),
                    formats::fmt_f64(s.reply_time.mean),
                    formats::fmt_f64(s.reply_time.median),
                    formats::fmt_f64(s.reply_time.sd),
                    formats::fmt_f64(s.reply_length.mean),
                    formats::fmt_f64(s.reply_length.median),
                    formats::fmt_f64(s.reply_length.sd),
                ])
                .map_err(|e| CliError::stage("analyze", e))?;
            }
            let rows = w.finish().map_err(|e| CliError::stage("analyze", e))?;
            t.add(&name, rows);

            let name = format!("groups_{}_time_by_length.tsv", group_by.name());
            let curves: Vec<(Vec<String>, &analytics::SummaryCurve)> = stats
                .time_by_length
                .iter()
                .map(|(g, c)| (vec![g.clone()], c))
                .collect();
            let rows = formats::write_curves(&t.path(&name), &["group"], &curves)
                .map_err(|e| CliError::stage("analyze", e))?;
            t.add(&name, rows);
        }
    }

    let loads = if cfg.analyze_loads || cfg.analyze_overload {
        Some(analytics::compute_daily_loads(&inputs.records))
    } else {
        None
    };
    if cfg.analyze_loads {
        let loads = loads.as_ref().unwrap();
        let rows = formats::write_daily_loads(&t.path("daily_loads.tsv"), loads.rows())
            .map_err(|e| CliError::stage("analyze", e))?;
        t.add("daily_loads.tsv", rows);
    }
    if cfg.analyze_overload {
        let loads = loads.as_ref().unwrap();
        let opts = OverloadOptions {
            n_bins: cfg.load_bins,
            cap_percentile: cfg.load_cap_percentile,
            max_sent_per_day: cfg.max_sent_per_day,
        };
        let curves = analytics::overload_curves(loads, events, profiles, &opts);
        for family in LoadFamily::ALL {
            let slices: Vec<(Vec<String>, &analytics::SummaryCurve)> = curves
                .curves
                .iter()
                .filter(|(f, _, _)| *f == family)
                .map(|(_, slice, c)| (vec![slice.clone()], c))
                .collect();
            if slices.is_empty() {
                continue;
            }
            let name = format!("overload_{}.tsv", family.name());
            let rows = formats::write_curves(&t.path(&name), &["slice"], &slices)
                .map_err(|e| CliError::stage("analyze", e))?;
            t.add(&name, rows);
        }
    }

    let sync_opts = SyncOptions {
        min_steps: cfg.sync_min_steps,
        segments: 10,
    };
    if cfg.analyze_sync {
        for (measure, name) in [
            (Measure::ReplyTime, "sync_reply_time.tsv"),
            (Measure::ReplyLength, "sync_reply_length.tsv"),
        ] {
            let sync = analytics::synchronization_curve(dyads, measure, &sync_opts);
            let rows = formats::write_curves(&t.path(name), &[], &[(Vec::new(), &sync.curve)])
                .map_err(|e| CliError::stage("analyze", e))?;
            t.add(name, rows);
        }
    }
    if cfg.analyze_markers {
        let curves = analytics::marker_coordination(&inputs.records, dyads, &sync_opts);
        let rows: Vec<(Vec<String>, &analytics::SummaryCurve)> = curves
            .iter()
            .map(|(cat, c)| (vec![cat.name().to_string()], c))
            .collect();
        let rows = formats::write_curves(&t.path("markers.tsv"), &["category"], &rows)
            .map_err(|e| CliError::stage("analyze", e))?;
        t.add("markers.tsv", rows);
    }
    if cfg.analyze_content {
        let vectors = build_vectors(cfg, seed, &inputs.records).map_err(|e| CliError::stage("embed", e))?;
        if cfg.emit_vectors {
            if let VectorSet::Dense(dense) = &vectors {
                let file = fs::File::create(t.path("vectors.bin")).map_err(|e| CliError::stage("embed", e))?;
                embedding::write_vectors(std::io::BufWriter::new(file), dense)
                    .map_err(|e| CliError::stage("embed", e))?;
                t.add("vectors.bin", dense.len() as u64);
            }
        }
        let sim = analytics::content_similarity_curve(dyads, &sync_opts, |a, b| {
            vectors.cosine_opt(a, b)
        });
        let rows = formats::write_curves(
            &t.path("content_similarity.tsv"),
            &[],
            &[(Vec::new(), &sim.curve)],
        )
        .map_err(|e| CliError::stage("analyze", e))?;
        t.add("content_similarity.tsv", rows);
    }

    Ok(())
}

/// TF vectors by default; trained document embeddings when configured
/// (requires the seed).
fn build_vectors(cfg: &RunConfig, seed: Option<u64>, records: &[EmailRecord]) -> Result<VectorSet> {
    let docs: Vec<(&str, &str)> = records
        .iter()
        .map(|r| (r.message_id.as_str(), r.body_stripped.as_str()))
        .collect();
    if cfg.use_trained_embeddings {
        let seed = seed.ok_or_else(|| anyhow!("trained embeddings require a seed"))?;
        let params = cfg.embedding_params(derive_seed(seed, "embedding"));
        let trained = embedding::train_embeddings(docs, &params)?;
        Ok(VectorSet::Dense(trained.docs))
    } else {
        Ok(VectorSet::Tf(embedding::tf_vectorize(docs)))
    }
}

pub fn build_matrix(
    cfg: &RunConfig,
    records: &[EmailRecord],
    dyads: &[Dyad],
    profiles: &ProfileTable,
) -> Result<FeatureMatrix> {
    let opts = AssembleOptions {
        time_scheme: cfg.time_scheme().map_err(|e| anyhow!("{e}"))?,
        length_scheme: cfg.length_scheme().map_err(|e| anyhow!("{e}"))?,
    };
    let mut matrix = assemble_features(records, dyads, profiles, &opts);
    split_train_test(&mut matrix, cfg.train_fraction);
    Ok(matrix)
}

pub fn train_and_evaluate(
    cfg: &RunConfig,
    matrix: &FeatureMatrix,
    task: Task,
    seed: u64,
) -> Result<(Model, predict::EvalReport)> {
    let scheme = cfg.scheme_for(task).map_err(|e| anyhow!("{e}"))?;
    let train: Vec<&FeatureVector> = matrix.train_vectors();
    let model = predict::train(
        &train,
        task,
        &scheme,
        &matrix.catalog,
        &cfg.hyperparams(),
        derive_seed(seed, &format!("train:{}", task.name())),
    )?;
    let test = matrix.test_vectors();
    let baselines = predict::baselines(matrix, task, cfg.baseline_global_fallback);
    let report = predict::evaluate(&model, &test, baselines)?;
    Ok((model, report))
}

/// Train on a features file and persist the model (no evaluation).
pub fn train_from_features(
    cfg: &RunConfig,
    features: &Path,
    task: Task,
    out_path: &Path,
) -> Result<(), CliError> {
    let seed = cfg.require_seed()?;
    let matrix = formats::read_features(features).map_err(CliError::input)?;
    let scheme = cfg.scheme_for(task)?;
    let train: Vec<&FeatureVector> = matrix.train_vectors();
    let model = predict::train(
        &train,
        task,
        &scheme,
        &matrix.catalog,
        &cfg.hyperparams(),
        derive_seed(seed, &format!("train:{}", task.name())),
    )
    .map_err(|e| CliError::stage("train", e))?;
    let file = fs::File::create(out_path)
        .with_context(|| format!("creating {}", out_path.display()))
        .map_err(|e| CliError::stage("train", e))?;
    predict::write_model(std::io::BufWriter::new(file), &model)
        .map_err(|e| CliError::stage("train", e))?;
    Ok(())
}

/// Evaluate a persisted model against a features file.
pub fn evaluate_from_features(
    cfg: &RunConfig,
    features: &Path,
    model_path: &Path,
    out_path: &Path,
) -> Result<predict::EvalReport, CliError> {
    let matrix = formats::read_features(features).map_err(CliError::input)?;
    let file = fs::File::open(model_path)
        .with_context(|| format!("opening {}", model_path.display()))
        .map_err(CliError::input)?;
    let model = predict::read_model(std::io::BufReader::new(file)).map_err(CliError::input)?;
    if model.catalog_hash != matrix.catalog.hash() {
        return Err(CliError::input(anyhow!(
            "model was trained against a different feature catalog"
        )));
    }
    let test = matrix.test_vectors();
    let baselines = predict::baselines(&matrix, model.task, cfg.baseline_global_fallback);
    let report = predict::evaluate(&model, &test, baselines)
        .map_err(|e| CliError::stage("evaluate", e))?;
    formats::write_json(out_path, &report).map_err(|e| CliError::stage("evaluate", e))?;
    Ok(report)
}

/// Chi-square ranking from a features file.
pub fn rank_from_features(
    cfg: &RunConfig,
    features: &Path,
    task: Task,
    out_path: &Path,
    top_k_path: Option<&Path>,
) -> Result<(), CliError> {
    let matrix = formats::read_features(features).map_err(CliError::input)?;
    let train = matrix.train_vectors();
    let ranked = predict::chi2_rank(&train, task, cfg.chi2_bins)
        .map_err(|e| CliError::stage("rank", e))?;
    formats::write_chi2(out_path, &matrix.catalog, &ranked)
        .map_err(|e| CliError::stage("rank", e))?;
    if let (Some(path), true) = (top_k_path, cfg.top_k > 0) {
        let reduced = predict::top_k_selection(&ranked, cfg.top_k, &matrix.catalog)
            .map_err(|e| CliError::stage("rank", e))?;
        let mut w = formats::TableWriter::create(path, &["rank", "feature"])
            .map_err(|e| CliError::stage("rank", e))?;
        for (i, def) in reduced.catalog.defs().iter().enumerate() {
            w.row(&[(i + 1).to_string(), def.name.clone()])
                .map_err(|e| CliError::stage("rank", e))?;
        }
        w.finish().map_err(|e| CliError::stage("rank", e))?;
    }
    Ok(())
}

/// Convenience used by tests: digest-keyed view of a manifest.
pub fn manifest_digests(outputs: &[(String, String, u64)]) -> HashMap<String, String> {
    outputs
        .iter()
        .map(|(p, d, _)| (p.clone(), d.clone()))
        .collect()
}

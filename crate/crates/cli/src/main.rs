//! `mailconv`: reconstruct dyadic email threads, compute reply-behavior
//! analytics, and train reply predictors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mailconv::config::RunConfig;
use mailconv::generate::{generate_corpus, write_corpus, GenParams, Planted};
use mailconv::pipeline;
use mailconv::CliError;
use mailconv_core::predict::Task;

#[derive(Parser)]
#[command(name = "mailconv", version, about = "Email conversation analytics and reply prediction")]
struct Cli {
    /// Flat TOML config file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (required for training runs).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker-count knob; 0 picks the available parallelism.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Force the single-worker deterministic embedding path.
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic corpus with ground-truth sidecars.
    Generate {
        #[arg(long, default_value_t = 100)]
        dyads: usize,
        #[arg(long)]
        days: Option<u32>,
        /// Planted signal: "none" or "reply-time".
        #[arg(long, default_value = "none")]
        planted: String,
        /// Add replies at exactly the 15/164-minute class boundaries.
        #[arg(long)]
        boundary_replies: bool,
        /// Mean unanswered background messages per dyad user.
        #[arg(long)]
        background: Option<f64>,
        #[arg(long)]
        thread_len_mean: Option<f64>,
        #[arg(long)]
        threads_per_dyad_mean: Option<f64>,
    },
    /// Parse raw records; write canonical records and reject diagnostics.
    Ingest {
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long)]
        lexicons: Option<PathBuf>,
    },
    /// Reconstruct threads and reply events.
    Thread {
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        min_replies: Option<u32>,
        /// Reply-time base: "first" or "last" message of the run.
        #[arg(long)]
        reply_time_base: Option<String>,
    },
    /// Emit every enabled analysis table.
    Analyze {
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        profiles: Option<PathBuf>,
    },
    /// Assemble the 83-feature matrix with the temporal split.
    Features {
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        profiles: Option<PathBuf>,
    },
    /// Train a bagged-tree model from a features file.
    Train {
        #[arg(long)]
        features: PathBuf,
        /// reply_time | reply_length | last_email
        #[arg(long)]
        task: String,
        #[arg(long)]
        n_trees: Option<usize>,
        #[arg(long)]
        max_depth: Option<usize>,
    },
    /// Evaluate a persisted model on a features file's test split.
    Evaluate {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Chi-square feature ranking (optionally keep the top k).
    Rank {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        task: String,
        #[arg(long)]
        top_k: Option<usize>,
    },
    /// Run every enabled stage end to end and write the manifest.
    Pipeline {
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        profiles: Option<PathBuf>,
    },
}

fn parse_task(name: &str) -> Result<Task, CliError> {
    Task::from_name(name).ok_or_else(|| {
        CliError::input(anyhow::anyhow!(
            "unknown task `{name}` (expected reply_time, reply_length, or last_email)"
        ))
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    if let Some(dir) = cli.out_dir {
        cfg.out_dir = dir;
    }
    if let Some(workers) = cli.workers {
        cfg.workers = workers;
    }
    if cli.deterministic {
        cfg.deterministic = true;
    }

    match cli.cmd {
        Cmd::Generate {
            dyads,
            days,
            planted,
            boundary_replies,
            background,
            thread_len_mean,
            threads_per_dyad_mean,
        } => {
            let seed = cfg.require_seed()?;
            let mut params = GenParams {
                n_dyads: dyads,
                seed,
                boundary_replies,
                ..GenParams::default()
            };
            if let Some(d) = days {
                params.days = d;
            }
            if let Some(b) = background {
                params.background_per_user = b;
            }
            if let Some(m) = thread_len_mean {
                params.thread_len_mean = m;
            }
            if let Some(m) = threads_per_dyad_mean {
                params.threads_per_dyad_mean = m;
            }
            params.planted = match planted.as_str() {
                "none" => Planted::None,
                "reply-time" => Planted::ReplyTimeSignal,
                other => {
                    return Err(CliError::input(anyhow::anyhow!(
                        "unknown planted mode `{other}`"
                    )))
                }
            };
            let corpus = generate_corpus(&params);
            let outputs = write_corpus(&cfg.out_dir, &corpus).map_err(CliError::input)?;
            println!(
                "generated {} messages across {} dyads into {}",
                corpus.n_messages,
                dyads,
                cfg.out_dir.display()
            );
            for (name, rows) in outputs {
                println!("  {name}: {rows} rows");
            }
            Ok(())
        }
        Cmd::Ingest {
            records,
            templates,
            lexicons,
        } => {
            apply_inputs(&mut cfg, records, None);
            if templates.is_some() {
                cfg.templates = templates;
            }
            if lexicons.is_some() {
                cfg.lexicons = lexicons;
            }
            cfg = cfg.with_all_toggles(false);
            cfg.emit_records = true;
            report(pipeline::run_pipeline(&cfg)?);
            Ok(())
        }
        Cmd::Thread {
            records,
            min_replies,
            reply_time_base,
        } => {
            apply_inputs(&mut cfg, records, None);
            if let Some(m) = min_replies {
                cfg.dyad_min_replies = m;
            }
            if let Some(b) = reply_time_base {
                cfg.reply_time_base = b;
            }
            cfg = cfg.with_all_toggles(false);
            cfg.emit_events = true;
            report(pipeline::run_pipeline(&cfg)?);
            Ok(())
        }
        Cmd::Analyze { records, profiles } => {
            apply_inputs(&mut cfg, records, profiles);
            cfg.emit_records = false;
            cfg.emit_events = false;
            cfg.do_features = false;
            cfg.do_train = false;
            cfg.do_rank = false;
            report(pipeline::run_pipeline(&cfg)?);
            Ok(())
        }
        Cmd::Features { records, profiles } => {
            apply_inputs(&mut cfg, records, profiles);
            cfg = cfg.with_all_toggles(false);
            cfg.do_features = true;
            report(pipeline::run_pipeline(&cfg)?);
            Ok(())
        }
        Cmd::Train {
            features,
            task,
            n_trees,
            max_depth,
        } => {
            if let Some(n) = n_trees {
                cfg.n_trees = n;
            }
            if let Some(d) = max_depth {
                cfg.max_depth = d;
            }
            cfg.validate()?;
            let task = parse_task(&task)?;
            std::fs::create_dir_all(&cfg.out_dir).map_err(CliError::input)?;
            let out = cfg.out_dir.join(format!("model_{}.bin", task.name()));
            pipeline::train_from_features(&cfg, &features, task, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Cmd::Evaluate { features, model } => {
            std::fs::create_dir_all(&cfg.out_dir).map_err(CliError::input)?;
            let tmp = cfg.out_dir.join("eval.json");
            let report = pipeline::evaluate_from_features(&cfg, &features, &model, &tmp)?;
            let named = cfg
                .out_dir
                .join(format!("eval_{}.json", report.task.name()));
            std::fs::rename(&tmp, &named).map_err(|e| CliError::stage("evaluate", e))?;
            println!(
                "task {}: accuracy {:.4}, weighted AUC {:.4}, RMSE {:.4} over {} test events",
                report.task.name(),
                report.accuracy,
                report.weighted_auc,
                report.rmse,
                report.n_test
            );
            println!(
                "baselines: majority {:.4}, last reply {:.4}, most used {:.4}",
                report.baselines.majority, report.baselines.last_reply, report.baselines.most_used
            );
            println!("wrote {}", named.display());
            Ok(())
        }
        Cmd::Rank {
            features,
            task,
            top_k,
        } => {
            if let Some(k) = top_k {
                cfg.top_k = k;
            }
            let task = parse_task(&task)?;
            std::fs::create_dir_all(&cfg.out_dir).map_err(CliError::input)?;
            let out = cfg.out_dir.join(format!("chi2_{}.tsv", task.name()));
            let selected = cfg
                .out_dir
                .join(format!("selected_{}.tsv", task.name()));
            pipeline::rank_from_features(
                &cfg,
                &features,
                task,
                &out,
                (cfg.top_k > 0).then_some(selected.as_path()),
            )?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Cmd::Pipeline { records, profiles } => {
            apply_inputs(&mut cfg, records, profiles);
            report(pipeline::run_pipeline(&cfg)?);
            Ok(())
        }
    }
}

fn apply_inputs(cfg: &mut RunConfig, records: Option<PathBuf>, profiles: Option<PathBuf>) {
    if records.is_some() {
        cfg.records = records;
    }
    if profiles.is_some() {
        cfg.profiles = profiles;
    }
}

fn report(r: pipeline::PipelineReport) {
    println!(
        "{} records ({} rejected), {} dyads kept of {}, {} reply events",
        r.n_records,
        r.n_rejects,
        r.threading.dyads_after_filter,
        r.threading.dyads_before_filter,
        r.n_events
    );
    println!("{} outputs listed in {}", r.outputs.len(), r.manifest_path.display());
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

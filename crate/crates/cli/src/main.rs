use std::path::PathBuf;
use std::process::ExitCode;

use adapt_cli::{
    cmd_drift, cmd_report, cmd_run, cmd_search, cmd_synth, CliResult, DriftRequest, ExperimentConfig, Overrides,
    ReportRequest, SynthRequest,
};
use adapt_core::drift::{DriftOptions, DEFAULT_FULL_COVARIANCE_CAP};
use adapt_core::engine::Mode;
use adapt_core::synthetic::RotatingDriftSpec;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Self-training under concept drift: experiment runner.
///
/// Exit status: 0 on success, 1 for invalid input (config, manifest, data),
/// 2 for failures while running. Diagnostics go to stderr; results go to
/// files, each starting with a `# config_hash:` line (JSON outputs carry a
/// `config_hash` field instead).
#[derive(Parser)]
#[command(name = "adapt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment over the test periods, once per evaluation seed.
    ///
    /// Writes run_manifest.jsonl, metrics.csv and model_seed<k>.json.
    /// metrics.csv columns: seed,period,tp,fp,tn,fn,f1,fpr,fnr,ae,err_pb,
    /// err_pm,model_checksum; each seed ends with a `mean` footer row.
    Run {
        #[command(flatten)]
        common: ConfigArgs,
        #[command(flatten)]
        ablation: Ablation,
    },
    /// Random hyperparameter search scored by validation F1.
    ///
    /// Writes search_trials.jsonl and best_config.toml.
    Search {
        #[command(flatten)]
        common: ConfigArgs,
        /// Number of trials [default: search.budget from the config].
        #[arg(long)]
        budget: Option<usize>,
        /// Search seed [default: search.seed from the config].
        #[arg(long)]
        search_seed: Option<u64>,
    },
    /// Per-period distance from the train periods.
    ///
    /// Columns: period,split,otdd and, with --model, fdd.
    Drift {
        /// Dataset manifest.
        manifest: PathBuf,
        /// Trained mlp (model_seed<k>.json) for the fdd column.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Fail unless the fdd column can be computed.
        #[arg(long)]
        fdd: bool,
        /// Standardize with the train periods' moments first.
        #[arg(long)]
        standardize: bool,
        /// Largest dimension for full-covariance summaries.
        #[arg(long, default_value_t = DEFAULT_FULL_COVARIANCE_CAP)]
        covariance_cap: usize,
        #[arg(long, default_value = "drift.csv")]
        out: PathBuf,
    },
    /// Rescore a finished run from its manifest.
    ///
    /// Writes report.csv (metrics.csv layout) and calibration.csv with
    /// columns seed,bin,lower,upper,count,mean_confidence,accuracy,ece.
    Report {
        /// run_manifest.jsonl
        manifest: PathBuf,
        /// Output directory [default: the manifest's directory].
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Write the rotating two-Gaussian stream as a dataset.
    Synth {
        /// Output directory.
        out: PathBuf,
        /// TOML file with rotating-stream parameters.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        periods: Option<usize>,
        #[arg(long)]
        n_per_class: Option<usize>,
        #[arg(long)]
        imbalance: Option<f64>,
        /// Stream periods marked for validation.
        #[arg(long, default_value_t = 0)]
        validation_periods: usize,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory [default: output_dir from the config].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seeds [default: evaluation.seeds].
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Accept hyperparameters outside the tuning ranges.
    #[arg(long)]
    allow_out_of_range: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Adapt,
    Oracle,
    Offline,
    FixedThresholdBaseline,
}

#[derive(Args)]
struct Ablation {
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Annotate this many rows per period.
    #[arg(long)]
    active_budget: Option<usize>,
    /// Drop the initial labeled set from updates.
    #[arg(long)]
    source_free: bool,
    /// Keep the base thresholds fixed.
    #[arg(long)]
    no_adaptive_thresholds: bool,
    #[arg(long)]
    no_augmentation: bool,
    #[arg(long)]
    no_mixup: bool,
}

fn load(common: &ConfigArgs, ablation: Option<&Ablation>) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    let mut o = Overrides {
        seeds: common.seeds.clone(),
        output_dir: common.out.clone(),
        allow_out_of_range: common.allow_out_of_range,
        ..Overrides::default()
    };
    if let Some(a) = ablation {
        o.mode = a.mode.map(|m| match m {
            ModeArg::Adapt => Mode::Adapt,
            ModeArg::Oracle => Mode::Oracle,
            ModeArg::Offline => Mode::Offline,
            ModeArg::FixedThresholdBaseline => Mode::FixedThresholdBaseline,
        });
        o.active_budget = a.active_budget;
        o.source_free = a.source_free;
        o.no_adaptive_thresholds = a.no_adaptive_thresholds;
        o.no_augmentation = a.no_augmentation;
        o.no_mixup = a.no_mixup;
    }
    o.apply(&mut cfg);
    Ok(cfg)
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Run { common, ablation } => {
            let out = cmd_run(&load(&common, Some(&ablation))?)?;
            eprintln!("run {} -> {}", out.config_hash, out.metrics.display());
        }
        Command::Search {
            common,
            budget,
            search_seed,
        } => {
            let mut cfg = load(&common, None)?;
            if let Some(b) = budget {
                cfg.search.budget = b;
            }
            if let Some(s) = search_seed {
                cfg.search.seed = s;
            }
            let out = cmd_search(&cfg)?;
            eprintln!("best trial {} -> {}", out.best_trial, out.best_config.display());
        }
        Command::Drift {
            manifest,
            model,
            fdd,
            standardize,
            covariance_cap,
            out,
        } => {
            cmd_drift(&DriftRequest {
                manifest,
                model,
                fdd,
                options: DriftOptions {
                    full_covariance_cap: covariance_cap,
                    standardize,
                },
                out,
            })?;
        }
        Command::Report { manifest, out, bins } => {
            let out = cmd_report(&ReportRequest { manifest, out, bins })?;
            eprintln!("report -> {}", out.metrics.display());
        }
        Command::Synth {
            out,
            spec,
            seed,
            periods,
            n_per_class,
            imbalance,
            validation_periods,
        } => {
            let mut s = match spec {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| adapt_cli::CliError::Validation(format!("{}: {e}", path.display())))?;
                    toml::from_str(&text)
                        .map_err(|e| adapt_cli::CliError::Validation(format!("{}: {e}", path.display())))?
                }
                None => RotatingDriftSpec::default(),
            };
            s.seed = seed.unwrap_or(s.seed);
            s.periods = periods.unwrap_or(s.periods);
            s.n_per_class = n_per_class.unwrap_or(s.n_per_class);
            s.imbalance = imbalance.unwrap_or(s.imbalance);
            cmd_synth(&SynthRequest {
                out,
                spec: s,
                validation_periods,
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("adapt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

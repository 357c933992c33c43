use std::fs;
use std::path::PathBuf;

use adapt_core::engine::{self, AdaptConfig};
use adapt_core::eval::MetricsReport;
use adapt_core::learners::LearnerSpec;
use adapt_core::rng;
use adapt_core::search_space::{adapt_in_range, learner_in_range, sample_adapt, sample_learner};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::run::{load_dataset, Loaded};
use crate::{failed, invalid, CliResult, ExperimentConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub trial: usize,
    pub learner: LearnerSpec,
    pub adapt: AdaptConfig,
    pub in_range: bool,
    /// Mean over seeds of the per-period-averaged validation F1.
    pub mean_f1: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub config_hash: String,
    pub best_trial: usize,
    pub best: ExperimentConfig,
    pub trials: Vec<Trial>,
    pub log: PathBuf,
    pub best_config: PathBuf,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum LogLine<'a> {
    Header { config_hash: &'a str, budget: usize, seed: u64 },
    Trial(&'a Trial),
}

fn evaluate(data: &Loaded, cfg: &ExperimentConfig, learner: &LearnerSpec, adapt: &AdaptConfig) -> adapt_core::Result<f64> {
    let mut total = 0.0;
    for &seed in &cfg.evaluation.seeds {
        let mut a = adapt.clone();
        a.seed = seed;
        let run = engine::run(&data.train, &data.validation, &a, learner)?;
        total += MetricsReport::from_run(&run, &data.validation, cfg.evaluation.averaging)?.averages.f1;
    }
    Ok(total / cfg.evaluation.seeds.len() as f64)
}

/// Random search over the learner's and the loop's tuning ranges, scored
/// on the validation periods. Trial `t` draws from stream `t` of
/// `search.seed`; ties go to the earliest trial. Writes
/// `search_trials.jsonl` and `best_config.toml`.
pub fn cmd_search(cfg: &ExperimentConfig) -> CliResult<SearchOutcome> {
    cfg.validate()?;
    if cfg.search.budget == 0 {
        return Err(invalid("search.budget must be at least 1"));
    }
    let hash = cfg.hash()?;
    let data = load_dataset(cfg)?;
    if data.validation.is_empty() {
        return Err(invalid(format!(
            "{}: no validation periods to search on",
            cfg.dataset_path().display()
        )));
    }

    let kind = cfg.learner.kind();
    let trials: Vec<Trial> = (0..cfg.search.budget)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(cfg.search.seed, t as u64);
            let learner = sample_learner(kind, &mut r);
            let adapt = sample_adapt(&cfg.adapt, &mut r);
            let (mean_f1, error) = match evaluate(&data, cfg, &learner, &adapt) {
                Ok(f1) => (Some(f1), None),
                Err(e) => (None, Some(e.to_string())),
            };
            Trial {
                trial: t,
                in_range: learner_in_range(&learner) && adapt_in_range(&adapt),
                learner,
                adapt,
                mean_f1,
                error,
            }
        })
        .collect();

    let best = trials
        .iter()
        .filter_map(|t| t.mean_f1.map(|f| (t, f)))
        .fold(None::<(&Trial, f64)>, |acc, (t, f)| match acc {
            Some((_, g)) if g >= f => acc,
            _ => Some((t, f)),
        })
        .map(|(t, _)| t)
        .ok_or_else(|| failed(format!("all {} trials failed: {}", trials.len(), trials[0].error.as_deref().unwrap_or(""))))?;

    let out = cfg.output_path();
    fs::create_dir_all(&out).map_err(|e| failed(format!("{}: {e}", out.display())))?;
    let mut log = Vec::new();
    for line in std::iter::once(LogLine::Header {
        config_hash: &hash,
        budget: cfg.search.budget,
        seed: cfg.search.seed,
    })
    .chain(trials.iter().map(LogLine::Trial))
    {
        serde_json::to_writer(&mut log, &line).map_err(failed)?;
        log.push(b'\n');
    }
    let log_path = out.join("search_trials.jsonl");
    fs::write(&log_path, log).map_err(|e| failed(format!("{}: {e}", log_path.display())))?;

    let mut best_cfg = cfg.clone();
    best_cfg.learner = best.learner.clone();
    best_cfg.adapt = best.adapt.clone();
    best_cfg.dataset = std::path::absolute(cfg.dataset_path()).map_err(failed)?;
    best_cfg.output_dir = std::path::absolute(&out).map_err(failed)?;
    best_cfg.base_dir = PathBuf::new();
    let text = format!(
        "# config_hash: {hash}\n# best trial {} of {}, mean validation F1 {}\n{}",
        best.trial,
        cfg.search.budget,
        best.mean_f1.unwrap_or(f64::NAN),
        best_cfg.to_toml()?
    );
    let best_path = out.join("best_config.toml");
    fs::write(&best_path, text).map_err(|e| failed(format!("{}: {e}", best_path.display())))?;

    Ok(SearchOutcome {
        config_hash: hash,
        best_trial: best.trial,
        best: best_cfg,
        trials,
        log: log_path,
        best_config: best_path,
    })
}

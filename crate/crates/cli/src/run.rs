use std::fs;
use std::io::Write as _;
use std::path::PathBuf;

use adapt_core::data::{LabeledDataset, TemporalDataset};
use adapt_core::engine::{self, AdaptRun};
use adapt_core::io::load_manifest;
use rayon::prelude::*;

use crate::artifacts::{seed_metrics, write_metrics_csv};
use crate::{failed, invalid, CliResult, ExperimentConfig, ManifestLine, ModelArtifact, PeriodLine, RunHeader, SeedEnd};

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub config_hash: String,
    pub manifest: PathBuf,
    pub metrics: PathBuf,
    pub models: Vec<PathBuf>,
}

pub(crate) struct Loaded {
    pub train: LabeledDataset,
    pub validation: TemporalDataset,
    pub test: TemporalDataset,
    pub num_classes: usize,
    pub benign_class: Option<usize>,
}

pub(crate) fn load_dataset(cfg: &ExperimentConfig) -> CliResult<Loaded> {
    let path = cfg.dataset_path();
    let manifest = load_manifest(&path).map_err(invalid)?;
    let splits = manifest.load_splits().map_err(invalid)?;
    if splits.train.is_empty() {
        return Err(invalid(format!("{}: no train periods", path.display())));
    }
    Ok(Loaded {
        train: splits.train,
        validation: splits.validation,
        test: splits.test,
        num_classes: manifest.num_classes,
        benign_class: manifest.benign_class,
    })
}

/// Runs the configured loop once per evaluation seed over the test periods,
/// starting from the train periods, and writes `run_manifest.jsonl`,
/// `metrics.csv` and `model_seed<k>.json` into the output directory.
pub fn cmd_run(cfg: &ExperimentConfig) -> CliResult<RunOutcome> {
    cfg.validate()?;
    let hash = cfg.hash()?;
    let data = load_dataset(cfg)?;
    if data.test.is_empty() {
        return Err(invalid(format!("{}: no test periods", cfg.dataset_path().display())));
    }

    let runs: Vec<(u64, AdaptRun)> = cfg
        .evaluation
        .seeds
        .par_iter()
        .map(|&seed| {
            let mut adapt = cfg.adapt.clone();
            adapt.seed = seed;
            engine::run(&data.train, &data.test, &adapt, &cfg.learner)
                .map(|r| (seed, r))
                .map_err(|e| failed(format!("seed {seed}: {e}")))
        })
        .collect::<CliResult<_>>()?;

    let out = cfg.output_path();
    fs::create_dir_all(&out).map_err(|e| failed(format!("{}: {e}", out.display())))?;
    let header = RunHeader {
        config_hash: hash.clone(),
        config: cfg.clone(),
        period_ids: data.test.period_ids(),
        num_classes: data.num_classes,
        benign_class: data.benign_class,
    };

    let mut manifest = Vec::new();
    let mut push = |line: &ManifestLine| -> CliResult<()> {
        serde_json::to_writer(&mut manifest, line).map_err(failed)?;
        manifest.push(b'\n');
        Ok(())
    };
    push(&ManifestLine::Header(header.clone()))?;
    let mut metrics = Vec::new();
    let mut models = Vec::new();
    for (seed, run) in &runs {
        let lines: Vec<PeriodLine> = run
            .summaries()
            .into_iter()
            .zip(&run.periods)
            .zip(data.test.partitions())
            .map(|((summary, rec), part)| PeriodLine {
                seed: *seed,
                summary,
                predictions: rec.predictions.clone(),
                probabilities: rec.probabilities.clone(),
                truth: part.data.labels().labels().to_vec(),
                pseudo: rec.pseudo.clone(),
            })
            .collect();
        for line in &lines {
            push(&ManifestLine::Period(line.clone()))?;
        }
        let final_model = run.final_model();
        push(&ManifestLine::SeedEnd(SeedEnd {
            seed: *seed,
            initial_labeled: run.initial_labeled,
            ground_truth_consumed: run.ground_truth_consumed,
            final_model_checksum: final_model.checksum().map_err(failed)?,
        }))?;
        metrics.push(seed_metrics(&header, *seed, &lines, cfg.evaluation.averaging)?);

        let artifact = ModelArtifact {
            config_hash: hash.clone(),
            seed: *seed,
            model: serde_json::from_str(&final_model.to_json().map_err(failed)?).map_err(failed)?,
        };
        let path = out.join(format!("model_seed{seed}.json"));
        let text = serde_json::to_string(&artifact).map_err(failed)?;
        fs::write(&path, text).map_err(|e| failed(format!("{}: {e}", path.display())))?;
        models.push(path);
    }

    let manifest_path = out.join("run_manifest.jsonl");
    let mut f = fs::File::create(&manifest_path).map_err(|e| failed(format!("{}: {e}", manifest_path.display())))?;
    f.write_all(&manifest)
        .map_err(|e| failed(format!("{}: {e}", manifest_path.display())))?;
    let metrics_path = out.join("metrics.csv");
    write_metrics_csv(&metrics_path, &hash, &metrics)?;

    Ok(RunOutcome {
        config_hash: hash,
        manifest: manifest_path,
        metrics: metrics_path,
        models,
    })
}

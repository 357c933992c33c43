use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use adapt_core::data::{LabelVector, ProbabilityMatrix};
use adapt_core::engine::PeriodSummary;
use adapt_core::eval::{period_metrics, pseudo_label_errors, Averaging, MetricsReport};
use adapt_core::learners::Learner;
use adapt_core::pseudo_label::PseudoLabelBatch;
use serde::{Deserialize, Serialize};

use crate::{failed, invalid, CliResult, ExperimentConfig};

pub const METRICS_COLUMNS: [&str; 13] = [
    "seed",
    "period",
    "tp",
    "fp",
    "tn",
    "fn",
    "f1",
    "fpr",
    "fnr",
    "ae",
    "err_pb",
    "err_pm",
    "model_checksum",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub period_ids: Vec<i64>,
    pub num_classes: usize,
    pub benign_class: Option<usize>,
}

/// Everything needed to rescore one period without the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodLine {
    pub seed: u64,
    pub summary: PeriodSummary,
    pub predictions: Vec<usize>,
    pub probabilities: ProbabilityMatrix,
    pub truth: Vec<usize>,
    pub pseudo: PseudoLabelBatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedEnd {
    pub seed: u64,
    pub initial_labeled: usize,
    pub ground_truth_consumed: usize,
    pub final_model_checksum: String,
}

/// One line of `run_manifest.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifestLine {
    Header(RunHeader),
    Period(PeriodLine),
    SeedEnd(SeedEnd),
}

/// A parsed run manifest whose every seed is complete.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub header: RunHeader,
    pub seeds: BTreeMap<u64, (Vec<PeriodLine>, SeedEnd)>,
}

pub fn read_run_manifest(path: &Path) -> CliResult<RunManifest> {
    let file = fs::File::open(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let mut header = None;
    let mut periods: BTreeMap<u64, Vec<PeriodLine>> = BTreeMap::new();
    let mut ends: BTreeMap<u64, SeedEnd> = BTreeMap::new();
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ManifestLine =
            serde_json::from_str(&line).map_err(|e| invalid(format!("{}:{}: {e}", path.display(), k + 1)))?;
        match parsed {
            ManifestLine::Header(h) if header.is_none() => header = Some(h),
            ManifestLine::Header(_) => return Err(invalid(format!("{}: duplicate header", path.display()))),
            ManifestLine::Period(p) => periods.entry(p.seed).or_default().push(p),
            ManifestLine::SeedEnd(e) => {
                ends.insert(e.seed, e);
            }
        }
    }
    let header = header.ok_or_else(|| invalid(format!("{}: missing header line", path.display())))?;
    let mut seeds = BTreeMap::new();
    for &seed in &header.config.evaluation.seeds {
        let lines = periods.remove(&seed).unwrap_or_default();
        let ids: Vec<i64> = lines.iter().map(|p| p.summary.period_id).collect();
        let end = ends.remove(&seed);
        if ids != header.period_ids || end.is_none() {
            return Err(invalid(format!(
                "{}: incomplete run: seed {seed} has {} of {} periods{}",
                path.display(),
                ids.len(),
                header.period_ids.len(),
                if end.is_none() { " and no end marker" } else { "" }
            )));
        }
        seeds.insert(seed, (lines, end.expect("checked")));
    }
    Ok(RunManifest { header, seeds })
}

pub(crate) struct SeedMetrics {
    pub seed: u64,
    pub report: MetricsReport,
    pub checksums: Vec<String>,
}

pub(crate) fn seed_metrics(
    header: &RunHeader,
    seed: u64,
    lines: &[PeriodLine],
    averaging: Averaging,
) -> CliResult<SeedMetrics> {
    let benign = header.benign_class.unwrap_or(0);
    let mut periods = Vec::with_capacity(lines.len());
    let mut errors = Vec::with_capacity(lines.len());
    for p in lines {
        periods.push(period_metrics(p.summary.period_id, &p.predictions, &p.truth, benign).map_err(invalid)?);
        let truth = LabelVector::new(p.truth.clone(), header.num_classes, header.benign_class).map_err(invalid)?;
        errors.push(pseudo_label_errors(&p.pseudo, &truth).map_err(invalid)?);
    }
    Ok(SeedMetrics {
        seed,
        report: MetricsReport::new(periods, errors, averaging),
        checksums: lines.iter().map(|p| p.summary.model_checksum.clone()).collect(),
    })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Writes per-period rows in [`METRICS_COLUMNS`] order, then one `mean`
/// footer row per seed.
pub(crate) fn write_metrics_csv(path: &Path, hash: &str, seeds: &[SeedMetrics]) -> CliResult<()> {
    let mut buf = format!("# config_hash: {hash}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(METRICS_COLUMNS).map_err(failed)?;
        for s in seeds {
            let r = &s.report;
            for (k, p) in r.periods.iter().enumerate() {
                let (pb, pm) = r.pseudo_label_errors[k];
                w.write_record([
                    s.seed.to_string(),
                    p.period_id.to_string(),
                    p.tp.to_string(),
                    p.fp.to_string(),
                    p.tn.to_string(),
                    p.fn_.to_string(),
                    p.f1.to_string(),
                    p.fpr.to_string(),
                    p.fnr.to_string(),
                    r.absolute_exposure[k].to_string(),
                    pb.to_string(),
                    pm.to_string(),
                    s.checksums[k].clone(),
                ])
                .map_err(failed)?;
            }
        }
        for s in seeds {
            let r = &s.report;
            w.write_record([
                s.seed.to_string(),
                "mean".into(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                r.averages.f1.to_string(),
                r.averages.fpr.to_string(),
                r.averages.fnr.to_string(),
                r.absolute_exposure.last().copied().unwrap_or(0).to_string(),
                mean(r.pseudo_label_errors.iter().map(|e| e.0)).to_string(),
                mean(r.pseudo_label_errors.iter().map(|e| e.1)).to_string(),
                String::new(),
            ])
            .map_err(failed)?;
        }
        w.flush().map_err(failed)?;
    }
    fs::write(path, buf).map_err(|e| failed(format!("{}: {e}", path.display())))
}

/// Serialized final model plus the hash of the config that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub config_hash: String,
    pub seed: u64,
    pub model: serde_json::Value,
}

/// Reads either a [`ModelArtifact`] or a bare serialized learner.
pub fn load_model(path: &Path) -> CliResult<Learner> {
    let text = fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let bad = |e: &dyn std::fmt::Display| invalid(format!("{}: {e}", path.display()));
    match serde_json::from_str::<ModelArtifact>(&text) {
        Ok(a) => Learner::from_json(&a.model.to_string()).map_err(|e| bad(&e)),
        Err(_) => Learner::from_json(&text).map_err(|e| bad(&e)),
    }
}

use std::fs;
use std::path::PathBuf;

use adapt_core::data::{LabelVector, ProbabilityMatrix};
use adapt_core::drift::calibration;

use crate::artifacts::{seed_metrics, write_metrics_csv};
use crate::{failed, invalid, read_run_manifest, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRequest {
    /// `run_manifest.jsonl` from a finished run.
    pub manifest: PathBuf,
    /// Defaults to the manifest's directory.
    pub out: Option<PathBuf>,
    /// Defaults to the run's `evaluation.bins`.
    pub bins: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOutcome {
    pub config_hash: String,
    pub metrics: PathBuf,
    pub calibration: PathBuf,
}

/// Rescores a run from its manifest: `report.csv` (same layout as the run's
/// `metrics.csv`) and `calibration.csv` (probabilities pooled over periods,
/// per seed).
pub fn cmd_report(req: &ReportRequest) -> CliResult<ReportOutcome> {
    let run = read_run_manifest(&req.manifest)?;
    let header = &run.header;
    let bins = req.bins.unwrap_or(header.config.evaluation.bins);
    if bins == 0 {
        return Err(invalid("bins must be at least 1"));
    }
    let out = req
        .out
        .clone()
        .unwrap_or_else(|| req.manifest.parent().map(PathBuf::from).unwrap_or_default());
    fs::create_dir_all(&out).map_err(|e| failed(format!("{}: {e}", out.display())))?;

    let mut metrics = Vec::new();
    let mut buf = format!("# config_hash: {}\n", header.config_hash).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record([
            "seed",
            "bin",
            "lower",
            "upper",
            "count",
            "mean_confidence",
            "accuracy",
            "ece",
        ])
        .map_err(failed)?;
        for (&seed, (lines, _)) in &run.seeds {
            metrics.push(seed_metrics(header, seed, lines, header.config.evaluation.averaging)?);
            let probs: Vec<&ProbabilityMatrix> = lines.iter().map(|p| &p.probabilities).collect();
            let probs = ProbabilityMatrix::vstack(&probs).map_err(invalid)?;
            let truth: Vec<usize> = lines.iter().flat_map(|p| p.truth.iter().copied()).collect();
            let truth = LabelVector::new(truth, header.num_classes, header.benign_class).map_err(invalid)?;
            let cal = calibration(&probs, &truth, bins).map_err(failed)?;
            for (k, b) in cal.bins.iter().enumerate() {
                w.write_record([
                    seed.to_string(),
                    k.to_string(),
                    b.lower.to_string(),
                    b.upper.to_string(),
                    b.count.to_string(),
                    b.mean_confidence.to_string(),
                    b.accuracy.to_string(),
                    String::new(),
                ])
                .map_err(failed)?;
            }
            w.write_record([
                seed.to_string(),
                "all".into(),
                String::new(),
                String::new(),
                cal.total.to_string(),
                String::new(),
                String::new(),
                cal.ece.to_string(),
            ])
            .map_err(failed)?;
        }
        w.flush().map_err(failed)?;
    }
    let calibration_path = out.join("calibration.csv");
    fs::write(&calibration_path, buf).map_err(|e| failed(format!("{}: {e}", calibration_path.display())))?;
    let metrics_path = out.join("report.csv");
    write_metrics_csv(&metrics_path, &header.config_hash, &metrics)?;
    Ok(ReportOutcome {
        config_hash: header.config_hash.clone(),
        metrics: metrics_path,
        calibration: calibration_path,
    })
}

use std::fs;
use std::path::{Path, PathBuf};

use adapt_core::data::{Partition, StorageKind};
use adapt_core::io::{write_partitioned, DatasetManifest, Split};
use adapt_core::synthetic::{generate_rotating, RotatingDriftSpec};
use serde::Serialize;

use crate::{config_hash, failed, invalid, CliResult, ExperimentConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthRequest {
    #[serde(skip)]
    pub out: PathBuf,
    pub spec: RotatingDriftSpec,
    /// Stream periods after the initial one marked for validation; the rest
    /// are test periods.
    pub validation_periods: usize,
}

fn prepend(path: &Path, line: &str) -> CliResult<()> {
    let body = fs::read_to_string(path).map_err(|e| failed(format!("{}: {e}", path.display())))?;
    fs::write(path, format!("{line}\n{body}")).map_err(|e| failed(format!("{}: {e}", path.display())))
}

/// Writes the rotating-drift stream as a dense dataset: period 0 for
/// training, then validation and test periods, plus `manifest.toml` and a
/// starter `experiment.toml`.
pub fn cmd_synth(req: &SynthRequest) -> CliResult<DatasetManifest> {
    req.spec.validate().map_err(invalid)?;
    if req.validation_periods + 1 >= req.spec.periods {
        return Err(invalid(format!(
            "{} validation periods leave no test period out of {}",
            req.validation_periods, req.spec.periods
        )));
    }
    let hash = config_hash(req)?;
    let (initial, stream) = generate_rotating(&req.spec).map_err(failed)?;
    let first = Partition {
        period_id: 0,
        data: initial,
    };
    let mut parts = vec![(Split::Train, &first)];
    for (k, p) in stream.partitions().iter().enumerate() {
        let split = if k < req.validation_periods {
            Split::Validation
        } else {
            Split::Test
        };
        parts.push((split, p));
    }
    let manifest =
        write_partitioned(&req.out, &parts, StorageKind::Dense, vec!["benign".into(), "malware".into()]).map_err(failed)?;

    let stamp = format!("# config_hash: {hash}");
    for entry in &manifest.periods {
        prepend(&manifest.resolve(entry), &stamp)?;
    }
    prepend(&req.out.join("manifest.toml"), &stamp)?;
    let mut experiment = ExperimentConfig::new("manifest.toml");
    experiment.output_dir = PathBuf::from("runs");
    let path = req.out.join("experiment.toml");
    fs::write(&path, format!("{stamp}\n{}", experiment.to_toml()?))
        .map_err(|e| failed(format!("{}: {e}", path.display())))?;
    Ok(manifest)
}

//! Command implementations behind the `adapt` binary.
//!
//! Each `cmd_*` function returns a [`CliError`] whose [`CliError::exit_code`]
//! is 1 for bad input (config, manifest, data files) and 2 for failures
//! while computing or writing results.

mod artifacts;
mod config;
mod drift;
mod report;
mod run;
mod search;
mod synth;

use std::fmt::Display;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use artifacts::{
    load_model, read_run_manifest, ManifestLine, ModelArtifact, PeriodLine, RunHeader, RunManifest, SeedEnd,
    METRICS_COLUMNS,
};
pub use config::{EvaluationOptions, ExperimentConfig, Overrides, SearchOptions};
pub use drift::{cmd_drift, DriftRequest, DriftRow};
pub use report::{cmd_report, ReportOutcome, ReportRequest};
pub use run::{cmd_run, RunOutcome};
pub use search::{cmd_search, SearchOutcome, Trial};
pub use synth::{cmd_synth, SynthRequest};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn invalid(e: impl Display) -> CliError {
    CliError::Validation(e.to_string())
}

pub(crate) fn failed(e: impl Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Hex SHA-256 of the value's JSON encoding.
pub fn config_hash<T: Serialize>(value: &T) -> CliResult<String> {
    let bytes = serde_json::to_vec(value).map_err(failed)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}

use std::fs;
use std::path::{Path, PathBuf};

use adapt_core::drift::DEFAULT_CALIBRATION_BINS;
use adapt_core::engine::{AdaptConfig, Mode};
use adapt_core::eval::Averaging;
use adapt_core::learners::{LearnerKind, LearnerSpec};
use adapt_core::search_space::{learner_in_range, DEFAULT_BUDGET};
use serde::{Deserialize, Serialize};

use crate::{config_hash, invalid, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationOptions {
    /// Confidence bins for the calibration table.
    pub bins: usize,
    /// One run per seed; each overrides `adapt.seed`.
    pub seeds: Vec<u64>,
    pub averaging: Averaging,
}

impl Default for EvaluationOptions {
    fn default() -> Self {
        Self {
            bins: DEFAULT_CALIBRATION_BINS,
            seeds: (0..5).collect(),
            averaging: Averaging::Unweighted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchOptions {
    pub budget: usize,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            seed: 0,
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_learner() -> LearnerSpec {
    LearnerSpec::default_for(LearnerKind::Logistic)
}

/// An experiment, as read from a TOML file. Relative paths are resolved
/// against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Dataset manifest.
    pub dataset: PathBuf,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Accept hyperparameters outside the tuning ranges.
    #[serde(default)]
    pub allow_out_of_range: bool,
    #[serde(default = "default_learner")]
    pub learner: LearnerSpec,
    #[serde(default)]
    pub adapt: AdaptConfig,
    #[serde(default)]
    pub evaluation: EvaluationOptions,
    #[serde(default)]
    pub search: SearchOptions,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn new(dataset: impl Into<PathBuf>) -> Self {
        Self {
            dataset: dataset.into(),
            output_dir: default_output_dir(),
            allow_out_of_range: false,
            learner: default_learner(),
            adapt: AdaptConfig::default(),
            evaluation: EvaluationOptions::default(),
            search: SearchOptions::default(),
            base_dir: PathBuf::new(),
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base).map_err(|e| invalid(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str, base_dir: PathBuf) -> CliResult<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(invalid)?;
        cfg.base_dir = base_dir;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string_pretty(self).map_err(crate::failed)
    }

    pub fn dataset_path(&self) -> PathBuf {
        self.base_dir.join(&self.dataset)
    }

    pub fn output_path(&self) -> PathBuf {
        self.base_dir.join(&self.output_dir)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.evaluation.seeds.is_empty() {
            return Err(invalid("evaluation.seeds is empty"));
        }
        if self.evaluation.bins == 0 {
            return Err(invalid("evaluation.bins must be at least 1"));
        }
        self.adapt.validate().map_err(invalid)?;
        if !self.allow_out_of_range {
            self.adapt
                .validate_tuning_ranges()
                .map_err(|e| invalid(format!("{e} (set allow_out_of_range to accept)")))?;
            if !learner_in_range(&self.learner) {
                return Err(invalid(format!(
                    "{} hyperparameters outside the tuning ranges (set allow_out_of_range to accept)",
                    self.learner.kind().name()
                )));
            }
        }
        Ok(())
    }

    /// Hash of everything that affects results; the output location and
    /// the config file's own location are excluded.
    pub fn hash(&self) -> CliResult<String> {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        config_hash(&canonical)
    }
}

/// Command-line switches layered over a loaded config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub seeds: Option<Vec<u64>>,
    pub output_dir: Option<PathBuf>,
    pub active_budget: Option<usize>,
    pub source_free: bool,
    pub no_adaptive_thresholds: bool,
    pub no_augmentation: bool,
    pub no_mixup: bool,
    pub allow_out_of_range: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(mode) = self.mode {
            cfg.adapt.mode = mode;
        }
        if let Some(seeds) = &self.seeds {
            cfg.evaluation.seeds = seeds.clone();
        }
        if let Some(dir) = &self.output_dir {
            // Taken relative to the working directory, not the config file.
            cfg.output_dir = std::path::absolute(dir).unwrap_or_else(|_| dir.clone());
        }
        if let Some(k) = self.active_budget {
            cfg.adapt.active_budget = k;
        }
        cfg.adapt.source_free |= self.source_free;
        cfg.adapt.adaptive_thresholds &= !self.no_adaptive_thresholds;
        cfg.adapt.augmentation &= !self.no_augmentation;
        cfg.adapt.mixup &= !self.no_mixup;
        cfg.allow_out_of_range |= self.allow_out_of_range;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::parse("dataset = \"m.toml\"\n", PathBuf::from("/d")).unwrap();
        assert_eq!(cfg.evaluation.seeds, vec![0, 1, 2, 3, 4]);
        assert_eq!(cfg.search.budget, 200);
        assert_eq!(cfg.dataset_path(), PathBuf::from("/d/m.toml"));
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in [
            "dataset = \"m\"\ncolour = 1\n",
            "dataset = \"m\"\n[adapt]\ntau = 0.9\n",
            "dataset = \"m\"\n[learner]\nkind = \"mlp\"\nlayers = 3\n",
            "dataset = \"m\"\n[evaluation]\nbin = 3\n",
        ] {
            assert!(ExperimentConfig::parse(text, PathBuf::new()).is_err(), "{text}");
        }
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = ExperimentConfig::new("data/manifest.toml");
        cfg.learner = LearnerSpec::default_for(LearnerKind::Mlp);
        cfg.adapt.mode = Mode::Oracle;
        let back = ExperimentConfig::parse(&cfg.to_toml().unwrap(), PathBuf::new()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn range_check_and_override() {
        let mut cfg = ExperimentConfig::new("m");
        cfg.adapt.tau_b = 0.7;
        assert!(cfg.validate().is_err());
        cfg.allow_out_of_range = true;
        cfg.validate().unwrap();
        cfg.adapt.tau_b = 0.3;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hash_ignores_output_dir_but_not_settings() {
        let a = ExperimentConfig::new("m");
        let mut b = a.clone();
        b.output_dir = PathBuf::from("elsewhere");
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.adapt.mixup = false;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
    }

    #[test]
    fn overrides_only_disable_components() {
        let mut cfg = ExperimentConfig::new("m");
        cfg.adapt.mixup = false;
        Overrides {
            no_augmentation: true,
            mode: Some(Mode::Offline),
            ..Overrides::default()
        }
        .apply(&mut cfg);
        assert!(!cfg.adapt.augmentation && !cfg.adapt.mixup && cfg.adapt.adaptive_thresholds);
        assert_eq!(cfg.adapt.mode, Mode::Offline);
    }
}

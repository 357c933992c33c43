//! Probabilistic classifiers behind one model-agnostic surface.
//!
//! A [`Learner`] pairs hyperparameters ([`LearnerSpec`]) with an optional
//! trained model. Training never mutates: [`Learner::fit`] and
//! [`Learner::fine_tune`] return new values, so a trained learner can be
//! shared freely across threads.

mod forest;
mod logistic;
mod mlp;

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{FeatureMatrix, LabelVector, ProbabilityMatrix};
use crate::error::{Error, Result};

pub use forest::{DecisionTree, ForestModel, ForestParams, SplitCriterion};
pub use logistic::{LogisticModel, LogisticParams};
pub use mlp::{MlpModel, MlpParams};

/// Training targets: hard class ids or per-sample class distributions.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainTargets {
    Hard(LabelVector),
    Fractional(ProbabilityMatrix),
}

impl TrainTargets {
    pub fn len(&self) -> usize {
        match self {
            TrainTargets::Hard(l) => l.len(),
            TrainTargets::Fractional(p) => p.rows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_classes(&self) -> usize {
        match self {
            TrainTargets::Hard(l) => l.num_classes(),
            TrainTargets::Fractional(p) => p.num_classes(),
        }
    }

    pub fn is_fractional(&self) -> bool {
        matches!(self, TrainTargets::Fractional(_))
    }

    /// Targets as distributions; hard labels become one-hot rows.
    pub fn to_distributions(&self) -> ProbabilityMatrix {
        match self {
            TrainTargets::Hard(l) => ProbabilityMatrix::one_hot(l),
            TrainTargets::Fractional(p) => p.clone(),
        }
    }

    /// Per-sample weights that make every class carry equal total mass
    /// (`n / (C * mass_c)`), or all ones when balancing is off.
    pub(crate) fn sample_weights(&self, balance: bool) -> Vec<f64> {
        let n = self.len();
        if !balance {
            return vec![1.0; n];
        }
        let dist = self.to_distributions();
        let c = dist.num_classes();
        let mut mass = vec![0.0; c];
        for i in 0..n {
            for (m, t) in mass.iter_mut().zip(dist.row(i)) {
                *m += t;
            }
        }
        let class_w: Vec<f64> = mass
            .iter()
            .map(|&m| if m > 0.0 { n as f64 / (c as f64 * m) } else { 0.0 })
            .collect();
        (0..n)
            .map(|i| dist.row(i).iter().zip(&class_w).map(|(t, w)| t * w).sum())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Logistic,
    Forest,
    Mlp,
}

impl LearnerKind {
    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Logistic => "logistic regression",
            LearnerKind::Forest => "random forest",
            LearnerKind::Mlp => "mlp",
        }
    }
}

/// How a learner is updated on each period's combined data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetrainPolicy {
    FromScratch,
    FineTune,
}

/// Tree ensembles and linear models retrain from scratch; neural networks
/// continue from their current weights.
pub fn retrain_policy(kind: LearnerKind) -> RetrainPolicy {
    match kind {
        LearnerKind::Forest | LearnerKind::Logistic => RetrainPolicy::FromScratch,
        LearnerKind::Mlp => RetrainPolicy::FineTune,
    }
}

/// Hyperparameters for one of the built-in learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerSpec {
    Logistic(LogisticParams),
    Forest(ForestParams),
    Mlp(MlpParams),
}

impl LearnerSpec {
    pub fn kind(&self) -> LearnerKind {
        match self {
            LearnerSpec::Logistic(_) => LearnerKind::Logistic,
            LearnerSpec::Forest(_) => LearnerKind::Forest,
            LearnerSpec::Mlp(_) => LearnerKind::Mlp,
        }
    }

    pub fn default_for(kind: LearnerKind) -> Self {
        match kind {
            LearnerKind::Logistic => LearnerSpec::Logistic(LogisticParams::default()),
            LearnerKind::Forest => LearnerSpec::Forest(ForestParams::default()),
            LearnerKind::Mlp => LearnerSpec::Mlp(MlpParams::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Model {
    Logistic(LogisticModel),
    Forest(ForestModel),
    Mlp(MlpModel),
}

/// A classifier description plus, once trained, its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Learner {
    spec: LearnerSpec,
    model: Option<Model>,
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SavedLearner {
    format_version: u32,
    kind: LearnerKind,
    hyperparams: LearnerSpec,
    parameters: Option<Model>,
}

impl Learner {
    pub fn new(spec: LearnerSpec) -> Self {
        Self { spec, model: None }
    }

    pub fn kind(&self) -> LearnerKind {
        self.spec.kind()
    }

    pub fn spec(&self) -> &LearnerSpec {
        &self.spec
    }

    pub fn is_trained(&self) -> bool {
        self.model.is_some()
    }

    pub fn supports_fractional_targets(&self) -> bool {
        !matches!(self.kind(), LearnerKind::Forest)
    }

    pub fn supports_fine_tune(&self) -> bool {
        matches!(self.kind(), LearnerKind::Mlp)
    }

    /// Dimensionality the learner was trained on.
    pub fn dims(&self) -> Option<usize> {
        self.model.as_ref().map(|m| match m {
            Model::Logistic(m) => m.dims(),
            Model::Forest(m) => m.dims(),
            Model::Mlp(m) => m.dims(),
        })
    }

    pub fn num_classes(&self) -> Option<usize> {
        self.model.as_ref().map(|m| match m {
            Model::Logistic(m) => m.num_classes(),
            Model::Forest(m) => m.num_classes(),
            Model::Mlp(m) => m.num_classes(),
        })
    }

    /// Trains from scratch. Deterministic in `(features, targets, spec, seed)`.
    pub fn fit(&self, features: &FeatureMatrix, targets: &TrainTargets, seed: u64) -> Result<Learner> {
        check_training_input(features, targets)?;
        if targets.is_fractional() && !self.supports_fractional_targets() {
            return Err(Error::Unsupported {
                learner: self.kind().name(),
                what: "fractional targets",
            });
        }
        let model = match &self.spec {
            LearnerSpec::Logistic(p) => Model::Logistic(LogisticModel::fit(p, features, targets)?),
            LearnerSpec::Forest(p) => {
                let TrainTargets::Hard(labels) = targets else {
                    unreachable!("fractional targets rejected above")
                };
                Model::Forest(ForestModel::fit(p, features, labels, seed)?)
            }
            LearnerSpec::Mlp(p) => Model::Mlp(MlpModel::fit(p, features, targets, seed)?),
        };
        Ok(Learner {
            spec: self.spec.clone(),
            model: Some(model),
        })
    }

    /// Continues optimisation from the current weights for
    /// `ceil(epoch_fraction * epochs)` epochs.
    pub fn fine_tune(
        &self,
        features: &FeatureMatrix,
        targets: &TrainTargets,
        epoch_fraction: f64,
        seed: u64,
    ) -> Result<Learner> {
        if !self.supports_fine_tune() {
            return Err(Error::Unsupported {
                learner: self.kind().name(),
                what: "fine-tuning",
            });
        }
        let (LearnerSpec::Mlp(params), Some(Model::Mlp(model))) = (&self.spec, &self.model) else {
            return Err(Error::NotTrained);
        };
        if !(0.0..=1.0).contains(&epoch_fraction) {
            return Err(Error::OutOfRange {
                name: "epoch_fraction",
                value: epoch_fraction,
                low: 0.0,
                high: 1.0,
            });
        }
        check_training_input(features, targets)?;
        check_dims(model.dims(), features)?;
        let epochs = (epoch_fraction * params.epochs as f64).ceil() as usize;
        let tuned = model.train_more(params, features, targets, epochs, seed)?;
        Ok(Learner {
            spec: self.spec.clone(),
            model: Some(Model::Mlp(tuned)),
        })
    }

    pub fn predict_proba(&self, features: &FeatureMatrix) -> Result<ProbabilityMatrix> {
        let model = self.model.as_ref().ok_or(Error::NotTrained)?;
        let dims = self.dims().unwrap_or(0);
        check_dims(dims, features)?;
        let probs = match model {
            Model::Logistic(m) => m.predict_proba(features),
            Model::Forest(m) => m.predict_proba(features),
            Model::Mlp(m) => m.predict_proba(features),
        };
        debug_assert!(probs.is_ok());
        probs
    }

    /// Argmax predictions with ties resolved towards `benign`.
    pub fn predict(&self, features: &FeatureMatrix, benign: Option<usize>) -> Result<Vec<usize>> {
        Ok(self.predict_proba(features)?.predictions(benign))
    }

    /// Penultimate-layer activations, one row per sample. Only networks
    /// expose an embedding.
    pub fn embed(&self, features: &FeatureMatrix) -> Result<FeatureMatrix> {
        match &self.model {
            Some(Model::Mlp(m)) => {
                check_dims(m.dims(), features)?;
                m.embed(features)
            }
            Some(_) => Err(Error::Unsupported {
                learner: self.kind().name(),
                what: "penultimate embeddings",
            }),
            None if self.kind() == LearnerKind::Mlp => Err(Error::NotTrained),
            None => Err(Error::Unsupported {
                learner: self.kind().name(),
                what: "penultimate embeddings",
            }),
        }
    }

    pub fn from_logistic(spec: LogisticParams, model: LogisticModel) -> Learner {
        Learner {
            spec: LearnerSpec::Logistic(spec),
            model: Some(Model::Logistic(model)),
        }
    }

    pub fn from_forest(spec: ForestParams, model: ForestModel) -> Learner {
        Learner {
            spec: LearnerSpec::Forest(spec),
            model: Some(Model::Forest(model)),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let saved = SavedLearner {
            format_version: MODEL_FORMAT_VERSION,
            kind: self.kind(),
            hyperparams: self.spec.clone(),
            parameters: self.model.clone(),
        };
        serde_json::to_string(&saved).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Learner> {
        let saved: SavedLearner =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        if saved.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported model format version {}",
                saved.format_version
            )));
        }
        if saved.kind != saved.hyperparams.kind() {
            return Err(Error::Serialization(
                "learner kind does not match hyperparameters".into(),
            ));
        }
        let consistent = matches!(
            (&saved.hyperparams, &saved.parameters),
            (_, None)
                | (LearnerSpec::Logistic(_), Some(Model::Logistic(_)))
                | (LearnerSpec::Forest(_), Some(Model::Forest(_)))
                | (LearnerSpec::Mlp(_), Some(Model::Mlp(_)))
        );
        if !consistent {
            return Err(Error::Serialization(
                "parameters do not match learner kind".into(),
            ));
        }
        Ok(Learner {
            spec: saved.hyperparams,
            model: saved.parameters,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Learner> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Learner::from_json(&text)
    }

    /// SHA-256 of the serialized learner, hex encoded.
    pub fn checksum(&self) -> Result<String> {
        let json = self.to_json()?;
        Ok(hex::encode(Sha256::digest(json.as_bytes())))
    }
}

fn check_training_input(features: &FeatureMatrix, targets: &TrainTargets) -> Result<()> {
    if features.rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    if features.rows() != targets.len() {
        return Err(Error::LengthMismatch {
            left: features.rows(),
            right: targets.len(),
        });
    }
    Ok(())
}

fn check_dims(expected: usize, features: &FeatureMatrix) -> Result<()> {
    if features.dims() != expected {
        return Err(Error::DimensionMismatch {
            index: 0,
            expected,
            found: features.dims(),
        });
    }
    Ok(())
}

/// Numerically stable softmax in place.
pub(crate) fn softmax_in_place(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for l in logits.iter_mut() {
        *l = (*l - max).exp();
        sum += *l;
    }
    for l in logits.iter_mut() {
        *l /= sum;
    }
}

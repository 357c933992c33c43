//! Drift-aware pseudo-label selection.
//!
//! Each period the model's mean confidence on the samples it predicts as
//! malware (resp. benign) is blended into that class's threshold:
//!
//! ```text
//! tau_updated = lambda * mu + (1 - lambda) * tau
//! ```
//!
//! A sample is pseudo-labeled with its predicted class only when that
//! class's probability strictly exceeds the updated threshold. Malware
//! confidence typically sags first under drift, so a per-class threshold
//! keeps admitting malware without loosening the benign cutoff.

use serde::{Deserialize, Serialize};

use crate::data::{LabelVector, ProbabilityMatrix};
use crate::error::{Error, Result};

/// Confidence cutoffs for the benign and malware classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub tau_b: f64,
    pub tau_m: f64,
}

impl Thresholds {
    pub fn new(tau_b: f64, tau_m: f64) -> Result<Self> {
        let t = Self { tau_b, tau_m };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        in_range("tau_b", self.tau_b, 0.5, 1.0)?;
        in_range("tau_m", self.tau_m, 0.5, 1.0)
    }
}

pub(crate) fn in_range(name: &'static str, value: f64, low: f64, high: f64) -> Result<()> {
    if !(low..=high).contains(&value) {
        return Err(Error::OutOfRange {
            name,
            value,
            low,
            high,
        });
    }
    Ok(())
}

/// Base thresholds, blend weight and the thresholds currently in force.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveState {
    pub base: Thresholds,
    pub lambda: f64,
    pub updated: Thresholds,
    /// Blend from the previous period's updated thresholds instead of the
    /// base values.
    pub chain: bool,
}

impl AdaptiveState {
    pub fn new(base: Thresholds, lambda: f64, chain: bool) -> Result<Self> {
        base.validate()?;
        in_range("lambda", lambda, 0.0, 1.0)?;
        Ok(Self {
            base,
            lambda,
            updated: base,
            chain,
        })
    }

    /// Recomputes the thresholds for a new period from its class means.
    pub fn advance(&mut self, mu_m: f64, mu_b: f64) -> Thresholds {
        let prior = if self.chain { self.updated } else { self.base };
        let mut from = *self;
        from.base = prior;
        self.updated = update_thresholds(&from, mu_m, mu_b);
        self.updated
    }
}

/// Indices into a period's pool, with the assigned labels and confidences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabelBatch {
    pub indices: Vec<usize>,
    pub labels: LabelVector,
    pub confidences: Vec<f64>,
}

impl PseudoLabelBatch {
    pub fn empty(num_classes: usize, benign: Option<usize>) -> Result<Self> {
        Ok(Self {
            indices: Vec::new(),
            labels: LabelVector::new(Vec::new(), num_classes, benign)?,
            confidences: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Mean predicted-malware probability over rows predicted malware, and mean
/// benign probability over rows predicted benign. Rows are assigned by
/// argmax with ties going to benign. A class with no predicted rows falls
/// back to the matching entry of `fallback`, which makes the update a no-op
/// for it.
///
/// With more than two classes every non-benign class counts as malware and
/// the malware confidence of a row is its top non-benign probability.
pub fn class_means(
    probs: &ProbabilityMatrix,
    benign_class: usize,
    fallback: Thresholds,
) -> Result<(f64, f64)> {
    if probs.rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let (mut sum_m, mut n_m, mut sum_b, mut n_b) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..probs.rows() {
        let row = probs.row(i);
        let k = crate::data::argmax(row, Some(benign_class));
        if k == benign_class {
            sum_b += row[benign_class];
            n_b += 1;
        } else {
            sum_m += row[k];
            n_m += 1;
        }
    }
    let mu_m = if n_m > 0 { sum_m / n_m as f64 } else { fallback.tau_m };
    let mu_b = if n_b > 0 { sum_b / n_b as f64 } else { fallback.tau_b };
    Ok((mu_m, mu_b))
}

/// `lambda * mu + (1 - lambda) * tau`, per class.
pub fn update_thresholds(state: &AdaptiveState, mu_m: f64, mu_b: f64) -> Thresholds {
    let l = state.lambda;
    Thresholds {
        tau_m: l * mu_m + (1.0 - l) * state.base.tau_m,
        tau_b: l * mu_b + (1.0 - l) * state.base.tau_b,
    }
}

/// Binary selection: malware when `P(malware) > tau_m`, benign when
/// `P(benign) > tau_b`, otherwise left unlabeled. Rows in `exclude` (already
/// annotated) are never selected.
pub fn select_binary(
    probs: &ProbabilityMatrix,
    updated: Thresholds,
    benign_class: usize,
    exclude: &[usize],
) -> Result<PseudoLabelBatch> {
    if probs.num_classes() != 2 {
        return Err(Error::ClassCountMismatch {
            index: 0,
            expected: 2,
            found: probs.num_classes(),
        });
    }
    let malware_class = 1 - benign_class;
    select(probs, Some(benign_class), exclude, |row| {
        if row[malware_class] > updated.tau_m {
            Some(malware_class)
        } else if row[benign_class] > updated.tau_b {
            Some(benign_class)
        } else {
            None
        }
    })
}

/// Multiclass selection with one threshold shared by all malware classes:
/// the argmax class is kept when its probability exceeds `tau_b` (benign)
/// or `tau_m` (any other class). Without a benign class only `tau_m`
/// applies.
pub fn select_multiclass(
    probs: &ProbabilityMatrix,
    tau_m_updated: f64,
    tau_b_updated: f64,
    benign_class: Option<usize>,
    exclude: &[usize],
) -> Result<PseudoLabelBatch> {
    select(probs, benign_class, exclude, |row| {
        let k = crate::data::argmax(row, benign_class);
        let tau = if Some(k) == benign_class {
            tau_b_updated
        } else {
            tau_m_updated
        };
        (row[k] > tau).then_some(k)
    })
}

fn select(
    probs: &ProbabilityMatrix,
    benign_class: Option<usize>,
    exclude: &[usize],
    rule: impl Fn(&[f64]) -> Option<usize>,
) -> Result<PseudoLabelBatch> {
    let mut excluded = vec![false; probs.rows()];
    for &i in exclude {
        if i >= probs.rows() {
            return Err(Error::BudgetExceeded {
                requested: i + 1,
                available: probs.rows(),
            });
        }
        excluded[i] = true;
    }
    let mut indices = Vec::new();
    let mut labels = Vec::new();
    let mut confidences = Vec::new();
    for i in 0..probs.rows() {
        if excluded[i] {
            continue;
        }
        let row = probs.row(i);
        if let Some(k) = rule(row) {
            indices.push(i);
            labels.push(k);
            confidences.push(row[k]);
        }
    }
    Ok(PseudoLabelBatch {
        indices,
        labels: LabelVector::new(labels, probs.num_classes(), benign_class)?,
        confidences,
    })
}

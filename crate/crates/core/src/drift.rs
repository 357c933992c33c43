//! Distribution-shift and calibration diagnostics.
//!
//! Shift between two feature sets is measured as the squared 2-Wasserstein
//! distance between Gaussians fitted to each set:
//!
//! ```text
//! W2^2 = |mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2)
//! ```
//!
//! On raw features this tracks covariate shift (OTDD); on the penultimate
//! activations of a fixed reference network it is the Fréchet distance
//! (FDD) and tracks shift in what the network has learned to separate.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::data::{argmax, FeatureMatrix, LabelVector, ProbabilityMatrix};
use crate::error::{Error, Result};
use crate::learners::Learner;

/// Above this many dimensions only the diagonal of the covariance is kept.
pub const DEFAULT_FULL_COVARIANCE_CAP: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    Full(DMatrix<f64>),
    Diagonal(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSummary {
    pub mean: Vec<f64>,
    pub covariance: Covariance,
}

impl GaussianSummary {
    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.covariance, Covariance::Diagonal(_))
    }

    fn diagonal(&self) -> Vec<f64> {
        match &self.covariance {
            Covariance::Full(m) => m.diagonal().iter().copied().collect(),
            Covariance::Diagonal(d) => d.clone(),
        }
    }
}

/// Sample mean and unbiased covariance. The covariance is full up to
/// `full_cap` dimensions and diagonal beyond.
pub fn fit_gaussian(features: &FeatureMatrix, full_cap: usize) -> Result<GaussianSummary> {
    let n = features.rows();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, found: n });
    }
    let d = features.dims();
    let mut mean = vec![0.0; d];
    for row in features.iter_rows() {
        row.add_scaled_to(1.0, &mut mean);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let denom = (n - 1) as f64;

    if d > full_cap {
        let mut var = vec![0.0; d];
        for row in features.iter_rows() {
            let x = row.to_dense(d);
            for j in 0..d {
                let c = x[j] - mean[j];
                var[j] += c * c;
            }
        }
        var.iter_mut().for_each(|v| *v /= denom);
        return Ok(GaussianSummary {
            mean,
            covariance: Covariance::Diagonal(var),
        });
    }

    let mut centered = DMatrix::<f64>::zeros(n, d);
    for (i, row) in features.iter_rows().enumerate() {
        let x = row.to_dense(d);
        for j in 0..d {
            centered[(i, j)] = x[j] - mean[j];
        }
    }
    let mut cov = centered.transpose() * &centered / denom;
    symmetrize(&mut cov);
    Ok(GaussianSummary {
        mean,
        covariance: Covariance::Full(cov),
    })
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Square root of a symmetric PSD matrix; negative eigenvalues from rounding
/// are clamped to zero.
fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// Squared 2-Wasserstein distance between two Gaussians. If either summary
/// is diagonal both are compared through their diagonals.
pub fn gaussian_w2(a: &GaussianSummary, b: &GaussianSummary) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            index: 1,
            expected: a.dims(),
            found: b.dims(),
        });
    }
    let mean_term: f64 = a.mean.iter().zip(&b.mean).map(|(x, y)| (x - y).powi(2)).sum();
    let cov_term = match (&a.covariance, &b.covariance) {
        (Covariance::Full(sa), Covariance::Full(sb)) => {
            // tr (A^1/2 B A^1/2)^1/2 is the sum of singular values of
            // A^1/2 B^1/2, which avoids a second square root of
            // rounding-level eigenvalues.
            let cross = psd_sqrt(sa) * psd_sqrt(sb);
            let nuclear: f64 = cross.singular_values().iter().sum();
            sa.trace() + sb.trace() - 2.0 * nuclear
        }
        _ => a
            .diagonal()
            .iter()
            .zip(b.diagonal())
            .map(|(x, y)| (x.max(0.0).sqrt() - y.max(0.0).sqrt()).powi(2))
            .sum(),
    };
    Ok((mean_term + cov_term).max(0.0))
}

/// Per-feature affine map fitted on a reference set.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    /// Zero mean, unit variance on `reference`; constant features keep scale 1.
    pub fn fit(reference: &FeatureMatrix) -> Result<Self> {
        let g = fit_gaussian(reference, 0)?;
        let scale = g
            .diagonal()
            .iter()
            .map(|v| if *v > 0.0 { v.sqrt() } else { 1.0 })
            .collect();
        Ok(Self { mean: g.mean, scale })
    }

    pub fn apply(&self, features: &FeatureMatrix) -> Result<FeatureMatrix> {
        let d = features.dims();
        if d != self.mean.len() {
            return Err(Error::DimensionMismatch {
                index: 0,
                expected: self.mean.len(),
                found: d,
            });
        }
        let mut values = features.to_dense_values();
        for row in values.chunks_mut(d) {
            for j in 0..d {
                row[j] = (row[j] - self.mean[j]) / self.scale[j];
            }
        }
        FeatureMatrix::dense(features.rows(), d, values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftOptions {
    pub full_covariance_cap: usize,
    /// Standardize both sets with the base set's moments first.
    pub standardize: bool,
}

impl Default for DriftOptions {
    fn default() -> Self {
        Self {
            full_covariance_cap: DEFAULT_FULL_COVARIANCE_CAP,
            standardize: false,
        }
    }
}

/// Gaussian-approximated dataset distance on raw (or standardized) features.
pub fn otdd(base: &FeatureMatrix, probe: &FeatureMatrix, opts: &DriftOptions) -> Result<f64> {
    if opts.standardize {
        let s = Standardizer::fit(base)?;
        let (b, p) = (s.apply(base)?, s.apply(probe)?);
        return w2_between(&b, &p, opts.full_covariance_cap);
    }
    w2_between(base, probe, opts.full_covariance_cap)
}

fn w2_between(a: &FeatureMatrix, b: &FeatureMatrix, cap: usize) -> Result<f64> {
    gaussian_w2(&fit_gaussian(a, cap)?, &fit_gaussian(b, cap)?)
}

/// Fréchet distance between the reference network's penultimate embeddings
/// of two sets.
pub fn fdd(reference: &Learner, base: &FeatureMatrix, probe: &FeatureMatrix, opts: &DriftOptions) -> Result<f64> {
    let eb = reference.embed(base)?;
    let ep = reference.embed(probe)?;
    w2_between(&eb, &ep, opts.full_covariance_cap)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    /// Zero for empty bins.
    pub mean_confidence: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub bins: Vec<CalibrationBin>,
    pub total: usize,
    pub ece: f64,
}

pub const DEFAULT_CALIBRATION_BINS: usize = 10;

/// Equal-width bins of top-class confidence over `[1/C, 1]`; the last bin is
/// closed. Predictions take the benign class on ties.
pub fn calibration(probs: &ProbabilityMatrix, truth: &LabelVector, bins: usize) -> Result<CalibrationReport> {
    if probs.rows() != truth.len() {
        return Err(Error::LengthMismatch {
            left: probs.rows(),
            right: truth.len(),
        });
    }
    if bins == 0 {
        return Err(Error::Config("calibration needs at least one bin".into()));
    }
    let low = 1.0 / probs.num_classes() as f64;
    let width = (1.0 - low) / bins as f64;
    let mut count = vec![0usize; bins];
    let mut conf = vec![0.0; bins];
    let mut correct = vec![0usize; bins];
    for i in 0..probs.rows() {
        let row = probs.row(i);
        let c = probs.max_prob(i);
        let b = (((c - low) / width).floor().max(0.0) as usize).min(bins - 1);
        count[b] += 1;
        conf[b] += c;
        if argmax(row, truth.benign_class()) == truth.labels()[i] {
            correct[b] += 1;
        }
    }
    let total = probs.rows();
    let mut ece = 0.0;
    let bins = (0..bins)
        .map(|b| {
            let (mean_confidence, accuracy) = if count[b] > 0 {
                (conf[b] / count[b] as f64, correct[b] as f64 / count[b] as f64)
            } else {
                (0.0, 0.0)
            };
            if total > 0 {
                ece += count[b] as f64 / total as f64 * (accuracy - mean_confidence).abs();
            }
            CalibrationBin {
                lower: low + b as f64 * width,
                upper: low + (b + 1) as f64 * width,
                count: count[b],
                mean_confidence,
                accuracy,
            }
        })
        .collect();
    Ok(CalibrationReport { bins, total, ece })
}

/// Fractional ranks (1-based, ties averaged).
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation; `None` when either series is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some(sxy / (sxx * syy).sqrt()))
}

//! Multinomial logistic regression fitted by full-batch gradient descent.

use serde::{Deserialize, Serialize};

use super::{softmax_in_place, TrainTargets};
use crate::data::{FeatureMatrix, ProbabilityMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticParams {
    /// L2 penalty on the weights (bias unpenalised).
    pub l2: f64,
    pub class_balance: bool,
    pub max_iter: usize,
    /// Stop once the loss changes by less than this between iterations.
    pub tol: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            class_balance: false,
            max_iter: 5_000,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    dims: usize,
    num_classes: usize,
    /// `num_classes x dims`, row-major.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl LogisticModel {
    /// A model with explicit parameters.
    pub fn from_parameters(
        dims: usize,
        num_classes: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if weights.len() != dims * num_classes || bias.len() != num_classes {
            return Err(Error::LengthMismatch {
                left: weights.len() + bias.len(),
                right: dims * num_classes + num_classes,
            });
        }
        Ok(Self {
            dims,
            num_classes,
            weights,
            bias,
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub(crate) fn fit(
        params: &LogisticParams,
        features: &FeatureMatrix,
        targets: &TrainTargets,
    ) -> Result<Self> {
        let n = features.rows();
        let d = features.dims();
        let c = targets.num_classes();
        let dist = targets.to_distributions();
        let sw = targets.sample_weights(params.class_balance);
        let total_w: f64 = sw.iter().sum();
        if total_w <= 0.0 {
            return Err(Error::EmptyDataset);
        }
        let step = 1.0 / lipschitz_bound(features, &sw, total_w, params.l2);

        let mut model = Self {
            dims: d,
            num_classes: c,
            weights: vec![0.0; c * d],
            bias: vec![0.0; c],
        };
        let mut grad_w = vec![0.0; c * d];
        let mut grad_b = vec![0.0; c];
        let mut probs = vec![0.0; c];
        let mut prev_loss = f64::INFINITY;

        for _ in 0..params.max_iter {
            grad_w.iter_mut().for_each(|g| *g = 0.0);
            grad_b.iter_mut().for_each(|g| *g = 0.0);
            let mut loss = 0.0;
            for i in 0..n {
                let row = features.row(i);
                model.logits_into(row, &mut probs);
                softmax_in_place(&mut probs);
                let s = sw[i] / total_w;
                for k in 0..c {
                    let t = dist.row(i)[k];
                    if t > 0.0 {
                        loss -= s * t * probs[k].max(1e-300).ln();
                    }
                    let g = s * (probs[k] - t);
                    grad_b[k] += g;
                    row.add_scaled_to(g, &mut grad_w[k * d..(k + 1) * d]);
                }
            }
            loss += 0.5 * params.l2 * model.weights.iter().map(|w| w * w).sum::<f64>();
            if (prev_loss - loss).abs() < params.tol {
                break;
            }
            prev_loss = loss;
            for (w, g) in model.weights.iter_mut().zip(&grad_w) {
                *w -= step * (g + params.l2 * *w);
            }
            for (b, g) in model.bias.iter_mut().zip(&grad_b) {
                *b -= step * g;
            }
        }
        Ok(model)
    }

    fn logits_into(&self, row: crate::data::Row<'_>, out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = row.dot(&self.weights[k * self.dims..(k + 1) * self.dims]) + self.bias[k];
        }
    }

    pub(crate) fn predict_proba(&self, features: &FeatureMatrix) -> Result<ProbabilityMatrix> {
        let c = self.num_classes;
        let mut out = Vec::with_capacity(features.rows() * c);
        let mut buf = vec![0.0; c];
        for row in features.iter_rows() {
            self.logits_into(row, &mut buf);
            softmax_in_place(&mut buf);
            out.extend_from_slice(&buf);
        }
        ProbabilityMatrix::new(features.rows(), c, out)
    }
}

/// Upper bound on the curvature of the weighted softmax loss: half the top
/// eigenvalue of the weighted second-moment matrix of `[x, 1]`, estimated by
/// power iteration and padded by 10%, plus the L2 term.
fn lipschitz_bound(features: &FeatureMatrix, sw: &[f64], total_w: f64, l2: f64) -> f64 {
    let d = features.dims() + 1;
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut eig = 0.0;
    let mut next = vec![0.0; d];
    for _ in 0..50 {
        next.iter_mut().for_each(|x| *x = 0.0);
        for (i, row) in features.iter_rows().enumerate() {
            let proj = row.dot(&v[..d - 1]) + v[d - 1];
            let s = sw[i] / total_w * proj;
            row.add_scaled_to(s, &mut next[..d - 1]);
            next[d - 1] += s;
        }
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        eig = norm;
        for (a, b) in v.iter_mut().zip(&next) {
            *a = b / norm;
        }
    }
    0.5 * eig * 1.1 + l2 + 1e-12
}

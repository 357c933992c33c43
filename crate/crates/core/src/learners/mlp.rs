//! Feed-forward ReLU network with a softmax head, trained with Adam on
//! (possibly fractional) cross-entropy targets.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{softmax_in_place, TrainTargets};
use crate::data::{FeatureMatrix, ProbabilityMatrix, Row};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpParams {
    pub hidden_layers: Vec<usize>,
    pub learning_rate: f64,
    pub dropout: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub class_balance: bool,
    /// Fraction of `epochs` run when fine-tuning on a new period.
    pub fine_tune_fraction: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden_layers: vec![100, 100],
            learning_rate: 1e-3,
            dropout: 0.0,
            batch_size: 64,
            epochs: 30,
            class_balance: false,
            fine_tune_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Layer {
    inputs: usize,
    outputs: usize,
    /// `outputs x inputs`, row-major.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Layer {
    fn init(inputs: usize, outputs: usize, rng: &mut rng::Rng) -> Self {
        let bound = 1.0 / (inputs.max(1) as f64).sqrt();
        let weights = (0..inputs * outputs)
            .map(|_| rng.random_range(-bound..=bound))
            .collect();
        let bias = (0..outputs).map(|_| rng.random_range(-bound..=bound)).collect();
        Self {
            inputs,
            outputs,
            weights,
            bias,
        }
    }

    fn forward_dense(&self, x: &[f64], out: &mut [f64]) {
        for (o, (w, b)) in out
            .iter_mut()
            .zip(self.weights.chunks(self.inputs).zip(&self.bias))
        {
            *o = b + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    fn forward_row(&self, x: Row<'_>, out: &mut [f64]) {
        for (o, (w, b)) in out
            .iter_mut()
            .zip(self.weights.chunks(self.inputs).zip(&self.bias))
        {
            *o = b + x.dot(w);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    dims: usize,
    num_classes: usize,
    layers: Vec<Layer>,
}

/// Adam moment estimates, one slot per parameter of each layer.
struct Adam {
    m: Vec<(Vec<f64>, Vec<f64>)>,
    v: Vec<(Vec<f64>, Vec<f64>)>,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

impl Adam {
    fn new(layers: &[Layer]) -> Self {
        let zeros = |l: &Layer| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]);
        Self {
            m: layers.iter().map(zeros).collect(),
            v: layers.iter().map(zeros).collect(),
            t: 0,
        }
    }

    fn step(&mut self, layers: &mut [Layer], grads: &[(Vec<f64>, Vec<f64>)], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        for (li, layer) in layers.iter_mut().enumerate() {
            let (gw, gb) = &grads[li];
            let (mw, mb) = &mut self.m[li];
            let (vw, vb) = &mut self.v[li];
            update(&mut layer.weights, gw, mw, vw, lr, c1, c2);
            update(&mut layer.bias, gb, mb, vb, lr, c1, c2);
        }
    }
}

fn update(p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], lr: f64, c1: f64, c2: f64) {
    for i in 0..p.len() {
        m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
        v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
        p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + EPS);
    }
}

impl MlpModel {
    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub(crate) fn fit(
        params: &MlpParams,
        features: &FeatureMatrix,
        targets: &TrainTargets,
        seed: u64,
    ) -> Result<Self> {
        if params.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        let mut init_rng = rng::stream(seed, 0);
        let mut widths = vec![features.dims()];
        widths.extend(params.hidden_layers.iter().copied());
        widths.push(targets.num_classes());
        let layers = widths
            .windows(2)
            .map(|w| Layer::init(w[0], w[1], &mut init_rng))
            .collect();
        let model = Self {
            dims: features.dims(),
            num_classes: targets.num_classes(),
            layers,
        };
        model.train_more(params, features, targets, params.epochs, seed)
    }

    /// Runs `epochs` more epochs of mini-batch Adam from the current weights
    /// with a fresh optimiser state.
    pub(crate) fn train_more(
        &self,
        params: &MlpParams,
        features: &FeatureMatrix,
        targets: &TrainTargets,
        epochs: usize,
        seed: u64,
    ) -> Result<Self> {
        if targets.num_classes() != self.num_classes {
            return Err(Error::ClassCountMismatch {
                index: 0,
                expected: self.num_classes,
                found: targets.num_classes(),
            });
        }
        let mut model = self.clone();
        if epochs == 0 {
            return Ok(model);
        }
        let dist = targets.to_distributions();
        let sw = targets.sample_weights(params.class_balance);
        let mut adam = Adam::new(&model.layers);
        let mut order: Vec<usize> = (0..features.rows()).collect();
        let mut rng = rng::stream(seed, 1);
        let mut grads: Vec<(Vec<f64>, Vec<f64>)> = model
            .layers
            .iter()
            .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]))
            .collect();
        let mut scratch = Scratch::new(&model.layers);
        let batch = params.batch_size.max(1);
        for _ in 0..epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(batch) {
                for (gw, gb) in grads.iter_mut() {
                    gw.iter_mut().for_each(|g| *g = 0.0);
                    gb.iter_mut().for_each(|g| *g = 0.0);
                }
                let scale = 1.0 / chunk.len() as f64;
                for &i in chunk {
                    model.backprop(
                        features.row(i),
                        dist.row(i),
                        sw[i] * scale,
                        params.dropout,
                        &mut rng,
                        &mut scratch,
                        &mut grads,
                    );
                }
                adam.step(&mut model.layers, &grads, params.learning_rate);
            }
        }
        Ok(model)
    }

    #[allow(clippy::too_many_arguments)]
    fn backprop(
        &self,
        x: Row<'_>,
        target: &[f64],
        weight: f64,
        dropout: f64,
        rng: &mut rng::Rng,
        s: &mut Scratch,
        grads: &mut [(Vec<f64>, Vec<f64>)],
    ) {
        let depth = self.layers.len();
        let keep = 1.0 - dropout;
        // Forward pass, storing post-activation outputs and dropout masks.
        for l in 0..depth {
            let (before, after) = s.acts.split_at_mut(l);
            let out = &mut after[0];
            if l == 0 {
                self.layers[0].forward_row(x, out);
            } else {
                self.layers[l].forward_dense(&before[l - 1], out);
            }
            if l + 1 < depth {
                for (o, m) in out.iter_mut().zip(s.masks[l].iter_mut()) {
                    *m = if dropout > 0.0 {
                        if rng.random::<f64>() < keep {
                            1.0 / keep
                        } else {
                            0.0
                        }
                    } else {
                        1.0
                    };
                    *o = o.max(0.0) * *m;
                }
            }
        }
        softmax_in_place(&mut s.acts[depth - 1]);

        // Output delta for softmax + cross-entropy with a distribution target.
        let mut delta: Vec<f64> = s.acts[depth - 1]
            .iter()
            .zip(target)
            .map(|(p, t)| weight * (p - t))
            .collect();
        for l in (0..depth).rev() {
            let layer = &self.layers[l];
            let (gw, gb) = &mut grads[l];
            for (o, &dv) in delta.iter().enumerate() {
                if dv == 0.0 {
                    continue;
                }
                gb[o] += dv;
                let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                if l == 0 {
                    x.add_scaled_to(dv, row);
                } else {
                    for (g, a) in row.iter_mut().zip(&s.acts[l - 1]) {
                        *g += dv * a;
                    }
                }
            }
            if l == 0 {
                break;
            }
            let mut prev = vec![0.0; layer.inputs];
            for (o, &dv) in delta.iter().enumerate() {
                if dv == 0.0 {
                    continue;
                }
                let w = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (p, wv) in prev.iter_mut().zip(w) {
                    *p += dv * wv;
                }
            }
            // Through dropout and ReLU of layer l - 1.
            for (j, p) in prev.iter_mut().enumerate() {
                if s.acts[l - 1][j] <= 0.0 {
                    *p = 0.0;
                } else {
                    *p *= s.masks[l - 1][j];
                }
            }
            delta = prev;
        }
    }

    /// Evaluation-mode activations of every layer for one row; the last
    /// entry holds the class probabilities.
    fn forward_eval(&self, x: Row<'_>, s: &mut Scratch) {
        let depth = self.layers.len();
        for l in 0..depth {
            let (before, after) = s.acts.split_at_mut(l);
            let out = &mut after[0];
            if l == 0 {
                self.layers[0].forward_row(x, out);
            } else {
                self.layers[l].forward_dense(&before[l - 1], out);
            }
            if l + 1 < depth {
                out.iter_mut().for_each(|o| *o = o.max(0.0));
            }
        }
        softmax_in_place(&mut s.acts[depth - 1]);
    }

    pub(crate) fn predict_proba(&self, features: &FeatureMatrix) -> Result<ProbabilityMatrix> {
        let mut s = Scratch::new(&self.layers);
        let mut out = Vec::with_capacity(features.rows() * self.num_classes);
        for row in features.iter_rows() {
            self.forward_eval(row, &mut s);
            out.extend_from_slice(&s.acts[self.layers.len() - 1]);
        }
        ProbabilityMatrix::new(features.rows(), self.num_classes, out)
    }

    /// Activations of the last hidden layer (the input itself when the
    /// network has no hidden layer).
    pub(crate) fn embed(&self, features: &FeatureMatrix) -> Result<FeatureMatrix> {
        let depth = self.layers.len();
        if depth < 2 {
            return Ok(features.to_dense());
        }
        let width = self.layers[depth - 2].outputs;
        let mut s = Scratch::new(&self.layers);
        let mut out = Vec::with_capacity(features.rows() * width);
        for row in features.iter_rows() {
            self.forward_eval(row, &mut s);
            out.extend_from_slice(&s.acts[depth - 2]);
        }
        FeatureMatrix::dense(features.rows(), width, out)
    }
}

struct Scratch {
    acts: Vec<Vec<f64>>,
    masks: Vec<Vec<f64>>,
}

impl Scratch {
    fn new(layers: &[Layer]) -> Self {
        Self {
            acts: layers.iter().map(|l| vec![0.0; l.outputs]).collect(),
            masks: layers.iter().map(|l| vec![1.0; l.outputs]).collect(),
        }
    }
}

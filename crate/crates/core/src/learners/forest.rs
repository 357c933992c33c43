//! Random forest of CART trees. Class probability is the fraction of trees
//! voting for the class.

use rand::seq::index::sample;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::TrainTargets;
use crate::data::{FeatureMatrix, LabelVector, ProbabilityMatrix};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitCriterion {
    Gini,
    Entropy,
    /// Same impurity as `Entropy`; kept as a separate name for parity with
    /// common tooling.
    LogLoss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub criterion: SplitCriterion,
    pub class_balance: bool,
    pub min_samples_split: usize,
    /// Features tried per split; `None` means `sqrt(dims)`.
    pub max_features: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_estimators: 64,
            max_depth: 32,
            criterion: SplitCriterion::Gini,
            class_balance: false,
            min_samples_split: 2,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        class: u32,
    },
}

/// A single classification tree; `x[feature] <= threshold` goes left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    /// A stump that always predicts `class`.
    pub fn constant(class: usize) -> Self {
        Self {
            nodes: vec![Node::Leaf {
                class: class as u32,
            }],
        }
    }

    fn predict_row(&self, row: crate::data::Row<'_>) -> usize {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { class } => return *class as usize,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row.get(*feature as usize) <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + go(nodes, *left as usize).max(go(nodes, *right as usize))
                }
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    dims: usize,
    num_classes: usize,
    trees: Vec<DecisionTree>,
}

impl ForestModel {
    pub fn from_trees(dims: usize, num_classes: usize, trees: Vec<DecisionTree>) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::Config("a forest needs at least one tree".into()));
        }
        Ok(Self {
            dims,
            num_classes,
            trees,
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub(crate) fn fit(
        params: &ForestParams,
        features: &FeatureMatrix,
        labels: &LabelVector,
        seed: u64,
    ) -> Result<Self> {
        if params.n_estimators == 0 {
            return Err(Error::Config("n_estimators must be positive".into()));
        }
        let d = features.dims();
        let class_w = TrainTargets::Hard(labels.clone()).sample_weights(params.class_balance);
        let mtry = params
            .max_features
            .unwrap_or_else(|| (d as f64).sqrt().round() as usize)
            .clamp(1, d.max(1));
        let builder = TreeBuilder {
            features,
            labels: labels.labels(),
            weights: &class_w,
            num_classes: labels.num_classes(),
            params,
            mtry,
        };
        let trees = (0..params.n_estimators)
            .into_par_iter()
            .map(|t| builder.build(&mut rng::stream(seed, t as u64)))
            .collect();
        Ok(Self {
            dims: d,
            num_classes: labels.num_classes(),
            trees,
        })
    }

    pub(crate) fn predict_proba(&self, features: &FeatureMatrix) -> Result<ProbabilityMatrix> {
        let c = self.num_classes;
        let n_trees = self.trees.len() as f64;
        let mut out = vec![0.0; features.rows() * c];
        for (i, row) in features.iter_rows().enumerate() {
            let votes = &mut out[i * c..(i + 1) * c];
            for tree in &self.trees {
                votes[tree.predict_row(row)] += 1.0;
            }
            for v in votes.iter_mut() {
                *v /= n_trees;
            }
        }
        ProbabilityMatrix::new(features.rows(), c, out)
    }
}

struct TreeBuilder<'a> {
    features: &'a FeatureMatrix,
    labels: &'a [usize],
    weights: &'a [f64],
    num_classes: usize,
    params: &'a ForestParams,
    mtry: usize,
}

impl TreeBuilder<'_> {
    fn build(&self, rng: &mut rng::Rng) -> DecisionTree {
        let n = self.labels.len();
        // Bootstrap: multiplicity of each row becomes part of its weight.
        let mut mult = vec![0u32; n];
        for _ in 0..n {
            mult[rng.random_range(0..n)] += 1;
        }
        let rows: Vec<(usize, f64)> = (0..n)
            .filter(|&i| mult[i] > 0)
            .map(|i| (i, mult[i] as f64 * self.weights[i]))
            .collect();
        let mut nodes = Vec::new();
        self.grow(rows, 0, rng, &mut nodes);
        DecisionTree { nodes }
    }

    fn class_mass(&self, rows: &[(usize, f64)]) -> Vec<f64> {
        let mut mass = vec![0.0; self.num_classes];
        for &(i, w) in rows {
            mass[self.labels[i]] += w;
        }
        mass
    }

    fn grow(
        &self,
        rows: Vec<(usize, f64)>,
        depth: usize,
        rng: &mut rng::Rng,
        nodes: &mut Vec<Node>,
    ) -> u32 {
        let id = nodes.len() as u32;
        let mass = self.class_mass(&rows);
        let majority = majority(&mass);
        let pure = mass.iter().filter(|&&m| m > 0.0).count() <= 1;
        if pure || depth >= self.params.max_depth || rows.len() < self.params.min_samples_split {
            nodes.push(Node::Leaf {
                class: majority as u32,
            });
            return id;
        }
        let Some((feature, threshold)) = self.best_split(&rows, &mass, rng) else {
            nodes.push(Node::Leaf {
                class: majority as u32,
            });
            return id;
        };
        nodes.push(Node::Leaf { class: 0 });
        let (left_rows, right_rows): (Vec<_>, Vec<_>) = rows
            .into_iter()
            .partition(|&(i, _)| self.features.get(i, feature) <= threshold);
        let left = self.grow(left_rows, depth + 1, rng, nodes);
        let right = self.grow(right_rows, depth + 1, rng, nodes);
        nodes[id as usize] = Node::Split {
            feature: feature as u32,
            threshold,
            left,
            right,
        };
        id
    }

    fn best_split(
        &self,
        rows: &[(usize, f64)],
        mass: &[f64],
        rng: &mut rng::Rng,
    ) -> Option<(usize, f64)> {
        let d = self.features.dims();
        let total: f64 = mass.iter().sum();
        let parent = impurity(self.params.criterion, mass, total);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut col: Vec<(f64, usize, f64)> = Vec::with_capacity(rows.len());
        let candidates = sample(rng, d, self.mtry.min(d));
        for feature in candidates.iter() {
            col.clear();
            col.extend(
                rows.iter()
                    .map(|&(i, w)| (self.features.get(i, feature), self.labels[i], w)),
            );
            col.sort_by(|a, b| a.0.total_cmp(&b.0));
            if col[0].0 == col[col.len() - 1].0 {
                continue;
            }
            let mut left = vec![0.0; self.num_classes];
            let mut left_total = 0.0;
            for k in 0..col.len() - 1 {
                let (v, c, w) = col[k];
                left[c] += w;
                left_total += w;
                let next = col[k + 1].0;
                if next == v {
                    continue;
                }
                let right: Vec<f64> = mass.iter().zip(&left).map(|(m, l)| m - l).collect();
                let right_total = total - left_total;
                let child = (left_total * impurity(self.params.criterion, &left, left_total)
                    + right_total * impurity(self.params.criterion, &right, right_total))
                    / total;
                let gain = parent - child;
                if gain > 1e-12 && best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, feature, v + (next - v) / 2.0));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

fn majority(mass: &[f64]) -> usize {
    let mut best = 0;
    for (k, &m) in mass.iter().enumerate() {
        if m > mass[best] {
            best = k;
        }
    }
    best
}

fn impurity(criterion: SplitCriterion, mass: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    match criterion {
        SplitCriterion::Gini => 1.0 - mass.iter().map(|m| (m / total).powi(2)).sum::<f64>(),
        SplitCriterion::Entropy | SplitCriterion::LogLoss => mass
            .iter()
            .filter(|&&m| m > 0.0)
            .map(|&m| {
                let p = m / total;
                -p * p.log2()
            })
            .sum(),
    }
}

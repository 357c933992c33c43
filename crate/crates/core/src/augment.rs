//! Label-consistent feature masking and mixup.
//!
//! Masking replaces each feature, with probability `p_a`, by a value drawn
//! uniformly from that feature's observed values among samples of the same
//! class. After initial training, an augmented sample is kept only if the
//! current model still predicts its carried label.
//!
//! Mixup interpolates a sample with a random partner using a coefficient
//! `c ~ Beta(alpha, alpha)`; targets are mixed the same way, or, for learners
//! without fractional-target support, taken from the parent with the larger
//! coefficient.

use rand::Rng as _;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{FeatureMatrix, LabelVector, LabeledDataset, ProbabilityMatrix, Row, StorageKind};
use crate::error::{Error, Result};
use crate::learners::{Learner, TrainTargets};
use crate::pseudo_label::in_range;
use crate::rng;

/// What the masking probability `p_a` governs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskConvention {
    /// `p_a` is the per-feature replacement probability.
    #[default]
    Replace,
    /// `p_a` is the per-feature keep probability.
    Keep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub p_a: f64,
    pub consistency_check: bool,
    pub convention: MaskConvention,
}

impl AugmentConfig {
    pub fn new(p_a: f64, consistency_check: bool) -> Result<Self> {
        in_range("p_a", p_a, 0.0, 1.0)?;
        Ok(Self {
            p_a,
            consistency_check,
            convention: MaskConvention::Replace,
        })
    }

    fn replace_probability(&self) -> f64 {
        match self.convention {
            MaskConvention::Replace => self.p_a,
            MaskConvention::Keep => 1.0 - self.p_a,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum ClassPool {
    Empty,
    /// Column-major values: feature `i` occupies `values[i * rows..(i + 1) * rows]`.
    Dense { rows: usize, values: Vec<f64> },
    /// Binary columns summarised by how many of `rows` samples have a 1.
    Binary { rows: usize, ones: Vec<u32> },
}

/// Per-class, per-feature pools of observed values.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalIndex {
    dims: usize,
    pools: Vec<ClassPool>,
}

impl MarginalIndex {
    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn num_classes(&self) -> usize {
        self.pools.len()
    }

    pub fn is_empty_class(&self, class: usize) -> bool {
        matches!(self.pools.get(class), None | Some(ClassPool::Empty))
    }

    /// The multiset of values feature `feature` takes among `class` rows,
    /// in source-row order (binary pools list their ones first).
    pub fn pool(&self, class: usize, feature: usize) -> Vec<f64> {
        match &self.pools[class] {
            ClassPool::Empty => Vec::new(),
            ClassPool::Dense { rows, values } => values[feature * rows..(feature + 1) * rows].to_vec(),
            ClassPool::Binary { rows, ones } => {
                let k = ones[feature] as usize;
                let mut v = vec![1.0; k];
                v.resize(*rows, 0.0);
                v
            }
        }
    }

    fn draw(&self, class: usize, feature: usize, r: &mut rng::Rng) -> f64 {
        match &self.pools[class] {
            ClassPool::Empty => unreachable!("checked by caller"),
            ClassPool::Dense { rows, values } => values[feature * rows + r.random_range(0..*rows)],
            ClassPool::Binary { rows, ones } => {
                if r.random_range(0..*rows) < ones[feature] as usize {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Collects the per-class column multisets of `data`.
pub fn build_marginal_index(data: &LabeledDataset) -> Result<MarginalIndex> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let d = data.dims();
    let labels = data.labels().labels();
    let mut pools = Vec::with_capacity(data.num_classes());
    for class in 0..data.num_classes() {
        let rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if rows.is_empty() {
            pools.push(ClassPool::Empty);
            continue;
        }
        let f = data.features();
        let pool = match f.storage_kind() {
            StorageKind::SparseBinary => {
                let mut ones = vec![0u32; d];
                for &i in &rows {
                    if let Row::Sparse(idx) = f.row(i) {
                        for &j in idx {
                            ones[j as usize] += 1;
                        }
                    }
                }
                ClassPool::Binary {
                    rows: rows.len(),
                    ones,
                }
            }
            StorageKind::Dense => {
                let n = rows.len();
                let mut values = vec![0.0; d * n];
                for (k, &i) in rows.iter().enumerate() {
                    if let Row::Dense(v) = f.row(i) {
                        for (j, &x) in v.iter().enumerate() {
                            values[j * n + k] = x;
                        }
                    }
                }
                ClassPool::Dense { rows: n, values }
            }
        };
        pools.push(pool);
    }
    Ok(MarginalIndex { dims: d, pools })
}

/// Masks `x`: every feature is independently replaced, with the configured
/// probability, by a draw from the same-class pool.
pub fn augment_sample(
    x: &[f64],
    class: usize,
    index: &MarginalIndex,
    cfg: &AugmentConfig,
    r: &mut rng::Rng,
) -> Result<Vec<f64>> {
    check_pool(index, class, x.len())?;
    let p = cfg.replace_probability();
    Ok(x.iter()
        .enumerate()
        .map(|(j, &v)| {
            if r.random::<f64>() < p {
                index.draw(class, j, r)
            } else {
                v
            }
        })
        .collect())
}

/// [`augment_sample`] for sparse-binary rows; returns the set columns.
fn augment_sparse(
    x: &[u32],
    class: usize,
    index: &MarginalIndex,
    p: f64,
    r: &mut rng::Rng,
) -> Vec<u32> {
    let mut out = Vec::with_capacity(x.len());
    let mut next = 0;
    for j in 0..index.dims {
        let present = next < x.len() && x[next] as usize == j;
        if present {
            next += 1;
        }
        let value = if r.random::<f64>() < p {
            index.draw(class, j, r) == 1.0
        } else {
            present
        };
        if value {
            out.push(j as u32);
        }
    }
    out
}

fn check_pool(index: &MarginalIndex, class: usize, dims: usize) -> Result<()> {
    if dims != index.dims {
        return Err(Error::DimensionMismatch {
            index: 0,
            expected: index.dims,
            found: dims,
        });
    }
    if index.is_empty_class(class) {
        return Err(Error::EmptyPool(class));
    }
    Ok(())
}

/// Keeps the candidates whose predicted class equals their label.
pub fn consistency_filter(model: &Learner, candidates: &LabeledDataset) -> Result<LabeledDataset> {
    if !model.is_trained() {
        return Err(Error::NotTrained);
    }
    if candidates.is_empty() {
        return Ok(candidates.clone());
    }
    let benign = candidates.labels().benign_class();
    let preds = model.predict(candidates.features(), benign)?;
    let keep: Vec<usize> = preds
        .iter()
        .zip(candidates.labels().labels())
        .enumerate()
        .filter(|(_, (p, l))| p == l)
        .map(|(i, _)| i)
        .collect();
    Ok(candidates.select(&keep))
}

/// One augmented candidate per row of `data`, replacing from `data`'s own
/// per-class pools. Row `k` draws from stream `k` of `seed`, so the result
/// does not depend on scheduling.
pub fn make_augmented_set(
    data: &LabeledDataset,
    model: Option<&Learner>,
    cfg: &AugmentConfig,
    seed: u64,
) -> Result<LabeledDataset> {
    if data.is_empty() {
        return Ok(data.clone());
    }
    let index = build_marginal_index(data)?;
    let features = augment_rows(data, &index, cfg, seed)?;
    let candidates = LabeledDataset::new(features, data.labels().clone())?;
    match model {
        Some(m) if cfg.consistency_check => consistency_filter(m, &candidates),
        _ => Ok(candidates),
    }
}

fn augment_rows(
    data: &LabeledDataset,
    index: &MarginalIndex,
    cfg: &AugmentConfig,
    seed: u64,
) -> Result<FeatureMatrix> {
    let f = data.features();
    let labels = data.labels().labels();
    let d = f.dims();
    match f.storage_kind() {
        StorageKind::Dense => {
            let rows = (0..f.rows())
                .into_par_iter()
                .map(|k| {
                    let mut r = rng::stream(seed, k as u64);
                    let Row::Dense(x) = f.row(k) else { unreachable!() };
                    augment_sample(x, labels[k], index, cfg, &mut r)
                })
                .collect::<Result<Vec<_>>>()?;
            FeatureMatrix::dense(rows.len(), d, rows.concat())
        }
        StorageKind::SparseBinary => {
            let p = cfg.replace_probability();
            let rows = (0..f.rows())
                .into_par_iter()
                .map(|k| {
                    check_pool(index, labels[k], d)?;
                    let mut r = rng::stream(seed, k as u64);
                    let Row::Sparse(x) = f.row(k) else { unreachable!() };
                    Ok(augment_sparse(x, labels[k], index, p, &mut r))
                })
                .collect::<Result<Vec<_>>>()?;
            FeatureMatrix::sparse_binary(d, rows)
        }
    }
}

/// Among rows `model` classifies correctly, the fraction whose prediction
/// becomes wrong after masking with `cfg` (no consistency filter).
pub fn label_flip_rate(
    model: &Learner,
    data: &LabeledDataset,
    cfg: &AugmentConfig,
    seed: u64,
) -> Result<f64> {
    let benign = data.labels().benign_class();
    let preds = model.predict(data.features(), benign)?;
    let correct: Vec<usize> = (0..data.len())
        .filter(|&i| preds[i] == data.labels().labels()[i])
        .collect();
    if correct.is_empty() {
        return Ok(0.0);
    }
    let index = build_marginal_index(data)?;
    let subset = data.select(&correct);
    let augmented = augment_rows(&subset, &index, cfg, seed)?;
    let after = model.predict(&augmented, benign)?;
    let flipped = after
        .iter()
        .zip(subset.labels().labels())
        .filter(|(a, l)| a != l)
        .count();
    Ok(flipped as f64 / correct.len() as f64)
}

/// How mixed samples are labeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixLabelMode {
    Fractional,
    /// Label of the parent with the larger coefficient; 0.5 goes to the
    /// first parent.
    Hard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixupConfig {
    pub alpha: f64,
    pub label_mode: MixLabelMode,
}

/// Below this `alpha` the coefficient is pinned to 1 (no mixing).
pub const MIN_ALPHA: f64 = 1e-9;

impl MixupConfig {
    pub fn new(alpha: f64, label_mode: MixLabelMode) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::OutOfRange {
                name: "alpha",
                value: alpha,
                low: 0.0,
                high: f64::INFINITY,
            });
        }
        Ok(Self { alpha, label_mode })
    }
}

/// Draws `c ~ Beta(alpha, alpha)` as `G1 / (G1 + G2)` with `G ~ Gamma(alpha)`.
/// The gammas are sampled in log space (`G(a) = G(a + 1) * U^(1/a)`) so tiny
/// shapes do not underflow to `0 / 0`.
pub fn sample_mix_coefficient(alpha: f64, r: &mut rng::Rng) -> f64 {
    if alpha < MIN_ALPHA {
        return 1.0;
    }
    let gamma = Gamma::new(alpha + 1.0, 1.0).expect("positive shape");
    let mut log_gamma = || {
        let g: f64 = gamma.sample(r);
        let u: f64 = 1.0 - r.random::<f64>();
        g.ln() + u.ln() / alpha
    };
    let l1 = log_gamma();
    let l2 = log_gamma();
    1.0 / (1.0 + (l2 - l1).exp())
}

/// Target row of a mixed sample.
#[derive(Debug, Clone, PartialEq)]
pub enum MixTarget {
    Fractional(Vec<f64>),
    Hard(usize),
}

/// `c * x_i + (1 - c) * x_j` with the matching target.
pub fn mix_with_coefficient(
    (x_i, y_i): (&[f64], usize),
    (x_j, y_j): (&[f64], usize),
    c: f64,
    num_classes: usize,
    mode: MixLabelMode,
) -> Result<(Vec<f64>, MixTarget)> {
    if x_i.len() != x_j.len() {
        return Err(Error::DimensionMismatch {
            index: 1,
            expected: x_i.len(),
            found: x_j.len(),
        });
    }
    let features = x_i
        .iter()
        .zip(x_j)
        .map(|(a, b)| c * a + (1.0 - c) * b)
        .collect();
    let target = match mode {
        MixLabelMode::Fractional => {
            let mut t = vec![0.0; num_classes];
            t[y_i] += c;
            t[y_j] += 1.0 - c;
            MixTarget::Fractional(t)
        }
        MixLabelMode::Hard => MixTarget::Hard(if c >= 0.5 { y_i } else { y_j }),
    };
    Ok((features, target))
}

/// Mixes one pair with a freshly drawn coefficient.
pub fn mixup_pair(
    first: (&[f64], usize),
    second: (&[f64], usize),
    num_classes: usize,
    cfg: &MixupConfig,
    r: &mut rng::Rng,
) -> Result<(Vec<f64>, MixTarget)> {
    let c = sample_mix_coefficient(cfg.alpha, r);
    mix_with_coefficient(first, second, c, num_classes, cfg.label_mode)
}

/// Mixes every row with a partner drawn uniformly from the other rows.
pub fn make_mixup_set(
    data: &LabeledDataset,
    cfg: &MixupConfig,
    seed: u64,
) -> Result<(FeatureMatrix, TrainTargets)> {
    let n = data.len();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, found: n });
    }
    let f = data.features();
    let d = f.dims();
    let labels = data.labels();
    let c = labels.num_classes();
    let mixed = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::stream(seed, k as u64);
            let mut j = r.random_range(0..n - 1);
            if j >= k {
                j += 1;
            }
            let xi = f.row(k).to_dense(d);
            let xj = f.row(j).to_dense(d);
            mixup_pair(
                (&xi, labels.labels()[k]),
                (&xj, labels.labels()[j]),
                c,
                cfg,
                &mut r,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut values = Vec::with_capacity(n * d);
    let mut soft = Vec::new();
    let mut hard = Vec::new();
    for (x, t) in mixed {
        values.extend(x);
        match t {
            MixTarget::Fractional(row) => soft.extend(row),
            MixTarget::Hard(l) => hard.push(l),
        }
    }
    let features = FeatureMatrix::dense(n, d, values)?;
    let targets = match cfg.label_mode {
        MixLabelMode::Fractional => TrainTargets::Fractional(ProbabilityMatrix::new(n, c, soft)?),
        MixLabelMode::Hard => TrainTargets::Hard(LabelVector::new(hard, c, labels.benign_class())?),
    };
    Ok((features, targets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{LearnerSpec, LogisticParams};
    use crate::synthetic::two_blobs;
    use proptest::prelude::*;

    fn paper_example() -> LabeledDataset {
        let rows = vec![
            vec![0.0, 1.0, 0.0],
            vec![1.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.0, 1.0, 1.0],
        ];
        LabeledDataset::new(
            FeatureMatrix::from_rows(3, &rows).unwrap(),
            LabelVector::binary(vec![1; 4]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn pools_match_worked_example() {
        let idx = build_marginal_index(&paper_example()).unwrap();
        assert_eq!(idx.pool(1, 1), vec![1.0, 1.0, 0.0, 1.0]);
        assert!(idx.is_empty_class(0));
        let sparse = LabeledDataset::new(
            FeatureMatrix::sparse_binary(3, vec![vec![1], vec![0, 1], vec![2], vec![1, 2]]).unwrap(),
            LabelVector::binary(vec![1; 4]).unwrap(),
        )
        .unwrap();
        let sidx = build_marginal_index(&sparse).unwrap();
        let mut a = sidx.pool(1, 1);
        let mut b = idx.pool(1, 1);
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a, b);
    }

    #[test]
    fn singleton_and_disjoint_classes() {
        let d = LabeledDataset::new(
            FeatureMatrix::from_rows(2, &[vec![3.0, 4.0], vec![-1.0, 9.0], vec![-2.0, 8.0]]).unwrap(),
            LabelVector::binary(vec![0, 1, 1]).unwrap(),
        )
        .unwrap();
        let idx = build_marginal_index(&d).unwrap();
        assert_eq!(idx.pool(0, 0), vec![3.0]);
        assert_eq!(idx.pool(0, 1), vec![4.0]);
        assert_eq!(idx.pool(1, 0), vec![-1.0, -2.0]);
        assert_eq!(idx.pool(1, 1), vec![9.0, 8.0]);
    }

    #[test]
    fn augment_edge_cases() {
        let d = paper_example();
        let idx = build_marginal_index(&d).unwrap();
        let x = [0.0, 1.0, 0.0];
        let mut r = rng::stream(0, 0);
        let same = augment_sample(&x, 1, &idx, &AugmentConfig::new(0.0, false).unwrap(), &mut r).unwrap();
        assert_eq!(same, x);
        let all = AugmentConfig::new(1.0, false).unwrap();
        for _ in 0..50 {
            let y = augment_sample(&x, 1, &idx, &all, &mut r).unwrap();
            for (j, v) in y.iter().enumerate() {
                assert!(idx.pool(1, j).contains(v));
            }
        }
        assert!(matches!(
            augment_sample(&x, 0, &idx, &all, &mut r),
            Err(Error::EmptyPool(0))
        ));
        let constant = LabeledDataset::new(
            FeatureMatrix::from_rows(2, &[vec![5.0, 1.0], vec![5.0, 2.0]]).unwrap(),
            LabelVector::binary(vec![0, 0]).unwrap(),
        )
        .unwrap();
        let cidx = build_marginal_index(&constant).unwrap();
        for p in [0.0, 0.3, 1.0] {
            let y = augment_sample(&[5.0, 1.0], 0, &cidx, &AugmentConfig::new(p, false).unwrap(), &mut r).unwrap();
            assert_eq!(y[0], 5.0);
        }
    }

    #[test]
    fn keep_convention_inverts_probability() {
        let d = paper_example();
        let idx = build_marginal_index(&d).unwrap();
        let cfg = AugmentConfig {
            p_a: 1.0,
            consistency_check: false,
            convention: MaskConvention::Keep,
        };
        let mut r = rng::stream(1, 0);
        let x = [7.0, 7.0, 7.0];
        assert_eq!(augment_sample(&x, 1, &idx, &cfg, &mut r).unwrap(), x);
    }

    #[test]
    fn augmented_set_identity_and_determinism() {
        let d = two_blobs(30, 1.0, 0.5, 2);
        let out = make_augmented_set(&d, None, &AugmentConfig::new(0.0, false).unwrap(), 3).unwrap();
        assert_eq!(out, d);
        let cfg = AugmentConfig::new(0.2, false).unwrap();
        assert_eq!(
            make_augmented_set(&d, None, &cfg, 9).unwrap(),
            make_augmented_set(&d, None, &cfg, 9).unwrap()
        );
    }

    #[test]
    fn sparse_augmentation_stays_binary() {
        let d = LabeledDataset::new(
            FeatureMatrix::sparse_binary(6, vec![vec![0, 3], vec![1, 3, 5], vec![2], vec![0, 4]]).unwrap(),
            LabelVector::binary(vec![0, 0, 1, 1]).unwrap(),
        )
        .unwrap();
        let out = make_augmented_set(&d, None, &AugmentConfig::new(0.5, false).unwrap(), 1).unwrap();
        assert_eq!(out.features().storage_kind(), StorageKind::SparseBinary);
        let idx = build_marginal_index(&d).unwrap();
        for i in 0..out.len() {
            let class = out.labels().labels()[i];
            for j in 0..6 {
                assert!(idx.pool(class, j).contains(&out.features().get(i, j)));
            }
        }
        let same = make_augmented_set(&d, None, &AugmentConfig::new(0.0, false).unwrap(), 1).unwrap();
        assert_eq!(same, d);
    }

    /// Model that always predicts malware.
    fn always_malware(dims: usize) -> Learner {
        let mut bias = vec![0.0; 2];
        bias[1] = 10.0;
        Learner::from_logistic(
            LogisticParams::default(),
            crate::learners::LogisticModel::from_parameters(dims, 2, vec![0.0; 2 * dims], bias).unwrap(),
        )
    }

    #[test]
    fn consistency_filter_matches_row_by_row_oracle() {
        let d = two_blobs(250, 0.3, 1.0, 4);
        let model = Learner::new(LearnerSpec::Logistic(LogisticParams::default()))
            .fit(d.features(), &TrainTargets::Hard(d.labels().clone()), 0)
            .unwrap();
        let kept = consistency_filter(&model, &d).unwrap();
        let mut oracle = Vec::new();
        for i in 0..d.len() {
            let one = d.select(&[i]);
            let p = model.predict_proba(one.features()).unwrap();
            if crate::data::argmax(p.row(0), Some(0)) == d.labels().labels()[i] {
                oracle.push(i);
            }
        }
        assert_eq!(kept, d.select(&oracle));
        assert!(kept.len() < d.len() && !kept.is_empty());

        let benign_only = d.select(&(0..d.len()).filter(|i| i % 2 == 0).collect::<Vec<_>>());
        let out = make_augmented_set(&benign_only, Some(&always_malware(2)), &AugmentConfig::new(0.1, true).unwrap(), 0).unwrap();
        assert!(out.is_empty());
        let untrained = Learner::new(LearnerSpec::Logistic(LogisticParams::default()));
        assert!(matches!(consistency_filter(&untrained, &d), Err(Error::NotTrained)));
    }

    #[test]
    fn mix_examples() {
        let xi = [1.0, 2.0];
        let xj = [3.0, -4.0];
        let (f, t) = mix_with_coefficient((&xi, 1), (&xj, 0), 1.0, 2, MixLabelMode::Fractional).unwrap();
        assert_eq!(f, xi);
        assert_eq!(t, MixTarget::Fractional(vec![0.0, 1.0]));
        let (f, t) = mix_with_coefficient((&xi, 1), (&xj, 1), 0.5, 2, MixLabelMode::Fractional).unwrap();
        assert_eq!(f, vec![2.0, -1.0]);
        assert_eq!(t, MixTarget::Fractional(vec![0.0, 1.0]));
        let (_, t) = mix_with_coefficient((&xi, 1), (&xj, 0), 0.6, 2, MixLabelMode::Hard).unwrap();
        assert_eq!(t, MixTarget::Hard(1));
        let (_, t) = mix_with_coefficient((&xi, 1), (&xj, 0), 0.5, 2, MixLabelMode::Hard).unwrap();
        assert_eq!(t, MixTarget::Hard(1));
        let (_, t) = mix_with_coefficient((&xi, 1), (&xj, 0), 0.4, 2, MixLabelMode::Hard).unwrap();
        assert_eq!(t, MixTarget::Hard(0));
    }

    #[test]
    fn mixup_set_contracts() {
        let d = two_blobs(20, 1.0, 0.5, 1);
        let zero = MixupConfig::new(0.0, MixLabelMode::Fractional).unwrap();
        let (f, t) = make_mixup_set(&d, &zero, 0).unwrap();
        assert_eq!(&f, d.features());
        assert_eq!(t, TrainTargets::Fractional(ProbabilityMatrix::one_hot(d.labels())));

        let cfg = MixupConfig::new(0.2, MixLabelMode::Fractional).unwrap();
        let a = make_mixup_set(&d, &cfg, 5).unwrap();
        let b = make_mixup_set(&d, &cfg, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.0.rows(), d.len());

        let single = d.select(&[0]);
        assert!(matches!(make_mixup_set(&single, &cfg, 0), Err(Error::TooFewRows { .. })));
    }

    #[test]
    fn beta_draws_have_the_right_mean_and_spread() {
        let mut r = rng::stream(2, 0);
        for alpha in [0.05, 0.2, 1.0, 4.0] {
            let n = 20_000;
            let draws: Vec<f64> = (0..n).map(|_| sample_mix_coefficient(alpha, &mut r)).collect();
            assert!(draws.iter().all(|c| (0.0..=1.0).contains(c) && c.is_finite()));
            let mean = draws.iter().sum::<f64>() / n as f64;
            let var = draws.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n as f64;
            let expected_var = 1.0 / (4.0 * (2.0 * alpha + 1.0));
            assert!((mean - 0.5).abs() < 0.02, "alpha {alpha} mean {mean}");
            assert!((var - expected_var).abs() < 0.01, "alpha {alpha} var {var}");
        }
    }

    proptest! {
        #[test]
        fn mixed_features_stay_between_parents(
            xi in prop::collection::vec(-10.0f64..10.0, 4),
            xj in prop::collection::vec(-10.0f64..10.0, 4),
            yi in 0usize..3, yj in 0usize..3,
            seed in 0u64..1000,
        ) {
            let cfg = MixupConfig::new(0.2, MixLabelMode::Fractional).unwrap();
            let mut r = rng::stream(seed, 0);
            let (f, t) = mixup_pair((&xi, yi), (&xj, yj), 3, &cfg, &mut r).unwrap();
            for k in 0..4 {
                let (lo, hi) = (xi[k].min(xj[k]), xi[k].max(xj[k]));
                prop_assert!(f[k] >= lo - 1e-12 && f[k] <= hi + 1e-12);
            }
            let MixTarget::Fractional(t) = t else { unreachable!() };
            prop_assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn augmented_values_come_from_same_class_pool(seed in 0u64..500, p in 0.0f64..1.0) {
            let d = two_blobs(6, 1.0, 1.0, seed);
            let out = make_augmented_set(&d, None, &AugmentConfig::new(p, false).unwrap(), seed).unwrap();
            let idx = build_marginal_index(&d).unwrap();
            for i in 0..out.len() {
                let class = out.labels().labels()[i];
                for j in 0..2 {
                    prop_assert!(idx.pool(class, j).contains(&out.features().get(i, j)));
                }
            }
        }
    }
}

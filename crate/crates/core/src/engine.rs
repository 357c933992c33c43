//! The period loop.
//!
//! For every period of the stream the engine first records the predictions
//! of the model trained before that period (prequential evaluation), then
//! pseudo-labels the period with adaptive thresholds, augments and mixes the
//! merged set, and retrains. Ground-truth labels of stream periods are only
//! read for active-learning annotations and in oracle mode; every such read
//! is counted.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::augment::{make_augmented_set, make_mixup_set, AugmentConfig, MaskConvention, MixLabelMode, MixupConfig};
use crate::data::{concat, FeatureMatrix, LabelVector, LabeledDataset, ProbabilityMatrix, TemporalDataset};
use crate::error::{Error, Result};
use crate::learners::{retrain_policy, Learner, LearnerSpec, RetrainPolicy, TrainTargets};
use crate::pseudo_label::{class_means, in_range, select_binary, select_multiclass, AdaptiveState, PseudoLabelBatch, Thresholds};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Adapt,
    /// Retrain on ground truth for every period; no augmentation or mixup.
    Oracle,
    /// Never update after the initial fit.
    Offline,
    /// Fixed thresholds (`lambda = 0`), no augmentation or mixup.
    FixedThresholdBaseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptConfig {
    pub tau_b: f64,
    pub tau_m: f64,
    pub lambda: f64,
    pub p_a: f64,
    pub alpha: f64,
    pub mode: Mode,
    pub source_free: bool,
    /// Samples annotated per period; 0 disables active learning.
    pub active_budget: usize,
    pub seed: u64,
    pub adaptive_thresholds: bool,
    pub augmentation: bool,
    pub mixup: bool,
    pub chain_thresholds: bool,
    pub mask_convention: MaskConvention,
    /// `None` picks fractional targets when the learner supports them.
    pub mix_label_mode: Option<MixLabelMode>,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self {
            tau_b: 0.9,
            tau_m: 0.8,
            lambda: 0.2,
            p_a: 0.1,
            alpha: 0.1,
            mode: Mode::Adapt,
            source_free: false,
            active_budget: 0,
            seed: 0,
            adaptive_thresholds: true,
            augmentation: true,
            mixup: true,
            chain_thresholds: false,
            mask_convention: MaskConvention::Replace,
            mix_label_mode: None,
        }
    }
}

/// Hyperparameter ranges used for tuning; configs outside them are rejected
/// unless explicitly overridden.
pub const TAU_B_RANGE: (f64, f64) = (0.8, 0.99);
pub const TAU_M_RANGE: (f64, f64) = (0.6, 0.99);
pub const LAMBDA_RANGE: (f64, f64) = (0.0, 0.5);
pub const P_A_RANGE: (f64, f64) = (0.0, 0.2);
pub const ALPHA_RANGE: (f64, f64) = (0.0, 0.2);

impl AdaptConfig {
    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            tau_b: self.tau_b,
            tau_m: self.tau_m,
        }
    }

    /// Domain checks: probabilities in `[0.5, 1]`, weights in `[0, 1]`.
    pub fn validate(&self) -> Result<()> {
        self.thresholds().validate()?;
        in_range("lambda", self.lambda, 0.0, 1.0)?;
        in_range("p_a", self.p_a, 0.0, 1.0)?;
        MixupConfig::new(self.alpha, MixLabelMode::Fractional)?;
        Ok(())
    }

    /// Checks the tuning ranges on top of [`AdaptConfig::validate`].
    pub fn validate_tuning_ranges(&self) -> Result<()> {
        self.validate()?;
        for (name, v, (lo, hi)) in [
            ("tau_b", self.tau_b, TAU_B_RANGE),
            ("tau_m", self.tau_m, TAU_M_RANGE),
            ("lambda", self.lambda, LAMBDA_RANGE),
            ("p_a", self.p_a, P_A_RANGE),
            ("alpha", self.alpha, ALPHA_RANGE),
        ] {
            in_range(name, v, lo, hi)?;
        }
        Ok(())
    }

    fn effective_lambda(&self) -> f64 {
        match self.mode {
            Mode::Adapt if self.adaptive_thresholds => self.lambda,
            _ => 0.0,
        }
    }

    fn uses_augmentation(&self) -> bool {
        self.mode == Mode::Adapt && self.augmentation
    }

    fn uses_mixup(&self) -> bool {
        self.mode == Mode::Adapt && self.mixup
    }
}

/// Ground-truth labels revealed for a subset of a period's rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub indices: Vec<usize>,
    pub labels: LabelVector,
}

impl Annotation {
    pub fn empty(num_classes: usize, benign: Option<usize>) -> Result<Self> {
        Ok(Self {
            indices: Vec::new(),
            labels: LabelVector::new(Vec::new(), num_classes, benign)?,
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// The `k` rows with the lowest top-class probability, ties broken by lower
/// row index, returned in ascending row order.
pub fn active_select(probs: &ProbabilityMatrix, k: usize) -> Result<Vec<usize>> {
    if k > probs.rows() {
        return Err(Error::BudgetExceeded {
            requested: k,
            available: probs.rows(),
        });
    }
    let mut order: Vec<usize> = (0..probs.rows()).collect();
    order.sort_by(|&a, &b| probs.max_prob(a).total_cmp(&probs.max_prob(b)).then(a.cmp(&b)));
    let mut chosen = order[..k].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

/// `D_l ∪ annotated ∪ D_p`, or `annotated ∪ D_p` when source-free, in that
/// row order.
pub fn merge_labeled(
    labeled: &LabeledDataset,
    period: &FeatureMatrix,
    pseudo: &PseudoLabelBatch,
    annotated: &Annotation,
    source_free: bool,
) -> Result<LabeledDataset> {
    let mut seen = vec![false; period.rows()];
    for &i in annotated.indices.iter().chain(&pseudo.indices) {
        match seen.get_mut(i) {
            None => {
                return Err(Error::BudgetExceeded {
                    requested: i + 1,
                    available: period.rows(),
                })
            }
            Some(true) => return Err(Error::OverlappingIndices { index: i }),
            Some(s) => *s = true,
        }
    }
    let ann = LabeledDataset::new(period.select_rows(&annotated.indices), annotated.labels.clone())?;
    let pl = LabeledDataset::new(period.select_rows(&pseudo.indices), pseudo.labels.clone())?;
    let parts: Vec<&LabeledDataset> = if source_free {
        vec![&ann, &pl]
    } else {
        vec![labeled, &ann, &pl]
    };
    let merged = concat(&parts)?;
    if merged.is_empty() {
        return Err(Error::EmptyMerge);
    }
    Ok(merged)
}

/// Everything recorded for one stream period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub period_id: i64,
    /// Predictions of the model trained before this period.
    pub predictions: Vec<usize>,
    pub probabilities: ProbabilityMatrix,
    /// `(mu_m, mu_b)` when thresholds were adapted.
    pub class_means: Option<(f64, f64)>,
    pub thresholds: Thresholds,
    pub pseudo: PseudoLabelBatch,
    pub annotated: Vec<usize>,
    pub merged_rows: usize,
    pub augmented_candidates: usize,
    pub augmented_rows: usize,
    pub mixup_rows: usize,
    /// Ground-truth labeled rows available for training after this period.
    pub labeled_pool: usize,
    pub ground_truth_used: usize,
    /// False when the model was carried over unchanged.
    pub updated: bool,
    pub model_checksum: String,
    pub wall_ms: u64,
}

/// One line of the run manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodSummary {
    pub period_id: i64,
    pub model_checksum: String,
    pub pseudo_labeled: usize,
    pub augmented: usize,
    pub mixup: usize,
    pub tau_b: f64,
    pub tau_m: f64,
    pub annotated: usize,
    pub labeled_pool: usize,
    pub updated: bool,
    pub wall_ms: u64,
}

#[derive(Debug, Clone)]
pub struct AdaptRun {
    pub config: AdaptConfig,
    pub learner: LearnerSpec,
    /// `M_0 ..= M_T`; `models[i]` produced the predictions of period `i + 1`.
    pub models: Vec<Learner>,
    pub periods: Vec<PeriodRecord>,
    pub initial_labeled: usize,
    pub ground_truth_consumed: usize,
}

impl AdaptRun {
    pub fn final_model(&self) -> &Learner {
        self.models.last().expect("at least M_0")
    }

    pub fn summaries(&self) -> Vec<PeriodSummary> {
        self.periods
            .iter()
            .map(|p| PeriodSummary {
                period_id: p.period_id,
                model_checksum: p.model_checksum.clone(),
                pseudo_labeled: p.pseudo.len(),
                augmented: p.augmented_rows,
                mixup: p.mixup_rows,
                tau_b: p.thresholds.tau_b,
                tau_m: p.thresholds.tau_m,
                annotated: p.annotated.len(),
                labeled_pool: p.labeled_pool,
                updated: p.updated,
                wall_ms: p.wall_ms,
            })
            .collect()
    }

    /// Writes one JSON object per period.
    pub fn write_manifest(&self, mut out: impl Write) -> Result<()> {
        for s in self.summaries() {
            let line = serde_json::to_string(&s).map_err(|e| Error::Serialization(e.to_string()))?;
            writeln!(out, "{line}").map_err(|e| Error::io("<manifest>", e))?;
        }
        Ok(())
    }
}

/// Counts every ground-truth label read from the stream.
struct Truth<'a> {
    labels: &'a LabelVector,
    used: usize,
}

impl Truth<'_> {
    fn reveal(&mut self, rows: &[usize]) -> LabelVector {
        self.used += rows.len();
        self.labels.select(rows)
    }
}

/// Runs the loop over `stream`, starting from a model trained on `labeled`.
pub fn run(
    labeled: &LabeledDataset,
    stream: &TemporalDataset,
    cfg: &AdaptConfig,
    learner: &LearnerSpec,
) -> Result<AdaptRun> {
    cfg.validate()?;
    if stream.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if labeled.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let first = &stream.partitions()[0].data;
    if first.dims() != labeled.dims() {
        return Err(Error::DimensionMismatch {
            index: 0,
            expected: labeled.dims(),
            found: first.dims(),
        });
    }
    if first.num_classes() != labeled.num_classes() {
        return Err(Error::ClassCountMismatch {
            index: 0,
            expected: labeled.num_classes(),
            found: first.num_classes(),
        });
    }
    let benign = labeled.labels().benign_class();
    let template = Learner::new(learner.clone());
    let m0 = template.fit(
        labeled.features(),
        &TrainTargets::Hard(labeled.labels().clone()),
        rng::derive(cfg.seed, 0),
    )?;
    let mut models = vec![m0];
    let mut pool = labeled.clone();
    let mut state = AdaptiveState::new(cfg.thresholds(), cfg.effective_lambda(), cfg.chain_thresholds)?;
    let mut periods = Vec::with_capacity(stream.len());
    let mut consumed = labeled.len();

    for (k, partition) in stream.partitions().iter().enumerate() {
        let started = Instant::now();
        let period_seed = rng::derive(cfg.seed, k as u64 + 1);
        let current = models.last().expect("M_0 pushed");
        let x = partition.data.features();
        let probs = current.predict_proba(x)?;
        let predictions = probs.predictions(benign);
        let mut truth = Truth {
            labels: partition.data.labels(),
            used: 0,
        };

        let mut rec = PeriodRecord {
            period_id: partition.period_id,
            predictions,
            class_means: None,
            thresholds: state.updated,
            pseudo: PseudoLabelBatch::empty(labeled.num_classes(), benign)?,
            annotated: Vec::new(),
            merged_rows: 0,
            augmented_candidates: 0,
            augmented_rows: 0,
            mixup_rows: 0,
            labeled_pool: pool.len(),
            ground_truth_used: 0,
            updated: false,
            model_checksum: String::new(),
            wall_ms: 0,
            probabilities: probs,
        };

        let next = match cfg.mode {
            Mode::Offline => None,
            Mode::Oracle => {
                let all: Vec<usize> = (0..x.rows()).collect();
                let revealed = LabeledDataset::new(x.clone(), truth.reveal(&all))?;
                pool = concat(&[&pool, &revealed])?;
                rec.merged_rows = pool.len();
                Some(retrain(current, &template, &pool, None, period_seed)?)
            }
            Mode::Adapt | Mode::FixedThresholdBaseline => {
                let probs = &rec.probabilities;
                let fallback = state.updated;
                let thresholds = if state.lambda > 0.0 {
                    let means = period_means(probs, benign, fallback)?;
                    rec.class_means = Some(means);
                    state.advance(means.0, means.1)
                } else {
                    state.updated
                };
                rec.thresholds = thresholds;

                let annotated_idx = active_select(probs, cfg.active_budget)?;
                let annotation = Annotation {
                    labels: truth.reveal(&annotated_idx),
                    indices: annotated_idx,
                };
                rec.pseudo = match (probs.num_classes(), benign) {
                    (2, Some(b)) => select_binary(probs, thresholds, b, &annotation.indices)?,
                    _ => select_multiclass(probs, thresholds.tau_m, thresholds.tau_b, benign, &annotation.indices)?,
                };
                let merged = merge_labeled(&pool, x, &rec.pseudo, &annotation, cfg.source_free);
                if !annotation.is_empty() {
                    let ann = LabeledDataset::new(x.select_rows(&annotation.indices), annotation.labels.clone())?;
                    pool = concat(&[&pool, &ann])?;
                }
                rec.annotated = annotation.indices;
                match merged {
                    Err(Error::EmptyMerge) => None,
                    Err(e) => return Err(e),
                    Ok(merged) => {
                        rec.merged_rows = merged.len();
                        let mut parts = vec![merged];
                        if cfg.uses_augmentation() {
                            let aug_cfg = AugmentConfig {
                                p_a: cfg.p_a,
                                consistency_check: true,
                                convention: cfg.mask_convention,
                            };
                            let unfiltered = make_augmented_set(&parts[0], None, &aug_cfg, rng::derive(period_seed, 1))?;
                            rec.augmented_candidates = unfiltered.len();
                            let kept = crate::augment::consistency_filter(current, &unfiltered)?;
                            rec.augmented_rows = kept.len();
                            parts.push(kept);
                        }
                        let mix = if cfg.uses_mixup() && parts[0].len() >= 2 {
                            let mode = cfg.mix_label_mode.unwrap_or(if template.supports_fractional_targets() {
                                MixLabelMode::Fractional
                            } else {
                                MixLabelMode::Hard
                            });
                            let mix_cfg = MixupConfig::new(cfg.alpha, mode)?;
                            let m = make_mixup_set(&parts[0], &mix_cfg, rng::derive(period_seed, 2))?;
                            rec.mixup_rows = m.0.rows();
                            Some(m)
                        } else {
                            None
                        };
                        let refs: Vec<&LabeledDataset> = parts.iter().collect();
                        let combined = concat(&refs)?;
                        Some(retrain(current, &template, &combined, mix, period_seed)?)
                    }
                }
            }
        };

        rec.updated = next.is_some();
        let model = next.unwrap_or_else(|| current.clone());
        rec.model_checksum = model.checksum()?;
        rec.labeled_pool = pool.len();
        rec.ground_truth_used = truth.used;
        consumed += truth.used;
        rec.wall_ms = started.elapsed().as_millis() as u64;
        models.push(model);
        periods.push(rec);
    }

    Ok(AdaptRun {
        config: cfg.clone(),
        learner: learner.clone(),
        models,
        periods,
        initial_labeled: labeled.len(),
        ground_truth_consumed: consumed,
    })
}

fn period_means(probs: &ProbabilityMatrix, benign: Option<usize>, fallback: Thresholds) -> Result<(f64, f64)> {
    if probs.rows() == 0 {
        return Ok((fallback.tau_m, fallback.tau_b));
    }
    match benign {
        Some(b) => class_means(probs, b, fallback),
        None => {
            let mean = (0..probs.rows()).map(|i| probs.max_prob(i)).sum::<f64>() / probs.rows() as f64;
            Ok((mean, fallback.tau_b))
        }
    }
}

/// Trains the next model on `data` plus optional mixup rows, per the
/// learner's retraining policy.
fn retrain(
    current: &Learner,
    template: &Learner,
    data: &LabeledDataset,
    mix: Option<(FeatureMatrix, TrainTargets)>,
    period_seed: u64,
) -> Result<Learner> {
    let (features, targets) = match mix {
        None => (data.features().clone(), TrainTargets::Hard(data.labels().clone())),
        Some((mx, mt)) => {
            let features = FeatureMatrix::vstack(&[data.features(), &mx])?;
            let targets = match mt {
                TrainTargets::Hard(l) => {
                    let mut all = data.labels().labels().to_vec();
                    all.extend_from_slice(l.labels());
                    TrainTargets::Hard(data.labels().with_labels(all)?)
                }
                TrainTargets::Fractional(p) => {
                    let base = ProbabilityMatrix::one_hot(data.labels());
                    TrainTargets::Fractional(ProbabilityMatrix::vstack(&[&base, &p])?)
                }
            };
            (features, targets)
        }
    };
    let seed = rng::derive(period_seed, 3);
    match (retrain_policy(template.kind()), template.spec()) {
        (RetrainPolicy::FineTune, LearnerSpec::Mlp(p)) => current.fine_tune(&features, &targets, p.fine_tune_fraction, seed),
        _ => template.fit(&features, &targets, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Partition;
    use crate::learners::LogisticParams;
    use crate::synthetic::{generate_rotating, two_blobs, RotatingDriftSpec};

    fn logistic() -> LearnerSpec {
        LearnerSpec::Logistic(LogisticParams::default())
    }

    fn small_stream(seed: u64) -> (LabeledDataset, TemporalDataset) {
        generate_rotating(&RotatingDriftSpec {
            n_per_class: 40,
            periods: 4,
            seed,
            ..RotatingDriftSpec::default()
        })
        .unwrap()
    }

    #[test]
    fn active_select_examples() {
        let p = ProbabilityMatrix::from_positive(&[0.99, 0.51, 0.70]).unwrap();
        assert_eq!(active_select(&p, 1).unwrap(), vec![1]);
        assert!(active_select(&p, 0).unwrap().is_empty());
        assert_eq!(active_select(&p, 3).unwrap(), vec![0, 1, 2]);
        assert!(active_select(&p, 4).is_err());
        let ties = ProbabilityMatrix::from_positive(&[0.6, 0.4, 0.6, 0.9]).unwrap();
        assert_eq!(active_select(&ties, 2).unwrap(), vec![0, 1]);
    }

    #[test]
    fn merge_examples() {
        let labeled = two_blobs(50, 1.0, 0.5, 0);
        let period = two_blobs(50, 1.0, 0.5, 1);
        let empty_pl = PseudoLabelBatch::empty(2, Some(0)).unwrap();
        let no_ann = Annotation::empty(2, Some(0)).unwrap();
        let m = merge_labeled(&labeled, period.features(), &empty_pl, &no_ann, false).unwrap();
        assert_eq!(m, labeled);
        assert!(matches!(
            merge_labeled(&labeled, period.features(), &empty_pl, &no_ann, true),
            Err(Error::EmptyMerge)
        ));

        let pl = PseudoLabelBatch {
            indices: (0..40).collect(),
            labels: LabelVector::binary(vec![1; 40]).unwrap(),
            confidences: vec![0.9; 40],
        };
        let ann = Annotation {
            indices: (40..50).collect(),
            labels: LabelVector::binary(vec![0; 10]).unwrap(),
        };
        let m = merge_labeled(&labeled, period.features(), &pl, &ann, false).unwrap();
        assert_eq!(m.len(), 150);
        let sf = merge_labeled(&labeled, period.features(), &pl, &ann, true).unwrap();
        assert_eq!(sf.len(), 50);

        let clash = Annotation {
            indices: vec![3],
            labels: LabelVector::binary(vec![0]).unwrap(),
        };
        assert!(matches!(
            merge_labeled(&labeled, period.features(), &pl, &clash, false),
            Err(Error::OverlappingIndices { index: 3 })
        ));
    }

    #[test]
    fn offline_keeps_m0() {
        let (l, s) = small_stream(0);
        let cfg = AdaptConfig {
            mode: Mode::Offline,
            ..AdaptConfig::default()
        };
        let run = run(&l, &s, &cfg, &logistic()).unwrap();
        assert_eq!(run.models.len(), s.len() + 1);
        for (p, part) in run.periods.iter().zip(s.partitions()) {
            assert_eq!(p.predictions, run.models[0].predict(part.data.features(), Some(0)).unwrap());
            assert!(!p.updated);
        }
        assert_eq!(run.ground_truth_consumed, l.len());
    }

    #[test]
    fn oracle_retrains_on_ground_truth() {
        let (l, s) = small_stream(1);
        let s = s.slice(0..2);
        let cfg = AdaptConfig {
            mode: Mode::Oracle,
            ..AdaptConfig::default()
        };
        let run = run(&l, &s, &cfg, &logistic()).unwrap();
        let pool = concat(&[&l, &s.partitions()[0].data]).unwrap();
        let expected = Learner::new(logistic())
            .fit(
                pool.features(),
                &TrainTargets::Hard(pool.labels().clone()),
                rng::derive(rng::derive(cfg.seed, 1), 3),
            )
            .unwrap();
        assert_eq!(run.models[1], expected);
        assert_eq!(run.periods[0].augmented_rows + run.periods[0].mixup_rows, 0);
        assert_eq!(run.periods[0].ground_truth_used, s.partitions()[0].data.len());
    }

    #[test]
    fn predictions_do_not_depend_on_current_labels() {
        let (l, s) = small_stream(2);
        let cfg = AdaptConfig::default();
        let a = run(&l, &s, &cfg, &logistic()).unwrap();
        let mut parts = s.partitions().to_vec();
        let last = parts.len() - 1;
        let flipped: Vec<usize> = parts[last].data.labels().labels().iter().map(|y| 1 - y).collect();
        let labels = parts[last].data.labels().with_labels(flipped).unwrap();
        parts[last] = Partition {
            period_id: parts[last].period_id,
            data: LabeledDataset::new(parts[last].data.features().clone(), labels).unwrap(),
        };
        let b = run(&l, &TemporalDataset::new(parts).unwrap(), &cfg, &logistic()).unwrap();
        assert_eq!(a.periods[last].predictions, b.periods[last].predictions);
        assert_eq!(a.ground_truth_consumed, l.len());
    }

    #[test]
    fn active_budget_accounting() {
        let (l, s) = small_stream(3);
        let k = 5;
        let cfg = AdaptConfig {
            active_budget: k,
            ..AdaptConfig::default()
        };
        let run = run(&l, &s, &cfg, &logistic()).unwrap();
        for (i, p) in run.periods.iter().enumerate() {
            assert_eq!(p.labeled_pool, l.len() + k * (i + 1));
            assert_eq!(p.annotated.len(), k);
            assert!(p.annotated.iter().all(|a| !p.pseudo.indices.contains(a)));
        }
        assert_eq!(run.ground_truth_consumed, l.len() + k * s.len());
    }

    #[test]
    fn runs_are_deterministic() {
        let (l, s) = small_stream(4);
        let cfg = AdaptConfig::default();
        let a = run(&l, &s, &cfg, &logistic()).unwrap();
        let b = run(&l, &s, &cfg, &logistic()).unwrap();
        assert_eq!(a.models, b.models);
        let strip = |r: &AdaptRun| r.periods.iter().map(|p| (p.predictions.clone(), p.model_checksum.clone())).collect::<Vec<_>>();
        assert_eq!(strip(&a), strip(&b));
        let mut buf = Vec::new();
        a.write_manifest(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), s.len());
    }

    #[test]
    fn fixed_baseline_keeps_base_thresholds() {
        let (l, s) = small_stream(5);
        let cfg = AdaptConfig {
            mode: Mode::FixedThresholdBaseline,
            lambda: 0.5,
            ..AdaptConfig::default()
        };
        let run = run(&l, &s, &cfg, &logistic()).unwrap();
        for p in &run.periods {
            assert_eq!(p.thresholds, cfg.thresholds());
            assert_eq!(p.augmented_candidates + p.mixup_rows, 0);
        }
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let (l, s) = small_stream(6);
        let wide = LabeledDataset::new(
            FeatureMatrix::from_rows(3, &[vec![0.0; 3], vec![1.0; 3]]).unwrap(),
            LabelVector::binary(vec![0, 1]).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            run(&wide, &s, &AdaptConfig::default(), &logistic()),
            Err(Error::DimensionMismatch { .. })
        ));
        let empty = l.select(&[]);
        assert!(run(&empty, &s, &AdaptConfig::default(), &logistic()).is_err());
    }
}

//! Random-search spaces for learner and adaptation hyperparameters.
//!
//! Exponent ranges (`2^x`, `10^x`) are sampled uniformly in the exponent,
//! i.e. log-uniformly in the value; integer-valued powers are rounded.

use rand::seq::IndexedRandom;
use rand::Rng as _;

use crate::engine::{AdaptConfig, ALPHA_RANGE, LAMBDA_RANGE, P_A_RANGE, TAU_B_RANGE, TAU_M_RANGE};
use crate::learners::{ForestParams, LearnerKind, LearnerSpec, LogisticParams, MlpParams, SplitCriterion};
use crate::rng::Rng;

/// Default number of random-search trials.
pub const DEFAULT_BUDGET: usize = 200;

pub const FOREST_LOG2_RANGE: (f64, f64) = (5.0, 10.0);
pub const MLP_LAYERS: [&[usize]; 4] = [
    &[100, 100],
    &[512, 256, 128],
    &[512, 384, 256, 128],
    &[512, 384, 256, 128, 64],
];
pub const MLP_LOG10_LR_RANGE: (f64, f64) = (-5.0, -3.0);
pub const MLP_DROPOUT_RANGE: (f64, f64) = (0.0, 0.5);
pub const MLP_LOG2_BATCH: [u32; 6] = [5, 6, 7, 8, 9, 10];
pub const MLP_EPOCHS: [usize; 9] = [25, 30, 35, 40, 50, 60, 80, 100, 150];
pub const MLP_FINE_TUNE_FRACTIONS: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];
pub const LOGISTIC_LOG10_L2_RANGE: (f64, f64) = (-6.0, -1.0);

fn within(v: f64, (lo, hi): (f64, f64)) -> bool {
    (lo..=hi).contains(&v)
}

fn pow2_within(v: usize, (lo, hi): (f64, f64)) -> bool {
    v >= 2f64.powf(lo).round() as usize && v <= 2f64.powf(hi).round() as usize
}

fn uniform(r: &mut Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        r.random_range(lo..=hi)
    }
}

pub fn sample_learner(kind: LearnerKind, r: &mut Rng) -> LearnerSpec {
    match kind {
        LearnerKind::Logistic => LearnerSpec::Logistic(LogisticParams {
            l2: 10f64.powf(uniform(r, LOGISTIC_LOG10_L2_RANGE)),
            class_balance: r.random(),
            ..LogisticParams::default()
        }),
        LearnerKind::Forest => LearnerSpec::Forest(ForestParams {
            n_estimators: 2f64.powf(uniform(r, FOREST_LOG2_RANGE)).round() as usize,
            max_depth: 2f64.powf(uniform(r, FOREST_LOG2_RANGE)).round() as usize,
            criterion: *[SplitCriterion::Gini, SplitCriterion::Entropy, SplitCriterion::LogLoss]
                .choose(r)
                .expect("nonempty"),
            class_balance: r.random(),
            ..ForestParams::default()
        }),
        LearnerKind::Mlp => LearnerSpec::Mlp(MlpParams {
            hidden_layers: MLP_LAYERS.choose(r).expect("nonempty").to_vec(),
            learning_rate: 10f64.powf(uniform(r, MLP_LOG10_LR_RANGE)),
            dropout: uniform(r, MLP_DROPOUT_RANGE),
            batch_size: 1usize << MLP_LOG2_BATCH.choose(r).expect("nonempty"),
            epochs: *MLP_EPOCHS.choose(r).expect("nonempty"),
            class_balance: r.random(),
            fine_tune_fraction: *MLP_FINE_TUNE_FRACTIONS.choose(r).expect("nonempty"),
        }),
    }
}

/// Whether every tuned field of `spec` lies in its search range.
pub fn learner_in_range(spec: &LearnerSpec) -> bool {
    match spec {
        LearnerSpec::Logistic(p) => p.l2 > 0.0 && within(p.l2.log10(), LOGISTIC_LOG10_L2_RANGE),
        LearnerSpec::Forest(p) => {
            pow2_within(p.n_estimators, FOREST_LOG2_RANGE) && pow2_within(p.max_depth, FOREST_LOG2_RANGE)
        }
        LearnerSpec::Mlp(p) => {
            MLP_LAYERS.contains(&p.hidden_layers.as_slice())
                && p.learning_rate > 0.0
                && within(p.learning_rate.log10(), MLP_LOG10_LR_RANGE)
                && within(p.dropout, MLP_DROPOUT_RANGE)
                && MLP_LOG2_BATCH.iter().any(|&e| 1usize << e == p.batch_size)
                && MLP_EPOCHS.contains(&p.epochs)
                && MLP_FINE_TUNE_FRACTIONS.contains(&p.fine_tune_fraction)
        }
    }
}

/// Draws the five tuned adaptation parameters; every other field is taken
/// from `base`.
pub fn sample_adapt(base: &AdaptConfig, r: &mut Rng) -> AdaptConfig {
    AdaptConfig {
        tau_b: uniform(r, TAU_B_RANGE),
        tau_m: uniform(r, TAU_M_RANGE),
        lambda: uniform(r, LAMBDA_RANGE),
        p_a: uniform(r, P_A_RANGE),
        alpha: uniform(r, ALPHA_RANGE),
        ..base.clone()
    }
}

pub fn adapt_in_range(cfg: &AdaptConfig) -> bool {
    cfg.validate_tuning_ranges().is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn defaults_lie_in_range() {
        for kind in [LearnerKind::Logistic, LearnerKind::Forest, LearnerKind::Mlp] {
            assert!(learner_in_range(&LearnerSpec::default_for(kind)), "{kind:?}");
        }
        assert!(adapt_in_range(&AdaptConfig::default()));
    }

    #[test]
    fn samples_stay_in_range_and_are_reproducible() {
        let mut r = rng::stream(9, 0);
        for _ in 0..500 {
            for kind in [LearnerKind::Logistic, LearnerKind::Forest, LearnerKind::Mlp] {
                assert!(learner_in_range(&sample_learner(kind, &mut r)));
            }
            assert!(adapt_in_range(&sample_adapt(&AdaptConfig::default(), &mut r)));
        }
        let a = sample_learner(LearnerKind::Mlp, &mut rng::stream(1, 2));
        let b = sample_learner(LearnerKind::Mlp, &mut rng::stream(1, 2));
        assert_eq!(a, b);
    }

    #[test]
    fn out_of_range_values_detected() {
        let cfg = AdaptConfig {
            lambda: 0.8,
            ..AdaptConfig::default()
        };
        assert!(!adapt_in_range(&cfg));
        let spec = LearnerSpec::Forest(ForestParams {
            n_estimators: 8,
            ..ForestParams::default()
        });
        assert!(!learner_in_range(&spec));
    }
}

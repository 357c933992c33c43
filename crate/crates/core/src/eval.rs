//! Detection metrics, exposure, pseudo-label quality and significance tests.
//!
//! Ratios with a zero denominator are reported as 0: F1 when there are no
//! positives at all, FPR without negatives, FNR without positives.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{LabelVector, ProbabilityMatrix, TemporalDataset};
use crate::drift::ranks;
use crate::engine::AdaptRun;
use crate::error::{Error, Result};
use crate::pseudo_label::PseudoLabelBatch;

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Confusion counts for one period with malware (every non-benign class)
/// as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodMetrics {
    pub period_id: i64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub f1: f64,
    pub fpr: f64,
    pub fnr: f64,
}

impl PeriodMetrics {
    pub fn from_counts(period_id: i64, tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        Self {
            period_id,
            tp,
            fp,
            tn,
            fn_,
            f1: ratio(2 * tp, 2 * tp + fp + fn_),
            fpr: ratio(fp, fp + tn),
            fnr: ratio(fn_, fn_ + tp),
        }
    }

    pub fn samples(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn period_metrics(period_id: i64, pred: &[usize], truth: &[usize], benign_class: usize) -> Result<PeriodMetrics> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&p, &t) in pred.iter().zip(truth) {
        match (p != benign_class, t != benign_class) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(PeriodMetrics::from_counts(period_id, tp, fp, tn, fn_))
}

/// Running total of false negatives.
pub fn absolute_exposure(per_period_fn: &[usize]) -> Vec<usize> {
    per_period_fn
        .iter()
        .scan(0usize, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

/// `(err_pb, err_pm)`: the share of benign pseudo-labels whose true class is
/// malware, and of malware pseudo-labels whose true class is benign.
/// `truth` holds the whole period, indexed by the batch's row indices.
pub fn pseudo_label_errors(batch: &PseudoLabelBatch, truth: &LabelVector) -> Result<(f64, f64)> {
    let benign = truth.benign_class().unwrap_or(0);
    let (mut as_benign, mut wrong_benign, mut as_malware, mut wrong_malware) = (0, 0, 0, 0);
    for (&i, &label) in batch.indices.iter().zip(batch.labels.labels()) {
        let t = *truth.labels().get(i).ok_or(Error::BudgetExceeded {
            requested: i + 1,
            available: truth.len(),
        })?;
        if label == benign {
            as_benign += 1;
            if t != benign {
                wrong_benign += 1;
            }
        } else {
            as_malware += 1;
            if t == benign {
                wrong_malware += 1;
            }
        }
    }
    Ok((ratio(wrong_benign, as_benign), ratio(wrong_malware, as_malware)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroMetrics {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Unweighted means of the one-vs-rest metrics of every class.
pub fn macro_metrics(pred: &[usize], truth: &[usize], num_classes: usize) -> Result<MacroMetrics> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    let mut tp = vec![0usize; num_classes];
    let mut fp = vec![0usize; num_classes];
    let mut fn_ = vec![0usize; num_classes];
    for (&p, &t) in pred.iter().zip(truth) {
        if let Some(&label) = [p, t].iter().find(|&&k| k >= num_classes) {
            return Err(Error::LabelOutOfRange { label, num_classes });
        }
        if p == t {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
        }
    }
    let c = num_classes as f64;
    let mut out = MacroMetrics {
        f1: 0.0,
        precision: 0.0,
        recall: 0.0,
    };
    for k in 0..num_classes {
        out.f1 += ratio(2 * tp[k], 2 * tp[k] + fp[k] + fn_[k]) / c;
        out.precision += ratio(tp[k], tp[k] + fp[k]) / c;
        out.recall += ratio(tp[k], tp[k] + fn_[k]) / c;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub p_value: f64,
    /// Sum of ranks of positive differences `a - b`.
    pub w_plus: f64,
    /// Nonzero differences used.
    pub n: usize,
    pub method: WilcoxonMethod,
}

/// Largest number of nonzero differences handled by exact enumeration.
pub const WILCOXON_EXACT_MAX: usize = 25;
pub const WILCOXON_MIN_DIFFERENCES: usize = 5;

/// Two-sided paired signed-rank test. Zero differences are dropped; ties in
/// `|d|` get averaged ranks.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    let diffs = nonzero_differences(a, b)?;
    if diffs.len() < WILCOXON_MIN_DIFFERENCES {
        return Err(Error::TooFewDifferences {
            needed: WILCOXON_MIN_DIFFERENCES,
            found: diffs.len(),
        });
    }
    if diffs.len() <= WILCOXON_EXACT_MAX {
        wilcoxon_exact(&diffs)
    } else {
        wilcoxon_normal(&diffs)
    }
}

fn nonzero_differences(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect())
}

fn signed_ranks(diffs: &[f64]) -> (Vec<f64>, f64) {
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let r = ranks(&abs);
    let w_plus = r.iter().zip(diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
    (r, w_plus)
}

/// Exact two-sided p-value for nonzero differences `diffs`, any length.
/// The null distribution of `W+` is enumerated over all sign assignments by
/// dynamic programming on doubled (hence integer) ranks.
pub fn wilcoxon_exact(diffs: &[f64]) -> Result<WilcoxonResult> {
    if diffs.is_empty() || diffs.iter().any(|d| *d == 0.0 || !d.is_finite()) {
        return Err(Error::TooFewDifferences {
            needed: 1,
            found: diffs.iter().filter(|d| **d != 0.0).count(),
        });
    }
    let (r, w_plus) = signed_ranks(diffs);
    let doubled: Vec<usize> = r.iter().map(|x| (2.0 * x).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &w in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + w] += counts[s];
            }
        }
        reach += w;
    }
    let all = 2f64.powi(diffs.len() as i32);
    let t = (2.0 * w_plus).round() as usize;
    let lower: f64 = counts[..=t].iter().sum::<f64>() / all;
    let upper: f64 = counts[t..].iter().sum::<f64>() / all;
    Ok(WilcoxonResult {
        p_value: (2.0 * lower.min(upper)).min(1.0),
        w_plus,
        n: diffs.len(),
        method: WilcoxonMethod::Exact,
    })
}

/// Normal approximation with tie and continuity corrections.
pub fn wilcoxon_normal(diffs: &[f64]) -> Result<WilcoxonResult> {
    let n = diffs.len();
    if n == 0 {
        return Err(Error::TooFewDifferences { needed: 1, found: 0 });
    }
    let (r, w_plus) = signed_ranks(diffs);
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut sorted = r.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let p_value = if var <= 0.0 {
        1.0
    } else {
        let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
        let normal = Normal::standard();
        (2.0 * (1.0 - normal.cdf(z))).min(1.0)
    };
    Ok(WilcoxonResult {
        p_value,
        w_plus,
        n,
        method: WilcoxonMethod::Normal,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnknownFamilyEval {
    /// Share of unseen-family samples predicted benign.
    pub evasion_rate: f64,
    /// Probability that a known sample has higher top-class confidence than
    /// an unknown one, ties counting half.
    pub auc: f64,
}

pub fn unknown_family_eval(
    unknown: &ProbabilityMatrix,
    benign_class: usize,
    known: &ProbabilityMatrix,
) -> Result<UnknownFamilyEval> {
    if unknown.rows() == 0 || known.rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let evaded = (0..unknown.rows())
        .filter(|&i| unknown.argmax(i, Some(benign_class)) == benign_class)
        .count();
    let known_conf: Vec<f64> = (0..known.rows()).map(|i| known.max_prob(i)).collect();
    let unknown_conf: Vec<f64> = (0..unknown.rows()).map(|i| unknown.max_prob(i)).collect();
    Ok(UnknownFamilyEval {
        evasion_rate: ratio(evaded, unknown.rows()),
        auc: rank_auc(&known_conf, &unknown_conf),
    })
}

/// Mann-Whitney estimate of `P(pos > neg) + P(pos == neg) / 2`.
pub fn rank_auc(pos: &[f64], neg: &[f64]) -> f64 {
    let pooled: Vec<f64> = pos.iter().chain(neg).copied().collect();
    let r = ranks(&pooled);
    let np = pos.len() as f64;
    let rank_sum: f64 = r[..pos.len()].iter().sum();
    (rank_sum - np * (np + 1.0) / 2.0) / (np * neg.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    /// Every period counts once.
    #[default]
    Unweighted,
    /// Periods weighted by their sample count.
    SampleWeighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricAverages {
    pub f1: f64,
    pub fpr: f64,
    pub fnr: f64,
}

pub fn average_metrics(periods: &[PeriodMetrics], averaging: Averaging) -> MetricAverages {
    let weights: Vec<f64> = periods
        .iter()
        .map(|p| match averaging {
            Averaging::Unweighted => 1.0,
            Averaging::SampleWeighted => p.samples() as f64,
        })
        .collect();
    let total: f64 = weights.iter().sum();
    let avg = |f: fn(&PeriodMetrics) -> f64| {
        if total == 0.0 {
            0.0
        } else {
            periods.iter().zip(&weights).map(|(p, w)| f(p) * w).sum::<f64>() / total
        }
    };
    MetricAverages {
        f1: avg(|p| p.f1),
        fpr: avg(|p| p.fpr),
        fnr: avg(|p| p.fnr),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub periods: Vec<PeriodMetrics>,
    pub averages: MetricAverages,
    pub absolute_exposure: Vec<usize>,
    /// `(err_pb, err_pm)` per period.
    pub pseudo_label_errors: Vec<(f64, f64)>,
}

impl MetricsReport {
    /// Scores a finished run against the stream it was run on.
    pub fn from_run(run: &AdaptRun, stream: &TemporalDataset, averaging: Averaging) -> Result<Self> {
        if run.periods.len() != stream.len() {
            return Err(Error::LengthMismatch {
                left: run.periods.len(),
                right: stream.len(),
            });
        }
        let mut periods = Vec::with_capacity(stream.len());
        let mut errors = Vec::with_capacity(stream.len());
        for (rec, part) in run.periods.iter().zip(stream.partitions()) {
            let truth = part.data.labels();
            let benign = truth.benign_class().unwrap_or(0);
            periods.push(period_metrics(rec.period_id, &rec.predictions, truth.labels(), benign)?);
            errors.push(pseudo_label_errors(&rec.pseudo, truth)?);
        }
        Ok(Self::new(periods, errors, averaging))
    }

    pub fn new(periods: Vec<PeriodMetrics>, pseudo_label_errors: Vec<(f64, f64)>, averaging: Averaging) -> Self {
        let fns: Vec<usize> = periods.iter().map(|p| p.fn_).collect();
        Self {
            averages: average_metrics(&periods, averaging),
            absolute_exposure: absolute_exposure(&fns),
            periods,
            pseudo_label_errors,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForgettingRow {
    /// `i` for model `M_i`.
    pub model_index: usize,
    pub is_final: bool,
    pub per_period: Vec<PeriodMetrics>,
    pub mean_f1: f64,
}

/// Scores every model of `run` (`M_0` through the final one) on each period
/// of `probe`.
pub fn forgetting_analysis(run: &AdaptRun, probe: &TemporalDataset) -> Result<Vec<ForgettingRow>> {
    let last = run.models.len() - 1;
    run.models
        .iter()
        .enumerate()
        .map(|(i, model)| {
            let per_period = probe
                .partitions()
                .iter()
                .map(|p| {
                    let truth = p.data.labels();
                    let benign = truth.benign_class();
                    let pred = model.predict(p.data.features(), benign)?;
                    period_metrics(p.period_id, &pred, truth.labels(), benign.unwrap_or(0))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ForgettingRow {
                model_index: i,
                is_final: i == last,
                mean_f1: average_metrics(&per_period, Averaging::Unweighted).f1,
                per_period,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng as _;

    #[test]
    fn period_metric_examples() {
        let m = PeriodMetrics::from_counts(0, 8, 1, 90, 2);
        assert!((m.f1 - 16.0 / 19.0).abs() < 1e-15);
        assert!((m.fpr - 1.0 / 91.0).abs() < 1e-15);
        assert!((m.fnr - 0.2).abs() < 1e-15);

        let perfect = period_metrics(0, &[0, 1, 1, 0], &[0, 1, 1, 0], 0).unwrap();
        assert_eq!((perfect.f1, perfect.fpr, perfect.fnr), (1.0, 0.0, 0.0));
        let none = period_metrics(0, &[0, 0], &[0, 0], 0).unwrap();
        assert_eq!((none.f1, none.fnr), (0.0, 0.0));
        assert!(period_metrics(0, &[0], &[0, 1], 0).is_err());
        let multi = period_metrics(0, &[2, 1, 0], &[1, 1, 2], 0).unwrap();
        assert_eq!((multi.tp, multi.fn_), (2, 1));
    }

    #[test]
    fn exposure_examples() {
        assert_eq!(absolute_exposure(&[2, 3, 0]), vec![2, 5, 5]);
        assert!(absolute_exposure(&[]).is_empty());
    }

    #[test]
    fn pseudo_label_error_examples() {
        let batch = PseudoLabelBatch {
            indices: vec![0, 1, 2],
            labels: LabelVector::binary(vec![0, 0, 1]).unwrap(),
            confidences: vec![0.9; 3],
        };
        let truth = LabelVector::binary(vec![1, 0, 1]).unwrap();
        assert_eq!(pseudo_label_errors(&batch, &truth).unwrap(), (0.5, 0.0));
        let empty = PseudoLabelBatch::empty(2, Some(0)).unwrap();
        assert_eq!(pseudo_label_errors(&empty, &truth).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn macro_examples() {
        let perfect = macro_metrics(&[0, 1, 2, 2], &[0, 1, 2, 2], 3).unwrap();
        assert_eq!((perfect.f1, perfect.precision, perfect.recall), (1.0, 1.0, 1.0));
        let pred = [0, 1, 1, 0, 1];
        let truth = [0, 1, 0, 0, 0];
        let m = macro_metrics(&pred, &truth, 2).unwrap();
        let f1_pos = period_metrics(0, &pred, &truth, 0).unwrap().f1;
        let f1_neg = period_metrics(0, &pred, &truth, 1).unwrap().f1;
        assert!((m.f1 - (f1_pos + f1_neg) / 2.0).abs() < 1e-15);
        assert!(macro_metrics(&[3], &[0], 3).is_err());
    }

    #[test]
    fn wilcoxon_examples() {
        let a = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4];
        assert!(matches!(wilcoxon_signed_rank(&a, &a), Err(Error::TooFewDifferences { .. })));
        let b = [0.8, 0.6, 0.4, 0.2, 0.0, -0.2];
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.method, WilcoxonMethod::Exact);
        assert!((r.p_value - 0.03125).abs() < 1e-15);
        assert_eq!(r.w_plus, 21.0);
    }

    fn brute_force_p(diffs: &[f64]) -> f64 {
        let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
        let r = ranks(&abs);
        let observed: f64 = r.iter().zip(diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
        let n = diffs.len();
        let (mut le, mut ge) = (0u64, 0u64);
        for mask in 0u64..(1 << n) {
            let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| r[i]).sum();
            if w <= observed + 1e-9 {
                le += 1;
            }
            if w >= observed - 1e-9 {
                ge += 1;
            }
        }
        let all = (1u64 << n) as f64;
        (2.0 * (le as f64 / all).min(ge as f64 / all)).min(1.0)
    }

    #[test]
    fn exact_branch_matches_enumeration_with_ties() {
        let mut r = rng::stream(1, 0);
        for _ in 0..100 {
            let n = r.random_range(1..=10);
            let diffs: Vec<f64> = (0..n)
                .map(|_| {
                    let v = r.random_range(1..=4) as f64;
                    if r.random::<bool>() { v } else { -v }
                })
                .collect();
            let got = wilcoxon_exact(&diffs).unwrap().p_value;
            assert!((got - brute_force_p(&diffs)).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_and_normal_agree_at_the_boundary() {
        let mut r = rng::stream(2, 0);
        for _ in 0..50 {
            let diffs: Vec<f64> = (0..25).map(|_| r.random_range(-1.0..1.2)).collect();
            let e = wilcoxon_exact(&diffs).unwrap().p_value;
            let a = wilcoxon_normal(&diffs).unwrap().p_value;
            assert!((e - a).abs() < 0.01, "{e} vs {a}");
        }
        let long: Vec<f64> = (0..30).map(|i| i as f64 + 1.0).collect();
        let zeros = vec![0.0; 30];
        assert_eq!(wilcoxon_signed_rank(&long, &zeros).unwrap().method, WilcoxonMethod::Normal);
    }

    #[test]
    fn unknown_family_examples() {
        let unknown = ProbabilityMatrix::from_rows(&[vec![0.1, 0.9, 0.0], vec![0.0, 0.2, 0.8]]).unwrap();
        let known = ProbabilityMatrix::from_rows(&[vec![0.05, 0.95, 0.0]]).unwrap();
        assert_eq!(unknown_family_eval(&unknown, 0, &known).unwrap().evasion_rate, 0.0);
        let hi = ProbabilityMatrix::from_positive(&[0.9, 0.9, 0.9]).unwrap();
        let lo = ProbabilityMatrix::from_rows(&vec![vec![0.2, 0.4, 0.4]; 2]).unwrap();
        let ok = ProbabilityMatrix::from_rows(&vec![vec![0.9, 0.05, 0.05]; 3]).unwrap();
        assert_eq!(unknown_family_eval(&lo, 0, &ok).unwrap().auc, 1.0);
        assert_eq!(unknown_family_eval(&hi, 0, &hi).unwrap().auc, 0.5);
        let empty = ProbabilityMatrix::from_positive(&[]).unwrap();
        assert!(unknown_family_eval(&empty, 0, &hi).is_err());
    }

    #[test]
    fn sample_weighted_averages() {
        let a = PeriodMetrics::from_counts(0, 1, 0, 0, 0);
        let b = PeriodMetrics::from_counts(1, 0, 0, 3, 0);
        assert_eq!(average_metrics(&[a, b], Averaging::Unweighted).f1, 0.5);
        assert_eq!(average_metrics(&[a, b], Averaging::SampleWeighted).f1, 0.25);
    }

    proptest! {
        #[test]
        fn auc_matches_pairwise_count_and_is_monotone_invariant(
            pos in prop::collection::vec(0u8..20, 1..40),
            neg in prop::collection::vec(0u8..20, 1..40),
        ) {
            let p: Vec<f64> = pos.iter().map(|v| *v as f64 / 20.0).collect();
            let n: Vec<f64> = neg.iter().map(|v| *v as f64 / 20.0).collect();
            let mut wins = 0.0;
            for x in &p {
                for y in &n {
                    wins += if x > y { 1.0 } else if x == y { 0.5 } else { 0.0 };
                }
            }
            let oracle = wins / (p.len() * n.len()) as f64;
            prop_assert!((rank_auc(&p, &n) - oracle).abs() < 1e-12);
            let tp: Vec<f64> = p.iter().map(|v| v.exp() * 3.0).collect();
            let tn: Vec<f64> = n.iter().map(|v| v.exp() * 3.0).collect();
            prop_assert!((rank_auc(&tp, &tn) - oracle).abs() < 1e-12);
        }

        #[test]
        fn ratios_bounded_and_exposure_monotone(fns in prop::collection::vec(0usize..50, 0..12)) {
            let ae = absolute_exposure(&fns);
            prop_assert!(ae.windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(ae.last().copied().unwrap_or(0), fns.iter().sum::<usize>());
        }

        #[test]
        fn macro_invariant_under_relabeling(
            pairs in prop::collection::vec((0usize..4, 0usize..4), 1..60),
        ) {
            let perm = [2usize, 0, 3, 1];
            let (p, t): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
            let pp: Vec<usize> = p.iter().map(|x| perm[*x]).collect();
            let tt: Vec<usize> = t.iter().map(|x| perm[*x]).collect();
            let a = macro_metrics(&p, &t, 4).unwrap();
            let b = macro_metrics(&pp, &tt, 4).unwrap();
            prop_assert!((a.f1 - b.f1).abs() < 1e-12);
            prop_assert!((a.precision - b.precision).abs() < 1e-12);
            prop_assert!((a.recall - b.recall).abs() < 1e-12);
            for v in [a.f1, a.precision, a.recall] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}

//! Synthetic drifting streams for desk-scale experiments.
//!
//! The rotating stream places the two class means on opposite ends of a
//! diameter of a circle and turns that diameter a little every period, so
//! both `p(x)` and `p(y|x)` shift gradually. A classifier frozen at period 0
//! ends up on the wrong side of most samples once the rotation passes a
//! right angle.

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{FeatureMatrix, LabelVector, LabeledDataset, Partition, TemporalDataset};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RotatingDriftSpec {
    pub n_per_class: usize,
    pub radius: f64,
    /// Per-coordinate variance of each class.
    pub variance: f64,
    /// Rotation (radians) between period 0 and period `periods - 1`.
    pub total_rotation: f64,
    /// Number of periods including the initial labeled one.
    pub periods: usize,
    /// Benign-to-malware ratio; 1 gives `n_per_class` of each.
    pub imbalance: f64,
    pub seed: u64,
}

impl Default for RotatingDriftSpec {
    fn default() -> Self {
        Self {
            n_per_class: 200,
            radius: 2.0,
            variance: 0.25,
            total_rotation: 3.0 * PI / 4.0,
            periods: 8,
            imbalance: 1.0,
            seed: 0,
        }
    }
}

impl RotatingDriftSpec {
    pub fn validate(&self) -> Result<()> {
        if self.periods < 2 {
            return Err(Error::Config("rotating stream needs at least 2 periods".into()));
        }
        if self.n_per_class == 0 {
            return Err(Error::Config("n_per_class must be positive".into()));
        }
        if !(self.variance >= 0.0 && self.variance.is_finite()) {
            return Err(Error::Config("variance must be finite and non-negative".into()));
        }
        if !(self.radius.is_finite() && self.total_rotation.is_finite()) {
            return Err(Error::Config("radius and rotation must be finite".into()));
        }
        if !(self.imbalance > 0.0 && self.imbalance.is_finite()) {
            return Err(Error::Config("imbalance ratio must be positive".into()));
        }
        Ok(())
    }

    /// Angle of the benign mean at period `t`; malware sits at `angle + pi`.
    pub fn angle(&self, t: usize) -> f64 {
        t as f64 * self.total_rotation / (self.periods - 1) as f64
    }

    /// Class means `[benign, malware]` at period `t`.
    pub fn class_means(&self, t: usize) -> [[f64; 2]; 2] {
        let a = self.angle(t);
        let b = a + PI;
        [
            [self.radius * a.cos(), self.radius * a.sin()],
            [self.radius * b.cos(), self.radius * b.sin()],
        ]
    }

    /// Samples period `t` alone. Each period draws from its own stream, so
    /// this matches the same period inside a full generation.
    pub fn period(&self, t: usize) -> Result<LabeledDataset> {
        self.validate()?;
        let (n_benign, n_malware) = if self.imbalance == 1.0 {
            (self.n_per_class, self.n_per_class)
        } else {
            imbalanced_counts(2 * self.n_per_class, self.imbalance)?
        };
        sample_period(self, t, n_benign, n_malware)
    }
}

fn sample_period(
    spec: &RotatingDriftSpec,
    t: usize,
    n_benign: usize,
    n_malware: usize,
) -> Result<LabeledDataset> {
    let means = spec.class_means(t);
    let sd = spec.variance.sqrt();
    let mut r = rng::stream(spec.seed, t as u64);
    let mut values = Vec::with_capacity(2 * (n_benign + n_malware));
    let mut labels = Vec::with_capacity(n_benign + n_malware);
    for (class, count) in [(0usize, n_benign), (1usize, n_malware)] {
        for _ in 0..count {
            let z0: f64 = StandardNormal.sample(&mut r);
            let z1: f64 = StandardNormal.sample(&mut r);
            values.push(means[class][0] + sd * z0);
            values.push(means[class][1] + sd * z1);
            labels.push(class);
        }
    }
    LabeledDataset::new(
        FeatureMatrix::dense(labels.len(), 2, values)?,
        LabelVector::binary(labels)?,
    )
}

/// Generates the initial labeled set (period 0) and the stream of periods
/// `1..periods`, whose period ids equal their index.
pub fn generate_rotating(spec: &RotatingDriftSpec) -> Result<(LabeledDataset, TemporalDataset)> {
    spec.validate()?;
    let initial = spec.period(0)?;
    let partitions = (1..spec.periods)
        .map(|t| {
            Ok(Partition {
                period_id: t as i64,
                data: spec.period(t)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((initial, TemporalDataset::new(partitions)?))
}

/// Splits `total` samples into `(benign, malware)` following
/// `benign:malware = ratio:1`, rounding to nearest and keeping at least one
/// sample per class.
pub fn imbalanced_counts(total: usize, ratio: f64) -> Result<(usize, usize)> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::Config(format!("ratio must be positive, got {ratio}")));
    }
    if total < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            found: total,
        });
    }
    let benign = ((total as f64) * ratio / (ratio + 1.0)).round() as usize;
    let benign = benign.clamp(1, total - 1);
    Ok((benign, total - benign))
}

/// All periods `0..periods` with `2 * n_per_class` samples each, split
/// `ratio:1` between benign and malware.
pub fn generate_imbalanced(spec: &RotatingDriftSpec, ratio: f64) -> Result<TemporalDataset> {
    spec.validate()?;
    let (n_benign, n_malware) = imbalanced_counts(2 * spec.n_per_class, ratio)?;
    let partitions = (0..spec.periods)
        .map(|t| {
            Ok(Partition {
                period_id: t as i64,
                data: sample_period(spec, t, n_benign, n_malware)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    TemporalDataset::new(partitions)
}

/// Two isotropic 2-D blobs at `(-separation, 0)` (benign) and
/// `(separation, 0)` (malware).
pub fn two_blobs(n_per_class: usize, separation: f64, sd: f64, seed: u64) -> LabeledDataset {
    let mut r = rng::stream(seed, 0);
    let mut rows = Vec::with_capacity(2 * n_per_class);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for i in 0..2 * n_per_class {
        let class = i % 2;
        let cx = if class == 0 { -separation } else { separation };
        let z0: f64 = StandardNormal.sample(&mut r);
        let z1: f64 = StandardNormal.sample(&mut r);
        rows.push(vec![cx + sd * z0, sd * z1]);
        labels.push(class);
    }
    LabeledDataset::new(
        FeatureMatrix::from_rows(2, &rows).expect("finite draws"),
        LabelVector::binary(labels).expect("binary labels"),
    )
    .expect("matching lengths")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::class_counts;

    #[test]
    fn zero_rotation_keeps_the_distribution() {
        let spec = RotatingDriftSpec {
            total_rotation: 0.0,
            ..RotatingDriftSpec::default()
        };
        for t in 0..spec.periods {
            assert_eq!(spec.class_means(t), spec.class_means(0));
        }
    }

    #[test]
    fn closed_form_means() {
        let spec = RotatingDriftSpec {
            total_rotation: PI / 2.0,
            periods: 4,
            radius: 2.0,
            ..RotatingDriftSpec::default()
        };
        assert!((spec.angle(3) - PI / 2.0).abs() < 1e-15);
        let [b, m] = spec.class_means(3);
        assert!((b[0] - 0.0).abs() < 1e-12 && (b[1] - 2.0).abs() < 1e-12);
        assert!((m[0] - 0.0).abs() < 1e-12 && (m[1] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn empirical_means_within_five_standard_errors() {
        let spec = RotatingDriftSpec {
            n_per_class: 500,
            seed: 17,
            ..RotatingDriftSpec::default()
        };
        let se = (spec.variance / 500.0).sqrt();
        for t in [0, 3, 7] {
            let d = spec.period(t).unwrap();
            let means = spec.class_means(t);
            for class in 0..2 {
                let rows: Vec<usize> = (0..d.len())
                    .filter(|&i| d.labels().labels()[i] == class)
                    .collect();
                for axis in 0..2 {
                    let m = rows.iter().map(|&i| d.features().get(i, axis)).sum::<f64>()
                        / rows.len() as f64;
                    assert!((m - means[class][axis]).abs() < 5.0 * se);
                }
            }
        }
    }

    #[test]
    fn single_period_matches_full_run() {
        let spec = RotatingDriftSpec {
            seed: 3,
            ..RotatingDriftSpec::default()
        };
        let (_, stream) = generate_rotating(&spec).unwrap();
        assert_eq!(stream.partitions()[4].data, spec.period(5).unwrap());
        assert_eq!(stream.partitions()[4].period_id, 5);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = RotatingDriftSpec::default();
        assert_eq!(generate_rotating(&spec).unwrap(), generate_rotating(&spec).unwrap());
    }

    #[test]
    fn imbalance_counts() {
        assert_eq!(imbalanced_counts(110, 10.0).unwrap(), (100, 10));
        assert_eq!(imbalanced_counts(50, 1.0).unwrap(), (25, 25));
        assert_eq!(imbalanced_counts(10, 1000.0).unwrap(), (9, 1));
        assert!(imbalanced_counts(10, 0.0).is_err());
    }

    #[test]
    fn imbalanced_periods_follow_the_ratio() {
        let spec = RotatingDriftSpec {
            n_per_class: 55,
            ..RotatingDriftSpec::default()
        };
        let stream = generate_imbalanced(&spec, 10.0).unwrap();
        assert_eq!(stream.len(), spec.periods);
        for p in stream.partitions() {
            assert_eq!(class_counts(p.data.labels()), vec![100, 10]);
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let spec = RotatingDriftSpec {
            periods: 1,
            ..RotatingDriftSpec::default()
        };
        assert!(generate_rotating(&spec).is_err());
    }
}

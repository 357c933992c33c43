use adapt_core::data::{FeatureMatrix, LabelVector, LabeledDataset, Partition, StorageKind, TemporalDataset};
use adapt_core::drift::{fit_gaussian, gaussian_w2, DEFAULT_FULL_COVARIANCE_CAP};
use adapt_core::engine::{run, AdaptConfig, Mode};
use adapt_core::eval::{forgetting_analysis, Averaging, MetricsReport};
use adapt_core::io::{load_manifest, write_partitioned, Split};
use adapt_core::learners::{ForestParams, LearnerKind, LearnerSpec};
use adapt_core::rng;
use adapt_core::synthetic::{generate_rotating, RotatingDriftSpec};
use proptest::prelude::*;
use rand::Rng as _;

#[test]
fn dataset_on_disk_runs_like_in_memory() {
    let spec = RotatingDriftSpec {
        n_per_class: 60,
        periods: 5,
        ..RotatingDriftSpec::default()
    };
    let (labeled, stream) = generate_rotating(&spec).unwrap();
    let first = Partition {
        period_id: 0,
        data: labeled.clone(),
    };
    let mut parts = vec![(Split::Train, &first)];
    parts.extend(stream.partitions().iter().map(|p| (Split::Test, p)));
    let dir = tempfile::tempdir().unwrap();
    write_partitioned(dir.path(), &parts, StorageKind::Dense, vec![]).unwrap();

    let loaded = load_manifest(&dir.path().join("manifest.toml")).unwrap().load_splits().unwrap();
    assert_eq!(loaded.train, labeled);
    assert_eq!(loaded.test, stream);

    let cfg = AdaptConfig::default();
    let learner = LearnerSpec::default_for(LearnerKind::Logistic);
    let a = run(&labeled, &stream, &cfg, &learner).unwrap();
    let b = run(&loaded.train, &loaded.test, &cfg, &learner).unwrap();
    let strip = |periods: &[adapt_core::engine::PeriodRecord]| {
        periods
            .iter()
            .map(|p| adapt_core::engine::PeriodRecord { wall_ms: 0, ..p.clone() })
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&a.periods), strip(&b.periods));

    let report = MetricsReport::from_run(&a, &stream, Averaging::Unweighted).unwrap();
    assert_eq!(report.periods.len(), stream.len());
    let fns: usize = report.periods.iter().map(|p| p.fn_).sum();
    assert_eq!(report.absolute_exposure.last().copied(), Some(fns));
    let rows = forgetting_analysis(&a, &stream).unwrap();
    assert_eq!(rows.len(), stream.len() + 1);
    assert!(rows.last().unwrap().is_final);
}

fn three_class_stream(seed: u64, periods: usize, n: usize) -> (LabeledDataset, TemporalDataset) {
    let mut r = rng::stream(seed, 0);
    let mut make = |shift: f64| {
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for i in 0..3 * n {
            let c = i % 3;
            let angle = c as f64 * 2.0 * std::f64::consts::PI / 3.0 + shift;
            values.push(3.0 * angle.cos() + r.random_range(-0.5..0.5));
            values.push(3.0 * angle.sin() + r.random_range(-0.5..0.5));
            labels.push(c);
        }
        LabeledDataset::new(
            FeatureMatrix::dense(3 * n, 2, values).unwrap(),
            LabelVector::new(labels, 3, Some(0)).unwrap(),
        )
        .unwrap()
    };
    let initial = make(0.0);
    let parts = (1..=periods)
        .map(|t| Partition {
            period_id: t as i64,
            data: make(0.15 * t as f64),
        })
        .collect();
    (initial, TemporalDataset::new(parts).unwrap())
}

#[test]
fn multiclass_stream_runs_with_a_shared_malware_threshold() {
    let (labeled, stream) = three_class_stream(3, 4, 40);
    let cfg = AdaptConfig {
        active_budget: 3,
        ..AdaptConfig::default()
    };
    let out = run(&labeled, &stream, &cfg, &LearnerSpec::default_for(LearnerKind::Mlp)).unwrap();
    for (rec, part) in out.periods.iter().zip(stream.partitions()) {
        assert_eq!(rec.probabilities.num_classes(), 3);
        let probs = &rec.probabilities;
        for (&i, &label) in rec.pseudo.indices.iter().zip(rec.pseudo.labels.labels()) {
            let tau = if label == 0 { rec.thresholds.tau_b } else { rec.thresholds.tau_m };
            assert!(probs.row(i)[label] > tau);
        }
        assert_eq!(rec.predictions.len(), part.data.len());
    }
    assert_eq!(out.ground_truth_consumed, labeled.len() + 3 * stream.len());
}

#[test]
fn forest_on_sparse_features() {
    let mut r = rng::stream(5, 0);
    let mut period = |flip: f64| {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..120 {
            let y = i % 2;
            let mut set: Vec<u32> = (0..30u32).filter(|_| r.random_bool(0.1)).collect();
            if r.random::<f64>() > flip {
                set.push(30 + y as u32);
            }
            set.sort_unstable();
            set.dedup();
            rows.push(set);
            labels.push(y);
        }
        LabeledDataset::new(
            FeatureMatrix::sparse_binary(32, rows).unwrap(),
            LabelVector::binary(labels).unwrap(),
        )
        .unwrap()
    };
    let labeled = period(0.0);
    let stream = TemporalDataset::new(
        (1..4)
            .map(|t| Partition {
                period_id: t,
                data: period(0.1 * t as f64),
            })
            .collect(),
    )
    .unwrap();
    let forest = LearnerSpec::Forest(ForestParams {
        n_estimators: 32,
        max_depth: 32,
        ..ForestParams::default()
    });
    for mode in [Mode::Adapt, Mode::Oracle, Mode::Offline, Mode::FixedThresholdBaseline] {
        let cfg = AdaptConfig {
            mode,
            ..AdaptConfig::default()
        };
        let out = run(&labeled, &stream, &cfg, &forest).unwrap();
        let report = MetricsReport::from_run(&out, &stream, Averaging::Unweighted).unwrap();
        assert!(report.averages.f1 > 0.5, "{mode:?}: {}", report.averages.f1);
    }
}

fn matrix(rows: usize, dims: usize, seed: u64) -> FeatureMatrix {
    let mut r = rng::stream(seed, 1);
    FeatureMatrix::dense(rows, dims, (0..rows * dims).map(|_| r.random_range(-2.0..2.0)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn w2_is_symmetric_and_nonnegative(rows in 2usize..30, dims in 1usize..6, sa in any::<u64>(), sb in any::<u64>()) {
        let a = fit_gaussian(&matrix(rows, dims, sa), DEFAULT_FULL_COVARIANCE_CAP).unwrap();
        let b = fit_gaussian(&matrix(rows + 3, dims, sb), DEFAULT_FULL_COVARIANCE_CAP).unwrap();
        let ab = gaussian_w2(&a, &b).unwrap();
        let ba = gaussian_w2(&b, &a).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-9 * (1.0 + ab), "{ab} {ba} {}", ab - ba);
        prop_assert!(gaussian_w2(&a, &a).unwrap() <= 1e-8);
    }
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use adapt_cli::{
    cmd_drift, cmd_report, cmd_run, cmd_search, cmd_synth, read_run_manifest, CliError, DriftRequest, ExperimentConfig,
    Overrides, ReportRequest, SynthRequest,
};
use adapt_core::drift::DriftOptions;
use adapt_core::engine::Mode;
use adapt_core::learners::{LearnerKind, LearnerSpec};
use adapt_core::search_space::{adapt_in_range, learner_in_range};
use adapt_core::synthetic::RotatingDriftSpec;

fn small_spec() -> RotatingDriftSpec {
    RotatingDriftSpec {
        n_per_class: 40,
        periods: 6,
        ..RotatingDriftSpec::default()
    }
}

/// Synthetic dataset in `dir/data` and its starter config, writing into
/// `dir/<out>`.
fn setup(dir: &Path, validation_periods: usize, out: &str) -> ExperimentConfig {
    let data = dir.join("data");
    cmd_synth(&SynthRequest {
        out: data.clone(),
        spec: small_spec(),
        validation_periods,
    })
    .unwrap();
    let mut cfg = ExperimentConfig::load(&data.join("experiment.toml")).unwrap();
    Overrides {
        output_dir: Some(dir.join(out)),
        seeds: Some(vec![0]),
        ..Overrides::default()
    }
    .apply(&mut cfg);
    cfg
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn hash_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn run_writes_three_hashed_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), 0, "out");
    let out = cmd_run(&cfg).unwrap();
    let mut names: Vec<String> = fs::read_dir(dir.path().join("out"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["metrics.csv", "model_seed0.json", "run_manifest.jsonl"]);
    assert_eq!(hash_line(&out.metrics), format!("# config_hash: {}", out.config_hash));
    let model: serde_json::Value = serde_json::from_slice(&fs::read(&out.models[0]).unwrap()).unwrap();
    assert_eq!(model["config_hash"], out.config_hash.as_str());
    let manifest = read_run_manifest(&out.manifest).unwrap();
    assert_eq!(manifest.header.config_hash, out.config_hash);
    assert_eq!(manifest.seeds[&0].0.len(), small_spec().periods - 1);
}

#[test]
fn bad_manifest_path_is_a_validation_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(dir.path().join("nowhere/manifest.toml"));
    cfg.output_dir = dir.path().join("out");
    let err = cmd_run(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert!(err.to_string().contains("nowhere/manifest.toml"), "{err}");
}

#[test]
fn report_reproduces_metrics_and_exposure_is_prefix_sum_of_fn() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), 0, "out");
    let run = cmd_run(&cfg).unwrap();
    let rep = cmd_report(&ReportRequest {
        manifest: run.manifest.clone(),
        out: Some(dir.path().join("rep")),
        bins: None,
    })
    .unwrap();
    assert_eq!(fs::read(&rep.metrics).unwrap(), fs::read(&run.metrics).unwrap());
    assert!(hash_line(&rep.calibration).ends_with(&run.config_hash));

    let rows = csv_rows(&rep.metrics);
    let mut total = 0usize;
    for row in rows.iter().filter(|r| r[1] != "mean") {
        total += row[5].parse::<usize>().unwrap();
        assert_eq!(row[9].parse::<usize>().unwrap(), total);
    }
    let cal = csv_rows(&rep.calibration);
    let all = cal.iter().find(|r| r[1] == "all").unwrap();
    let counted: usize = cal.iter().filter(|r| r[1] != "all").map(|r| r[4].parse::<usize>().unwrap()).sum();
    assert_eq!(all[4].parse::<usize>().unwrap(), counted);
}

#[test]
fn offline_and_oracle_reports_line_up_with_adapt() {
    let dir = tempfile::tempdir().unwrap();
    let base = setup(dir.path(), 0, "adapt");
    let mut reports = Vec::new();
    for (name, mode) in [("adapt", Mode::Adapt), ("oracle", Mode::Oracle), ("offline", Mode::Offline)] {
        let mut cfg = base.clone();
        cfg.output_dir = dir.path().join(name);
        cfg.adapt.mode = mode;
        reports.push(csv_rows(&cmd_run(&cfg).unwrap().metrics));
    }
    let keys = |rows: &Vec<Vec<String>>| rows.iter().map(|r| (r[0].clone(), r[1].clone())).collect::<Vec<_>>();
    assert_eq!(keys(&reports[0]), keys(&reports[1]));
    assert_eq!(keys(&reports[0]), keys(&reports[2]));
    let offline: Vec<&String> = reports[2].iter().filter(|r| r[1] != "mean").map(|r| &r[12]).collect();
    assert!(offline.windows(2).all(|w| w[0] == w[1]));
    assert!(reports[2].iter().all(|r| !r[6].is_empty()));
}

#[test]
fn truncated_manifest_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), 0, "out");
    let run = cmd_run(&cfg).unwrap();
    let text = fs::read_to_string(&run.manifest).unwrap();
    let cut: Vec<&str> = text.lines().take(3).collect();
    let partial = dir.path().join("partial.jsonl");
    fs::write(&partial, cut.join("\n")).unwrap();
    let err = cmd_report(&ReportRequest {
        manifest: partial,
        out: Some(dir.path().join("rep")),
        bins: None,
    })
    .unwrap_err();
    assert!(matches!(err, CliError::Validation(_)) && err.to_string().contains("incomplete"), "{err}");
}

#[test]
fn drift_identity_and_optional_fdd_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), 1, "out");
    let manifest = dir.path().join("data/manifest.toml");
    let req = |model: Option<PathBuf>, fdd: bool, out: &str| DriftRequest {
        manifest: manifest.clone(),
        model,
        fdd,
        options: DriftOptions::default(),
        out: dir.path().join(out),
    };

    let rows = cmd_drift(&req(None, false, "d1.csv")).unwrap();
    assert!(rows[0].otdd <= 1e-6);
    assert!(rows.iter().all(|r| r.fdd.is_none()));
    let text = fs::read_to_string(dir.path().join("d1.csv")).unwrap();
    assert_eq!(text.lines().nth(1), Some("period,split,otdd"));

    assert_eq!(cmd_drift(&req(None, true, "d2.csv")).unwrap_err().exit_code(), 1);

    let mut mlp_cfg = cfg.clone();
    mlp_cfg.learner = LearnerSpec::default_for(LearnerKind::Mlp);
    let run = cmd_run(&mlp_cfg).unwrap();
    let rows = cmd_drift(&req(Some(run.models[0].clone()), true, "d3.csv")).unwrap();
    assert!(rows[0].fdd.unwrap() <= 1e-6, "{:?}", rows[0]);
    assert!(rows.iter().skip(1).all(|r| r.fdd.unwrap() > 0.0));
    let text = fs::read_to_string(dir.path().join("d3.csv")).unwrap();
    assert_eq!(text.lines().nth(1), Some("period,split,otdd,fdd"));

    let err = cmd_drift(&req(Some(cmd_run(&cfg).unwrap().models[0].clone()), true, "d4.csv")).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn search_is_reproducible_and_stays_in_range() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = setup(dir.path(), 2, "s1");
    cfg.search.budget = 6;
    cfg.search.seed = 11;
    let a = cmd_search(&cfg).unwrap();
    assert_eq!(a.trials.len(), 6);
    assert!(a.trials.iter().all(|t| t.in_range && learner_in_range(&t.learner) && adapt_in_range(&t.adapt)));
    let best_f1 = a.trials[a.best_trial].mean_f1.unwrap();
    assert!(a.trials.iter().all(|t| t.mean_f1.unwrap() <= best_f1));
    assert_eq!(a.best.adapt, a.trials[a.best_trial].adapt);

    let mut again = cfg.clone();
    again.output_dir = dir.path().join("s2");
    let b = cmd_search(&again).unwrap();
    assert_eq!(fs::read(&a.log).unwrap(), fs::read(&b.log).unwrap());

    let reloaded = ExperimentConfig::load(&a.best_config).unwrap();
    assert_eq!(reloaded.learner, a.best.learner);
    cmd_run(&reloaded).unwrap();

    let mut one = cfg.clone();
    one.search.budget = 1;
    one.output_dir = dir.path().join("s3");
    let single = cmd_search(&one).unwrap();
    assert_eq!(single.best_trial, 0);
    assert_eq!(single.best.learner, a.trials[0].learner);
}

#[test]
fn search_needs_validation_periods() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = setup(dir.path(), 0, "s");
    cfg.search.budget = 1;
    let err = cmd_search(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert!(err.to_string().contains("validation"), "{err}");
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_adapt");
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let ok = Command::new(bin)
        .args(["synth", data.to_str().unwrap(), "--n-per-class", "30", "--periods", "4"])
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));

    let config = data.join("experiment.toml");
    let run = Command::new(bin)
        .args(["run", "-c", config.to_str().unwrap(), "--seeds", "0", "--no-mixup", "--mode", "adapt"])
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(run.stdout.is_empty());
    assert!(data.join("runs/metrics.csv").is_file());

    let missing = Command::new(bin).args(["run", "-c", "/nonexistent/cfg.toml"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent/cfg.toml"));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "dataset = \"data/manifest.toml\"\nunknown_key = 3\n").unwrap();
    let out = Command::new(bin).args(["run", "-c", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    fs::write(&bad, "dataset = \"data/manifest.toml\"\n[adapt]\ntau_b = 0.7\n").unwrap();
    let out = Command::new(bin)
        .args(["run", "-c", bad.to_str().unwrap(), "--seeds", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(bin)
        .args(["run", "-c", bad.to_str().unwrap(), "--seeds", "0", "--allow-out-of-range"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    fs::write(&bad, "dataset = \"data/manifest.toml\"\n[learner]\nkind = \"forest\"\n[adapt]\nmix_label_mode = \"fractional\"\n").unwrap();
    let out = Command::new(bin)
        .args(["run", "-c", bad.to_str().unwrap(), "--seeds", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

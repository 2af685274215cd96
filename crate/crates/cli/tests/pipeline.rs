//! End-to-end pipeline tests over synthetic datasets and the binary.

use std::path::{Path, PathBuf};
use std::process::Command;

use hotgrid_cli::config::{ExperimentConfig, Overrides};
use hotgrid_cli::{runner, synthio};
use hotgrid_core::synth;

fn write_dataset(dir: &Path, seed: u64) -> PathBuf {
    let config = synth::SynthConfig {
        width: 10,
        height: 10,
        days: 150,
        target_rate: 4e-3,
        static_effect: 1.2,
        seed,
        ..synth::SynthConfig::default()
    };
    let data = synth::generate(&config).unwrap();
    synthio::write_synth_dataset(dir, &config, &data).unwrap();
    dir.join("experiment.toml")
}

fn load(config_path: &Path, overrides: Overrides) -> ExperimentConfig {
    ExperimentConfig::load(config_path, &overrides).unwrap()
}

/// Fast single-spec learner for tests.
fn fast_learner(config_path: &Path) {
    let text = std::fs::read_to_string(config_path).unwrap();
    let text = text.replace("trees = 50", "trees = 15").replace("depth = 8", "depth = 6");
    std::fs::write(config_path, text).unwrap();
}

#[test]
fn staged_run_equals_single_shot() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = write_dataset(dir.path(), 3);
    fast_learner(&config_path);

    let staged = load(
        &config_path,
        Overrides {
            out_dir: Some(dir.path().join("staged")),
            phi: Some(3),
            ..Overrides::default()
        },
    );
    runner::train_stage(&staged).unwrap();
    runner::evaluate_stage(&staged, false).unwrap();

    let single = load(
        &config_path,
        Overrides {
            out_dir: Some(dir.path().join("single")),
            phi: Some(3),
            ..Overrides::default()
        },
    );
    runner::run_experiment(&single, false).unwrap();

    for file in ["metrics.csv", "surveillance.csv", "daily_hits.csv"] {
        let a = std::fs::read(dir.path().join("staged").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("single").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between staged and single-shot runs");
    }
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = write_dataset(dir.path(), 11);
    fast_learner(&config_path);
    for out in ["a", "b"] {
        let cfg = load(
            &config_path,
            Overrides {
                out_dir: Some(dir.path().join(out)),
                phi: Some(2),
                ..Overrides::default()
            },
        );
        runner::run_experiment(&cfg, false).unwrap();
    }
    for file in ["metrics.csv", "surveillance.csv", "daily_hits.csv"] {
        let a = std::fs::read(dir.path().join("a").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} not reproducible");
    }
}

#[test]
fn hyper_with_phi_one_matches_under_strategy() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = write_dataset(dir.path(), 5);
    fast_learner(&config_path);

    let hyper = load(
        &config_path,
        Overrides {
            strategy: Some("hyper".into()),
            phi: Some(1),
            out_dir: Some(dir.path().join("hyper1")),
            ..Overrides::default()
        },
    );
    runner::run_experiment(&hyper, false).unwrap();

    let under = load(
        &config_path,
        Overrides {
            strategy: Some("under".into()),
            out_dir: Some(dir.path().join("under")),
            ..Overrides::default()
        },
    );
    runner::run_experiment(&under, false).unwrap();

    let a = std::fs::read_to_string(dir.path().join("hyper1").join("surveillance.csv")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("under").join("surveillance.csv")).unwrap();
    assert_eq!(a, b, "phi = 1 ensemble should reproduce the single model");
}

#[test]
fn feature_set_and_strategy_are_echoed_in_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = write_dataset(dir.path(), 9);
    fast_learner(&config_path);
    let cfg = load(
        &config_path,
        Overrides {
            strategy: Some("cost".into()),
            feature_set: Some("crime".into()),
            out_dir: Some(dir.path().join("cost")),
            ..Overrides::default()
        },
    );
    runner::run_experiment(&cfg, false).unwrap();
    let metrics = std::fs::read_to_string(dir.path().join("cost").join("metrics.csv")).unwrap();
    for line in metrics.lines().skip(1) {
        assert!(line.starts_with("cost,random-forest,crime,"), "row: {line}");
    }
}

#[test]
fn every_strategy_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = write_dataset(dir.path(), 21);
    fast_learner(&config_path);
    for strategy in ["majority", "naive", "cost", "under", "over", "smote", "nearmiss"] {
        let cfg = load(
            &config_path,
            Overrides {
                strategy: Some(strategy.into()),
                out_dir: Some(dir.path().join(strategy)),
                ..Overrides::default()
            },
        );
        let report = runner::run_experiment(&cfg, false)
            .unwrap_or_else(|e| panic!("strategy {strategy}: {e}"));
        for level in &report.levels {
            assert!(
                (0.0..=1.0).contains(&level.mean_hit_rate),
                "{strategy} hit rate out of range"
            );
        }
    }
}

#[test]
fn majority_baseline_ranks_the_id_prefix() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = write_dataset(dir.path(), 13);
    let cfg = load(
        &config_path,
        Overrides {
            strategy: Some("majority".into()),
            out_dir: Some(dir.path().join("majority")),
            ..Overrides::default()
        },
    );
    let report = runner::run_experiment(&cfg, false).unwrap();

    // constant scores make the top-k the first k cell ids, so the hit
    // rate must equal a brute-force recount of events in that prefix
    let prepared = runner::prepare(&cfg).unwrap();
    let test = &prepared.test;
    for level in &report.levels {
        let k = (level.coverage * test.n_cells() as f64).floor() as usize;
        let prefix: Vec<_> = test.cells()[..k].to_vec();
        let mut sum = 0.0;
        let mut days = 0usize;
        for local in 0..test.num_buckets() {
            let actual = test.positive_cells(test.first_bucket() + local);
            if actual.is_empty() {
                continue;
            }
            let hits = actual.iter().filter(|c| prefix.contains(c)).count();
            sum += hits as f64 / actual.len() as f64;
            days += 1;
        }
        let expected = sum / days as f64;
        assert!(
            (level.mean_hit_rate - expected).abs() < 1e-12,
            "majority hit rate {} != prefix recount {expected} at coverage {}",
            level.mean_hit_rate,
            level.coverage
        );
    }
}

#[test]
fn weekly_resolution_runs_and_shrinks_buckets() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = write_dataset(dir.path(), 17);
    fast_learner(&config_path);
    let cfg = load(
        &config_path,
        Overrides {
            resolution: Some("weekly".into()),
            strategy: Some("under".into()),
            out_dir: Some(dir.path().join("weekly")),
            ..Overrides::default()
        },
    );
    let summary = runner::ingest_summary(&cfg).unwrap();
    assert_eq!(summary.buckets, 22, "150 days should give 22 weekly buckets");
    runner::run_experiment(&cfg, false).unwrap();
}

#[test]
fn stratified_run_restricts_cells() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = write_dataset(dir.path(), 29);
    fast_learner(&config_path);
    let text = std::fs::read_to_string(&config_path).unwrap();
    let text = format!(
        "{text}\n[stratify]\nfeature = \"popdens\"\nlow = 1.5\nhigh = 5.0\nstratum = \"high\"\n"
    );
    std::fs::write(&config_path, text).unwrap();

    let cfg = load(
        &config_path,
        Overrides {
            strategy: Some("under".into()),
            out_dir: Some(dir.path().join("strat")),
            ..Overrides::default()
        },
    );
    let summary = runner::ingest_summary(&cfg).unwrap();
    assert!(
        summary.eligible_cells < 100,
        "stratification should drop cells, kept {}",
        summary.eligible_cells
    );
    runner::run_experiment(&cfg, false).unwrap();
}

#[test]
fn hyperparameter_grid_runs_cross_validation() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = write_dataset(dir.path(), 53);
    let text = std::fs::read_to_string(&config_path).unwrap();
    let text = text
        .replace("trees = 50", "trees = [4, 12]")
        .replace("depth = 8", "depth = 4");
    std::fs::write(&config_path, text).unwrap();

    // under/hyper tune on the balanced draw, cost on full rows with a
    // per-fold weighting hook
    for strategy in ["under", "cost"] {
        let cfg = load(
            &config_path,
            Overrides {
                strategy: Some(strategy.into()),
                out_dir: Some(dir.path().join(format!("cv-{strategy}"))),
                ..Overrides::default()
            },
        );
        runner::train_stage(&cfg).unwrap();
        let spec_json =
            std::fs::read_to_string(dir.path().join(format!("cv-{strategy}")).join("spec.json"))
                .unwrap();
        let spec: serde_json::Value = serde_json::from_str(&spec_json).unwrap();
        assert_eq!(spec["grid_size"], 2, "{strategy} should have tuned over 2 specs");
        assert_eq!(
            spec["cv_mean_scores"].as_array().unwrap().len(),
            2,
            "{strategy} missing CV scores"
        );
    }
}

#[test]
fn feature_schema_selects_spatial_columns() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = write_dataset(dir.path(), 47);
    fast_learner(&config_path);
    let text = std::fs::read_to_string(&config_path).unwrap();
    let text = format!("{text}\n[features]\nspatial = [\"popdens\", \"s1\"]\n");
    std::fs::write(&config_path, text).unwrap();
    let cfg = load(
        &config_path,
        Overrides {
            strategy: Some("under".into()),
            feature_set: Some("spatial".into()),
            out_dir: Some(dir.path().join("schema")),
            ..Overrides::default()
        },
    );
    let prepared = runner::prepare(&cfg).unwrap();
    assert_eq!(prepared.full.feature_names(), &["popdens", "s1"]);

    // unknown column names are config errors
    let text = std::fs::read_to_string(&config_path).unwrap();
    std::fs::write(&config_path, text.replace("\"s1\"", "\"nope\"")).unwrap();
    let cfg = load(
        &config_path,
        Overrides {
            out_dir: Some(dir.path().join("schema2")),
            ..Overrides::default()
        },
    );
    let Err(err) = runner::prepare(&cfg) else {
        panic!("unknown schema column should fail")
    };
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn leakage_audit_is_clean() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = write_dataset(dir.path(), 31);
    let cfg = load(
        &config_path,
        Overrides {
            out_dir: Some(dir.path().join("audit")),
            ..Overrides::default()
        },
    );
    let prepared = runner::prepare(&cfg).unwrap();
    let audit = runner::build_audit(&cfg, &prepared).unwrap();
    assert_eq!(audit.test_rows_read_before_evaluation, 0);
    assert_eq!(audit.crime_feature_mismatches, 0);
    assert!(audit.crime_feature_rows_checked > 0);
    assert!(audit.train_last_bucket < audit.test_first_bucket);
}

// --- binary-level tests ---

fn hotgrid() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hotgrid"))
}

#[test]
fn binary_synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["s1", "s2"] {
        let status = hotgrid()
            .args([
                "synth",
                "--out",
                dir.path().join(out).to_str().unwrap(),
                "--seed",
                "7",
                "--width",
                "6",
                "--height",
                "6",
                "--days",
                "60",
                "--rate",
                "0.005",
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    for file in ["events.csv", "static.csv", "weather.csv", "truth.csv"] {
        let a = std::fs::read(dir.path().join("s1").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("s2").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs across identical synth invocations");
    }
}

#[test]
fn binary_exit_codes() {
    // 1: config error
    let out = hotgrid()
        .args(["train", "-c", "/definitely/not/a/file.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // 2: data error (config is fine, events file is missing)
    let dir = tempfile::tempdir().unwrap();
    let config_path = write_dataset(dir.path(), 41);
    std::fs::remove_file(dir.path().join("events.csv")).unwrap();
    let out = hotgrid()
        .args(["ingest", "-c", config_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // unknown subcommand: usage text, nonzero exit
    let out = hotgrid().arg("frobnicate").output().unwrap();
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn binary_rank_emits_budgeted_hotspots_and_geojson() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = write_dataset(dir.path(), 43);
    fast_learner(&config_path);
    let cfg = load(
        &config_path,
        Overrides {
            strategy: Some("under".into()),
            out_dir: Some(dir.path().join("run")),
            ..Overrides::default()
        },
    );
    runner::train_stage(&cfg).unwrap();

    let csv_out = dir.path().join("top.csv");
    let geo_out = dir.path().join("top.geojson");
    let status = hotgrid()
        .args([
            "rank",
            "-c",
            config_path.to_str().unwrap(),
            "--strategy",
            "under",
            "--out",
            dir.path().join("run").to_str().unwrap(),
            "--day",
            "2020-03-02",
            "--coverage",
            "0.05",
            "-o",
            csv_out.to_str().unwrap(),
            "--geojson",
            geo_out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());

    let text = std::fs::read_to_string(&csv_out).unwrap();
    // floor(0.05 * 100 cells) = 5 hotspots plus the header
    assert_eq!(text.lines().count(), 6);
    let geo: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&geo_out).unwrap()).unwrap();
    assert_eq!(geo["features"].as_array().unwrap().len(), 5);
}

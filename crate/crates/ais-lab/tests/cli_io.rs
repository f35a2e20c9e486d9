//! Command-level behaviour: output files, schemas, exit-code mapping, and
//! config validation.

use std::path::PathBuf;

use ais_lab::cli::{
    cmd_bounds, cmd_compare, cmd_toy_demo, cmd_train, parse_config, run, ExperimentConfig,
};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ais-lab-cli-{}-{name}", std::process::id()));
    std::fs::remove_dir_all(&dir).ok();
    dir
}

fn bounds_cfg(json: &str) -> ais_lab::cli::BoundsConfig {
    serde_json::from_str(json).unwrap()
}

#[test]
fn bounds_toy_preset_emits_one_row_per_ipm() {
    let dir = scratch("bounds-toy");
    let cfg = bounds_cfg(r#"{"command": "bounds", "preset": "toy", "ipms": ["tv", "w", "mmd"]}"#);
    let out = cmd_bounds(&cfg, &dir).unwrap();
    assert_eq!(out.violations, 0);
    let csv = std::fs::read_to_string(dir.join("bounds.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("seed,n_states,n_actions,n_features,ipm,"));
    for line in &lines[1..] {
        assert!(line.ends_with("false"), "violated column must be false: {line}");
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn bounds_identity_preset_is_all_zero() {
    let dir = scratch("bounds-id");
    let cfg = bounds_cfg(r#"{"command": "bounds", "preset": "identity", "ipms": ["tv"]}"#);
    cmd_bounds(&cfg, &dir).unwrap();
    let csv = std::fs::read_to_string(dir.join("bounds.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        // eps, delta, delta_gap columns
        for idx in [5usize, 6, 8] {
            let v: f64 = cols[idx].parse().unwrap();
            assert!(v.abs() <= 1e-9, "column {idx} of {line}");
        }
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn bounds_random_campaign_is_rerun_identical() {
    let dir_a = scratch("bounds-ra");
    let dir_b = scratch("bounds-rb");
    let cfg = bounds_cfg(r#"{"command": "bounds", "random_instances": 10, "seed": 7}"#);
    cmd_bounds(&cfg, &dir_a).unwrap();
    cmd_bounds(&cfg, &dir_b).unwrap();
    let a = std::fs::read(dir_a.join("bounds.csv")).unwrap();
    let b = std::fs::read(dir_b.join("bounds.csv")).unwrap();
    assert_eq!(a, b);
    std::fs::remove_dir_all(&dir_a).ok();
    std::fs::remove_dir_all(&dir_b).ok();
}

#[test]
fn train_writes_per_seed_aggregate_and_svg() {
    let dir = scratch("train");
    let cfg: ais_lab::cli::TrainCommandConfig = serde_json::from_str(
        r#"{
            "command": "train",
            "env": "toy",
            "agent": "memoryless",
            "seeds": [3, 4, 5],
            "train": {"iterations": 6, "episode_len": 8, "feature_dim": 4}
        }"#,
    )
    .unwrap();
    cmd_train(&cfg, &dir).unwrap();
    for seed in [3, 4, 5] {
        let csv = std::fs::read_to_string(dir.join(format!("metrics_seed{seed}.csv"))).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "iteration,mean_return,ais_loss,reward_loss,transition_loss,eps_hat,delta_hat,wallclock_ms"
        );
        assert_eq!(csv.lines().count(), 7);
    }
    let agg = std::fs::read_to_string(dir.join("aggregate.csv")).unwrap();
    assert!(agg.starts_with("iteration,return_median,return_q1,return_q3,ais_loss_median"));
    assert_eq!(agg.lines().count(), 7);
    let svg = std::fs::read_to_string(dir.join("learning_curve.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("polyline"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn zero_iteration_run_emits_header_only_metrics() {
    let dir = scratch("train-zero");
    let cfg: ais_lab::cli::TrainCommandConfig = serde_json::from_str(
        r#"{
            "command": "train",
            "env": "toy",
            "agent": "ais-ac",
            "seeds": [0],
            "train": {"iterations": 0, "episode_len": 8, "feature_dim": 4}
        }"#,
    )
    .unwrap();
    cmd_train(&cfg, &dir).unwrap();
    let csv = std::fs::read_to_string(dir.join("metrics_seed0.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1, "header-only metrics CSV");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn compare_rejects_a_single_variant_and_runs_two() {
    let dir = scratch("compare");
    let single: ais_lab::cli::CompareConfig = serde_json::from_str(
        r#"{
            "command": "compare",
            "env": "toy",
            "variants": [{"name": "only"}],
            "train": {"iterations": 3, "episode_len": 6, "feature_dim": 4}
        }"#,
    )
    .unwrap();
    assert!(matches!(
        cmd_compare(&single, &dir),
        Err(ais_lab::Error::Config(_))
    ));

    let two: ais_lab::cli::CompareConfig = serde_json::from_str(
        r#"{
            "command": "compare",
            "env": "toy",
            "seeds": [0, 1],
            "variants": [
                {"name": "mmd-energy", "ipm": "mmd-energy"},
                {"name": "kl", "ipm": "kl"}
            ],
            "train": {"iterations": 4, "episode_len": 6, "feature_dim": 4}
        }"#,
    )
    .unwrap();
    cmd_compare(&two, &dir).unwrap();
    let csv = std::fs::read_to_string(dir.join("compare.csv")).unwrap();
    assert!(csv.starts_with(
        "iteration,mmd-energy_median,mmd-energy_q1,mmd-energy_q3,kl_median,kl_q1,kl_q3"
    ));
    assert_eq!(csv.lines().count(), 5);
    let svg = std::fs::read_to_string(dir.join("compare.svg")).unwrap();
    assert!(svg.matches("<polyline").count() >= 2, "two labeled curves");
    assert!(svg.contains("mmd-energy") && svg.contains("kl"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn compare_kernel_sweep_on_pointmass() {
    let dir = scratch("compare-kernels");
    let cfg: ais_lab::cli::CompareConfig = serde_json::from_str(
        r#"{
            "command": "compare",
            "env": "pointmass",
            "seeds": [0, 1],
            "variants": [
                {"name": "energy", "mmd_kernel": "energy"},
                {"name": "gaussian", "mmd_kernel": "gaussian", "kernel_width": 1.0},
                {"name": "laplace", "mmd_kernel": "laplace", "kernel_width": 1.0}
            ],
            "train": {"iterations": 3, "episode_len": 8, "feature_dim": 4, "ppo_epochs": 2}
        }"#,
    )
    .unwrap();
    cmd_compare(&cfg, &dir).unwrap();
    let svg = std::fs::read_to_string(dir.join("compare.svg")).unwrap();
    for name in ["energy", "gaussian", "laplace"] {
        assert!(svg.contains(name), "curve label {name} missing");
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn toy_demo_reports_the_three_claims() {
    let cfg: ais_lab::cli::ToyDemoConfig =
        serde_json::from_str(r#"{"command": "toy-demo"}"#).unwrap();
    let report = cmd_toy_demo(&cfg).unwrap();
    assert!(report.contains("pi*(2)=1"));
    assert!(report.contains("pi*(3)=2"));
    assert!(report.contains("state 3 unreachable"));
    assert!(report.contains("min gap v*(2) - v(2)"));
}

#[test]
fn config_parser_rejects_unknown_keys_and_commands() {
    assert!(parse_config(r#"{"command": "bounds", "extra_key": 1}"#).is_err());
    assert!(parse_config(r#"{"command": "launch-missiles"}"#).is_err());
    assert!(parse_config(r#"{"no_command": true}"#).is_err());
    match parse_config(r#"{"command": "bounds"}"#).unwrap() {
        ExperimentConfig::Bounds(b) => assert_eq!(b.ipms, vec!["tv", "w", "mmd"]),
        _ => panic!("wrong variant"),
    }
}

#[test]
fn run_maps_errors_to_exit_codes() {
    // Unknown flag: config error.
    assert_eq!(run(&["bounds".into(), "--bogus".into()]), 2);
    // Missing config file: config error.
    assert_eq!(
        run(&[
            "bounds".into(),
            "--config".into(),
            "/nonexistent/path.json".into()
        ]),
        2
    );
    // toy-demo succeeds without a config.
    assert_eq!(run(&["toy-demo".into()]), 0);
}

#[test]
fn run_executes_a_config_file_end_to_end() {
    let dir = scratch("run-e2e");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg_path = dir.join("bounds.json");
    std::fs::write(
        &cfg_path,
        r#"{"command": "bounds", "preset": "toy", "ipms": ["tv"]}"#,
    )
    .unwrap();
    let code = run(&[
        "bounds".into(),
        "--config".into(),
        cfg_path.to_string_lossy().into_owned(),
        "--out".into(),
        dir.join("out").to_string_lossy().into_owned(),
    ]);
    assert_eq!(code, 0);
    assert!(dir.join("out/bounds.csv").exists());
    std::fs::remove_dir_all(&dir).ok();
}

//! Integration tests for the experiment harness: trace schema, sidecar
//! round-trips, seed sweeps, and exit-code classification.

use menu_forge::dispersion::BoundedDensity;
use menu_forge::harness::{
    check_trace_invariants, run_erm, run_experiment, run_online, run_seed_sweep, AdversarySpec,
    ExperimentConfig, Family, Learner, LearnerParams, TRACE_HEADER,
};
use menu_forge::limited_types::TypeSet;
use menu_forge::mechanisms::UnitValuation;
use menu_forge::Error;

fn base_config(output: std::path::PathBuf) -> ExperimentConfig {
    ExperimentConfig {
        family: Family::Tariff,
        ell: 1,
        max_units: Some(2),
        items: None,
        h: 1.0,
        learner: Learner::Wm,
        params: LearnerParams {
            alpha: Some(0.25),
            ..Default::default()
        },
        adversary: AdversarySpec::Iid {
            density: BoundedDensity::Uniform { lo: 0.0, hi: 1.0 },
            shared_mix: None,
        },
        rounds: Some(10),
        samples: None,
        types: None,
        seed: 1,
        output,
    }
}

#[test]
fn wm_trace_has_t_rows_and_valid_columns() {
    let dir = tempfile::tempdir().unwrap();
    let config = base_config(dir.path().join("t.csv"));
    run_experiment(&config).unwrap();
    let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), TRACE_HEADER);
    assert_eq!(lines.count(), 10);

    let (trace, _) = run_online(&config).unwrap();
    check_trace_invariants(&trace).unwrap();
}

#[test]
fn sidecar_config_echo_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let config = base_config(dir.path().join("t.csv"));
    run_experiment(&config).unwrap();
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("t.csv.meta.json")).unwrap())
            .unwrap();
    let mut echoed: ExperimentConfig = serde_json::from_value(sidecar["config"].clone()).unwrap();
    echoed.output = dir.path().join("rerun.csv");
    run_experiment(&echoed).unwrap();
    let a = std::fs::read(dir.path().join("t.csv")).unwrap();
    let b = std::fs::read(dir.path().join("rerun.csv")).unwrap();
    assert_eq!(a, b);
    assert!(sidecar["content_hash"]
        .as_str()
        .unwrap()
        .starts_with("sha256:"));
}

#[test]
fn seed_sweep_writes_one_file_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = base_config(dir.path().join("sweep.csv"));
    run_seed_sweep(&config, 3..6).unwrap();
    for seed in 3..6 {
        assert!(dir.path().join(format!("sweep_seed{seed}.csv")).exists());
        assert!(dir
            .path()
            .join(format!("sweep_seed{seed}.csv.meta.json"))
            .exists());
    }
}

#[test]
fn config_errors_map_to_exit_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = base_config(dir.path().join("x.csv"));
    config.rounds = None;
    let err = run_experiment(&config).unwrap_err();
    assert_eq!(err.exit_code(), 2);

    let bad_json = dir.path().join("bad.json");
    std::fs::write(&bad_json, "{not json").unwrap();
    let err = ExperimentConfig::from_json_file(&bad_json).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn oversized_cover_maps_to_exit_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = base_config(dir.path().join("x.csv"));
    config.ell = 3;
    config.params.alpha = Some(0.001);
    let err = run_experiment(&config).unwrap_err();
    assert!(matches!(err, Error::EnumerationTooLarge { .. }), "{err}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn limited_run_reports_structure_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = base_config(dir.path().join("lim.csv"));
    config.learner = Learner::Limited;
    config.rounds = Some(2048);
    config.types = Some(
        TypeSet::unit(vec![
            UnitValuation::new(vec![0.0, 0.55, 0.8], 1.0).unwrap(),
            UnitValuation::new(vec![0.0, 0.25, 0.45], 1.0).unwrap(),
        ])
        .unwrap(),
    );
    run_experiment(&config).unwrap();
    let sidecar: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("lim.csv.meta.json")).unwrap(),
    )
    .unwrap();
    let extra = &sidecar["report"]["extra"];
    for key in ["extreme_points", "indicators", "spanner_size", "blocks"] {
        assert!(extra[key].as_u64().unwrap() > 0, "missing {key}");
    }
}

#[test]
fn lottery_family_online_and_erm_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = base_config(dir.path().join("lot.csv"));
    config.family = Family::Lottery;
    config.max_units = None;
    config.items = Some(1);
    config.params.alpha = Some(0.5);
    config.params.delta = Some(0.3);
    config.params.levels = Some(2);
    config.rounds = Some(12);
    run_experiment(&config).unwrap();
    let text = std::fs::read_to_string(dir.path().join("lot.csv")).unwrap();
    assert_eq!(text.lines().count(), 13);

    config.learner = Learner::Erm;
    config.rounds = None;
    config.samples = Some(40);
    config.params.epsilon = Some(0.3);
    config.output = dir.path().join("lot_erm.json");
    let report = run_erm(&config).unwrap();
    assert_eq!(report.samples_used, 40);
    assert!(report.cover_size > 0);
}

#[test]
fn erm_report_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = base_config(dir.path().join("erm.json"));
    config.learner = Learner::Erm;
    config.rounds = None;
    config.samples = Some(64);
    config.params.epsilon = Some(0.2);
    let a = run_erm(&config).unwrap();
    let b = run_erm(&config).unwrap();
    assert_eq!(a.menu_index, b.menu_index);
    assert_eq!(a.empirical_revenue, b.empirical_revenue);
    assert_eq!(a.samples_used, 64);
}

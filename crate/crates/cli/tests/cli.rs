//! End-to-end checks of the installed binary: subcommands, config files,
//! flag overrides, and exit codes.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_menu-forge"))
}

#[test]
fn cover_prints_exact_count() {
    let out = bin()
        .args([
            "cover", "--family", "tariff", "--ell", "1", "--alpha", "0.5",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("menus=9"), "{text}");
}

#[test]
fn online_run_writes_trace_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("run.csv");
    let out = bin()
        .args([
            "online", "--family", "tariff", "--k", "2", "--t", "16", "--alpha", "0.25", "--seed",
            "9", "--output",
        ])
        .arg(&trace)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(text.lines().count(), 17);
    assert!(dir.path().join("run.csv.meta.json").exists());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    let trace = dir.path().join("out.csv");
    let config = serde_json::json!({
        "family": "tariff",
        "ell": 1,
        "max_units": 2,
        "h": 1.0,
        "learner": "wm",
        "params": {"alpha": 0.25},
        "adversary": {"kind": "iid", "density": {"kind": "triangular_down"}},
        "rounds": 8,
        "seed": 4,
        "output": trace,
    });
    std::fs::write(&config_path, config.to_string()).unwrap();
    let out = bin()
        .args(["online", "--config"])
        .arg(&config_path)
        .args(["--t", "12"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(text.lines().count(), 13, "flag must override rounds");
}

#[test]
fn malformed_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("bad.json");
    std::fs::write(&config_path, "{").unwrap();
    let out = bin()
        .args(["online", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oversized_cover_exits_three() {
    let out = bin()
        .args([
            "online",
            "--family",
            "tariff",
            "--k",
            "1",
            "--ell",
            "3",
            "--t",
            "4",
            "--alpha",
            "0.0001",
            "--output",
            "/dev/null",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn dispersion_outputs_csv_headers() {
    let out = bin()
        .args(["dispersion", "lottery-failure", "--trials", "100"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("epsilon,estimate,floor\n"), "{text}");

    let out = bin()
        .args([
            "dispersion",
            "tariff-splits",
            "--t",
            "50",
            "--centers",
            "16",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("w,mean_splits,max_splits\n"), "{text}");
}

#[test]
fn enumeration_cap_env_var_is_honored() {
    // 9 menus with a cap of 5: the dump must fail with exit code 3.
    let out = bin()
        .env("MENU_FORGE_CAP", "5")
        .args([
            "cover", "--family", "tariff", "--ell", "1", "--alpha", "0.5", "--dump",
        ])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("9") && err.contains("5"),
        "cap error must name the count: {err}"
    );
}

#[test]
fn seed_sweep_flag_produces_per_seed_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "bandit", "--family", "tariff", "--k", "1", "--t", "8", "--alpha", "0.5", "--seeds",
            "1..3", "--output",
        ])
        .arg(dir.path().join("sweep.csv"))
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("sweep_seed1.csv").exists());
    assert!(dir.path().join("sweep_seed2.csv").exists());
}

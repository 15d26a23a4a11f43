use std::path::Path;
use std::process::{Command, Output};

fn gkdv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gkdv")).args(args).env_remove("GKDV_OUT_DIR").output().unwrap()
}

fn small_soliton_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("soliton.json");
    let cfg = r#"{
        "scenario": "soliton",
        "grid": { "box_length": 60.0, "modes": 256 },
        "solver": { "dt": 0.002, "t_end": 0.2, "snapshot_stride": 25 },
        "trace_stride": 2,
        "seed": 1
    }"#;
    std::fs::write(&path, cfg).unwrap();
    path
}

#[test]
fn help_lists_every_subcommand() {
    let out = gkdv(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in ["simulate", "soliton-check", "norms", "scatter", "sweep", "verify", "emit-plot-data"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
}

#[test]
fn simulate_then_emit_plot_data() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_soliton_config(tmp.path());
    let run = tmp.path().join("run");
    let out = gkdv(&["simulate", "--config", cfg.to_str().unwrap(), "--out", run.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(run.join("manifest.json").is_file());
    assert!(run.join("trace/index.json").is_file());

    let plots = tmp.path().join("plots");
    let out = gkdv(&[
        "emit-plot-data",
        "--manifest",
        run.to_str().unwrap(),
        "--quantity",
        "conserved",
        "--out",
        plots.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(plots.join("conserved.csv")).unwrap();
    assert!(csv.starts_with("t,mass,energy\n"));
    assert_eq!(csv.lines().count(), 1 + 5);

    // a soliton run has no modulation path
    let out = gkdv(&["emit-plot-data", "--manifest", run.to_str().unwrap(), "--quantity", "lambda_path"]);
    assert_eq!(out.status.code(), Some(1));
    let out = gkdv(&["emit-plot-data", "--manifest", run.to_str().unwrap(), "--quantity", "bogus"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn invalid_config_exits_with_one_and_computes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("odd.json");
    std::fs::write(&path, r#"{ "scenario": "soliton", "grid": { "box_length": 60.0, "modes": 255 } }"#).unwrap();
    let run = tmp.path().join("run");
    let out = gkdv(&["simulate", "--config", path.to_str().unwrap(), "--out", run.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!run.exists());

    std::fs::write(&path, r#"{ "scenario": "soliton", "gird": {} }"#).unwrap();
    let out = gkdv(&["simulate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_flag_is_a_validation_error() {
    assert_eq!(gkdv(&["simulate", "--no-such-flag"]).status.code(), Some(1));
}

#[test]
fn runtime_failure_exits_with_two_and_leaves_a_partial_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("huge.json");
    // a perturbation this large cannot be fitted by a soliton
    std::fs::write(
        &path,
        r#"{ "scenario": "perturbed_soliton", "grid": { "box_length": 200.0, "modes": 1024 },
             "solver": { "dt": 0.001, "t_end": 1.5, "snapshot_stride": 20 },
             "perturbation": { "epsilon": 2.0 }, "checkpoints": { "count": 3 }, "kato_scale": null }"#,
    )
    .unwrap();
    let run = tmp.path().join("run");
    let out = gkdv(&["scatter", "--config", path.to_str().unwrap(), "--out", run.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "partial");
    assert_eq!(manifest["failure"]["stage"], "initial_data");
}

#[test]
fn soliton_check_prints_identities() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gkdv(&["soliton-check", "--out", tmp.path().to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("ode_residual_max"));
    assert!(tmp.path().join("soliton_identities.json").is_file());
}

#[test]
fn verify_quick_passes_and_fault_injection_fails() {
    let out = gkdv(&["verify", "--level", "quick"]);
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(out.status.success(), "{text}");
    assert!(text.contains("5/5 criteria passed"), "{text}");

    let out = gkdv(&["verify", "--level", "quick", "--break-dealiasing"]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().any(|l| l.starts_with("dealiasing") && l.contains("FAIL")), "{text}");
}

#[test]
fn out_dir_environment_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_soliton_config(tmp.path());
    let target = tmp.path().join("from_env");
    let out = Command::new(env!("CARGO_BIN_EXE_gkdv"))
        .args(["simulate", "--config", cfg.to_str().unwrap()])
        .env("GKDV_OUT_DIR", &target)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(target.join("manifest.json").is_file());
}

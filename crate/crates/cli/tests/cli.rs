use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const PLANE: &str = r#"
scenario = "probability"
h = [1.0, 0.1]
hessian = "bracket"

[systems.q]
kind = "position"

[systems.p]
kind = "momentum"

[[cases]]
systems = ["q", "p"]
levels = [0.3, -1.1]
tolerance = TOL
"#;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn semiclass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semiclass"))
        .args(args)
        .env_remove("SEMICLASS_OUT_DIR")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn run_in(dir: &Path, scenario: &str, config: &str, extra: &[&str]) -> Output {
    let out = dir.join("out");
    let mut args = vec![scenario, "--config", config, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    semiclass(&args)
}

#[test]
fn passing_run_writes_versioned_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "plane.toml", &PLANE.replace("TOL", "1e-10"));
    let out = run_in(dir.path(), "probability", &cfg, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("PASS "), "{stdout}");
    let csv = fs::read_to_string(dir.path().join("out/cases.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# semiclass cases v1"));
    assert_eq!(lines.next(), Some("case,label,h,quantity,semiclassical,oracle,abs_error,rel_error,passed"));
    assert_eq!(lines.count(), 2);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["version"], 1);
    assert_eq!(report["scenario"], "probability");
}

#[test]
fn failed_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "plane.toml", &PLANE.replace("TOL", "1e-30"));
    let out = run_in(dir.path(), "probability", &cfg, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
    // the report is still written so the failure can be inspected
    assert!(dir.path().join("out/report.json").exists());
}

#[test]
fn malformed_config_exits_one_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let bad = PLANE.replace("TOL", "1e-10").replace("hessian", "hesian");
    let cfg = write_config(dir.path(), "bad.toml", &bad);
    let out = run_in(dir.path(), "probability", &cfg, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hesian"));
    assert!(!dir.path().join("out").exists());

    let cfg = write_config(dir.path(), "unknown.toml", &PLANE.replace("TOL", "1e-10").replace("\"q\", \"p\"", "\"q\", \"r\""));
    assert_eq!(run_in(dir.path(), "probability", &cfg, &[]).status.code(), Some(1));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn scenario_must_match_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "plane.toml", &PLANE.replace("TOL", "1e-10"));
    let out = run_in(dir.path(), "overlap", &cfg, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("'overlap' subcommand"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn zero_jobs_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "plane.toml", &PLANE.replace("TOL", "1e-10"));
    assert_eq!(run_in(dir.path(), "probability", &cfg, &["--jobs", "0"]).status.code(), Some(1));
}

#[test]
fn warnings_exit_two() {
    // the requested range reaches above the separatrix, so the ladder is clipped
    let text = r#"
scenario = "spectrum"
h = [0.2]

[systems.pendulum]
kind = "pendulum"

[[cases]]
systems = ["pendulum"]
level_range = [-0.9, 1.5]
"#;
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "pendulum.toml", text);
    let out = run_in(dir.path(), "spectrum", &cfg, &[]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(dir.path().join("out/report.json")).unwrap();
    assert!(report.contains("level_range_clipped"));
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "plane.toml", &PLANE.replace("TOL", "1e-10"));
    let target = dir.path().join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_semiclass"))
        .args(["probability", "--config", &cfg])
        .env("SEMICLASS_OUT_DIR", &target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join("report.json").exists());
}

#[test]
fn reports_are_reproducible_across_runs_and_thread_counts() {
    let cfg = configs_dir().join("overlap_ho_displaced.toml");
    let cfg = cfg.to_str().unwrap();
    let read = |dir: &Path, extra: &[&str]| {
        let out = run_in(dir, "overlap", cfg, extra);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        (
            fs::read(dir.join("out/report.json")).unwrap(),
            fs::read(dir.join("out/cases.csv")).unwrap(),
            fs::read(dir.join("out/fiber_c0_ho_h0.csv")).unwrap(),
        )
    };
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = read(a.path(), &[]);
    assert_eq!(first, read(b.path(), &[]));
    assert_eq!(first, read(c.path(), &["--jobs", "1"]));
}

#[test]
fn shipped_configs_pass() {
    for (file, scenario) in [
        ("spectrum_ho.toml", "spectrum"),
        ("probability_plane.toml", "probability"),
        ("cyclic_triangle.toml", "cyclic"),
        ("glue_q_ho_p.toml", "glue-check"),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = configs_dir().join(file);
        let out = run_in(dir.path(), scenario, cfg.to_str().unwrap(), &[]);
        assert_eq!(out.status.code(), Some(0), "{file}: {}", String::from_utf8_lossy(&out.stdout));
    }
}

use std::fs;
use std::path::Path;
use std::process::Command;

fn nlslab(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_nlslab"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

const SMALL: &str = r#"
kind = "convergence-gate"
seed = 1
[grid]
points = 16
box_length = 16.0
[solver]
dt = 0.05
t_end = 0.5
[initial]
kind = "gaussian"
amplitude = 0.3
"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn config_errors_exit_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.toml",
        "kind = \"linear-decay\"\n[solver]\ndt = 0.0\nbogus = 1\n",
    );
    let (code, _, err) = nlslab(&["linear-decay", "--config", &bad]);
    assert_eq!(code, 3);
    assert!(err.contains("solver.dt"), "{err}");
    assert!(err.contains("bogus"), "{err}");

    let good = write(dir.path(), "good.toml", SMALL);
    let (code, _, err) = nlslab(&["duhamel", "--config", &good]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn run_writes_manifest_and_exit_code_matches_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let out = dir.path().join("runs");
    let (code, stdout, err) = nlslab(&[
        "convergence-gate",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--jobs",
        "1",
    ]);
    assert!(code == 0 || code == 2, "{err}");
    let run_dir = fs::read_dir(&out).unwrap().next().unwrap().unwrap().path();
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["passed"].as_bool().unwrap(), code == 0);
    assert!(stdout.contains(manifest["run_id"].as_str().unwrap()));
    assert!(run_dir.join("convergence.csv").exists());
    assert!(run_dir.join("config.toml").exists());

    let (code, report, _) = nlslab(&["report", "--runs", &format!("{}/*", out.display())]);
    assert_eq!(code, 0);
    assert!(report.contains("## convergence-gate"));
    assert!(report.contains("richardson_ratio"));
}

#[test]
fn seed_override_changes_run_id() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let out = dir.path().join("runs");
    let o = out.to_str().unwrap();
    nlslab(&["convergence-gate", "--config", &cfg, "--out", o]);
    nlslab(&[
        "convergence-gate",
        "--config",
        &cfg,
        "--out",
        o,
        "--seed",
        "2",
    ]);
    assert_eq!(fs::read_dir(&out).unwrap().count(), 2);
}

#[test]
fn empty_report_is_valid_markdown() {
    let dir = tempfile::tempdir().unwrap();
    let (code, report, _) = nlslab(&[
        "report",
        "--runs",
        &format!("{}/nothing-*", dir.path().display()),
    ]);
    assert_eq!(code, 0);
    assert!(report.starts_with("# nlslab report"));
}

#[test]
fn missing_manifests_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("half-done")).unwrap();
    let (code, report, _) = nlslab(&["report", "--runs", &format!("{}/*", dir.path().display())]);
    assert_eq!(code, 0);
    assert!(report.contains("Missing or unreadable"));
    assert!(report.contains("half-done"));
}

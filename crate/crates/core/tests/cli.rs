use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gauss-vlp"))
}

fn config() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/demo_maximal.toml")
}

#[test]
fn maximal_writes_report_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run/maximal.txt");
    let status = bin()
        .args(["maximal", "--config"])
        .arg(config())
        .arg("--output")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.as_bytes(), status.stdout.as_slice());
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/maximal_d1.txt");
    assert_eq!(text, std::fs::read_to_string(golden).unwrap());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert_eq!(summary["pass"], true);
    assert_eq!(summary["seed"], 7);
    assert!(summary["empirical_k"].as_f64().unwrap() > 1.0);
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| bin().args(args).output().unwrap().status.code();
    assert_eq!(code(&["check-exponent", "--spec", "const2"]), Some(0));
    assert_eq!(code(&["check-exponent", "--spec", "step_jump", "--dim", "2"]), Some(1));
    assert_eq!(code(&["check-exponent", "--spec", "no_such_exponent"]), Some(2));
    assert_eq!(code(&["maximal", "--spec", "step_jump"]), Some(2));
    assert_eq!(code(&["maximal", "--spec", "step_jump", "--force"]), Some(1));
    assert_eq!(code(&["norm", "--config", "/nonexistent.toml"]), Some(2));
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[maximal]\ngamma = \"half\"\n").unwrap();
    let out = bin().arg("maximal").arg("--config").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config"));
}

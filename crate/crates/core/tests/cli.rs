use std::process::Command;

fn picard() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_picard"));
    for var in [
        "PICARD_FORMAT",
        "PICARD_OUTPUT",
        "PICARD_THREADS",
        "PICARD_SEED",
        "PICARD_CONFIG",
    ] {
        cmd.env_remove(var);
    }
    cmd
}

fn json(cmd: &mut Command) -> serde_json::Value {
    let out = cmd.output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn count_reports_config_and_result() {
    let v = json(picard().args(["count", "--X", "1"]));
    assert!(v["config"].is_object());
    assert!(v.to_string().contains("\"count\":4"), "{v}");
}

#[test]
fn invalid_input_exits_two() {
    let out = picard().args(["count", "--X", "0.5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    let out = picard().args(["count", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_exits_zero() {
    let out = picard().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("plan"));
}

#[test]
fn format_from_environment() {
    let out = picard()
        .env("PICARD_FORMAT", "csv")
        .args(["count", "--sweep", "1:10:lin:4"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# config: "), "{text}");
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 5, "{text}");
}

#[test]
fn output_file_receives_data() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plan.json");
    let out = picard()
        .args([
            "--output",
            path.to_str().unwrap(),
            "plan",
            "--theta",
            "1/4",
            "--q",
            "5/3",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(v.to_string().contains("\"exact\":\"5/4\""), "{v}");
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("picard.toml");
    std::fs::write(&path, "format = \"csv\"\n").unwrap();
    let out = picard()
        .args(["--config", path.to_str().unwrap(), "count", "--X", "2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("# config: "));
}

#[test]
fn repeated_runs_are_identical() {
    let run = || {
        picard()
            .args([
                "--seed",
                "7",
                "selberg",
                "--R",
                "2",
                "--eta",
                "0.2",
                "--check-convolution",
            ])
            .output()
            .unwrap()
    };
    let (a, b) = (run(), run());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
}

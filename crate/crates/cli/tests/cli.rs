use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn poseval(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_poseval"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn mini() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/mini")
}

fn arg(p: &Path) -> String {
    p.display().to_string()
}

fn evaluate(sub: &str, out: &Path, extra: &[&str]) -> Output {
    let dataset = format!("mini={}", arg(&mini()));
    let submission = format!("mini={}", arg(&mini().join("submissions").join(sub)));
    let out = arg(out);
    let mut args = vec!["evaluate", "--dataset", &dataset, "--submission", &submission, "--out", &out];
    args.extend_from_slice(extra);
    poseval(&args)
}

#[test]
fn evaluate_gt_writes_perfect_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = evaluate("gt.csv", dir.path(), &["--workers", "2", "--method", "oracle"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("Method: oracle"));
    assert!(stdout.contains("100.0"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["ar_core"], 1.0);
    assert!(dir.path().join("report.txt").exists());
}

#[test]
fn report_ranks_saved_reports() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(evaluate("gt.csv", a.path(), &["--method", "perfect"]).status.success());
    assert!(evaluate("shifted.csv", b.path(), &["--method", "shifted"]).status.success());
    let out = poseval(&["report", &arg(&b.path().join("report.json")), &arg(&a.path().join("report.json"))]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let (p, s) = (text.find("perfect").unwrap(), text.find("shifted").unwrap());
    assert!(p < s, "{text}");
}

#[test]
fn input_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(evaluate("missing.csv", dir.path(), &[]).status.code(), Some(1));
    assert_eq!(evaluate("gt.csv", dir.path(), &["--visib-threshold", "1.5"]).status.code(), Some(1));
    assert_eq!(evaluate("gt.csv", dir.path(), &["--vsd-delta", "-1"]).status.code(), Some(1));
    assert_eq!(poseval(&["evaluate", "--dataset", "no-equals-sign"]).status.code(), Some(1));
    assert_eq!(poseval(&["evaluate"]).status.code(), Some(1));
    assert_eq!(poseval(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(poseval(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("eval.json");
    let body = serde_json::json!({
        "method": "from-config",
        "datasets": { "mini": arg(&mini()) },
        "submissions": { "mini": arg(&mini().join("submissions/shifted.csv")) },
    });
    std::fs::write(&config, body.to_string()).unwrap();
    let gt = arg(&mini().join("submissions/gt.csv"));
    let out = poseval(&["evaluate", "--config", &arg(&config), "--submission", &gt, "--out", &arg(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("from-config") && stdout.contains("100.0"), "{stdout}");
}

#[test]
fn symmetries_of_the_bundled_cube() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("info.json");
    let model = arg(&mini().join("models/obj_000001.ply"));
    let out = poseval(&["symmetries", &model, "--out", &arg(&out_path)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("texture"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_path).unwrap()).unwrap();
    // identity is implicit in the annotation list
    assert_eq!(json["1"]["symmetries_discrete"].as_array().unwrap().len(), 23);
    assert_eq!(poseval(&["symmetries", "/nonexistent/obj_000009.ply"]).status.code(), Some(1));
}

#[test]
fn selftest_exit_codes() {
    assert_eq!(poseval(&["selftest"]).status.code(), Some(0));
    let corrupt = poseval(&["selftest", "--corrupt"]);
    assert_eq!(corrupt.status.code(), Some(2));
    let text = String::from_utf8(corrupt.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("FAIL")).count(), 5);
}

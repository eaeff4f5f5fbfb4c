mod common;

use std::fs;
use std::path::Path;

use poseval::bop_io::{save_submission, EvalConfig};
use poseval::evaluate::{evaluate, EvalError};
use poseval::fixtures;
use poseval::geometry::{RigidTransform, Vector3};
use poseval::scoring::DatasetReport;

fn config(root: &Path, submission: &Path) -> EvalConfig {
    let mut c = EvalConfig::default();
    c.datasets.insert("mini".into(), root.to_path_buf());
    c.submissions.insert("mini".into(), submission.to_path_buf());
    c
}

fn run(sub: &str) -> DatasetReport {
    let root = common::mini_root();
    evaluate(&config(&root, &root.join("submissions").join(sub))).unwrap().datasets.remove(0)
}

fn files(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            out.extend(files(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

#[test]
fn bundled_dataset_matches_a_fresh_generation() {
    let dir = tempfile::tempdir().unwrap();
    fixtures::write_mini_dataset(dir.path()).unwrap();
    let bundled = common::mini_root();
    let fresh = files(dir.path());
    let old = files(&bundled);
    let rel = |v: &[std::path::PathBuf], base: &Path| -> Vec<_> { v.iter().map(|p| p.strip_prefix(base).unwrap().to_path_buf()).collect() };
    assert_eq!(rel(&fresh, dir.path()), rel(&old, &bundled));
    for (a, b) in fresh.iter().zip(&old) {
        assert!(fs::read(a).unwrap() == fs::read(b).unwrap(), "{} differs", b.display());
    }
}

#[test]
fn perfect_and_shifted_submissions() {
    let gt = run("gt.csv");
    assert_eq!((gt.ar_vsd, gt.ar_mssd, gt.ar_mspd, gt.ar_d), (1.0, 1.0, 1.0, 1.0));
    // the cube hidden behind the background is not counted
    assert_eq!(gt.gt_count, 6);
    assert_eq!(gt.mean_time, Some(fixtures::SUBMISSION_TIME));
    let shifted = run("shifted.csv");
    assert_eq!((shifted.ar_vsd, shifted.ar_mssd, shifted.ar_mspd), (0.0, 0.0, 0.0));
}

#[test]
fn mixed_submission_matches_the_oracle() {
    let mixed = run("mixed.csv");
    let want = common::oracle::fixture_ar(&fixtures::mixed_submission());
    assert!((mixed.ar_mssd - 0.6).abs() < 1e-12);
    assert!((mixed.ar_vsd - want.vsd).abs() < 1e-12);
    assert!((mixed.ar_mspd - want.mspd).abs() < 1e-12);
    // top-n keeps one estimate per targeted instance
    assert_eq!(mixed.estimate_count, 5);
}

#[test]
fn missing_submission_scores_zero_with_a_warning() {
    let mut c = EvalConfig::default();
    c.datasets.insert("mini".into(), common::mini_root());
    let report = evaluate(&c).unwrap();
    assert_eq!(report.ar_core, 0.0);
    assert!(report.warnings.iter().any(|w| w.contains("no submission")));
}

#[test]
fn estimate_behind_the_camera_is_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let mut ests = fixtures::gt_submission();
    let p = ests[0].pose;
    ests[0].pose = RigidTransform::new(*p.rotation(), Vector3::new(0.0, 0.0, -50.0)).unwrap();
    let path = dir.path().join("behind.csv");
    save_submission(&path, &ests).unwrap();
    let report = evaluate(&config(&common::mini_root(), &path)).unwrap();
    assert_eq!(report.diagnostics.len(), 1);
    let d = &report.datasets[0];
    assert!(d.ar_mspd < 1.0 && d.ar_mssd < 1.0);
}

#[test]
fn broken_inputs_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let root = common::mini_root();

    let empty_targets = dir.path().join("targets.json");
    fs::write(&empty_targets, "[]").unwrap();
    let mut c = config(&root, &root.join("submissions/gt.csv"));
    c.targets.insert("mini".into(), empty_targets);
    let err = evaluate(&c).unwrap_err();
    assert!(!err.is_internal(), "{err}");

    let c = config(&dir.path().join("nowhere"), &root.join("submissions/gt.csv"));
    let err = evaluate(&c).unwrap_err();
    assert!(!err.is_internal(), "{err}");

    let mut c = config(&root, &root.join("submissions/gt.csv"));
    c.visib_delta = 0.0;
    assert!(matches!(evaluate(&c), Err(EvalError::Config(_))));
}

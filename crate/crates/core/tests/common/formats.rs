//! Round-trip and malformed-input checks for the on-disk formats.

use std::fs;

use poseval::bop_io::{parse_submission, read_report, report_to_json, write_report, write_submission, SubmissionError};
use poseval::scoring::{aggregate_report, DatasetReport, Diagnostic};

use super::{malformed_dir, mini_root};

type Expect = fn(&SubmissionError) -> bool;

/// Corpus file and the error it must produce.
pub fn malformed_expectations() -> Vec<(&'static str, Expect)> {
    vec![
        ("01_missing_column.csv", |e| matches!(e, SubmissionError::MissingColumn { column: "time" })),
        ("02_field_count.csv", |e| matches!(e, SubmissionError::FieldCount { line: 3, expected: 7, found: 6 })),
        ("03_invalid_utf8.csv", |e| matches!(e, SubmissionError::Csv { .. })),
        ("04_score_not_a_number.csv", |e| matches!(e, SubmissionError::InvalidNumber { column: "score", .. })),
        ("05_negative_scene_id.csv", |e| matches!(e, SubmissionError::InvalidNumber { column: "scene_id", .. })),
        ("06_short_rotation.csv", |e| {
            matches!(e, SubmissionError::WrongArity { column: "R", expected: 9, found: 8, .. })
        }),
        ("07_long_translation.csv", |e| {
            matches!(e, SubmissionError::WrongArity { column: "t", expected: 3, found: 4, .. })
        }),
        ("08_nan_translation.csv", |e| matches!(e, SubmissionError::NonFinite { column: "t", .. })),
        ("09_reflection.csv", |e| matches!(e, SubmissionError::NotRotation { det, .. } if *det < 0.0)),
        ("10_negative_time.csv", |e| matches!(e, SubmissionError::InvalidTime { value, .. } if *value == -5.0)),
    ]
}

/// Every corpus file is rejected with its documented error; returns the
/// number of files checked.
pub fn check_malformed() -> Result<usize, String> {
    let expectations = malformed_expectations();
    let on_disk = fs::read_dir(malformed_dir()).map_err(|e| e.to_string())?.count();
    if on_disk != expectations.len() {
        return Err(format!("{on_disk} corpus files, {} expectations", expectations.len()));
    }
    for (name, expect) in &expectations {
        let bytes = fs::read(malformed_dir().join(name)).map_err(|e| format!("{name}: {e}"))?;
        match parse_submission(bytes.as_slice()) {
            Ok(rows) => return Err(format!("{name}: accepted {} rows", rows.len())),
            Err(e) if expect(&e) => {}
            Err(e) => return Err(format!("{name}: unexpected error {e:?}")),
        }
    }
    Ok(expectations.len())
}

/// The bundled submissions re-serialize to identical bytes.
pub fn check_submission_roundtrip() -> Result<usize, String> {
    let mut rows = 0;
    for name in ["gt.csv", "shifted.csv", "mixed.csv"] {
        let original = fs::read(mini_root().join("submissions").join(name)).map_err(|e| e.to_string())?;
        let parsed = parse_submission(original.as_slice()).map_err(|e| format!("{name}: {e}"))?;
        let mut written = Vec::new();
        write_submission(&mut written, &parsed).map_err(|e| e.to_string())?;
        if written != original {
            return Err(format!("{name}: bytes differ after a round trip"));
        }
        if parse_submission(written.as_slice()).map_err(|e| e.to_string())? != parsed {
            return Err(format!("{name}: rows differ after a round trip"));
        }
        rows += parsed.len();
    }
    Ok(rows)
}

/// A report with awkward floats survives write/read with identical JSON.
pub fn check_report_roundtrip() -> Result<(), String> {
    let mut a = DatasetReport::from_ars("alpha", 0.1 + 0.2, 1.0 / 3.0, 2.0f64.sqrt() / 2.0).with_times(vec![0.1, 1e-7, 3.25]);
    a.gt_count = 17;
    a.estimate_count = 23;
    let b = DatasetReport::from_ars("beta", 0.0, 1.0, 0.6180339887498949);
    let mut report = aggregate_report("round-trip", vec![a, b]).map_err(|e| e.to_string())?;
    report.diagnostics.push(Diagnostic {
        scene_id: 1,
        im_id: 2,
        obj_id: 3,
        message: "MSPD undefined".into(),
    });
    report.warnings.push("a warning".into());

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("report.json");
    write_report(&report, &path).map_err(|e| e.to_string())?;
    let back = read_report(&path).map_err(|e| e.to_string())?;
    if back != report {
        return Err("report differs after a round trip".into());
    }
    let bytes = fs::read_to_string(&path).map_err(|e| e.to_string())?;
    if report_to_json(&back) != bytes {
        return Err("report JSON bytes differ after a round trip".into());
    }
    Ok(())
}

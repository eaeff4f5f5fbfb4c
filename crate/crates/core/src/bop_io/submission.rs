//! Submission CSV: `scene_id,im_id,obj_id,score,R,t,time`.
//!
//! `R` holds 9 row-major values and `t` 3 values (mm), space-separated
//! inside one field. `time` is in seconds; `-1` means not reported.
//! Rotations whose orthonormality defect exceeds 1e-3 are rejected; the
//! rest are projected onto the nearest rotation.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::geometry::{nearest_rotation, orthonormality_defect, Matrix3, RigidTransform, Vector3};
use crate::scoring::PoseEstimate;

pub const SUBMISSION_HEADER: [&str; 7] = ["scene_id", "im_id", "obj_id", "score", "R", "t", "time"];
pub const SUBMISSION_ROTATION_GATE: f64 = 1e-3;
/// Rotations closer than this to orthonormal are kept bit-exact.
const EXACT_ROTATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SubmissionError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: malformed CSV: {message}")]
    Csv { line: u64, message: String },
    #[error("header is missing column `{column}`")]
    MissingColumn { column: &'static str },
    #[error("line {line}: expected {expected} fields, found {found}")]
    FieldCount { line: u64, expected: usize, found: usize },
    #[error("line {line}: column `{column}` is not a valid {kind}: {value:?}")]
    InvalidNumber {
        line: u64,
        column: &'static str,
        kind: &'static str,
        value: String,
    },
    #[error("line {line}: column `{column}` needs {expected} values, found {found}")]
    WrongArity {
        line: u64,
        column: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: column `{column}` contains a non-finite value")]
    NonFinite { line: u64, column: &'static str },
    #[error("line {line}: R is not a rotation (orthonormality defect {defect:.3e}, det {det:.6})")]
    NotRotation { line: u64, defect: f64, det: f64 },
    #[error("line {line}: time must be >= 0 or -1, found {value}")]
    InvalidTime { line: u64, value: f64 },
}

fn parse_id(line: u64, column: &'static str, raw: &str) -> Result<u32, SubmissionError> {
    raw.trim().parse().map_err(|_| SubmissionError::InvalidNumber {
        line,
        column,
        kind: "non-negative integer",
        value: raw.to_string(),
    })
}

fn parse_float(line: u64, column: &'static str, raw: &str) -> Result<f64, SubmissionError> {
    let v: f64 = raw.trim().parse().map_err(|_| SubmissionError::InvalidNumber {
        line,
        column,
        kind: "number",
        value: raw.to_string(),
    })?;
    if !v.is_finite() {
        return Err(SubmissionError::NonFinite { line, column });
    }
    Ok(v)
}

fn parse_vector<const N: usize>(line: u64, column: &'static str, raw: &str) -> Result<[f64; N], SubmissionError> {
    let parts: Vec<&str> = raw.split_whitespace().collect();
    if parts.len() != N {
        return Err(SubmissionError::WrongArity {
            line,
            column,
            expected: N,
            found: parts.len(),
        });
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = parse_float(line, column, p)?;
    }
    Ok(out)
}

/// Builds a pose from externally supplied values, applying the 1e-3 gate.
pub(crate) fn gated_pose(r: &[f64; 9], t: &[f64; 3]) -> Result<RigidTransform, (f64, f64)> {
    let rot = Matrix3::from_row_slice(r);
    let defect = orthonormality_defect(&rot);
    let det = rot.determinant();
    if !(defect <= SUBMISSION_ROTATION_GATE) || det <= 0.0 {
        return Err((defect, det));
    }
    let rot = if defect <= EXACT_ROTATION_TOLERANCE {
        rot
    } else {
        nearest_rotation(&rot)
    };
    RigidTransform::new(rot, Vector3::from_row_slice(t)).map_err(|_| (defect, det))
}

/// Parses a submission, preserving row order.
pub fn parse_submission<R: Read>(input: R) -> Result<Vec<PoseEstimate>, SubmissionError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| SubmissionError::Csv {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let mut columns = [0usize; 7];
    for (slot, name) in columns.iter_mut().zip(SUBMISSION_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or(SubmissionError::MissingColumn { column: name })?;
    }
    let width = headers.len();

    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| SubmissionError::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != width {
            return Err(SubmissionError::FieldCount {
                line,
                expected: width,
                found: record.len(),
            });
        }
        let field = |i: usize| &record[columns[i]];
        let scene_id = parse_id(line, "scene_id", field(0))?;
        let im_id = parse_id(line, "im_id", field(1))?;
        let obj_id = parse_id(line, "obj_id", field(2))?;
        let score = parse_float(line, "score", field(3))?;
        let r = parse_vector::<9>(line, "R", field(4))?;
        let t = parse_vector::<3>(line, "t", field(5))?;
        let time = parse_float(line, "time", field(6))?;
        let time = if time == -1.0 {
            None
        } else if time >= 0.0 {
            Some(time)
        } else {
            return Err(SubmissionError::InvalidTime { line, value: time });
        };
        let pose = gated_pose(&r, &t).map_err(|(defect, det)| SubmissionError::NotRotation { line, defect, det })?;
        out.push(PoseEstimate {
            scene_id,
            im_id,
            obj_id,
            pose,
            score,
            time,
        });
    }
    Ok(out)
}

pub fn read_submission(path: impl AsRef<Path>) -> Result<Vec<PoseEstimate>, SubmissionError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| SubmissionError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_submission(std::io::BufReader::new(file))
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

/// Writes estimates with shortest round-trip decimal formatting (never in
/// exponent notation).
pub fn write_submission<W: Write>(out: W, estimates: &[PoseEstimate]) -> std::io::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(SUBMISSION_HEADER)?;
    for e in estimates {
        let r = e.pose.rotation();
        let rows: Vec<f64> = (0..3).flat_map(|i| (0..3).map(move |j| r[(i, j)])).collect();
        let t = e.pose.translation();
        writer.write_record([
            e.scene_id.to_string(),
            e.im_id.to_string(),
            e.obj_id.to_string(),
            e.score.to_string(),
            join(&rows),
            join(&[t.x, t.y, t.z]),
            e.time.map_or("-1".to_string(), |t| t.to_string()),
        ])?;
    }
    writer.flush()
}

pub fn save_submission(path: impl AsRef<Path>, estimates: &[PoseEstimate]) -> Result<(), SubmissionError> {
    let path = path.as_ref();
    let io_err = |source| SubmissionError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_submission(std::io::BufWriter::new(file), estimates).map_err(io_err)
}

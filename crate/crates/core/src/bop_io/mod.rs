//! Readers and writers for datasets, submissions, targets, configuration and
//! reports.

mod config;
mod report;
mod scene;
mod submission;
mod targets;

use std::path::PathBuf;

use thiserror::Error;

use crate::raster::RasterError;

pub use config::EvalConfig;
pub use report::{format_leaderboard, format_report_table, percent, read_report, report_to_json, write_report};
pub use scene::{
    depth_path, model_path, models_info_path, read_dataset_camera, read_scene_gt, scene_dir, write_scene_gt,
    DatasetCamera, GtPose, ImageGroundTruth, SceneGroundTruth,
};
pub use submission::{
    parse_submission, read_submission, save_submission, write_submission, SubmissionError, SUBMISSION_HEADER,
    SUBMISSION_ROTATION_GATE,
};
pub use targets::{read_targets, targets_from_entries, TargetEntry};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error("{path}: inconsistent image ids: {message}")]
    InconsistentImages { path: PathBuf, message: String },
    #[error("{0}: target list is empty; nothing to evaluate")]
    EmptyTargets(PathBuf),
    #[error("{path}: target {key:?} listed with counts {first} and {second}")]
    ConflictingTarget {
        path: PathBuf,
        key: (u32, u32, u32),
        first: usize,
        second: usize,
    },
    #[error("report has no datasets")]
    EmptyReport,
    #[error(transparent)]
    Raster(RasterError),
}

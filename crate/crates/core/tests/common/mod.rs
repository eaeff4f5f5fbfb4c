#![allow(dead_code)]

pub mod oracle;
pub mod formats;
pub mod props;

use std::path::PathBuf;

pub fn mini_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/mini")
}

pub fn malformed_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/malformed")
}

use std::collections::btree_map::Entry;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::scoring::Targets;

use super::{scene::read_json, DatasetError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetEntry {
    pub scene_id: u32,
    pub im_id: u32,
    pub obj_id: u32,
    pub inst_count: usize,
}

/// Builds the target table. Repeated keys must agree on the count.
pub fn targets_from_entries(entries: &[TargetEntry], path: &Path) -> Result<Targets, DatasetError> {
    if entries.is_empty() {
        return Err(DatasetError::EmptyTargets(path.to_path_buf()));
    }
    let mut out = Targets::new();
    for e in entries {
        if e.inst_count == 0 {
            return Err(DatasetError::Invalid {
                path: path.to_path_buf(),
                message: format!("target ({}, {}, {}) has inst_count 0", e.scene_id, e.im_id, e.obj_id),
            });
        }
        match out.entry((e.scene_id, e.im_id, e.obj_id)) {
            Entry::Vacant(v) => {
                v.insert(e.inst_count);
            }
            Entry::Occupied(o) if *o.get() == e.inst_count => {}
            Entry::Occupied(o) => {
                return Err(DatasetError::ConflictingTarget {
                    path: path.to_path_buf(),
                    key: *o.key(),
                    first: *o.get(),
                    second: e.inst_count,
                })
            }
        }
    }
    Ok(out)
}

pub fn read_targets(path: impl AsRef<Path>) -> Result<Targets, DatasetError> {
    let path = path.as_ref();
    let entries: Vec<TargetEntry> = read_json(path)?;
    targets_from_entries(&entries, path)
}

//! Evaluation configuration (JSON). Relative paths are resolved against the
//! directory of the configuration file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::scoring::{ThresholdConfig, DEFAULT_VISIBILITY_THRESHOLD};
use crate::visibility::DEFAULT_VISIBILITY_DELTA;

use super::{scene::read_json, DatasetError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Method name shown in reports.
    pub method: String,
    /// Dataset name to dataset root.
    pub datasets: BTreeMap<String, PathBuf>,
    /// Dataset name to submission CSV.
    pub submissions: BTreeMap<String, PathBuf>,
    /// Dataset name to target list; defaults to `<root>/test_targets.json`.
    pub targets: BTreeMap<String, PathBuf>,
    pub split: String,
    /// Visibility tolerance `δ` in mm.
    pub visib_delta: f64,
    /// GT instances with a smaller visible fraction are skipped.
    pub visib_threshold: f64,
    pub thresholds: ThresholdConfig,
    /// Overrides `<root>/models/models_info.json` for every dataset.
    pub symmetry_annotations: Option<PathBuf>,
    /// Per-object list of symmetry indices kept after texture review.
    pub texture_review: Option<PathBuf>,
    /// Worker threads; `None` uses all cores.
    pub workers: Option<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            method: "method".to_string(),
            datasets: BTreeMap::new(),
            submissions: BTreeMap::new(),
            targets: BTreeMap::new(),
            split: "test".to_string(),
            visib_delta: DEFAULT_VISIBILITY_DELTA,
            visib_threshold: DEFAULT_VISIBILITY_THRESHOLD,
            thresholds: ThresholdConfig::default(),
            symmetry_annotations: None,
            texture_review: None,
            workers: None,
        }
    }
}

impl EvalConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let path = path.as_ref();
        let mut config: EvalConfig = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        config.datasets.values_mut().for_each(resolve);
        config.submissions.values_mut().for_each(resolve);
        config.targets.values_mut().for_each(resolve);
        config.symmetry_annotations.iter_mut().for_each(resolve);
        config.texture_review.iter_mut().for_each(resolve);
        Ok(config)
    }

    pub fn targets_path(&self, dataset: &str) -> Option<PathBuf> {
        self.targets
            .get(dataset)
            .cloned()
            .or_else(|| self.datasets.get(dataset).map(|r| r.join("test_targets.json")))
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.visib_delta > 0.0 && self.visib_delta.is_finite()) {
            return Err(format!("visib_delta must be positive, got {}", self.visib_delta));
        }
        if !(self.visib_threshold > 0.0 && self.visib_threshold <= 1.0) {
            return Err(format!("visib_threshold must be in (0, 1], got {}", self.visib_threshold));
        }
        if self.workers == Some(0) {
            return Err("workers must be at least 1".into());
        }
        if self.datasets.is_empty() {
            return Err("no datasets configured".into());
        }
        for name in self.submissions.keys().chain(self.targets.keys()) {
            if !self.datasets.contains_key(name) {
                return Err(format!("`{name}` is not a configured dataset"));
            }
        }
        self.thresholds.validate().map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("eval.json");
        std::fs::write(&path, r#"{"datasets": {"mini": "data/mini"}, "visib_delta": 10}"#).unwrap();
        let c = EvalConfig::load(&path).unwrap();
        assert_eq!(c.datasets["mini"], dir.path().join("data/mini"));
        assert_eq!(c.visib_delta, 10.0);
        assert_eq!(c.visib_threshold, 0.1);
        assert_eq!(c.targets_path("mini").unwrap(), dir.path().join("data/mini/test_targets.json"));
        assert!(c.validate().is_ok());
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("eval.json");
        std::fs::write(&path, r#"{"dataset": {}}"#).unwrap();
        assert!(EvalConfig::load(&path).is_err());
        let c = EvalConfig {
            visib_threshold: 0.0,
            ..EvalConfig::default()
        };
        assert!(c.validate().is_err());
    }
}

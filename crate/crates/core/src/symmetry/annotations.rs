//! `models_info.json` symmetry annotations and manual texture review files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::geometry::{orthonormality_defect, Matrix3, Point3, RigidTransform, Vector3};

use super::{ContinuousSymmetry, Provenance, SymmetryAnalysis, SymmetryError, SymmetrySet};

/// Annotated rotations may carry rounding noise up to this orthonormality
/// defect; they are projected onto SO(3).
const ANNOTATION_ROTATION_GATE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousAnnotation {
    pub axis: [f64; 3],
    pub offset: [f64; 3],
}

/// One object's entry in `models_info.json`. Unknown keys (bounding box,
/// etc.) are preserved on rewrite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub diameter: f64,
    /// Row-major 4×4 matrices, identity excluded.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub symmetries_discrete: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub symmetries_continuous: Vec<ContinuousAnnotation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry_review: Option<String>,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl ModelInfo {
    pub fn new(diameter: f64) -> Self {
        Self {
            diameter,
            symmetries_discrete: Vec::new(),
            symmetries_continuous: Vec::new(),
            symmetry_review: None,
            extra: serde_json::Map::new(),
        }
    }

    pub fn from_analysis(diameter: f64, analysis: &SymmetryAnalysis) -> Self {
        let mut info = Self::new(diameter);
        info.set_symmetries(&analysis.discrete, &analysis.continuous);
        if analysis.needs_review {
            info.symmetry_review = Some(format!(
                "{} continuous axes detected; confirm the symmetry set manually",
                analysis.continuous.len()
            ));
        }
        info
    }

    pub fn set_symmetries(&mut self, discrete: &SymmetrySet, continuous: &[ContinuousSymmetry]) {
        self.symmetries_discrete = discrete
            .non_identity()
            .iter()
            .map(|t| t.to_row_major_4x4().to_vec())
            .collect();
        self.symmetries_continuous = continuous
            .iter()
            .map(|c| ContinuousAnnotation {
                axis: [c.axis().x, c.axis().y, c.axis().z],
                offset: [c.offset().x, c.offset().y, c.offset().z],
            })
            .collect();
    }

    pub fn has_symmetries(&self) -> bool {
        !self.symmetries_discrete.is_empty() || !self.symmetries_continuous.is_empty()
    }

    /// Identity plus the annotated discrete transforms.
    pub fn discrete_set(&self) -> Result<SymmetrySet, SymmetryError> {
        let mut transforms = Vec::with_capacity(self.symmetries_discrete.len());
        for (i, m) in self.symmetries_discrete.iter().enumerate() {
            let m: [f64; 16] = m.as_slice().try_into().map_err(|_| {
                SymmetryError::Annotation(format!("discrete symmetry {i} has {} values, expected 16", m.len()))
            })?;
            transforms.push(annotation_transform(&m).map_err(|e| {
                SymmetryError::Annotation(format!("discrete symmetry {i}: {e}"))
            })?);
        }
        Ok(SymmetrySet::from_transforms(transforms, Provenance::Annotated))
    }

    pub fn continuous(&self) -> Result<Vec<ContinuousSymmetry>, SymmetryError> {
        self.symmetries_continuous
            .iter()
            .map(|c| {
                ContinuousSymmetry::new(Vector3::from(c.axis), Point3::from(c.offset))
                    .map_err(|e| SymmetryError::Annotation(e.to_string()))
            })
            .collect()
    }
}

fn annotation_transform(m: &[f64; 16]) -> Result<RigidTransform, String> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err("non-finite value".into());
    }
    if m[12..] != [0.0, 0.0, 0.0, 1.0] {
        return Err(format!("bottom row is {:?}", &m[12..]));
    }
    let r = Matrix3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]);
    if orthonormality_defect(&r) > ANNOTATION_ROTATION_GATE || r.determinant() <= 0.0 {
        return Err("rotation part is not a proper rotation".into());
    }
    RigidTransform::from_approximate(r, Vector3::new(m[3], m[7], m[11])).map_err(|e| e.to_string())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, SymmetryError> {
    let text = fs::read_to_string(path).map_err(|source| SymmetryError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| SymmetryError::Annotation(format!("{}: {e}", path.display())))
}

fn parse_keys<V>(raw: BTreeMap<String, V>, path: &Path) -> Result<BTreeMap<u32, V>, SymmetryError> {
    raw.into_iter()
        .map(|(k, v)| {
            k.parse::<u32>()
                .map(|id| (id, v))
                .map_err(|_| SymmetryError::Annotation(format!("{}: object key {k:?} is not an id", path.display())))
        })
        .collect()
}

pub fn read_models_info(path: impl AsRef<Path>) -> Result<BTreeMap<u32, ModelInfo>, SymmetryError> {
    let path = path.as_ref();
    parse_keys(read_json(path)?, path)
}

pub fn write_models_info(path: impl AsRef<Path>, infos: &BTreeMap<u32, ModelInfo>) -> Result<(), SymmetryError> {
    let path = path.as_ref();
    let keyed: BTreeMap<String, &ModelInfo> = infos.iter().map(|(k, v)| (k.to_string(), v)).collect();
    let text = serde_json::to_string_pretty(&keyed).expect("model info serializes");
    fs::write(path, text + "\n").map_err(|source| SymmetryError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Per-object indices (into the symmetry set, identity = 0) that remain
/// ambiguous after looking at the texture.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextureReview {
    pub retain: Vec<usize>,
}

pub fn read_texture_review(path: impl AsRef<Path>) -> Result<BTreeMap<u32, TextureReview>, SymmetryError> {
    let path = path.as_ref();
    parse_keys(read_json(path)?, path)
}

/// Applies the manual texture review for `obj_id`. Without an entry the set
/// passes unchanged (with a warning).
pub fn filter_by_texture(
    set: &SymmetrySet,
    obj_id: u32,
    review: &BTreeMap<u32, TextureReview>,
) -> Result<SymmetrySet, SymmetryError> {
    match review.get(&obj_id) {
        Some(entry) => set.subset(&entry.retain),
        None => {
            if set.len() > 1 {
                warn!("object {obj_id}: no texture review; keeping all {} symmetries", set.len());
            }
            Ok(set.clone())
        }
    }
}

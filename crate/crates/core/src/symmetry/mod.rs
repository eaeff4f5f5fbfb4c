//! Global rotational symmetries of object models.

mod annotations;
mod hausdorff;
mod search;

use std::path::PathBuf;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point3, RigidTransform, TriangleMesh, Vector3};

pub use annotations::{
    filter_by_texture, read_models_info, read_texture_review, write_models_info, ModelInfo, TextureReview,
};
pub use hausdorff::{directed_hausdorff, hausdorff, PointGrid, SymmetryVerifier};
pub use search::{
    analyze_symmetries, candidate_axes, chord_step_count, continuous_step_count, discretize_continuous, epsilon_for_diameter,
    find_continuous_symmetries, find_continuous_symmetries_with, find_discrete_symmetries,
    find_discrete_symmetries_with, icosphere_directions, max_axis_radius, symmetry_epsilon, SearchOptions,
    SymmetryAnalysis, CONTINUOUS_SWEEP_STEP_DEG, CONTINUOUS_TRAVEL_FRACTION, MAX_FOLD, MIN_EPSILON_MM,
};

#[derive(Debug, Error)]
pub enum SymmetryError {
    #[error("empty point set")]
    EmptyPointSet,
    #[error("transform index {index} out of range for a set of {len}")]
    UnknownIndex { index: usize, len: usize },
    #[error("continuous symmetry axis must be non-zero and finite")]
    InvalidAxis,
    #[error("invalid symmetry annotation: {0}")]
    Annotation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Annotated,
    Searched,
    DiscretizedContinuous,
}

/// A rotation axis through `offset` about which the model is symmetric for
/// every angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousSymmetry {
    axis: Vector3,
    offset: Point3,
}

impl ContinuousSymmetry {
    /// Normalizes `axis`.
    pub fn new(axis: Vector3, offset: Point3) -> Result<Self, SymmetryError> {
        let norm = axis.norm();
        if !(norm > 1e-12 && norm.is_finite()) || offset.iter().any(|v| !v.is_finite()) {
            return Err(SymmetryError::InvalidAxis);
        }
        Ok(Self {
            axis: axis / norm,
            offset,
        })
    }

    pub fn axis(&self) -> &Vector3 {
        &self.axis
    }

    pub fn offset(&self) -> &Point3 {
        &self.offset
    }
}

/// Pose-equivalence transforms of one model. The identity is always the
/// first member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetrySet {
    transforms: Vec<RigidTransform>,
    provenance: Vec<Provenance>,
}

impl Default for SymmetrySet {
    fn default() -> Self {
        Self::identity_only()
    }
}

impl SymmetrySet {
    pub fn identity_only() -> Self {
        Self {
            transforms: vec![RigidTransform::identity()],
            provenance: vec![Provenance::Searched],
        }
    }

    /// Identity followed by `transforms`; identities in the input are dropped.
    pub fn from_transforms(transforms: impl IntoIterator<Item = RigidTransform>, provenance: Provenance) -> Self {
        let mut set = Self::identity_only();
        set.provenance[0] = provenance;
        for t in transforms {
            set.push(t, provenance);
        }
        set
    }

    /// Appends `t` unless it is (numerically) the identity.
    pub fn push(&mut self, t: RigidTransform, provenance: Provenance) {
        if is_identity(&t) {
            return;
        }
        self.transforms.push(t);
        self.provenance.push(provenance);
    }

    pub fn transforms(&self) -> &[RigidTransform] {
        &self.transforms
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.transforms.len()
    }

    /// Never true; the identity is always present.
    pub fn is_empty(&self) -> bool {
        self.transforms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &RigidTransform> {
        self.transforms.iter()
    }

    /// Members other than the identity.
    pub fn non_identity(&self) -> &[RigidTransform] {
        &self.transforms[1..]
    }

    /// Keeps the members at `indices` (the identity, index 0, is always kept).
    pub fn subset(&self, indices: &[usize]) -> Result<SymmetrySet, SymmetryError> {
        let mut keep = vec![false; self.len()];
        keep[0] = true;
        for &i in indices {
            if i >= self.len() {
                return Err(SymmetryError::UnknownIndex { index: i, len: self.len() });
            }
            keep[i] = true;
        }
        let (transforms, provenance) = self
            .transforms
            .iter()
            .zip(&self.provenance)
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|((t, p), _)| (*t, *p))
            .unzip();
        Ok(SymmetrySet { transforms, provenance })
    }

    /// Whether some member is within `angle_tol` rad and `trans_tol` mm of `t`.
    pub fn contains(&self, t: &RigidTransform, angle_tol: f64, trans_tol: f64) -> bool {
        self.transforms
            .iter()
            .any(|m| m.angle_to(t) < angle_tol && m.translation_distance(t) < trans_tol)
    }

    /// `{C ∘ D}` for every discretized continuous rotation `C` (identity
    /// included) and every member `D`. With several axes the per-axis
    /// products are united, not multiplied.
    pub fn expand_continuous(&self, continuous: &[ContinuousSymmetry], mesh: &TriangleMesh) -> SymmetrySet {
        let mut out = self.clone();
        for sym in continuous {
            for c in &discretize_continuous(sym, mesh) {
                for d in self.iter() {
                    out.push(c.compose(d), Provenance::DiscretizedContinuous);
                }
            }
        }
        if continuous.len() > 1 {
            warn!("several continuous axes expanded; the set covers only rotations about those axes");
        }
        out
    }
}

fn is_identity(t: &RigidTransform) -> bool {
    (t.rotation() - crate::geometry::Matrix3::identity()).amax() < 1e-12 && t.translation().amax() < 1e-9
}

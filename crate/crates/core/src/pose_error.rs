//! Pose error functions: VSD, MSSD, MSPD, and the ADD/ADI reference metrics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{CameraIntrinsics, Point2, Point3, RigidTransform, TriangleMesh};
use crate::raster::{render_distance_map, DistanceMap, RasterError};
use crate::symmetry::{PointGrid, SymmetrySet};
use crate::visibility::{est_visibility_mask_extended, visibility_mask, VisibilityError, VisibilityMask};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("map or mask dimensions differ: {a:?} vs {b:?}")]
    DimensionMismatch { a: (usize, usize), b: (usize, usize) },
    #[error("union of visibility masks is empty")]
    EmptyUnion,
    #[error("vertex list is empty")]
    EmptyVertices,
    #[error("vertex {index} is not in front of the camera (Z = {z})")]
    BehindCamera { index: usize, z: f64 },
    #[error("tau values must be positive and strictly increasing")]
    InvalidTaus,
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Visibility(#[from] VisibilityError),
}

/// `e_VSD` for each misalignment tolerance `τ` (mm), in increasing `τ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VsdErrorVector {
    entries: Vec<(f64, f64)>,
}

impl VsdErrorVector {
    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn errors(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.1)
    }

    pub fn get(&self, i: usize) -> f64 {
        self.entries[i].1
    }
}

fn check_dims(a: (usize, usize), b: (usize, usize)) -> Result<(), MetricError> {
    if a != b {
        return Err(MetricError::DimensionMismatch { a, b });
    }
    Ok(())
}

/// Visible surface discrepancy: over `V̂ ∪ V̄`, the fraction of pixels that
/// are not in `V̂ ∩ V̄` with `|D̂ − D̄| < τ`.
pub fn vsd(
    est_dist: &DistanceMap,
    gt_dist: &DistanceMap,
    est_mask: &VisibilityMask,
    gt_mask: &VisibilityMask,
    taus: &[f64],
) -> Result<VsdErrorVector, MetricError> {
    check_dims(est_dist.dims(), gt_dist.dims())?;
    check_dims(est_dist.dims(), est_mask.dims())?;
    check_dims(est_dist.dims(), gt_mask.dims())?;
    if taus.iter().any(|t| !(*t > 0.0 && t.is_finite())) || taus.windows(2).any(|w| w[0] >= w[1]) {
        return Err(MetricError::InvalidTaus);
    }

    let mut union = 0usize;
    let mut diffs = Vec::new();
    for (i, (&e, &g)) in est_mask.bits().iter().zip(gt_mask.bits()).enumerate() {
        if e || g {
            union += 1;
            if e && g {
                diffs.push((est_dist.values()[i] - gt_dist.values()[i]).abs());
            }
        }
    }
    if union == 0 {
        return Err(MetricError::EmptyUnion);
    }
    diffs.sort_unstable_by(f64::total_cmp);

    let entries = taus
        .iter()
        .map(|&tau| {
            let matched = diffs.partition_point(|d| *d < tau);
            (tau, (union - matched) as f64 / union as f64)
        })
        .collect();
    Ok(VsdErrorVector { entries })
}

/// Inputs to [`vsd_for_poses`] shared by every estimate of one image.
#[derive(Debug, Clone, Copy)]
pub struct VsdScene<'a> {
    pub camera: &'a CameraIntrinsics,
    /// Measured distance map of the test image (0 = no measurement).
    pub measured: &'a DistanceMap,
    /// Visibility tolerance `δ` in mm.
    pub delta: f64,
}

/// Ground-truth side of a VSD evaluation, rendered once per GT instance.
#[derive(Debug, Clone)]
pub struct VsdReference {
    pub distance: DistanceMap,
    pub mask: VisibilityMask,
}

impl VsdReference {
    pub fn render(mesh: &TriangleMesh, gt: &RigidTransform, scene: &VsdScene) -> Result<Self, MetricError> {
        let distance = render_distance_map(mesh, gt, scene.camera)?;
        let mask = visibility_mask(&distance, scene.measured, scene.delta)?;
        Ok(Self { distance, mask })
    }
}

/// Renders the estimate and evaluates VSD against a pre-rendered reference.
pub fn vsd_for_pose(
    mesh: &TriangleMesh,
    est: &RigidTransform,
    reference: &VsdReference,
    scene: &VsdScene,
    taus: &[f64],
) -> Result<VsdErrorVector, MetricError> {
    let est_dist = render_distance_map(mesh, est, scene.camera)?;
    let est_mask = est_visibility_mask_extended(&est_dist, scene.measured, &reference.mask, scene.delta)?;
    vsd(&est_dist, &reference.distance, &est_mask, &reference.mask, taus)
}

fn min_over_symmetries<F>(syms: &SymmetrySet, mut worst_for: F) -> Result<f64, MetricError>
where
    F: FnMut(&RigidTransform, f64) -> Result<f64, MetricError>,
{
    let mut best = f64::INFINITY;
    for s in syms.iter() {
        best = best.min(worst_for(s, best)?);
    }
    Ok(best)
}

/// Maximum symmetry-aware surface distance (mm):
/// `min_S max_x ‖P̂x − P̄Sx‖`.
pub fn mssd(est: &RigidTransform, gt: &RigidTransform, syms: &SymmetrySet, verts: &[Point3]) -> Result<f64, MetricError> {
    if verts.is_empty() {
        return Err(MetricError::EmptyVertices);
    }
    let est_pts: Vec<Point3> = verts.iter().map(|v| est.apply(v)).collect();
    min_over_symmetries(syms, |s, best| {
        let g = gt.compose(s);
        let mut worst = 0.0f64;
        for (v, e) in verts.iter().zip(&est_pts) {
            worst = worst.max((e - g.apply(v)).norm());
            if worst >= best {
                break;
            }
        }
        Ok(worst)
    })
}

fn project_checked(p: &Point3, index: usize, cam: &CameraIntrinsics) -> Result<Point2, MetricError> {
    if !(p.z > 0.0) {
        return Err(MetricError::BehindCamera { index, z: p.z });
    }
    Ok(Point2::new(cam.fx * p.x / p.z + cam.cx, cam.fy * p.y / p.z + cam.cy))
}

/// Maximum symmetry-aware projection distance (px):
/// `min_S max_x ‖π(P̂x) − π(P̄Sx)‖`.
pub fn mspd(
    est: &RigidTransform,
    gt: &RigidTransform,
    syms: &SymmetrySet,
    verts: &[Point3],
    cam: &CameraIntrinsics,
) -> Result<f64, MetricError> {
    if verts.is_empty() {
        return Err(MetricError::EmptyVertices);
    }
    let est_px = verts
        .iter()
        .enumerate()
        .map(|(i, v)| project_checked(&est.apply(v), i, cam))
        .collect::<Result<Vec<_>, _>>()?;
    min_over_symmetries(syms, |s, best| {
        let g = gt.compose(s);
        let mut worst = 0.0f64;
        for (i, (v, e)) in verts.iter().zip(&est_px).enumerate() {
            let q = project_checked(&g.apply(v), i, cam)?;
            worst = worst.max((e - q).norm());
            if worst >= best {
                break;
            }
        }
        Ok(worst)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AverageDistanceMode {
    /// Corresponding vertices.
    Add,
    /// Nearest vertex, for symmetric objects.
    Adi,
}

/// Average distance (mm) between the model vertices in the two poses.
pub fn add_adi(
    est: &RigidTransform,
    gt: &RigidTransform,
    verts: &[Point3],
    mode: AverageDistanceMode,
) -> Result<f64, MetricError> {
    if verts.is_empty() {
        return Err(MetricError::EmptyVertices);
    }
    let est_pts: Vec<Point3> = verts.iter().map(|v| est.apply(v)).collect();
    let gt_pts: Vec<Point3> = verts.iter().map(|v| gt.apply(v)).collect();
    let total: f64 = match mode {
        AverageDistanceMode::Add => est_pts.iter().zip(&gt_pts).map(|(e, g)| (e - g).norm()).sum(),
        AverageDistanceMode::Adi => {
            let grid = PointGrid::auto(&gt_pts);
            est_pts
                .iter()
                .map(|e| grid.nearest(e).map_or(0.0, |(_, d2)| d2.sqrt()))
                .sum()
        }
    };
    Ok(total / verts.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vector3;

    fn map(values: &[f64]) -> DistanceMap {
        DistanceMap::new(values.len(), 1, values.to_vec()).unwrap()
    }

    fn mask(bits: &[bool]) -> VisibilityMask {
        VisibilityMask::from_bits(bits.len(), 1, bits.to_vec()).unwrap()
    }

    #[test]
    fn vsd_hand_example() {
        // p1, p2, p3; est visible at p1, p2; gt visible at p2, p3
        let est = map(&[100.0, 103.0, 0.0]);
        let gt = map(&[0.0, 100.0, 100.0]);
        let em = mask(&[true, true, false]);
        let gm = mask(&[false, true, true]);
        let e = vsd(&est, &gt, &em, &gm, &[2.0, 5.0]).unwrap();
        assert_eq!(e.get(0), 1.0);
        assert_eq!(e.get(1), 2.0 / 3.0);
    }

    #[test]
    fn vsd_perfect_and_errors() {
        let d = map(&[500.0, 600.0]);
        let m = mask(&[true, true]);
        let e = vsd(&d, &d, &m, &m, &[0.1, 1.0, 10.0]).unwrap();
        assert!(e.errors().all(|x| x == 0.0));
        let none = mask(&[false, false]);
        assert_eq!(vsd(&d, &d, &none, &none, &[1.0]), Err(MetricError::EmptyUnion));
        assert_eq!(vsd(&d, &d, &m, &m, &[2.0, 1.0]), Err(MetricError::InvalidTaus));
    }

    #[test]
    fn translation_errors() {
        let verts = [Point3::new(1.0, 2.0, 3.0), Point3::new(-4.0, 0.5, 9.0)];
        let gt = RigidTransform::from_translation(Vector3::new(0.0, 0.0, 500.0));
        let est = RigidTransform::from_translation(Vector3::new(3.0, 4.0, 500.0));
        let syms = SymmetrySet::identity_only();
        assert!((mssd(&est, &gt, &syms, &verts).unwrap() - 5.0).abs() < 1e-12);
        for mode in [AverageDistanceMode::Add, AverageDistanceMode::Adi] {
            assert_eq!(add_adi(&gt, &gt, &verts, mode).unwrap(), 0.0);
        }
        assert!((add_adi(&est, &gt, &verts, AverageDistanceMode::Add).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(mssd(&est, &gt, &syms, &[]), Err(MetricError::EmptyVertices));
    }

    #[test]
    fn mspd_ignores_depth_of_center_vertex() {
        let cam = CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0, 640, 480).unwrap();
        let verts = [Point3::origin()];
        let gt = RigidTransform::from_translation(Vector3::new(0.0, 0.0, 1000.0));
        let est = RigidTransform::from_translation(Vector3::new(0.0, 0.0, 800.0));
        let syms = SymmetrySet::identity_only();
        assert_eq!(mspd(&est, &gt, &syms, &verts, &cam).unwrap(), 0.0);
        let behind = RigidTransform::from_translation(Vector3::new(0.0, 0.0, -5.0));
        assert!(matches!(
            mspd(&behind, &gt, &syms, &verts, &cam),
            Err(MetricError::BehindCamera { index: 0, .. })
        ));
    }
}

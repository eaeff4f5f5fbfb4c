use nalgebra::{Matrix3, Matrix4, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use super::{GeometryError, Point3};

/// Tolerance used when validating that a matrix is a proper rotation.
pub const ROTATION_TOLERANCE: f64 = 1e-6;

/// A rigid transformation `x -> R x + t` (rotation plus translation in mm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl RigidTransform {
    /// Builds a transform, rejecting rotations that are not orthonormal with
    /// determinant +1 (within [`ROTATION_TOLERANCE`]).
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        check_rotation(&rotation, ROTATION_TOLERANCE)?;
        if translation.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self { rotation, translation })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Rotation by `angle` radians about the line through `center` along `axis`.
    pub fn about_axis(axis: &Vector3<f64>, angle: f64, center: &Point3) -> Self {
        let rotation = Rotation3::from_axis_angle(&Unit::new_normalize(*axis), angle).into_inner();
        let c = center.coords;
        Self {
            rotation,
            translation: c - rotation * c,
        }
    }

    /// Rotation about `center` (the center stays fixed).
    pub fn rotation_about(rotation: Matrix3<f64>, center: &Point3) -> Result<Self, GeometryError> {
        let c = center.coords;
        Self::new(rotation, c - rotation * c)
    }

    /// Projects an approximately orthonormal matrix onto the nearest proper
    /// rotation (SVD polar factor) before building the transform.
    pub fn from_approximate(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        if rotation.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Self::new(nearest_rotation(&rotation), translation)
    }

    /// Reads a 4x4 row-major homogeneous matrix.
    pub fn from_row_major_4x4(m: &[f64; 16]) -> Result<Self, GeometryError> {
        let rotation = Matrix3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]);
        let translation = Vector3::new(m[3], m[7], m[11]);
        let bottom = [m[12], m[13], m[14], m[15]];
        if bottom != [0.0, 0.0, 0.0, 1.0] {
            return Err(GeometryError::NotRigid(format!(
                "bottom row of homogeneous matrix is {bottom:?}"
            )));
        }
        Self::new(rotation, translation)
    }

    #[rustfmt::skip]
    pub fn to_row_major_4x4(&self) -> [f64; 16] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)], r[(0, 1)], r[(0, 2)], t.x,
            r[(1, 0)], r[(1, 1)], r[(1, 2)], t.y,
            r[(2, 0)], r[(2, 1)], r[(2, 2)], t.z,
            0.0, 0.0, 0.0, 1.0,
        ]
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        Matrix4::from_row_slice(&self.to_row_major_4x4())
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    #[inline]
    pub fn apply(&self, p: &Point3) -> Point3 {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Rotation angle (radians) of `self⁻¹ ∘ other`, in `[0, π]`.
    pub fn angle_to(&self, other: &RigidTransform) -> f64 {
        rotation_angle(&(self.rotation.transpose() * other.rotation))
    }

    pub fn translation_distance(&self, other: &RigidTransform) -> f64 {
        (self.translation - other.translation).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.rotation.iter().chain(self.translation.iter()).all(|v| v.is_finite())
    }
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

/// `a ∘ b`: `(a ∘ b)(x) = R_a (R_b x + t_b) + t_a`.
pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    a.compose(b)
}

pub fn transform_points(pose: &RigidTransform, pts: &[Point3]) -> Vec<Point3> {
    pts.iter().map(|p| pose.apply(p)).collect()
}

/// Largest absolute entry of `RᵀR − I`, the orthonormality defect of `r`.
pub fn orthonormality_defect(r: &Matrix3<f64>) -> f64 {
    (r.transpose() * r - Matrix3::identity()).amax()
}

pub fn check_rotation(r: &Matrix3<f64>, tol: f64) -> Result<(), GeometryError> {
    if r.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    let defect = orthonormality_defect(r);
    if defect > tol {
        return Err(GeometryError::NotRigid(format!(
            "rotation is not orthonormal (defect {defect:.3e} > {tol:.0e})"
        )));
    }
    let det = r.determinant();
    if (det - 1.0).abs() > tol {
        return Err(GeometryError::NotRigid(format!(
            "rotation determinant is {det:.6}, expected +1"
        )));
    }
    Ok(())
}

/// Nearest proper rotation in the Frobenius sense.
pub fn nearest_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut d = Matrix3::identity();
    if (u * v_t).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    u * d * v_t
}

/// Rotation angle of a rotation matrix, in `[0, π]`.
pub fn rotation_angle(r: &Matrix3<f64>) -> f64 {
    // acos of the trace loses precision near 0 and π, so use atan2 on
    // the skew part instead.
    let cos = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let skew = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    let sin = 0.5 * skew.norm();
    sin.atan2(cos)
}

/// Unit rotation axis of `r`, or `None` for (numerically) the identity.
pub fn rotation_axis(r: &Matrix3<f64>) -> Option<Vector3<f64>> {
    let angle = rotation_angle(r);
    if angle < 1e-9 {
        return None;
    }
    let skew = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    if angle < std::f64::consts::PI - 1e-6 {
        return Some(skew.normalize());
    }
    // Near π the skew part vanishes; recover the axis from R + I = 2 a aᵀ.
    let b = r + Matrix3::identity();
    let col = (0..3)
        .map(|i| b.column(i).into_owned())
        .max_by(|a, b| a.norm_squared().total_cmp(&b.norm_squared()))?;
    let mut axis = col.normalize();
    if skew.dot(&axis) < 0.0 {
        axis = -axis;
    }
    Some(axis)
}

//! Geometric primitives shared by the rest of the crate: rigid transforms,
//! triangle meshes, pinhole intrinsics and PLY I/O. All lengths are in mm.

mod camera;
mod mesh;
pub mod ply;
mod transform;

use thiserror::Error;

pub use camera::CameraIntrinsics;
pub use mesh::{centroid, diameter, TriangleMesh, EXACT_DIAMETER_LIMIT};
pub use ply::{load_mesh, read_ply, save_mesh, write_ply, PlyError, PlyFormat};
pub use transform::{
    check_rotation, compose, nearest_rotation, orthonormality_defect, rotation_angle, rotation_axis,
    transform_points, RigidTransform, ROTATION_TOLERANCE,
};

pub type Point3 = nalgebra::Point3<f64>;
pub type Point2 = nalgebra::Point2<f64>;
pub type Vector3 = nalgebra::Vector3<f64>;
pub type Matrix3 = nalgebra::Matrix3<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("not a rigid transform: {0}")]
    NotRigid(String),
    #[error("non-finite value in geometry")]
    NonFinite,
    #[error("mesh needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("triangle {face} references vertex {index}, but only {vertex_count} vertices exist")]
    IndexOutOfRange {
        face: usize,
        index: usize,
        vertex_count: usize,
    },
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
}

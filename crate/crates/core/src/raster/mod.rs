//! Software rasterization of distance and depth maps.

mod depth_png;
mod maps;
mod rasterizer;

use thiserror::Error;

use crate::geometry::GeometryError;

pub use depth_png::{read_depth_png, write_depth_png};
pub use maps::{DepthMap, DistanceMap};
pub use rasterizer::{
    depth_to_distance, project_points, render_depth_map, render_distance_map, render_distance_map_with,
    render_scene_depth, RenderOptions, DEFAULT_NEAR_PLANE,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RasterError {
    #[error(transparent)]
    Camera(#[from] GeometryError),
    #[error("size mismatch: expected {expected:?}, got {got:?}")]
    SizeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("invalid map value {value} at ({x}, {y})")]
    InvalidValue { x: usize, y: usize, value: f64 },
    #[error("point {index} is not in front of the camera (Z = {z})")]
    BehindCamera { index: usize, z: f64 },
    #[error("depth image {path}: {message}")]
    Png { path: String, message: String },
}

//! Evaluation of 6D object pose estimates.

pub mod geometry;
pub mod raster;
pub mod symmetry;
pub mod visibility;
pub mod shapes;
pub mod bop_io;
pub mod pose_error;
pub mod scoring;
pub mod evaluate;
pub mod fixtures;
pub mod selftest;

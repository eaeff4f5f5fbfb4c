//! Visibility masks of rendered objects against the measured scene.
//!
//! Within the render footprint a pixel is visible when the rendered surface
//! is in front of the measured surface or at most `delta` behind it, and
//! everywhere the sensor has no measurement (measured value 0).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::DistanceMap;

/// Default visibility tolerance in mm.
pub const DEFAULT_VISIBILITY_DELTA: f64 = 15.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VisibilityError {
    #[error("dimension mismatch: {a:?} vs {b:?}")]
    DimensionMismatch { a: (usize, usize), b: (usize, usize) },
    #[error("visibility tolerance must be positive, got {0}")]
    InvalidDelta(f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisibilityMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl VisibilityMask {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, VisibilityError> {
        if bits.len() != width * height {
            return Err(VisibilityError::DimensionMismatch {
                a: (width, height),
                b: (bits.len(), 1),
            });
        }
        Ok(Self { width, height, bits })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_subset_of(&self, other: &VisibilityMask) -> bool {
        self.dims() == other.dims() && self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b)
    }
}

fn same_dims(a: (usize, usize), b: (usize, usize)) -> Result<(), VisibilityError> {
    if a != b {
        return Err(VisibilityError::DimensionMismatch { a, b });
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<(), VisibilityError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(VisibilityError::InvalidDelta(delta));
    }
    Ok(())
}

/// Visibility of a rendered object against the measured distance map.
pub fn visibility_mask(
    rendered: &DistanceMap,
    measured: &DistanceMap,
    delta: f64,
) -> Result<VisibilityMask, VisibilityError> {
    same_dims(rendered.dims(), measured.dims())?;
    check_delta(delta)?;
    let bits = rendered
        .values()
        .iter()
        .zip(measured.values())
        .map(|(&r, &m)| r > 0.0 && (m == 0.0 || r <= m + delta))
        .collect();
    Ok(VisibilityMask {
        width: rendered.width(),
        height: rendered.height(),
        bits,
    })
}

/// Ground-truth visibility mask; same rule as [`visibility_mask`].
pub fn gt_visibility_mask(
    rendered_gt: &DistanceMap,
    measured: &DistanceMap,
    delta: f64,
) -> Result<VisibilityMask, VisibilityError> {
    visibility_mask(rendered_gt, measured, delta)
}

/// Estimate visibility, additionally marking visible every pixel of the
/// estimate's footprint that lies inside the ground-truth mask.
pub fn est_visibility_mask_extended(
    rendered_est: &DistanceMap,
    measured: &DistanceMap,
    gt_mask: &VisibilityMask,
    delta: f64,
) -> Result<VisibilityMask, VisibilityError> {
    same_dims(rendered_est.dims(), gt_mask.dims())?;
    let mut mask = visibility_mask(rendered_est, measured, delta)?;
    for ((bit, &gt), &r) in mask.bits.iter_mut().zip(&gt_mask.bits).zip(rendered_est.values()) {
        if gt && r > 0.0 {
            *bit = true;
        }
    }
    Ok(mask)
}

/// `|mask| / |footprint(rendered)|`, 0 for an empty footprint.
pub fn visible_fraction(mask: &VisibilityMask, rendered: &DistanceMap) -> f64 {
    let footprint = rendered.nonzero_count();
    if footprint == 0 {
        return 0.0;
    }
    let visible = mask
        .bits
        .iter()
        .zip(rendered.values())
        .filter(|(b, r)| **b && **r > 0.0)
        .count();
    visible as f64 / footprint as f64
}

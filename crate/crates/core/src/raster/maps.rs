use serde::{Deserialize, Serialize};

use super::RasterError;

macro_rules! scalar_map {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        pub struct $name {
            width: usize,
            height: usize,
            values: Vec<f64>,
        }

        impl $name {
            /// Row-major values; every entry must be finite and `>= 0`.
            pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self, RasterError> {
                if values.len() != width * height {
                    return Err(RasterError::SizeMismatch {
                        expected: (width, height),
                        got: (values.len(), 1),
                    });
                }
                if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(RasterError::InvalidValue {
                        x: i % width.max(1),
                        y: i / width.max(1),
                        value: values[i],
                    });
                }
                Ok(Self { width, height, values })
            }

            pub fn zeros(width: usize, height: usize) -> Self {
                Self {
                    width,
                    height,
                    values: vec![0.0; width * height],
                }
            }

            pub(crate) fn from_raw(width: usize, height: usize, values: Vec<f64>) -> Self {
                debug_assert_eq!(values.len(), width * height);
                Self { width, height, values }
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
            pub fn get(&self, x: usize, y: usize) -> f64 {
                self.values[y * self.width + x]
            }

            pub fn values(&self) -> &[f64] {
                &self.values
            }

            /// Number of pixels holding a measurement (value > 0).
            pub fn nonzero_count(&self) -> usize {
                self.values.iter().filter(|v| **v > 0.0).count()
            }
        }
    };
}

scalar_map!(
    /// Per-pixel distance (mm) from the camera center to the imaged surface
    /// point; 0 means no measurement.
    DistanceMap
);

scalar_map!(
    /// Per-pixel Z coordinate (mm) of the imaged surface point; 0 means no
    /// measurement.
    DepthMap
);

use serde::{Deserialize, Serialize};

use super::{GeometryError, Point3};

/// Meshes below this vertex count get a plain O(n²) diameter scan.
pub const EXACT_DIAMETER_LIMIT: usize = 20_000;

/// Object model: vertices in mm, triangles as vertex-index triples, and the
/// diameter (largest distance between any two vertices).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleMesh {
    vertices: Vec<Point3>,
    triangles: Vec<[u32; 3]>,
    diameter: f64,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point3>, triangles: Vec<[u32; 3]>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        if vertices.iter().any(|v| !v.coords.iter().all(|c| c.is_finite())) {
            return Err(GeometryError::NonFinite);
        }
        let n = vertices.len();
        for (face, tri) in triangles.iter().enumerate() {
            if let Some(&index) = tri.iter().find(|&&i| i as usize >= n) {
                return Err(GeometryError::IndexOutOfRange {
                    face,
                    index: index as usize,
                    vertex_count: n,
                });
            }
        }
        let diameter = diameter(&vertices);
        Ok(Self {
            vertices,
            triangles,
            diameter,
        })
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn centroid(&self) -> Point3 {
        centroid(&self.vertices)
    }

    pub fn triangle(&self, i: usize) -> [Point3; 3] {
        let [a, b, c] = self.triangles[i];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }
}

pub fn centroid(points: &[Point3]) -> Point3 {
    let sum = points.iter().fold(nalgebra::Vector3::zeros(), |acc, p| acc + p.coords);
    Point3::from(sum / points.len().max(1) as f64)
}

/// Largest pairwise distance of a point set.
///
/// Small sets use the direct pairwise scan. Larger sets first take a lower
/// bound `L` from extreme points, then keep only points whose distance to the
/// bounding-box center `c` is at least `L - R` (`R` = max distance to `c`):
/// any pair at distance `≥ L` satisfies `|p-c| + |q-c| ≥ L`, so both members
/// survive the filter. The result is exact in both paths.
pub fn diameter(points: &[Point3]) -> f64 {
    if points.len() <= EXACT_DIAMETER_LIMIT {
        return max_pairwise(points);
    }

    let (lo, hi) = points.iter().fold(
        (points[0].coords, points[0].coords),
        |(lo, hi), p| (lo.inf(&p.coords), hi.sup(&p.coords)),
    );
    let center = Point3::from((lo + hi) * 0.5);

    let directions = extreme_directions();
    let mut extremes: Vec<Point3> = Vec::with_capacity(directions.len() * 2);
    for d in &directions {
        let (mut min_i, mut max_i) = (0, 0);
        let (mut min_v, mut max_v) = (f64::INFINITY, f64::NEG_INFINITY);
        for (i, p) in points.iter().enumerate() {
            let v = p.coords.dot(d);
            if v < min_v {
                min_v = v;
                min_i = i;
            }
            if v > max_v {
                max_v = v;
                max_i = i;
            }
        }
        extremes.push(points[min_i]);
        extremes.push(points[max_i]);
    }
    let lower = max_pairwise(&extremes);

    let radius = points
        .iter()
        .map(|p| (p - center).norm())
        .fold(0.0, f64::max);
    // small slack so rounding in the norms cannot drop a boundary point
    let cut = lower - radius - 1e-9 * (radius + 1.0);
    let survivors: Vec<Point3> = points
        .iter()
        .filter(|p| (*p - center).norm() >= cut)
        .copied()
        .collect();
    max_pairwise(&survivors).max(lower)
}

fn extreme_directions() -> Vec<nalgebra::Vector3<f64>> {
    let mut out = Vec::new();
    for x in -1i32..=1 {
        for y in -1i32..=1 {
            for z in -1i32..=1 {
                // one representative per ± pair
                let first_nonzero = [x, y, z].into_iter().find(|&c| c != 0);
                if first_nonzero == Some(1) {
                    out.push(nalgebra::Vector3::new(x as f64, y as f64, z as f64).normalize());
                }
            }
        }
    }
    out
}

fn max_pairwise(points: &[Point3]) -> f64 {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        points
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                points[i + 1..]
                    .iter()
                    .map(|q| (p - q).norm_squared())
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
            .sqrt()
    }
    #[cfg(not(feature = "parallel"))]
    {
        points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                points[i + 1..]
                    .iter()
                    .map(|q| (p - q).norm_squared())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(points: &[Point3]) -> f64 {
        let mut best: f64 = 0.0;
        for p in points {
            for q in points {
                best = best.max((p - q).norm());
            }
        }
        best
    }

    #[test]
    fn right_triangle_diameter() {
        let m = TriangleMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(3.0, 0.0, 0.0),
                Point3::new(0.0, 4.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert_eq!(m.diameter(), 5.0);
    }

    #[test]
    fn rejects_out_of_range_index() {
        let err = TriangleMesh::new(
            vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 3]],
        )
        .unwrap_err();
        assert!(matches!(err, GeometryError::IndexOutOfRange { face: 0, index: 3, .. }));
    }

    #[test]
    fn pruned_diameter_matches_brute_force() {
        // Deterministic pseudo-random cloud above the exact-scan limit would
        // make the brute force slow, so exercise the pruning path directly.
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 200.0 - 100.0
        };
        let pts: Vec<Point3> = (0..3000).map(|_| Point3::new(next(), next() * 0.5, next() * 0.2)).collect();
        let expect = brute(&pts);

        let (lo, hi) = pts.iter().fold((pts[0].coords, pts[0].coords), |(lo, hi), p| {
            (lo.inf(&p.coords), hi.sup(&p.coords))
        });
        let center = Point3::from((lo + hi) * 0.5);
        let radius = pts.iter().map(|p| (p - center).norm()).fold(0.0, f64::max);
        let survivors: Vec<Point3> = pts
            .iter()
            .filter(|p| (*p - center).norm() >= expect * 0.9 - radius)
            .copied()
            .collect();
        assert_eq!(max_pairwise(&survivors), expect);
    }

    #[test]
    fn large_cloud_uses_pruned_path() {
        let mut pts = Vec::new();
        for i in 0..EXACT_DIAMETER_LIMIT + 10 {
            let t = i as f64 * 0.001;
            pts.push(Point3::new(t.cos() * 50.0, t.sin() * 50.0, (i % 7) as f64));
        }
        pts.push(Point3::new(0.0, 0.0, 400.0));
        let d = diameter(&pts);
        let far = pts
            .iter()
            .map(|p| (p - Point3::new(0.0, 0.0, 400.0)).norm())
            .fold(0.0, f64::max);
        assert_eq!(d, far);
    }
}

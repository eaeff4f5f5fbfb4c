//! Exact Hausdorff distance on a uniform spatial hash grid.

use std::collections::HashMap;

use crate::geometry::{Point3, RigidTransform};

use super::SymmetryError;

type CellKey = [i64; 3];

/// Uniform grid over a point set. Queries are exact: the grid only prunes
/// cells that provably cannot hold a closer point.
#[derive(Debug, Clone)]
pub struct PointGrid {
    cell: f64,
    points: Vec<Point3>,
    order: Vec<u32>,
    cells: HashMap<CellKey, (u32, u32)>,
    key_min: CellKey,
    key_max: CellKey,
}

impl PointGrid {
    pub fn new(points: &[Point3], cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite(), "grid cell size must be positive");
        let key = |p: &Point3| -> CellKey {
            [
                (p.x / cell).floor() as i64,
                (p.y / cell).floor() as i64,
                (p.z / cell).floor() as i64,
            ]
        };
        let mut keyed: Vec<(CellKey, u32)> = points.iter().enumerate().map(|(i, p)| (key(p), i as u32)).collect();
        keyed.sort_unstable();
        let mut cells = HashMap::new();
        let mut key_min = [i64::MAX; 3];
        let mut key_max = [i64::MIN; 3];
        let mut start = 0;
        while start < keyed.len() {
            let k = keyed[start].0;
            let mut end = start;
            while end < keyed.len() && keyed[end].0 == k {
                end += 1;
            }
            cells.insert(k, (start as u32, (end - start) as u32));
            for d in 0..3 {
                key_min[d] = key_min[d].min(k[d]);
                key_max[d] = key_max[d].max(k[d]);
            }
            start = end;
        }
        Self {
            cell,
            points: points.to_vec(),
            order: keyed.into_iter().map(|(_, i)| i).collect(),
            cells,
            key_min,
            key_max,
        }
    }

    /// Grid with roughly a constant number of points per occupied cell.
    pub fn auto(points: &[Point3]) -> Self {
        let (lo, hi) = points.iter().fold(
            (Point3::new(f64::MAX, f64::MAX, f64::MAX).coords, Point3::new(f64::MIN, f64::MIN, f64::MIN).coords),
            |(lo, hi), p| (lo.inf(&p.coords), hi.sup(&p.coords)),
        );
        let diag = if points.is_empty() { 0.0 } else { (hi - lo).norm() };
        let per_axis = (points.len() as f64).cbrt().max(1.0);
        let cell = if diag > 0.0 { diag / per_axis } else { 1.0 };
        Self::new(points, cell)
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    fn key(&self, p: &Point3) -> CellKey {
        [
            (p.x / self.cell).floor() as i64,
            (p.y / self.cell).floor() as i64,
            (p.z / self.cell).floor() as i64,
        ]
    }

    fn cell_points(&self, k: &CellKey) -> &[u32] {
        match self.cells.get(k) {
            Some(&(start, len)) => &self.order[start as usize..(start + len) as usize],
            None => &[],
        }
    }

    /// Whether some grid point lies strictly closer than `radius` to `p`.
    pub fn any_within(&self, p: &Point3, radius: f64) -> bool {
        let r2 = radius * radius;
        let reach = (radius / self.cell).ceil() as i64;
        let k = self.key(p);
        for x in k[0] - reach..=k[0] + reach {
            for y in k[1] - reach..=k[1] + reach {
                for z in k[2] - reach..=k[2] + reach {
                    for &i in self.cell_points(&[x, y, z]) {
                        if (self.points[i as usize] - p).norm_squared() < r2 {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    /// Nearest grid point to `p`: `(index, squared distance)`.
    pub fn nearest(&self, p: &Point3) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let k = self.key(p);
        // rings closer than the occupied key box are empty
        let gap = (0..3)
            .map(|d| (self.key_min[d] - k[d]).max(k[d] - self.key_max[d]).max(0))
            .max()
            .unwrap_or(0);
        let span = (0..3)
            .map(|d| (k[d] - self.key_min[d]).abs().max((self.key_max[d] - k[d]).abs()))
            .max()
            .unwrap_or(0);

        let mut best = (usize::MAX, f64::INFINITY);
        let visit = |key: CellKey, best: &mut (usize, f64)| {
            for &i in self.cell_points(&key) {
                let d2 = (self.points[i as usize] - p).norm_squared();
                if d2 < best.1 || (d2 == best.1 && (i as usize) < best.0) {
                    *best = (i as usize, d2);
                }
            }
        };
        let mut ring = gap;
        loop {
            let clamp = |d: usize, lo: i64, hi: i64| (lo.max(self.key_min[d]), hi.min(self.key_max[d]));
            let (x0, x1) = clamp(0, k[0] - ring, k[0] + ring);
            let (y0, y1) = clamp(1, k[1] - ring, k[1] + ring);
            for x in x0..=x1 {
                for y in y0..=y1 {
                    let on_shell = (x - k[0]).abs() == ring || (y - k[1]).abs() == ring;
                    if on_shell {
                        let (z0, z1) = clamp(2, k[2] - ring, k[2] + ring);
                        for z in z0..=z1 {
                            visit([x, y, z], &mut best);
                        }
                    } else {
                        for z in [k[2] - ring, k[2] + ring] {
                            if z >= self.key_min[2] && z <= self.key_max[2] {
                                visit([x, y, z], &mut best);
                            }
                            if ring == 0 {
                                break;
                            }
                        }
                    }
                }
            }
            // unvisited points are at least `ring` whole cells away
            let bound = ring as f64 * self.cell;
            if best.1 <= bound * bound || ring >= span {
                break;
            }
            ring += 1;
        }
        Some(best)
    }

    /// Largest nearest-neighbour distance from `query` points into the grid.
    pub fn directed_distance(&self, query: &[Point3]) -> f64 {
        let worst = {
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                query
                    .par_iter()
                    .map(|q| self.nearest(q).map_or(f64::INFINITY, |(_, d2)| d2))
                    .reduce(|| 0.0, f64::max)
            }
            #[cfg(not(feature = "parallel"))]
            {
                query
                    .iter()
                    .map(|q| self.nearest(q).map_or(f64::INFINITY, |(_, d2)| d2))
                    .fold(0.0, f64::max)
            }
        };
        worst.sqrt()
    }
}

/// Directed Hausdorff distance `max_{x∈a} min_{y∈b} ‖x−y‖`.
pub fn directed_hausdorff(a: &[Point3], b: &[Point3]) -> Result<f64, SymmetryError> {
    if a.is_empty() || b.is_empty() {
        return Err(SymmetryError::EmptyPointSet);
    }
    Ok(PointGrid::auto(b).directed_distance(a))
}

/// Symmetric Hausdorff distance `max(h(a, b), h(b, a))`.
pub fn hausdorff(a: &[Point3], b: &[Point3]) -> Result<f64, SymmetryError> {
    Ok(directed_hausdorff(a, b)?.max(directed_hausdorff(b, a)?))
}

/// Tests `h(V, T·V) < ε` for rigid transforms of one fixed vertex set.
///
/// `h(T·V → V)` queries the grid with `T·v`; `h(V → T·V)` equals
/// `h(T⁻¹·V → V)`, so both directions reuse a single grid over `V`.
#[derive(Debug, Clone)]
pub struct SymmetryVerifier {
    grid: PointGrid,
    epsilon: f64,
}

impl SymmetryVerifier {
    pub fn new(vertices: &[Point3], epsilon: f64) -> Self {
        Self {
            grid: PointGrid::new(vertices, epsilon),
            epsilon,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn grid(&self) -> &PointGrid {
        &self.grid
    }

    fn all_within(&self, t: &RigidTransform) -> bool {
        self.grid
            .points()
            .iter()
            .all(|v| self.grid.any_within(&t.apply(v), self.epsilon))
    }

    /// `h(V, T·V) < ε`.
    pub fn passes(&self, t: &RigidTransform) -> bool {
        self.all_within(t) && self.all_within(&t.inverse())
    }

    /// Exact `h(V, T·V)`.
    pub fn distance(&self, t: &RigidTransform) -> f64 {
        let fwd: Vec<Point3> = self.grid.points().iter().map(|v| t.apply(v)).collect();
        let inv = t.inverse();
        let back: Vec<Point3> = self.grid.points().iter().map(|v| inv.apply(v)).collect();
        self.grid.directed_distance(&fwd).max(self.grid.directed_distance(&back))
    }
}

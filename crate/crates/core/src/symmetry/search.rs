//! Search for global rotational symmetries of a mesh.
//!
//! The membership test is `h(V, S·V) < ε` on the vertex set. Candidates are
//! rotations about the vertex centroid:
//!
//! * axes: principal axes of the vertex covariance, the directions from the
//!   centroid to mesh features (vertices, edge midpoints, triangle centroids;
//!   binned on a 252-direction icosahedral sphere for large meshes), and the
//!   252 sphere directions themselves;
//! * angles: `360°/k` for `k = 2..=36`, accepted only when every power of the
//!   rotation passes, which rejects small near-identity rotations that fit
//!   inside the tolerance;
//! * closure: products of accepted rotations are tested as well.
//!
//! Accepted rotations are snapped onto exact vertex correspondences with a
//! few Kabsch iterations, then merged when closer than 1° (and ε/10 in
//! translation).

use std::f64::consts::PI;

use log::warn;
use nalgebra::SymmetricEigen;

use crate::geometry::{nearest_rotation, rotation_axis, Matrix3, Point3, RigidTransform, TriangleMesh, Vector3};

use super::hausdorff::SymmetryVerifier;
use super::{ContinuousSymmetry, Provenance, SymmetrySet};

pub const MIN_EPSILON_MM: f64 = 15.0;
pub const EPSILON_DIAMETER_FRACTION: f64 = 0.1;
/// Largest `k` of the tested `360°/k` rotations.
pub const MAX_FOLD: u32 = 36;
/// Sweep step used to decide whether an axis is a continuous symmetry.
pub const CONTINUOUS_SWEEP_STEP_DEG: u32 = 10;
/// Continuous rotations move the farthest vertex at most this fraction of
/// the diameter between consecutive discrete steps.
pub const CONTINUOUS_TRAVEL_FRACTION: f64 = 0.01;

const MERGE_ANGLE_DEG: f64 = 1.0;
const AXIS_DEDUP_DEG: f64 = 0.25;
const CONTINUOUS_SEPARATION_DEG: f64 = 20.0;
const NEAR_CONTINUOUS_DEG: f64 = 15.0;
const MAX_FEATURE_DIRECTIONS: usize = 2000;
const MAX_SET_SIZE: usize = 512;

/// `ε = max(15 mm, 0.1·d)`.
pub fn symmetry_epsilon(mesh: &TriangleMesh) -> f64 {
    epsilon_for_diameter(mesh.diameter())
}

pub fn epsilon_for_diameter(diameter: f64) -> f64 {
    (EPSILON_DIAMETER_FRACTION * diameter).max(MIN_EPSILON_MM)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SearchOptions {
    /// Overrides `ε = max(15, 0.1·d)` when set.
    pub epsilon: Option<f64>,
}

impl SearchOptions {
    fn epsilon(&self, mesh: &TriangleMesh) -> f64 {
        self.epsilon.unwrap_or_else(|| symmetry_epsilon(mesh))
    }
}

/// Result of a full symmetry analysis of one model.
#[derive(Debug, Clone)]
pub struct SymmetryAnalysis {
    pub epsilon: f64,
    pub discrete: SymmetrySet,
    pub continuous: Vec<ContinuousSymmetry>,
    /// More than one continuous axis: the shape is (near) spherical and the
    /// result needs a manual decision.
    pub needs_review: bool,
}

impl SymmetryAnalysis {
    /// The full pose-equivalence set: discrete members combined with the
    /// discretized continuous rotations.
    pub fn expanded(&self, mesh: &TriangleMesh) -> SymmetrySet {
        self.discrete.expand_continuous(&self.continuous, mesh)
    }
}

pub fn analyze_symmetries(mesh: &TriangleMesh, opts: &SearchOptions) -> SymmetryAnalysis {
    let epsilon = opts.epsilon(mesh);
    let continuous = find_continuous_symmetries_with(mesh, opts);
    let needs_review = continuous.len() > 1;
    let discrete = search_discrete(mesh, epsilon, &continuous);
    SymmetryAnalysis {
        epsilon,
        discrete,
        continuous,
        needs_review,
    }
}

pub fn find_discrete_symmetries(mesh: &TriangleMesh) -> SymmetrySet {
    find_discrete_symmetries_with(mesh, &SearchOptions::default())
}

/// Discrete rotational symmetries (identity first). Rotations about a
/// detected continuous axis are not listed; they come from
/// [`discretize_continuous`].
pub fn find_discrete_symmetries_with(mesh: &TriangleMesh, opts: &SearchOptions) -> SymmetrySet {
    analyze_symmetries(mesh, opts).discrete
}

pub fn find_continuous_symmetries(mesh: &TriangleMesh) -> Vec<ContinuousSymmetry> {
    find_continuous_symmetries_with(mesh, &SearchOptions::default())
}

/// Axes through the vertex centroid for which every rotation by a multiple
/// of 10° passes the symmetry test. Near-parallel detections (within 20°)
/// are merged, keeping the best-fitting axis.
pub fn find_continuous_symmetries_with(mesh: &TriangleMesh, opts: &SearchOptions) -> Vec<ContinuousSymmetry> {
    let epsilon = opts.epsilon(mesh);
    let center = mesh.centroid();
    let verifier = SymmetryVerifier::new(mesh.vertices(), epsilon);
    let axes = candidate_axes(mesh, &center);

    let sweep = |axis: &Vector3| -> Option<f64> {
        let steps = 360 / CONTINUOUS_SWEEP_STEP_DEG;
        for j in 1..steps {
            let angle = (j * CONTINUOUS_SWEEP_STEP_DEG) as f64 * PI / 180.0;
            if !verifier.passes(&RigidTransform::about_axis(axis, angle, &center)) {
                return None;
            }
        }
        let score = [45.0f64, 90.0, 135.0, 180.0]
            .iter()
            .map(|deg| verifier.distance(&RigidTransform::about_axis(axis, deg.to_radians(), &center)))
            .fold(0.0, f64::max);
        Some(score)
    };

    let scored: Vec<Option<f64>> = par_map(&axes, sweep);
    let mut passing: Vec<(f64, usize)> = scored
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|s| (s, i)))
        .collect();
    passing.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let sep = CONTINUOUS_SEPARATION_DEG.to_radians().cos();
    let mut accepted: Vec<Vector3> = Vec::new();
    for (_, i) in passing {
        let axis = axes[i];
        if accepted.iter().all(|a| a.dot(&axis).abs() < sep) {
            accepted.push(axis);
        }
    }
    if accepted.len() > 1 {
        warn!(
            "{} continuous symmetry axes detected; the model looks spherical and needs manual review",
            accepted.len()
        );
    }
    accepted
        .into_iter()
        .map(|axis| ContinuousSymmetry::new(axis, center).expect("candidate axes are non-zero"))
        .collect()
}

/// Distance of the farthest vertex from the axis line.
pub fn max_axis_radius(sym: &ContinuousSymmetry, mesh: &TriangleMesh) -> f64 {
    mesh.vertices()
        .iter()
        .map(|v| {
            let rel = v - sym.offset();
            (rel - sym.axis() * rel.dot(sym.axis())).norm()
        })
        .fold(0.0, f64::max)
}

/// Number of equally spaced rotations `n = ceil(2π/θ)` (identity included),
/// with `θ = 2·asin(min(1, 0.01·d / (2·r_max)))`. Returns 1 for `r_max ≈ 0`.
pub fn chord_step_count(diameter: f64, r_max: f64) -> usize {
    if r_max <= 1e-12 * (1.0 + diameter) {
        return 1;
    }
    let half_chord = CONTINUOUS_TRAVEL_FRACTION * diameter / (2.0 * r_max);
    let theta = 2.0 * half_chord.min(1.0).asin();
    (2.0 * PI / theta).ceil() as usize
}

/// [`chord_step_count`] for the farthest vertex of `mesh` from the axis.
pub fn continuous_step_count(sym: &ContinuousSymmetry, mesh: &TriangleMesh) -> usize {
    chord_step_count(mesh.diameter(), max_axis_radius(sym, mesh))
}

/// The `n − 1` non-identity rotations about a continuous axis, spaced by
/// `2π/n` (see [`continuous_step_count`]). For a degenerate axis (all
/// vertices on it) a lone identity is returned and a warning is logged.
pub fn discretize_continuous(sym: &ContinuousSymmetry, mesh: &TriangleMesh) -> Vec<RigidTransform> {
    let n = continuous_step_count(sym, mesh);
    if n <= 1 {
        warn!("all vertices lie on the continuous symmetry axis; using the identity only");
        return vec![RigidTransform::identity()];
    }
    (1..n)
        .map(|i| RigidTransform::about_axis(sym.axis(), 2.0 * PI * i as f64 / n as f64, sym.offset()))
        .collect()
}

fn search_discrete(mesh: &TriangleMesh, epsilon: f64, continuous: &[ContinuousSymmetry]) -> SymmetrySet {
    if continuous.len() > 1 {
        // every rotation through the centroid fits; nothing discrete to add
        return SymmetrySet::identity_only();
    }
    let center = mesh.centroid();
    let verifier = SymmetryVerifier::new(mesh.vertices(), epsilon);
    let axes = candidate_axes(mesh, &center);
    let near_cont = NEAR_CONTINUOUS_DEG.to_radians().cos();
    let cont_axes: Vec<Vector3> = continuous.iter().map(|c| *c.axis()).collect();

    let per_axis: Vec<Vec<RigidTransform>> = par_map(&axes, |axis| {
        if cont_axes.iter().any(|c| c.dot(axis).abs() > near_cont) {
            return Vec::new();
        }
        let mut found = Vec::new();
        for k in 2..=MAX_FOLD {
            let step = 2.0 * PI / k as f64;
            let powers: Vec<RigidTransform> = (1..k)
                .map(|j| RigidTransform::about_axis(axis, step * j as f64, &center))
                .collect();
            if powers.iter().all(|r| verifier.passes(r)) {
                found.extend(powers);
            }
        }
        found
    });

    let mut members = vec![RigidTransform::identity()];
    let ctx = MergeContext {
        center,
        epsilon,
        continuous: &cont_axes,
    };
    for candidate in per_axis.into_iter().flatten() {
        ctx.try_add(&mut members, candidate, &verifier);
    }

    // close under composition
    loop {
        let mut added = false;
        let snapshot = members.clone();
        'outer: for a in &snapshot {
            for b in &snapshot {
                if members.len() >= MAX_SET_SIZE {
                    warn!("symmetry set reached {MAX_SET_SIZE} members; stopping closure");
                    break 'outer;
                }
                added |= ctx.try_add(&mut members, a.compose(b), &verifier);
            }
        }
        if !added || members.len() >= MAX_SET_SIZE {
            break;
        }
    }

    let mut set = SymmetrySet::identity_only();
    for m in members.into_iter().skip(1) {
        set.push(m, Provenance::Searched);
    }
    set
}

struct MergeContext<'a> {
    center: Point3,
    epsilon: f64,
    continuous: &'a [Vector3],
}

impl MergeContext<'_> {
    fn equivalent(&self, a: &RigidTransform, b: &RigidTransform) -> bool {
        let delta = a.inverse().compose(b);
        let angle = crate::geometry::rotation_angle(delta.rotation());
        if angle < MERGE_ANGLE_DEG.to_radians() && a.translation_distance(b) < self.epsilon / 10.0 {
            return true;
        }
        // members differing by a rotation about a continuous axis are one class
        let parallel = MERGE_ANGLE_DEG.to_radians().cos();
        match rotation_axis(delta.rotation()) {
            Some(axis) => self.continuous.iter().any(|c| c.dot(&axis).abs() > parallel),
            None => false,
        }
    }

    fn try_add(&self, members: &mut Vec<RigidTransform>, candidate: RigidTransform, verifier: &SymmetryVerifier) -> bool {
        if members.iter().any(|m| self.equivalent(m, &candidate)) {
            return false;
        }
        let refined = refine_rotation(&candidate, &self.center, verifier);
        let chosen = if verifier.passes(&refined) {
            refined
        } else if verifier.passes(&candidate) {
            candidate
        } else {
            return false;
        };
        if members.iter().any(|m| self.equivalent(m, &chosen)) {
            return false;
        }
        members.push(chosen);
        true
    }
}

/// Snaps a rotation about `center` onto its nearest-vertex correspondences
/// (iterated Kabsch, rotation constrained to fix `center`).
fn refine_rotation(t: &RigidTransform, center: &Point3, verifier: &SymmetryVerifier) -> RigidTransform {
    let verts = verifier.grid().points();
    let mut current = *t;
    for _ in 0..20 {
        let mut h = Matrix3::zeros();
        for v in verts {
            let Some((j, _)) = verifier.grid().nearest(&current.apply(v)) else {
                return current;
            };
            h += (v - center) * (verts[j] - center).transpose();
        }
        // R = argmin Σ‖R a − b‖² for a = v − c, b = match − c
        let rotation = nearest_rotation(&h.transpose());
        let Ok(next) = RigidTransform::rotation_about(rotation, center) else {
            return current;
        };
        let moved = current.angle_to(&next);
        current = next;
        if moved < 1e-12 {
            break;
        }
    }
    current
}

fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Unit vectors covering the sphere: icosahedron faces subdivided with
/// frequency 5, which gives `10·5² + 2 = 252` directions.
pub fn icosphere_directions() -> Vec<Vector3> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let v = [
        Vector3::new(-1.0, phi, 0.0),
        Vector3::new(1.0, phi, 0.0),
        Vector3::new(-1.0, -phi, 0.0),
        Vector3::new(1.0, -phi, 0.0),
        Vector3::new(0.0, -1.0, phi),
        Vector3::new(0.0, 1.0, phi),
        Vector3::new(0.0, -1.0, -phi),
        Vector3::new(0.0, 1.0, -phi),
        Vector3::new(phi, 0.0, -1.0),
        Vector3::new(phi, 0.0, 1.0),
        Vector3::new(-phi, 0.0, -1.0),
        Vector3::new(-phi, 0.0, 1.0),
    ];
    let faces = [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    const FREQ: usize = 5;
    let mut out: Vec<Vector3> = Vec::with_capacity(252);
    for f in faces {
        for i in 0..=FREQ {
            for j in 0..=FREQ - i {
                let k = FREQ - i - j;
                let p = (v[f[0]] * i as f64 + v[f[1]] * j as f64 + v[f[2]] * k as f64).normalize();
                if out.iter().all(|q| (q - p).norm_squared() > 1e-12) {
                    out.push(p);
                }
            }
        }
    }
    out
}

fn canonical_axis(v: Vector3) -> Vector3 {
    let n = v.normalize();
    let first = n.iter().copied().find(|c| c.abs() > 1e-12).unwrap_or(1.0);
    if first < 0.0 {
        -n
    } else {
        n
    }
}

/// Candidate rotation axes (unit, sign-canonical, deduplicated).
pub fn candidate_axes(mesh: &TriangleMesh, center: &Point3) -> Vec<Vector3> {
    let verts = mesh.vertices();
    let min_len = 1e-6 * mesh.diameter().max(1e-9);

    let mut axes: Vec<Vector3> = Vec::new();

    let mut cov = Matrix3::zeros();
    for v in verts {
        let d = v - center;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    for i in 0..3 {
        axes.push(eig.eigenvectors.column(i).into_owned());
    }

    let mut features: Vec<Vector3> = verts.iter().map(|v| v - center).collect();
    let mut edges: Vec<(u32, u32)> = mesh
        .triangles()
        .iter()
        .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    features.extend(
        edges
            .iter()
            .map(|&(a, b)| Point3::from((verts[a as usize].coords + verts[b as usize].coords) * 0.5) - center),
    );
    features.extend(mesh.triangles().iter().map(|t| {
        Point3::from((verts[t[0] as usize].coords + verts[t[1] as usize].coords + verts[t[2] as usize].coords) / 3.0)
            - center
    }));
    features.retain(|f| f.norm() > min_len);

    let sphere = icosphere_directions();
    let feature_dirs: Vec<Vector3> = features.iter().map(|f| canonical_axis(*f)).collect();
    let distinct = dedup_axes(feature_dirs.clone(), AXIS_DEDUP_DEG);
    if distinct.len() <= MAX_FEATURE_DIRECTIONS {
        axes.extend(distinct);
    } else {
        // bin on the sphere: keep each bin's mean direction and its farthest feature
        let mut bins: Vec<(Vector3, f64, Option<Vector3>)> = vec![(Vector3::zeros(), 0.0, None); sphere.len()];
        for (f, dir) in features.iter().zip(&feature_dirs) {
            let (bin, _) = sphere
                .iter()
                .enumerate()
                .map(|(i, s)| (i, s.dot(dir).abs()))
                .fold((0, f64::MIN), |best, cur| if cur.1 > best.1 { cur } else { best });
            let entry = &mut bins[bin];
            let aligned = if sphere[bin].dot(dir) < 0.0 { -dir } else { *dir };
            entry.0 += aligned;
            if f.norm() > entry.1 {
                entry.1 = f.norm();
                entry.2 = Some(*dir);
            }
        }
        for (sum, _, far) in bins {
            if sum.norm() > 1e-12 {
                axes.push(sum);
            }
            if let Some(far) = far {
                axes.push(far);
            }
        }
    }
    axes.extend(sphere);
    dedup_axes(axes.into_iter().map(canonical_axis).collect(), AXIS_DEDUP_DEG)
}

fn dedup_axes(axes: Vec<Vector3>, tol_deg: f64) -> Vec<Vector3> {
    let cos_tol = tol_deg.to_radians().cos();
    let mut out: Vec<Vector3> = Vec::new();
    for a in axes {
        if out.iter().all(|b| b.dot(&a).abs() < cos_tol) {
            out.push(a);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_examples() {
        assert_eq!(epsilon_for_diameter(100.0), 15.0);
        assert_eq!(epsilon_for_diameter(300.0), 30.0);
        assert_eq!(epsilon_for_diameter(150.0), 15.0);
    }

    #[test]
    fn sphere_sampling_has_252_directions() {
        let dirs = icosphere_directions();
        assert_eq!(dirs.len(), 252);
        assert!(dirs.iter().all(|d| (d.norm() - 1.0).abs() < 1e-12));
    }
}

//! Naive reference implementations, written without the library's metric
//! code paths.

use std::collections::BTreeMap;

use nalgebra::{Matrix3, Point3, Vector3};
use poseval::fixtures;
use poseval::geometry::{CameraIntrinsics, RigidTransform, TriangleMesh};

/// `(not matched, union)` pixel counts for one `τ`.
pub fn vsd_counts(est: &[f64], gt: &[f64], em: &[bool], gm: &[bool], tau: f64) -> (usize, usize) {
    let mut union = 0;
    let mut bad = 0;
    for i in 0..est.len() {
        if em[i] || gm[i] {
            union += 1;
            let matched = em[i] && gm[i] && (est[i] - gt[i]).abs() < tau;
            if !matched {
                bad += 1;
            }
        }
    }
    (bad, union)
}

/// `min_s max_v dist(s, v)` by plain nested loops.
pub fn min_max(n_sym: usize, n_vert: usize, dist: impl Fn(usize, usize) -> f64) -> f64 {
    let mut best = f64::INFINITY;
    for s in 0..n_sym {
        let mut worst = 0.0f64;
        for v in 0..n_vert {
            worst = worst.max(dist(s, v));
        }
        best = best.min(worst);
    }
    best
}

/// The 24 proper rotations of an axis-aligned cube: signed permutation
/// matrices with determinant +1.
pub fn cube_rotations() -> Vec<Matrix3<f64>> {
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = Vec::new();
    for p in perms {
        for signs in 0..8 {
            let mut m = Matrix3::zeros();
            for row in 0..3 {
                m[(row, p[row])] = if signs >> row & 1 == 1 { -1.0 } else { 1.0 };
            }
            if m.determinant() > 0.0 {
                out.push(m);
            }
        }
    }
    out
}

pub fn brute_diameter(pts: &[Point3<f64>]) -> f64 {
    let mut d = 0.0f64;
    for a in pts {
        for b in pts {
            d = d.max((a - b).norm());
        }
    }
    d
}

pub fn brute_hausdorff(a: &[Point3<f64>], b: &[Point3<f64>]) -> f64 {
    let directed = |x: &[Point3<f64>], y: &[Point3<f64>]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

pub fn project(cam: &CameraIntrinsics, p: &Point3<f64>) -> (f64, f64) {
    (cam.fx * p.x / p.z + cam.cx, cam.fy * p.y / p.z + cam.cy)
}

fn matrix(pose: &RigidTransform) -> (Matrix3<f64>, Vector3<f64>) {
    (*pose.rotation(), *pose.translation())
}

fn transform(pose: &RigidTransform, p: &Point3<f64>) -> Point3<f64> {
    let (r, t) = matrix(pose);
    Point3::from(r * p.coords + t)
}

/// Triangle soup in camera coordinates, intersected per pixel ray.
pub struct RayScene {
    tris: Vec<[Point3<f64>; 3]>,
}

impl RayScene {
    pub fn new(items: &[(&TriangleMesh, RigidTransform)]) -> Self {
        let mut tris = Vec::new();
        for (mesh, pose) in items {
            for t in mesh.triangles() {
                tris.push(t.map(|i| transform(pose, &mesh.vertices()[i as usize])));
            }
        }
        Self { tris }
    }

    /// Smallest ray parameter `Z` of a hit for the ray through pixel `(u, v)`,
    /// Moller-Trumbore, both faces.
    fn hit_z(&self, dir: &Vector3<f64>) -> Option<f64> {
        let mut best: Option<f64> = None;
        for [a, b, c] in &self.tris {
            let e1 = b - a;
            let e2 = c - a;
            let p = dir.cross(&e2);
            let det = e1.dot(&p);
            if det.abs() < 1e-12 {
                continue;
            }
            let inv = 1.0 / det;
            let s = -a.coords;
            let u = s.dot(&p) * inv;
            if !(0.0..=1.0).contains(&u) {
                continue;
            }
            let q = s.cross(&e1);
            let v = dir.dot(&q) * inv;
            if v < 0.0 || u + v > 1.0 {
                continue;
            }
            let t = e2.dot(&q) * inv;
            if t > 0.0 && best.map_or(true, |b| t < b) {
                best = Some(t);
            }
        }
        best
    }

    /// Per-pixel `Z` (0 = no hit), rays through integer pixel coordinates.
    pub fn depth(&self, cam: &CameraIntrinsics) -> Vec<f64> {
        let mut out = Vec::with_capacity(cam.width * cam.height);
        for y in 0..cam.height {
            for x in 0..cam.width {
                let dir = Vector3::new((x as f64 - cam.cx) / cam.fx, (y as f64 - cam.cy) / cam.fy, 1.0);
                out.push(self.hit_z(&dir).unwrap_or(0.0));
            }
        }
        out
    }
}

pub fn depth_to_distance(depth: &[f64], cam: &CameraIntrinsics) -> Vec<f64> {
    depth
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let (x, y) = ((i % cam.width) as f64, (i / cam.width) as f64);
            let ray = Vector3::new((x - cam.cx) / cam.fx, (y - cam.cy) / cam.fy, 1.0);
            z * ray.norm()
        })
        .collect()
}

pub fn render_distance(mesh: &TriangleMesh, pose: RigidTransform, cam: &CameraIntrinsics) -> Vec<f64> {
    depth_to_distance(&RayScene::new(&[(mesh, pose)]).depth(cam), cam)
}

fn visible(rendered: &[f64], measured: &[f64], delta: f64) -> Vec<bool> {
    rendered
        .iter()
        .zip(measured)
        .map(|(&r, &m)| r > 0.0 && (m == 0.0 || r <= m + delta))
        .collect()
}

/// Recall fractions `{0.05, …, 0.50}` and MSPD multiples `{5, …, 50}`.
pub fn fractions() -> Vec<f64> {
    (1..=10).map(|i| i as f64 * 0.05).collect()
}

pub fn mspd_px(width: usize) -> Vec<f64> {
    (1..=10).map(|i| 5.0 * i as f64 * width as f64 / 640.0).collect()
}

/// Errors of one matched estimate / GT pair.
#[derive(Debug, Clone)]
pub struct PairErrors {
    pub vsd: Vec<f64>,
    pub mssd: f64,
    pub mspd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArTriple {
    pub vsd: f64,
    pub mssd: f64,
    pub mspd: f64,
}

/// Counting oracle for a fixture submission on the mini dataset: every
/// (image, object) has at most one visible GT and, after keeping the best
/// scored estimate, at most one estimate.
pub fn fixture_ar(submission: &[poseval::scoring::PoseEstimate]) -> ArTriple {
    let cam = fixtures::camera();
    let meshes = fixtures::models();
    let background = poseval::shapes::cuboid(1600.0, 1200.0, 1.0);
    let bg_pose = RigidTransform::from_translation(Vector3::new(0.0, 0.0, fixtures::BACKGROUND_Z + 0.5));
    let delta = 15.0;
    let cube_syms = cube_rotations();

    let mut pair_errors: Vec<Option<PairErrors>> = Vec::new();
    let mut diameters = Vec::new();
    for (im_id, gts) in fixtures::ground_truth() {
        let mut items: Vec<(&TriangleMesh, RigidTransform)> = gts.iter().map(|g| (&meshes[&g.obj_id], g.pose)).collect();
        items.push((&background, bg_pose));
        let depth: Vec<f64> = RayScene::new(&items)
            .depth(&cam)
            .into_iter()
            .map(|z| (z / fixtures::DEPTH_SCALE).round() * fixtures::DEPTH_SCALE)
            .collect();
        let measured = depth_to_distance(&depth, &cam);

        let objs: BTreeMap<u32, ()> = gts.iter().map(|g| (g.obj_id, ())).collect();
        for &obj_id in objs.keys() {
            let mesh = &meshes[&obj_id];
            let d = brute_diameter(mesh.vertices());
            let valid: Vec<_> = gts
                .iter()
                .filter(|g| g.obj_id == obj_id)
                .filter_map(|g| {
                    let dist = render_distance(mesh, g.pose, &cam);
                    let mask = visible(&dist, &measured, delta);
                    let footprint = dist.iter().filter(|v| **v > 0.0).count();
                    let seen = mask.iter().filter(|b| **b).count();
                    (footprint > 0 && seen as f64 / footprint as f64 >= 0.1).then_some((g.pose, dist, mask))
                })
                .collect();
            assert!(valid.len() <= 1, "fixture has one visible GT per object and image");
            let Some((gt_pose, gt_dist, gt_mask)) = valid.into_iter().next() else { continue };
            diameters.push(d);

            let best = submission
                .iter()
                .filter(|e| e.im_id == im_id && e.obj_id == obj_id)
                .fold(None::<&poseval::scoring::PoseEstimate>, |acc, e| match acc {
                    Some(a) if a.score >= e.score => Some(a),
                    _ => Some(e),
                });
            let Some(est) = best else {
                pair_errors.push(None);
                continue;
            };

            let est_dist = render_distance(mesh, est.pose, &cam);
            let mut est_mask = visible(&est_dist, &measured, delta);
            for i in 0..est_mask.len() {
                if gt_mask[i] && est_dist[i] > 0.0 {
                    est_mask[i] = true;
                }
            }
            let vsd = fractions()
                .iter()
                .map(|f| {
                    let (bad, union) = vsd_counts(&est_dist, &gt_dist, &est_mask, &gt_mask, f * d);
                    bad as f64 / union as f64
                })
                .collect();

            let syms: Vec<Matrix3<f64>> = if obj_id == fixtures::CUBE_ID { cube_syms.clone() } else { vec![Matrix3::identity()] };
            let verts = mesh.vertices();
            let (re, te) = matrix(&est.pose);
            let (rg, tg) = matrix(&gt_pose);
            let e = |v: usize| Point3::from(re * verts[v].coords + te);
            let g = |s: usize, v: usize| Point3::from(rg * (syms[s] * verts[v].coords) + tg);
            let mssd = min_max(syms.len(), verts.len(), |s, v| (e(v) - g(s, v)).norm());
            let mspd = min_max(syms.len(), verts.len(), |s, v| {
                let (a, b) = (project(&cam, &e(v)), project(&cam, &g(s, v)));
                ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
            });
            pair_errors.push(Some(PairErrors { vsd, mssd, mspd }));
        }
    }

    let n = pair_errors.len() as f64;
    let recall = |correct: &dyn Fn(&PairErrors, usize) -> bool, n_theta: usize| {
        let mut total = 0.0;
        for k in 0..n_theta {
            let c = pair_errors.iter().filter(|p| p.as_ref().is_some_and(|p| correct(p, k))).count();
            total += c as f64 / n;
        }
        total / n_theta as f64
    };
    let fr = fractions();
    let px = mspd_px(cam.width);
    let mut vsd_total = 0.0;
    for t in 0..fr.len() {
        vsd_total += recall(&|p, k| p.vsd[t] < fr[k], fr.len());
    }
    let mssd = {
        let mut total = 0.0;
        for k in 0..fr.len() {
            let mut c = 0usize;
            for (p, d) in pair_errors.iter().zip(&diameters) {
                if p.as_ref().is_some_and(|p| p.mssd < fr[k] * d) {
                    c += 1;
                }
            }
            total += c as f64 / n;
        }
        total / fr.len() as f64
    };
    ArTriple {
        vsd: vsd_total / fr.len() as f64,
        mssd,
        mspd: recall(&|p, k| p.mspd < px[k], px.len()),
    }
}

//! Built-in consistency checks against naive reference implementations.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use crate::bop_io::EvalConfig;
use crate::evaluate::evaluate;
use crate::geometry::{CameraIntrinsics, Point3, RigidTransform, Vector3};
use crate::pose_error::{mspd, mssd, vsd};
use crate::raster::DistanceMap;
use crate::shapes::{cube, cuboid, scalene_tetrahedron};
use crate::symmetry::{find_discrete_symmetries, hausdorff, symmetry_epsilon, SymmetryVerifier};
use crate::visibility::VisibilityMask;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

/// SplitMix64; enough for fixture generation.
struct Rng(u64);

impl Rng {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    fn pose(&mut self) -> RigidTransform {
        let axis = Vector3::new(self.range(-1.0, 1.0), self.range(-1.0, 1.0), self.range(-1.0, 1.0) + 1e-3);
        let r = RigidTransform::about_axis(&axis, self.range(0.0, std::f64::consts::PI), &Point3::origin());
        let t = Vector3::new(self.range(-50.0, 50.0), self.range(-50.0, 50.0), self.range(500.0, 900.0));
        RigidTransform::new(*r.rotation(), t).expect("rotation from axis-angle")
    }
}

fn naive_vsd(est: &[f64], gt: &[f64], em: &[bool], gm: &[bool], tau: f64) -> f64 {
    let mut union = 0;
    let mut bad = 0;
    for i in 0..est.len() {
        if em[i] || gm[i] {
            union += 1;
            if !(em[i] && gm[i] && (est[i] - gt[i]).abs() < tau) {
                bad += 1;
            }
        }
    }
    bad as f64 / union as f64
}

fn naive_min_max(n_sym: usize, n_vert: usize, dist: impl Fn(usize, usize) -> f64) -> f64 {
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

fn check_vsd(rng: &mut Rng, corrupt: bool) -> Result<String, String> {
    for case in 0..50 {
        let (w, h) = (8 + (rng.next_u64() % 9) as usize, 8 + (rng.next_u64() % 9) as usize);
        let n = w * h;
        let est: Vec<f64> = (0..n).map(|_| rng.range(400.0, 600.0)).collect();
        let gt: Vec<f64> = est.iter().map(|v| v + rng.range(-30.0, 30.0)).collect();
        let em: Vec<bool> = (0..n).map(|_| rng.unit() < 0.7).collect();
        let mut gm: Vec<bool> = (0..n).map(|_| rng.unit() < 0.7).collect();
        gm[0] = true;
        let taus: Vec<f64> = (1..=10).map(|i| 3.0 * i as f64).collect();
        let got = vsd(
            &DistanceMap::new(w, h, est.clone()).map_err(|e| e.to_string())?,
            &DistanceMap::new(w, h, gt.clone()).map_err(|e| e.to_string())?,
            &VisibilityMask::from_bits(w, h, em.clone()).map_err(|e| e.to_string())?,
            &VisibilityMask::from_bits(w, h, gm.clone()).map_err(|e| e.to_string())?,
            &taus,
        )
        .map_err(|e| e.to_string())?;
        for (i, &tau) in taus.iter().enumerate() {
            let oracle_tau = if corrupt { tau + 5.0 } else { tau };
            let expected = naive_vsd(&est, &gt, &em, &gm, oracle_tau);
            if (got.get(i) - expected).abs() > 1e-12 {
                return Err(format!("case {case}, tau {tau}: {} vs {expected}", got.get(i)));
            }
        }
    }
    Ok("50 random maps x 10 tau".into())
}

fn check_mssd_mspd(rng: &mut Rng, corrupt: bool) -> Result<String, String> {
    let mesh = cube(60.0);
    let syms = find_discrete_symmetries(&mesh);
    let cam = CameraIntrinsics::new(572.4, 573.6, 325.3, 242.0, 640, 480).map_err(|e| e.to_string())?;
    let verts = mesh.vertices();
    for case in 0..30 {
        let (est, gt) = (rng.pose(), rng.pose());
        let shift = if corrupt { 1e-3 } else { 0.0 };
        let got = mssd(&est, &gt, &syms, verts).map_err(|e| e.to_string())?;
        let expected = naive_min_max(syms.len(), verts.len(), |s, v| {
            let g = gt.apply(&syms.transforms()[s].apply(&verts[v]));
            (est.apply(&verts[v]) - g).norm() + shift
        });
        if (got - expected).abs() > 1e-9 {
            return Err(format!("MSSD case {case}: {got} vs {expected}"));
        }
        let proj = |p: Point3| (cam.fx * p.x / p.z + cam.cx, cam.fy * p.y / p.z + cam.cy);
        let got = mspd(&est, &gt, &syms, verts, &cam).map_err(|e| e.to_string())?;
        let expected = naive_min_max(syms.len(), verts.len(), |s, v| {
            let a = proj(est.apply(&verts[v]));
            let b = proj(gt.apply(&syms.transforms()[s].apply(&verts[v])));
            ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt() + shift
        });
        if (got - expected).abs() > 1e-6 {
            return Err(format!("MSPD case {case}: {got} vs {expected}"));
        }
    }
    Ok(format!("30 pose pairs, {} symmetries", syms.len()))
}

fn check_hausdorff(rng: &mut Rng, corrupt: bool) -> Result<String, String> {
    for case in 0..20 {
        let a: Vec<Point3> = (0..200).map(|_| Point3::new(rng.range(0.0, 100.0), rng.range(0.0, 100.0), rng.range(0.0, 10.0))).collect();
        let b: Vec<Point3> = (0..150).map(|_| Point3::new(rng.range(-20.0, 80.0), rng.range(0.0, 300.0), rng.range(0.0, 5.0))).collect();
        let directed = |x: &[Point3], y: &[Point3]| {
            x.iter()
                .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        };
        let mut expected = directed(&a, &b).max(directed(&b, &a));
        if corrupt {
            expected += 1e-6;
        }
        let got = hausdorff(&a, &b).map_err(|e| e.to_string())?;
        if got != expected {
            return Err(format!("case {case}: {got} vs {expected}"));
        }
    }
    Ok("20 random set pairs".into())
}

fn check_symmetries(corrupt: bool) -> Result<String, String> {
    let expect = [(cube(60.0), 24usize, "cube"), (cuboid(100.0, 100.0, 20.0), 8, "plate"), (scalene_tetrahedron(), 1, "tetrahedron")];
    for (mesh, n, name) in expect {
        let set = find_discrete_symmetries(&mesh);
        let n = if corrupt { n + 1 } else { n };
        if set.len() != n {
            return Err(format!("{name}: {} symmetries, expected {n}", set.len()));
        }
        let verifier = SymmetryVerifier::new(mesh.vertices(), symmetry_epsilon(&mesh));
        let failing = set.iter().position(|t| !verifier.passes(t));
        if let Some(i) = failing {
            return Err(format!("{name}: member {i} fails re-verification"));
        }
    }
    Ok("cube 24, plate 8, tetrahedron 1".into())
}

fn check_end_to_end(corrupt: bool) -> Result<String, String> {
    static RUN: AtomicUsize = AtomicUsize::new(0);
    let dir = std::env::temp_dir().join(format!(
        "poseval-selftest-{}-{}",
        std::process::id(),
        RUN.fetch_add(1, Ordering::Relaxed)
    ));
    let run = || -> Result<String, String> {
        crate::fixtures::write_mini_dataset(&dir).map_err(|e| e.to_string())?;
        let mut config = EvalConfig::default();
        config.datasets.insert("mini".into(), dir.clone());
        let sub = if corrupt { "shifted.csv" } else { "gt.csv" };
        config.submissions.insert("mini".into(), dir.join("submissions").join(sub));
        let report = evaluate(&config).map_err(|e| e.to_string())?;
        let d = &report.datasets[0];
        if (d.ar_vsd, d.ar_mssd, d.ar_mspd) != (1.0, 1.0, 1.0) {
            return Err(format!("AR = ({}, {}, {}), expected 1", d.ar_vsd, d.ar_mssd, d.ar_mspd));
        }
        Ok(format!("{} GT instances, AR = 1", d.gt_count))
    };
    let result = run();
    let _ = std::fs::remove_dir_all(&dir);
    result
}

/// Runs every check. With `corrupt`, each reference value is perturbed and
/// every check is expected to fail.
pub fn run_selftest(corrupt: bool) -> Vec<CheckResult> {
    let mut rng = Rng(0x5EED);
    let mut results = Vec::new();
    let mut run = |name: &'static str, f: &mut dyn FnMut() -> Result<String, String>| {
        let start = Instant::now();
        let (passed, detail) = match f() {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        results.push(CheckResult {
            name,
            passed,
            detail,
            seconds: start.elapsed().as_secs_f64(),
        });
    };
    run("vsd-pixel-loop", &mut || check_vsd(&mut rng, corrupt));
    run("mssd-mspd-triple-loop", &mut || check_mssd_mspd(&mut rng, corrupt));
    run("hausdorff-double-loop", &mut || check_hausdorff(&mut rng, corrupt));
    run("symmetry-recovery", &mut || check_symmetries(corrupt));
    run("mini-dataset-perfect", &mut || check_end_to_end(corrupt));
    results
}

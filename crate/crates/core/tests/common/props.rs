//! Property checks shared by the proptest suite and the acceptance runner.

use std::sync::OnceLock;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use poseval::geometry::{CameraIntrinsics, Point3, RigidTransform, Vector3};
use poseval::pose_error::{add_adi, mspd, mssd, vsd, AverageDistanceMode};
use poseval::raster::DistanceMap;
use poseval::scoring::{match_and_judge, ErrorTable};
use poseval::shapes::cube;
use poseval::symmetry::{find_discrete_symmetries, SymmetrySet};
use poseval::visibility::VisibilityMask;

pub const CASES: u32 = 128;

pub fn camera() -> CameraIntrinsics {
    CameraIntrinsics::new(572.4, 573.6, 325.3, 242.0, 640, 480).unwrap()
}

pub fn pose() -> impl Strategy<Value = RigidTransform> {
    (
        prop::array::uniform3(-1.0f64..1.0),
        0.0f64..std::f64::consts::PI,
        prop::array::uniform3(-80.0f64..80.0),
        400.0f64..1200.0,
    )
        .prop_map(|(axis, angle, t, z)| {
            let axis = Vector3::from(axis) + Vector3::new(0.0, 0.0, 1e-3);
            let r = RigidTransform::about_axis(&axis, angle, &Point3::origin());
            RigidTransform::new(*r.rotation(), Vector3::new(t[0], t[1], z)).unwrap()
        })
}

pub fn points(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Point3>> {
    prop::collection::vec(prop::array::uniform3(-50.0f64..50.0).prop_map(Point3::from), n)
}

#[derive(Debug, Clone)]
pub struct VsdCase {
    pub w: usize,
    pub h: usize,
    pub est: Vec<f64>,
    pub gt: Vec<f64>,
    pub em: Vec<bool>,
    pub gm: Vec<bool>,
    pub taus: Vec<f64>,
}

pub fn vsd_case() -> impl Strategy<Value = VsdCase> {
    (2usize..16, 2usize..16)
        .prop_flat_map(|(w, h)| {
            let n = w * h;
            (
                Just((w, h)),
                prop::collection::vec(400.0f64..600.0, n),
                prop::collection::vec(-40.0f64..40.0, n),
                prop::collection::vec(any::<bool>(), n),
                prop::collection::vec(any::<bool>(), n),
                prop::collection::btree_set(1u32..500, 2..12),
            )
        })
        .prop_map(|((w, h), est, noise, em, mut gm, taus)| {
            gm[0] = true;
            let gt = est.iter().zip(&noise).map(|(e, n)| e + n).collect();
            let taus = taus.into_iter().map(|t| t as f64 / 10.0).collect();
            VsdCase { w, h, est, gt, em, gm, taus }
        })
}

pub fn vsd_tau_monotone(c: &VsdCase) -> Result<(), TestCaseError> {
    let m = |v: &[f64]| DistanceMap::new(c.w, c.h, v.to_vec()).unwrap();
    let k = |v: &[bool]| VisibilityMask::from_bits(c.w, c.h, v.to_vec()).unwrap();
    let e = vsd(&m(&c.est), &m(&c.gt), &k(&c.em), &k(&c.gm), &c.taus).unwrap();
    let errs: Vec<f64> = e.errors().collect();
    prop_assert!(errs.windows(2).all(|w| w[1] <= w[0]), "{errs:?}");
    prop_assert!(errs.iter().all(|x| (0.0..=1.0).contains(x)));
    Ok(())
}

#[derive(Debug, Clone)]
pub struct MatchCase {
    pub n_est: usize,
    pub n_gt: usize,
    pub scores: Vec<f64>,
    pub errors: Vec<Option<f64>>,
}

pub fn match_case() -> impl Strategy<Value = MatchCase> {
    (1usize..7, 1usize..7)
        .prop_flat_map(|(n_est, n_gt)| {
            (
                Just((n_est, n_gt)),
                prop::collection::vec(0.0f64..1.0, n_est),
                prop::collection::vec(prop::option::weighted(0.9, 0.0f64..10.0), n_est * n_gt),
            )
        })
        .prop_map(|((n_est, n_gt), scores, errors)| MatchCase { n_est, n_gt, scores, errors })
}

fn correct(c: &MatchCase, scores: &[f64], theta: f64) -> Vec<bool> {
    let table = ErrorTable::new(c.n_est, c.n_gt, c.errors.clone()).unwrap();
    match_and_judge(scores, &table, theta).unwrap()
}

pub fn recall_theta_monotone(c: &MatchCase) -> Result<(), TestCaseError> {
    let counts: Vec<usize> = (0..=22)
        .map(|i| correct(c, &c.scores, i as f64 * 0.5).iter().filter(|b| **b).count())
        .collect();
    prop_assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
    Ok(())
}

pub fn matching_rescale_invariant(c: &MatchCase, scale: f64, shift: f64) -> Result<(), TestCaseError> {
    let rescaled: Vec<f64> = c.scores.iter().map(|s| (scale * s + shift).exp()).collect();
    for theta in [0.5, 2.0, 5.0, 9.5] {
        prop_assert_eq!(correct(c, &c.scores, theta), correct(c, &rescaled, theta));
    }
    Ok(())
}

pub fn cube_symmetries() -> &'static SymmetrySet {
    static SET: OnceLock<SymmetrySet> = OnceLock::new();
    SET.get_or_init(|| find_discrete_symmetries(&cube(60.0)))
}

pub fn symmetry_growth_monotone(
    full: &SymmetrySet,
    keep: &[usize],
    est: &RigidTransform,
    gt: &RigidTransform,
) -> Result<(), TestCaseError> {
    let sub = full.subset(keep).unwrap();
    let verts = cube(60.0).vertices().to_vec();
    let cam = camera();
    prop_assert!(mssd(est, gt, full, &verts).unwrap() <= mssd(est, gt, &sub, &verts).unwrap());
    prop_assert!(mspd(est, gt, full, &verts, &cam).unwrap() <= mspd(est, gt, &sub, &verts, &cam).unwrap());
    Ok(())
}

pub fn mssd_rigid_invariant(
    syms: &SymmetrySet,
    est: &RigidTransform,
    gt: &RigidTransform,
    motion: &RigidTransform,
) -> Result<(), TestCaseError> {
    let verts = cube(60.0).vertices().to_vec();
    let a = mssd(est, gt, syms, &verts).unwrap();
    let b = mssd(&motion.compose(est), &motion.compose(gt), syms, &verts).unwrap();
    prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    Ok(())
}

pub fn adi_le_add(verts: &[Point3], est: &RigidTransform, gt: &RigidTransform) -> Result<(), TestCaseError> {
    let add = add_adi(est, gt, verts, AverageDistanceMode::Add).unwrap();
    let adi = add_adi(est, gt, verts, AverageDistanceMode::Adi).unwrap();
    prop_assert!(adi <= add + 1e-9, "adi {adi} > add {add}");
    Ok(())
}

/// Runs every property with [`CASES`] random instances; returns the first
/// failure.
fn fail<T: std::fmt::Debug>(name: &str, e: proptest::test_runner::TestError<T>) -> String {
    format!("{name}: {e}")
}

pub fn run_all() -> Result<(), String> {
    let runner = || {
        TestRunner::new(Config {
            failure_persistence: None,
            ..Config::with_cases(CASES)
        })
    };
    let syms = cube_symmetries();
    let n = syms.len();

    runner().run(&vsd_case(), |c| vsd_tau_monotone(&c)).map_err(|e| fail("vsd tau", e))?;
    runner().run(&match_case(), |c| recall_theta_monotone(&c)).map_err(|e| fail("recall theta", e))?;
    runner()
        .run(&(match_case(), 0.01f64..5.0, -3.0f64..3.0), |(c, a, b)| matching_rescale_invariant(&c, a, b))
        .map_err(|e| fail("rescale", e))?;
    runner()
        .run(&(prop::collection::vec(1..n, 0..n), pose(), pose()), |(keep, e, g)| {
            symmetry_growth_monotone(syms, &keep, &e, &g)
        })
        .map_err(|e| fail("symmetry growth", e))?;
    runner()
        .run(&(pose(), pose(), pose()), |(e, g, m)| mssd_rigid_invariant(syms, &e, &g, &m))
        .map_err(|e| fail("rigid motion", e))?;
    runner()
        .run(&(points(1..60), pose(), pose()), |(v, e, g)| adi_le_add(&v, &e, &g))
        .map_err(|e| fail("adi <= add", e))?;
    Ok(())
}

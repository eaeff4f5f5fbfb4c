//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export returns JSON so the page needs no generated type glue beyond
//! `wasm-bindgen`'s string passing.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use poseval::geometry::{CameraIntrinsics, Point3, RigidTransform, TriangleMesh, Vector3};
use poseval::pose_error::{mspd, mssd};
use poseval::raster::render_distance_map;
use poseval::scoring::{mspd_thresholds_px, mssd_theta_fractions};
use poseval::shapes::{cube, cuboid, cylinder, scalene_tetrahedron};
use poseval::symmetry::{analyze_symmetries, continuous_step_count, SearchOptions, SymmetrySet};

const WIDTH: usize = 320;
const HEIGHT: usize = 240;

fn shape(name: &str) -> Result<TriangleMesh, String> {
    match name {
        "cube" => Ok(cube(60.0)),
        "plate" => Ok(cuboid(100.0, 100.0, 20.0)),
        "tetrahedron" => Ok(scalene_tetrahedron()),
        "cylinder" => Ok(cylinder(40.0, 80.0, 32)),
        other => Err(format!("unknown shape `{other}`")),
    }
}

fn camera() -> CameraIntrinsics {
    CameraIntrinsics::new(300.0, 300.0, WIDTH as f64 / 2.0, HEIGHT as f64 / 2.0, WIDTH, HEIGHT).expect("valid camera")
}

/// Rotation about X then Y (degrees), placed at depth `z` on the optical axis.
fn pose(rx_deg: f64, ry_deg: f64, z: f64) -> RigidTransform {
    let rx = RigidTransform::about_axis(&Vector3::x(), rx_deg.to_radians(), &Point3::origin());
    let ry = RigidTransform::about_axis(&Vector3::y(), ry_deg.to_radians(), &Point3::origin());
    RigidTransform::from_translation(Vector3::new(0.0, 0.0, z)).compose(&ry.compose(&rx))
}

#[derive(Debug, Serialize)]
pub struct DistanceView {
    pub width: usize,
    pub height: usize,
    pub min: f64,
    pub max: f64,
    pub covered: usize,
    /// Grey levels, near = bright; 0 where the object is absent.
    pub pixels: Vec<u8>,
}

pub fn distance_view(shape_name: &str, rx_deg: f64, ry_deg: f64, z: f64) -> Result<DistanceView, String> {
    let mesh = shape(shape_name)?;
    if !(z > 0.0 && z.is_finite()) {
        return Err("depth must be positive".into());
    }
    let map = render_distance_map(&mesh, &pose(rx_deg, ry_deg, z), &camera()).map_err(|e| e.to_string())?;
    let present = map.values().iter().copied().filter(|v| *v > 0.0);
    let (min, max) = present.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let span = (max - min).max(1e-9);
    let pixels = map
        .values()
        .iter()
        .map(|&v| if v > 0.0 { (255.0 - 200.0 * (v - min) / span).round() as u8 } else { 0 })
        .collect();
    Ok(DistanceView {
        width: WIDTH,
        height: HEIGHT,
        min: if min.is_finite() { min } else { 0.0 },
        max,
        covered: map.nonzero_count(),
        pixels,
    })
}

#[derive(Debug, Serialize)]
pub struct SymmetryView {
    pub epsilon: f64,
    pub discrete: usize,
    pub continuous: usize,
    pub continuous_steps: Vec<usize>,
    pub expanded: usize,
    pub needs_review: bool,
}

pub fn symmetry_view(shape_name: &str) -> Result<SymmetryView, String> {
    let mesh = shape(shape_name)?;
    let analysis = analyze_symmetries(&mesh, &SearchOptions::default());
    let continuous_steps = analysis.continuous.iter().map(|c| continuous_step_count(c, &mesh)).collect();
    Ok(SymmetryView {
        epsilon: analysis.epsilon,
        discrete: analysis.discrete.len(),
        continuous: analysis.continuous.len(),
        continuous_steps,
        expanded: analysis.expanded(&mesh).len(),
        needs_review: analysis.needs_review,
    })
}

#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub theta: f64,
    pub correct: bool,
}

#[derive(Debug, Serialize)]
pub struct SweepView {
    pub mssd: f64,
    pub mspd: f64,
    pub mssd_rows: Vec<SweepRow>,
    pub mspd_rows: Vec<SweepRow>,
    pub ar_mssd: f64,
    pub ar_mspd: f64,
}

/// Errors of an estimate offset from the ground truth by `shift` mm along X
/// and `angle_deg` about Z, and its recall at every threshold.
pub fn threshold_sweep(shape_name: &str, shift: f64, angle_deg: f64) -> Result<SweepView, String> {
    let mesh = shape(shape_name)?;
    let syms = analyze_symmetries(&mesh, &SearchOptions::default()).expanded(&mesh);
    sweep_with(&mesh, &syms, shift, angle_deg)
}

fn sweep_with(mesh: &TriangleMesh, syms: &SymmetrySet, shift: f64, angle_deg: f64) -> Result<SweepView, String> {
    let gt = pose(20.0, 30.0, 600.0);
    let turn = RigidTransform::about_axis(&Vector3::z(), angle_deg.to_radians(), &Point3::origin());
    let est = RigidTransform::from_translation(Vector3::new(shift, 0.0, 0.0)).compose(&gt.compose(&turn));
    let cam = camera();
    let e_mssd = mssd(&est, &gt, syms, mesh.vertices()).map_err(|e| e.to_string())?;
    let e_mspd = mspd(&est, &gt, syms, mesh.vertices(), &cam).map_err(|e| e.to_string())?;
    let rows = |e: f64, thetas: Vec<f64>| -> Vec<SweepRow> {
        thetas.into_iter().map(|theta| SweepRow { theta, correct: e < theta }).collect()
    };
    let d = mesh.diameter();
    let mssd_rows = rows(e_mssd, mssd_theta_fractions().into_iter().map(|f| f * d).collect());
    let mspd_rows = rows(e_mspd, mspd_thresholds_px(WIDTH));
    let ar = |r: &[SweepRow]| r.iter().filter(|x| x.correct).count() as f64 / r.len() as f64;
    Ok(SweepView {
        mssd: e_mssd,
        mspd: e_mspd,
        ar_mssd: ar(&mssd_rows),
        ar_mspd: ar(&mspd_rows),
        mssd_rows,
        mspd_rows,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = distanceMap)]
pub fn distance_map_js(shape: &str, rx_deg: f64, ry_deg: f64, z: f64) -> Result<String, JsError> {
    to_js(distance_view(shape, rx_deg, ry_deg, z))
}

#[wasm_bindgen(js_name = symmetries)]
pub fn symmetries_js(shape: &str) -> Result<String, JsError> {
    to_js(symmetry_view(shape))
}

#[wasm_bindgen(js_name = thresholdSweep)]
pub fn threshold_sweep_js(shape: &str, shift: f64, angle_deg: f64) -> Result<String, JsError> {
    to_js(threshold_sweep(shape, shift, angle_deg))
}

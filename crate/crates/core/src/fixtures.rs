//! Synthetic mini-dataset in the standard layout, rendered with this
//! crate's rasterizer.
//!
//! Objects: 1 = 60 mm cube, 2 = scalene tetrahedron. One scene with three
//! 640×480 images in front of a flat background at Z = 1000 mm. Image 1
//! holds a second cube hidden behind the background (visible fraction 0).
//!
//! Submissions:
//! * `gt.csv`: the ground truth itself;
//! * `shifted.csv`: every pose translated by `2·d` along X;
//! * `mixed.csv`: one exact estimate per object and image except the
//!   tetrahedron of image 0 (shifted by `0.23·d` along X), the cube of
//!   image 1 (shifted by `2·d`), and the tetrahedron of image 2 (missing);
//!   image 0 also has a low-scoring wrong cube estimate that top-n drops.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::bop_io::{
    depth_path, model_path, models_info_path, save_submission, scene_dir, write_scene_gt, GtPose, ImageGroundTruth,
    TargetEntry,
};
use crate::geometry::{save_mesh, CameraIntrinsics, PlyFormat, Point3, RigidTransform, TriangleMesh, Vector3};
use crate::raster::{render_scene_depth, write_depth_png, RenderOptions};
use crate::scoring::PoseEstimate;
use crate::shapes::{cube, cuboid, scalene_tetrahedron};
use crate::symmetry::{analyze_symmetries, write_models_info, ModelInfo, SearchOptions};

pub const CUBE_ID: u32 = 1;
pub const TETRA_ID: u32 = 2;
pub const SCENE_ID: u32 = 1;
pub const DEPTH_SCALE: f64 = 0.1;
pub const BACKGROUND_Z: f64 = 1000.0;
/// MSSD of the partially wrong estimate in `mixed.csv`, as a fraction of `d`.
pub const MIXED_SHIFT_FRACTION: f64 = 0.23;
pub const SUBMISSION_TIME: f64 = 0.25;

pub fn camera() -> CameraIntrinsics {
    CameraIntrinsics::new(572.4, 573.6, 325.3, 242.0, 640, 480).expect("valid camera")
}

pub fn models() -> BTreeMap<u32, TriangleMesh> {
    [(CUBE_ID, cube(60.0)), (TETRA_ID, scalene_tetrahedron())].into_iter().collect()
}

fn pose(axis: [f64; 3], angle: f64, t: [f64; 3]) -> RigidTransform {
    let r = RigidTransform::about_axis(&Vector3::from(axis), angle, &Point3::origin());
    RigidTransform::new(*r.rotation(), Vector3::from(t)).expect("rotation from axis-angle")
}

/// Ground truth per image id, in instance order.
pub fn ground_truth() -> BTreeMap<u32, Vec<GtPose>> {
    let gt = |obj_id, pose| GtPose { obj_id, pose };
    BTreeMap::from([
        (
            0,
            vec![
                gt(CUBE_ID, pose([1.0, 1.0, 0.0], 0.5, [-120.0, -40.0, 700.0])),
                gt(TETRA_ID, pose([0.2, 1.0, 0.3], 0.8, [110.0, 40.0, 800.0])),
            ],
        ),
        (
            1,
            vec![
                gt(CUBE_ID, pose([0.0, 0.0, 1.0], 0.3, [0.0, 0.0, 650.0])),
                gt(CUBE_ID, pose([1.0, 0.0, 0.0], 0.2, [0.0, 0.0, 1150.0])),
                gt(TETRA_ID, pose([0.0, 1.0, 0.0], 2.0, [-150.0, 60.0, 850.0])),
            ],
        ),
        (
            2,
            vec![
                gt(TETRA_ID, pose([1.0, -0.4, 0.2], 1.1, [20.0, 0.0, 750.0])),
                gt(CUBE_ID, pose([0.3, 0.5, 1.0], 0.7, [40.0, 10.0, 600.0])),
            ],
        ),
    ])
}

/// One entry per targeted object and image; the hidden cube of image 1 is
/// not counted.
pub fn targets() -> Vec<TargetEntry> {
    [0u32, 1, 2]
        .iter()
        .flat_map(|&im_id| {
            [CUBE_ID, TETRA_ID].map(|obj_id| TargetEntry {
                scene_id: SCENE_ID,
                im_id,
                obj_id,
                inst_count: 1,
            })
        })
        .collect()
}

fn background() -> TriangleMesh {
    cuboid(1600.0, 1200.0, 1.0)
}

/// Depth (mm) of the full scene for one image.
pub fn scene_depth(instances: &[GtPose]) -> crate::raster::DepthMap {
    let meshes = models();
    let bg = background();
    let mut items: Vec<(&TriangleMesh, RigidTransform)> = instances.iter().map(|g| (&meshes[&g.obj_id], g.pose)).collect();
    items.push((&bg, RigidTransform::from_translation(Vector3::new(0.0, 0.0, BACKGROUND_Z + 0.5))));
    render_scene_depth(&items, &camera(), &RenderOptions::default()).expect("valid camera")
}

pub fn diameter(obj_id: u32) -> f64 {
    models()[&obj_id].diameter()
}

fn shifted(p: &RigidTransform, dx: f64) -> RigidTransform {
    RigidTransform::new(*p.rotation(), p.translation() + Vector3::new(dx, 0.0, 0.0)).expect("valid pose")
}

fn estimate(im_id: u32, obj_id: u32, pose: RigidTransform, score: f64) -> PoseEstimate {
    PoseEstimate {
        scene_id: SCENE_ID,
        im_id,
        obj_id,
        pose,
        score,
        time: Some(SUBMISSION_TIME),
    }
}

pub fn gt_submission() -> Vec<PoseEstimate> {
    ground_truth()
        .into_iter()
        .flat_map(|(im_id, gts)| gts.into_iter().map(move |g| estimate(im_id, g.obj_id, g.pose, 1.0)))
        .collect()
}

pub fn shifted_submission() -> Vec<PoseEstimate> {
    gt_submission()
        .into_iter()
        .map(|mut e| {
            e.pose = shifted(&e.pose, 2.0 * diameter(e.obj_id));
            e
        })
        .collect()
}

pub fn mixed_submission() -> Vec<PoseEstimate> {
    let gt = ground_truth();
    let d_cube = diameter(CUBE_ID);
    let d_tetra = diameter(TETRA_ID);
    vec![
        estimate(0, CUBE_ID, gt[&0][0].pose, 0.9),
        estimate(0, CUBE_ID, shifted(&gt[&0][0].pose, 3.0 * d_cube), 0.3),
        estimate(0, TETRA_ID, shifted(&gt[&0][1].pose, MIXED_SHIFT_FRACTION * d_tetra), 0.8),
        estimate(1, CUBE_ID, shifted(&gt[&1][0].pose, 2.0 * d_cube), 0.7),
        estimate(1, TETRA_ID, gt[&1][2].pose, 0.6),
        estimate(2, CUBE_ID, gt[&2][1].pose, 0.95),
    ]
}

/// Writes the dataset (models, scene, depth, targets) and the three
/// submissions under `root/submissions`.
pub fn write_mini_dataset(root: &Path) -> Result<(), Box<dyn std::error::Error>> {
    let meshes = models();
    fs::create_dir_all(root.join("models"))?;
    let mut infos = BTreeMap::new();
    for (&obj_id, mesh) in &meshes {
        save_mesh(mesh, model_path(root, obj_id), PlyFormat::Ascii)?;
        // the cube is annotated; the tetrahedron is left to the search
        let info = if obj_id == CUBE_ID {
            ModelInfo::from_analysis(mesh.diameter(), &analyze_symmetries(mesh, &SearchOptions::default()))
        } else {
            ModelInfo::new(mesh.diameter())
        };
        infos.insert(obj_id, info);
    }
    write_models_info(models_info_path(root), &infos)?;

    let cam = camera();
    fs::write(
        root.join("camera.json"),
        serde_json::to_string_pretty(&serde_json::json!({
            "fx": cam.fx, "fy": cam.fy, "cx": cam.cx, "cy": cam.cy,
            "width": cam.width, "height": cam.height, "depth_scale": DEPTH_SCALE,
        }))? + "\n",
    )?;

    let dir = scene_dir(root, "test", SCENE_ID);
    let mut images = BTreeMap::new();
    for (im_id, instances) in ground_truth() {
        let depth = scene_depth(&instances);
        fs::create_dir_all(dir.join("depth"))?;
        write_depth_png(depth_path(&dir, im_id), &depth, DEPTH_SCALE)?;
        images.insert(
            im_id,
            ImageGroundTruth {
                im_id,
                camera: cam,
                depth_scale: DEPTH_SCALE,
                instances,
                visib_fract: None,
                depth_path: None,
            },
        );
    }
    write_scene_gt(&dir, &images)?;
    fs::write(root.join("test_targets.json"), serde_json::to_string_pretty(&targets())? + "\n")?;

    let subs = root.join("submissions");
    fs::create_dir_all(&subs)?;
    save_submission(subs.join("gt.csv"), &gt_submission())?;
    save_submission(subs.join("shifted.csv"), &shifted_submission())?;
    save_submission(subs.join("mixed.csv"), &mixed_submission())?;
    Ok(())
}

//! Dataset layout: `<root>/<split>/<scene_id:06>/{scene_gt.json,
//! scene_camera.json, scene_gt_info.json, depth/<im_id:06>.png}` and
//! `<root>/models/obj_<obj_id:06>.ply`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::geometry::{CameraIntrinsics, RigidTransform};
use crate::raster::{read_depth_png, DepthMap};

use super::{submission::gated_pose, DatasetError};

pub fn scene_dir(root: &Path, split: &str, scene_id: u32) -> PathBuf {
    root.join(split).join(format!("{scene_id:06}"))
}

pub fn model_path(root: &Path, obj_id: u32) -> PathBuf {
    root.join("models").join(format!("obj_{obj_id:06}.ply"))
}

pub fn models_info_path(root: &Path) -> PathBuf {
    root.join("models").join("models_info.json")
}

pub fn depth_path(scene_dir: &Path, im_id: u32) -> PathBuf {
    scene_dir.join("depth").join(format!("{im_id:06}.png"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtPose {
    pub obj_id: u32,
    pub pose: RigidTransform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageGroundTruth {
    pub im_id: u32,
    pub camera: CameraIntrinsics,
    pub depth_scale: f64,
    pub instances: Vec<GtPose>,
    /// Visible fractions from `scene_gt_info.json`, when present.
    pub visib_fract: Option<Vec<f64>>,
    /// `None` when the depth image does not exist.
    pub depth_path: Option<PathBuf>,
}

impl ImageGroundTruth {
    /// Depth in mm, `None` when the image has no depth file.
    pub fn load_depth(&self) -> Result<Option<DepthMap>, DatasetError> {
        let Some(path) = &self.depth_path else {
            return Ok(None);
        };
        let depth = read_depth_png(path, self.depth_scale).map_err(DatasetError::Raster)?;
        if depth.dims() != (self.camera.width, self.camera.height) {
            return Err(DatasetError::Invalid {
                path: path.clone(),
                message: format!(
                    "depth image is {:?}, camera is {}x{}",
                    depth.dims(),
                    self.camera.width,
                    self.camera.height
                ),
            });
        }
        Ok(Some(depth))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneGroundTruth {
    pub scene_id: u32,
    pub dir: PathBuf,
    pub images: BTreeMap<u32, ImageGroundTruth>,
}

#[derive(Deserialize)]
#[allow(non_snake_case)]
struct RawGt {
    cam_R_m2c: Vec<f64>,
    cam_t_m2c: Vec<f64>,
    obj_id: u32,
}

#[derive(Deserialize)]
#[allow(non_snake_case)]
struct RawCamera {
    cam_K: Vec<f64>,
    #[serde(default = "one")]
    depth_scale: f64,
    width: Option<usize>,
    height: Option<usize>,
}

fn one() -> f64 {
    1.0
}

#[derive(Deserialize)]
struct RawGtInfo {
    visib_fract: f64,
}

/// Dataset-level `camera.json`; only the image size is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub struct DatasetCamera {
    pub width: usize,
    pub height: usize,
}

pub fn read_dataset_camera(root: &Path) -> Result<Option<DatasetCamera>, DatasetError> {
    let path = root.join("camera.json");
    if !path.exists() {
        return Ok(None);
    }
    read_json(&path).map(Some)
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, DatasetError> {
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| DatasetError::Invalid {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn parse_image_keys<V>(path: &Path, raw: BTreeMap<String, V>) -> Result<BTreeMap<u32, V>, DatasetError> {
    raw.into_iter()
        .map(|(k, v)| {
            k.parse::<u32>().map(|id| (id, v)).map_err(|_| DatasetError::Invalid {
                path: path.to_path_buf(),
                message: format!("image key {k:?} is not an id"),
            })
        })
        .collect()
}

/// Reads one scene directory. `default_size` (from the dataset `camera.json`)
/// is used when `scene_camera.json` does not state the image size.
pub fn read_scene_gt(dir: impl AsRef<Path>, default_size: Option<(usize, usize)>) -> Result<SceneGroundTruth, DatasetError> {
    let dir = dir.as_ref();
    let scene_id = dir
        .file_name()
        .and_then(|n| n.to_str())
        .and_then(|n| n.parse::<u32>().ok())
        .ok_or_else(|| DatasetError::Invalid {
            path: dir.to_path_buf(),
            message: "scene directory name is not a numeric id".into(),
        })?;

    let gt_path = dir.join("scene_gt.json");
    let cam_path = dir.join("scene_camera.json");
    let info_path = dir.join("scene_gt_info.json");
    let gts: BTreeMap<u32, Vec<RawGt>> = parse_image_keys(&gt_path, read_json(&gt_path)?)?;
    let cams: BTreeMap<u32, RawCamera> = parse_image_keys(&cam_path, read_json(&cam_path)?)?;
    let infos: Option<BTreeMap<u32, Vec<RawGtInfo>>> = if info_path.exists() {
        Some(parse_image_keys(&info_path, read_json(&info_path)?)?)
    } else {
        None
    };

    if let Some(id) = gts.keys().find(|k| !cams.contains_key(k)) {
        return Err(DatasetError::InconsistentImages {
            path: dir.to_path_buf(),
            message: format!("image {id} is in scene_gt.json but not in scene_camera.json"),
        });
    }
    if let Some(id) = cams.keys().find(|k| !gts.contains_key(k)) {
        return Err(DatasetError::InconsistentImages {
            path: dir.to_path_buf(),
            message: format!("image {id} is in scene_camera.json but not in scene_gt.json"),
        });
    }

    let invalid = |path: &Path, message: String| DatasetError::Invalid {
        path: path.to_path_buf(),
        message,
    };
    let mut images = BTreeMap::new();
    for (im_id, raw_gts) in gts {
        let cam = &cams[&im_id];
        let k: [f64; 9] = cam
            .cam_K
            .as_slice()
            .try_into()
            .map_err(|_| invalid(&cam_path, format!("image {im_id}: cam_K needs 9 values")))?;
        let (width, height) = match (cam.width, cam.height, default_size) {
            (Some(w), Some(h), _) => (w, h),
            (_, _, Some(size)) => size,
            _ => return Err(invalid(&cam_path, format!("image {im_id}: image size unknown (no width/height and no camera.json)"))),
        };
        let camera = CameraIntrinsics::from_k(&k, width, height)
            .map_err(|e| invalid(&cam_path, format!("image {im_id}: {e}")))?;
        if !(cam.depth_scale > 0.0 && cam.depth_scale.is_finite()) {
            return Err(invalid(&cam_path, format!("image {im_id}: invalid depth_scale")));
        }

        let mut instances = Vec::with_capacity(raw_gts.len());
        for (i, g) in raw_gts.iter().enumerate() {
            let r: [f64; 9] = g
                .cam_R_m2c
                .as_slice()
                .try_into()
                .map_err(|_| invalid(&gt_path, format!("image {im_id} instance {i}: cam_R_m2c needs 9 values")))?;
            let t: [f64; 3] = g
                .cam_t_m2c
                .as_slice()
                .try_into()
                .map_err(|_| invalid(&gt_path, format!("image {im_id} instance {i}: cam_t_m2c needs 3 values")))?;
            let pose = gated_pose(&r, &t)
                .map_err(|_| invalid(&gt_path, format!("image {im_id} instance {i}: cam_R_m2c is not a rotation")))?;
            instances.push(GtPose { obj_id: g.obj_id, pose });
        }

        let visib_fract = match &infos {
            Some(infos) => {
                let entry = infos
                    .get(&im_id)
                    .ok_or_else(|| invalid(&info_path, format!("image {im_id} missing")))?;
                if entry.len() != instances.len() {
                    return Err(invalid(&info_path, format!("image {im_id}: instance count differs from scene_gt.json")));
                }
                Some(entry.iter().map(|e| e.visib_fract).collect())
            }
            None => None,
        };

        let depth = depth_path(dir, im_id);
        images.insert(
            im_id,
            ImageGroundTruth {
                im_id,
                camera,
                depth_scale: cam.depth_scale,
                instances,
                visib_fract,
                depth_path: depth.exists().then_some(depth),
            },
        );
    }
    Ok(SceneGroundTruth {
        scene_id,
        dir: dir.to_path_buf(),
        images,
    })
}

/// Writes `scene_gt.json` and `scene_camera.json` for one scene.
pub fn write_scene_gt(dir: impl AsRef<Path>, images: &BTreeMap<u32, ImageGroundTruth>) -> Result<(), DatasetError> {
    let dir = dir.as_ref();
    let mut gt = serde_json::Map::new();
    let mut cam = serde_json::Map::new();
    for (im_id, img) in images {
        let entries: Vec<Value> = img
            .instances
            .iter()
            .map(|g| {
                let m = g.pose.to_row_major_4x4();
                serde_json::json!({
                    "cam_R_m2c": [m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]],
                    "cam_t_m2c": [m[3], m[7], m[11]],
                    "obj_id": g.obj_id,
                })
            })
            .collect();
        gt.insert(im_id.to_string(), Value::Array(entries));
        cam.insert(
            im_id.to_string(),
            serde_json::json!({
                "cam_K": img.camera.k(),
                "depth_scale": img.depth_scale,
                "width": img.camera.width,
                "height": img.camera.height,
            }),
        );
    }
    fs::create_dir_all(dir).map_err(|source| DatasetError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for (name, value) in [("scene_gt.json", gt), ("scene_camera.json", cam)] {
        let path = dir.join(name);
        let text = serde_json::to_string_pretty(&Value::Object(value)).expect("json value serializes");
        fs::write(&path, text + "\n").map_err(|source| DatasetError::Io { path, source })?;
    }
    Ok(())
}

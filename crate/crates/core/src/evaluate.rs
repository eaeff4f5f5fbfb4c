//! End-to-end evaluation: load datasets and submissions, compute error
//! tables, match, and aggregate average recall.
//!
//! Images are processed in parallel; results are merged in sorted
//! `(scene, image)` order so reports do not depend on scheduling.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use thiserror::Error;

use crate::bop_io::{
    model_path, models_info_path, read_dataset_camera, read_scene_gt, read_submission, read_targets, scene_dir,
    DatasetError, EvalConfig, ImageGroundTruth, SceneGroundTruth, SubmissionError,
};
use crate::geometry::{load_mesh, PlyError, TriangleMesh};
use crate::pose_error::{mspd, mssd, vsd, MetricError};
use crate::raster::{depth_to_distance, render_distance_map, DistanceMap};
use crate::scoring::{
    aggregate_report, image_times, match_and_judge, scale_mspd_thresholds, select_top_n, CorrectCounts,
    DatasetReport, Diagnostic, ErrorTable, EvaluationReport, PoseEstimate, ScoringError, Targets, ThresholdConfig,
};
use crate::symmetry::{
    analyze_symmetries, filter_by_texture, read_models_info, read_texture_review, ModelInfo, SearchOptions,
    SymmetryError, SymmetrySet, TextureReview,
};
use crate::visibility::{est_visibility_mask_extended, visibility_mask, visible_fraction, VisibilityMask};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Submission(#[from] SubmissionError),
    #[error("{path}: {source}")]
    Mesh { path: PathBuf, source: PlyError },
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error("dataset `{dataset}`: {message}")]
    Input { dataset: String, message: String },
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl EvalError {
    /// Errors caused by a broken invariant rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, EvalError::Invariant(_))
    }
}

impl From<ScoringError> for EvalError {
    fn from(e: ScoringError) -> Self {
        match e {
            ScoringError::InvalidThresholds | ScoringError::NoDatasets => EvalError::Config(e.to_string()),
            other => EvalError::Invariant(other.to_string()),
        }
    }
}

/// Settings shared by every dataset of one run.
#[derive(Debug, Clone)]
pub struct EvalSettings {
    pub visib_delta: f64,
    pub visib_threshold: f64,
    pub thresholds: ThresholdConfig,
}

impl From<&EvalConfig> for EvalSettings {
    fn from(c: &EvalConfig) -> Self {
        Self {
            visib_delta: c.visib_delta,
            visib_threshold: c.visib_threshold,
            thresholds: c.thresholds.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ObjectModel {
    pub obj_id: u32,
    pub mesh: TriangleMesh,
    /// Diameter used to scale thresholds (annotation value when present).
    pub diameter: f64,
    /// Full pose-equivalence set (continuous axes discretized).
    pub symmetries: SymmetrySet,
}

impl ObjectModel {
    /// Symmetries from `info` when it lists any, otherwise from the search.
    pub fn new(obj_id: u32, mesh: TriangleMesh, info: Option<&ModelInfo>) -> Result<Self, SymmetryError> {
        let diameter = info.map_or(mesh.diameter(), |i| i.diameter);
        let symmetries = match info.filter(|i| i.has_symmetries()) {
            Some(info) => info.discrete_set()?.expand_continuous(&info.continuous()?, &mesh),
            None => {
                let analysis = analyze_symmetries(&mesh, &SearchOptions::default());
                if analysis.needs_review {
                    warn!("object {obj_id}: searched symmetries need manual review");
                }
                analysis.expanded(&mesh)
            }
        };
        Ok(Self {
            obj_id,
            mesh,
            diameter,
            symmetries,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub root: PathBuf,
    pub models: BTreeMap<u32, ObjectModel>,
    pub scenes: BTreeMap<u32, SceneGroundTruth>,
}

/// Loads the models and scenes referenced by `targets`.
pub fn load_dataset(
    name: &str,
    root: &Path,
    split: &str,
    targets: &Targets,
    annotations: Option<&Path>,
    review: &BTreeMap<u32, TextureReview>,
) -> Result<Dataset, EvalError> {
    let size = read_dataset_camera(root)?.map(|c| (c.width, c.height));
    let mut scenes = BTreeMap::new();
    for &(scene_id, _, _) in targets.keys() {
        if !scenes.contains_key(&scene_id) {
            scenes.insert(scene_id, read_scene_gt(scene_dir(root, split, scene_id), size)?);
        }
    }
    for &(scene_id, im_id, _) in targets.keys() {
        if !scenes[&scene_id].images.contains_key(&im_id) {
            return Err(EvalError::Input {
                dataset: name.to_string(),
                message: format!("target image {im_id} of scene {scene_id} has no ground truth"),
            });
        }
    }

    let info_path = annotations.map_or_else(|| models_info_path(root), Path::to_path_buf);
    let infos = if info_path.exists() {
        read_models_info(&info_path)?
    } else {
        warn!("{}: not found; symmetries will be searched", info_path.display());
        BTreeMap::new()
    };

    let mut obj_ids: Vec<u32> = targets.keys().map(|k| k.2).collect();
    obj_ids.sort_unstable();
    obj_ids.dedup();
    let mut models = BTreeMap::new();
    for obj_id in obj_ids {
        let path = model_path(root, obj_id);
        let mesh = load_mesh(&path).map_err(|source| EvalError::Mesh { path, source })?;
        let mut model = ObjectModel::new(obj_id, mesh, infos.get(&obj_id))?;
        model.symmetries = filter_by_texture(&model.symmetries, obj_id, review)?;
        info!("object {obj_id}: {} symmetry transforms", model.symmetries.len());
        models.insert(obj_id, model);
    }
    Ok(Dataset {
        name: name.to_string(),
        root: root.to_path_buf(),
        models,
        scenes,
    })
}

/// Outcome of one image.
#[derive(Debug, Clone, Default)]
struct ImageOutcome {
    counts: CorrectCounts,
    diagnostics: Vec<Diagnostic>,
    warnings: Vec<String>,
}

/// Per-image inputs grouped by object.
struct ImageJob<'a> {
    scene_id: u32,
    image: &'a ImageGroundTruth,
    /// `(obj_id, estimates)` for every targeted object of the image.
    objects: Vec<(u32, Vec<&'a PoseEstimate>)>,
}

fn count_correct(scores: &[f64], table: &ErrorTable, thetas: &[f64], out: &mut [usize]) -> Result<(), ScoringError> {
    for (slot, &theta) in out.iter_mut().zip(thetas) {
        *slot += match_and_judge(scores, table, theta)?.into_iter().filter(|c| *c).count();
    }
    Ok(())
}

fn evaluate_image(ds: &Dataset, job: &ImageJob, settings: &EvalSettings) -> Result<ImageOutcome, EvalError> {
    let th = &settings.thresholds;
    let img = job.image;
    let cam = &img.camera;
    let mut out = ImageOutcome {
        counts: th.empty_counts(),
        ..ImageOutcome::default()
    };
    let measured = match img.load_depth()? {
        Some(depth) => depth_to_distance(&depth, cam).map_err(|e| EvalError::Invariant(e.to_string()))?,
        None => {
            out.warnings.push(format!(
                "scene {} image {}: no depth image; VSD uses an empty measurement",
                job.scene_id, img.im_id
            ));
            DistanceMap::zeros(cam.width, cam.height)
        }
    };
    let has_depth = img.depth_path.is_some();
    let mspd_thetas = scale_mspd_thresholds(&th.mspd_thetas, cam.width);
    let internal = |e: MetricError| EvalError::Invariant(e.to_string());

    for (obj_id, ests) in &job.objects {
        let model = &ds.models[obj_id];
        let verts = model.mesh.vertices();

        // ground truth instances of this object that are visible enough
        let mut gts: Vec<(DistanceMap, VisibilityMask, crate::geometry::RigidTransform)> = Vec::new();
        for (i, g) in img.instances.iter().enumerate().filter(|(_, g)| g.obj_id == *obj_id) {
            let dist = render_distance_map(&model.mesh, &g.pose, cam).map_err(|e| EvalError::Invariant(e.to_string()))?;
            let mask = visibility_mask(&dist, &measured, settings.visib_delta).map_err(|e| EvalError::Invariant(e.to_string()))?;
            let fraction = match (&img.visib_fract, has_depth) {
                (Some(v), false) => v[i],
                _ => visible_fraction(&mask, &dist),
            };
            if fraction >= settings.visib_threshold && mask.count() > 0 {
                gts.push((dist, mask, g.pose));
            }
        }
        out.counts.gt_count += gts.len();
        if gts.is_empty() || ests.is_empty() {
            continue;
        }

        let scores: Vec<f64> = ests.iter().map(|e| e.score).collect();
        let taus_mm: Vec<f64> = th.vsd_taus.iter().map(|f| f * model.diameter).collect();
        let mssd_mm: Vec<f64> = th.mssd_thetas.iter().map(|f| f * model.diameter).collect();
        let (n_est, n_gt) = (ests.len(), gts.len());

        let mut vsd_values: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(n_est * n_gt); taus_mm.len()];
        let mut mssd_values = Vec::with_capacity(n_est * n_gt);
        let mut mspd_values = Vec::with_capacity(n_est * n_gt);
        for est in ests {
            let est_dist = render_distance_map(&model.mesh, &est.pose, cam).map_err(|e| EvalError::Invariant(e.to_string()))?;
            for (gt_dist, gt_mask, gt_pose) in &gts {
                let est_mask = est_visibility_mask_extended(&est_dist, &measured, gt_mask, settings.visib_delta)
                    .map_err(|e| EvalError::Invariant(e.to_string()))?;
                match vsd(&est_dist, gt_dist, &est_mask, gt_mask, &taus_mm) {
                    Ok(v) => {
                        for (slot, e) in vsd_values.iter_mut().zip(v.errors()) {
                            slot.push(Some(e));
                        }
                    }
                    Err(MetricError::EmptyUnion) => {
                        return Err(EvalError::Invariant(format!(
                            "scene {} image {} object {obj_id}: empty VSD support for a visible GT",
                            job.scene_id, img.im_id
                        )))
                    }
                    Err(e) => return Err(internal(e)),
                }
                mssd_values.push(Some(mssd(&est.pose, gt_pose, &model.symmetries, verts).map_err(internal)?));
                match mspd(&est.pose, gt_pose, &model.symmetries, verts, cam) {
                    Ok(v) => mspd_values.push(Some(v)),
                    Err(e @ MetricError::BehindCamera { .. }) => {
                        out.diagnostics.push(Diagnostic {
                            scene_id: job.scene_id,
                            im_id: img.im_id,
                            obj_id: *obj_id,
                            message: format!("MSPD undefined ({e}); judged incorrect"),
                        });
                        mspd_values.push(None);
                    }
                    Err(e) => return Err(internal(e)),
                }
            }
        }

        for (t, values) in vsd_values.into_iter().enumerate() {
            let table = ErrorTable::new(n_est, n_gt, values)?;
            count_correct(&scores, &table, &th.vsd_thetas, &mut out.counts.vsd[t])?;
        }
        count_correct(&scores, &ErrorTable::new(n_est, n_gt, mssd_values)?, &mssd_mm, &mut out.counts.mssd)?;
        count_correct(&scores, &ErrorTable::new(n_est, n_gt, mspd_values)?, &mspd_thetas, &mut out.counts.mspd)?;
    }
    Ok(out)
}

fn par_try_map<T, R, F>(items: &[T], f: F) -> Vec<Result<R, EvalError>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R, EvalError> + Sync + Send,
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

/// Result of evaluating one dataset.
#[derive(Debug, Clone)]
pub struct DatasetOutcome {
    pub report: DatasetReport,
    pub diagnostics: Vec<Diagnostic>,
    pub warnings: Vec<String>,
}

pub fn evaluate_dataset(
    ds: &Dataset,
    estimates: &[PoseEstimate],
    targets: &Targets,
    settings: &EvalSettings,
) -> Result<DatasetOutcome, EvalError> {
    settings.thresholds.validate()?;
    let selected = select_top_n(estimates, targets);
    let mut warnings = Vec::new();
    let untargeted = estimates.iter().filter(|e| !targets.contains_key(&e.key())).count();
    if untargeted > 0 {
        warnings.push(format!("{untargeted} estimates are for untargeted (image, object) pairs and were ignored"));
    }

    let mut by_key: BTreeMap<(u32, u32, u32), Vec<&PoseEstimate>> = BTreeMap::new();
    for e in &selected {
        by_key.entry(e.key()).or_default().push(e);
    }
    let mut jobs: Vec<ImageJob> = Vec::new();
    for &(scene_id, im_id, obj_id) in targets.keys() {
        let ests = by_key.remove(&(scene_id, im_id, obj_id)).unwrap_or_default();
        match jobs.last_mut() {
            Some(job) if job.scene_id == scene_id && job.image.im_id == im_id => job.objects.push((obj_id, ests)),
            _ => jobs.push(ImageJob {
                scene_id,
                image: &ds.scenes[&scene_id].images[&im_id],
                objects: vec![(obj_id, ests)],
            }),
        }
    }

    let mut counts = settings.thresholds.empty_counts();
    let mut diagnostics = Vec::new();
    for outcome in par_try_map(&jobs, |job| evaluate_image(ds, job, settings)) {
        let outcome = outcome?;
        counts.add(&outcome.counts);
        diagnostics.extend(outcome.diagnostics);
        warnings.extend(outcome.warnings);
    }
    if counts.gt_count == 0 {
        return Err(EvalError::Input {
            dataset: ds.name.clone(),
            message: "no targeted ground-truth instance passes the visibility filter; AR is undefined".into(),
        });
    }

    let (times, inconsistent) = image_times(estimates);
    for (scene_id, im_id) in inconsistent {
        warnings.push(format!("scene {scene_id} image {im_id}: rows report different times; using the maximum"));
    }
    let mut report = DatasetReport::from_grids(ds.name.clone(), counts.grids(&settings.thresholds))?
        .with_times(times.into_values().collect());
    report.gt_count = counts.gt_count;
    report.estimate_count = selected.len();
    Ok(DatasetOutcome {
        report,
        diagnostics,
        warnings,
    })
}

/// Runs every dataset of `config`.
pub fn evaluate(config: &EvalConfig) -> Result<EvaluationReport, EvalError> {
    config.validate().map_err(EvalError::Config)?;
    let settings = EvalSettings::from(config);
    let review = match &config.texture_review {
        Some(p) => read_texture_review(p)?,
        None => BTreeMap::new(),
    };
    let mut reports = Vec::new();
    let mut diagnostics = Vec::new();
    let mut warnings = Vec::new();
    for (name, root) in &config.datasets {
        let targets_path = config.targets_path(name).expect("configured dataset");
        let targets = read_targets(&targets_path)?;
        let estimates = match config.submissions.get(name) {
            Some(path) => read_submission(path)?,
            None => {
                warnings.push(format!("dataset `{name}`: no submission; every instance counts as missed"));
                Vec::new()
            }
        };
        let ds = load_dataset(name, root, &config.split, &targets, config.symmetry_annotations.as_deref(), &review)?;
        info!("dataset `{name}`: {} targets, {} estimates", targets.len(), estimates.len());
        let outcome = evaluate_dataset(&ds, &estimates, &targets, &settings)?;
        reports.push(outcome.report);
        diagnostics.extend(outcome.diagnostics);
        warnings.extend(outcome.warnings.into_iter().map(|w| format!("{name}: {w}")));
    }
    for w in &warnings {
        warn!("{w}");
    }
    let mut report = aggregate_report(config.method.clone(), reports)?;
    report.diagnostics = diagnostics;
    report.warnings = warnings;
    check_report(&report)?;
    Ok(report)
}

/// Report-level invariants: AR values in `[0, 1]` and the `AR_D` identity.
pub fn check_report(report: &EvaluationReport) -> Result<(), EvalError> {
    for d in &report.datasets {
        for (label, v) in [("AR_VSD", d.ar_vsd), ("AR_MSSD", d.ar_mssd), ("AR_MSPD", d.ar_mspd)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(EvalError::Invariant(format!("{}: {label} = {v} outside [0, 1]", d.name)));
            }
        }
        if d.ar_d != (d.ar_vsd + d.ar_mssd + d.ar_mspd) / 3.0 {
            return Err(EvalError::Invariant(format!("{}: AR_D differs from the mean of its parts", d.name)));
        }
    }
    Ok(())
}

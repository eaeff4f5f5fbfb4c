//! Matching of estimates to ground truth, recall over threshold grids, and
//! the average-recall aggregation.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::RigidTransform;

/// GT instances below this visible fraction are not evaluated.
pub const DEFAULT_VISIBILITY_THRESHOLD: f64 = 0.1;
/// Image width the projection thresholds are defined for.
pub const REFERENCE_IMAGE_WIDTH: f64 = 640.0;
pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoringError {
    #[error("error table is {got:?}, expected {expected:?} (estimates × GTs)")]
    ErrorTableShape { expected: (usize, usize), got: (usize, usize) },
    #[error("{function} recall grid is incomplete: {message}")]
    IncompleteGrid { function: ErrorFunction, message: String },
    #[error("no datasets to aggregate")]
    NoDatasets,
    #[error("threshold grid is empty or not positive")]
    InvalidThresholds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorFunction {
    Vsd,
    Mssd,
    Mspd,
}

impl std::fmt::Display for ErrorFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ErrorFunction::Vsd => "VSD",
            ErrorFunction::Mssd => "MSSD",
            ErrorFunction::Mspd => "MSPD",
        })
    }
}

/// `(scene_id, im_id, obj_id)`.
pub type InstanceKey = (u32, u32, u32);

/// Number of instances `n` to localize per `(scene, image, object)`.
pub type Targets = BTreeMap<InstanceKey, usize>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthInstance {
    pub scene_id: u32,
    pub im_id: u32,
    pub obj_id: u32,
    pub pose: RigidTransform,
    pub visible_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseEstimate {
    pub scene_id: u32,
    pub im_id: u32,
    pub obj_id: u32,
    pub pose: RigidTransform,
    pub score: f64,
    /// Seconds spent on the whole image; `None` when not reported.
    pub time: Option<f64>,
}

impl PoseEstimate {
    pub fn key(&self) -> InstanceKey {
        (self.scene_id, self.im_id, self.obj_id)
    }
}

/// Descending score, ties by position (earlier first).
fn by_score_desc(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Keeps, per targeted key, the `n` highest-scoring estimates (earlier rows
/// win ties). Estimates for untargeted keys are dropped. Input order is
/// preserved in the output.
pub fn select_top_n(estimates: &[PoseEstimate], targets: &Targets) -> Vec<PoseEstimate> {
    let mut groups: BTreeMap<InstanceKey, Vec<usize>> = BTreeMap::new();
    for (i, e) in estimates.iter().enumerate() {
        if targets.contains_key(&e.key()) {
            groups.entry(e.key()).or_default().push(i);
        }
    }
    let mut keep = vec![false; estimates.len()];
    for (key, idx) in groups {
        let scores: Vec<f64> = idx.iter().map(|&i| estimates[i].score).collect();
        for pos in by_score_desc(&scores).into_iter().take(targets[&key]) {
            keep[idx[pos]] = true;
        }
    }
    estimates
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(e, _)| e.clone())
        .collect()
}

/// Errors between the estimates and GT instances of one `(image, object)`;
/// `None` marks an estimate that could not be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    n_est: usize,
    n_gt: usize,
    values: Vec<Option<f64>>,
}

impl ErrorTable {
    pub fn new(n_est: usize, n_gt: usize, values: Vec<Option<f64>>) -> Result<Self, ScoringError> {
        if values.len() != n_est * n_gt {
            return Err(ScoringError::ErrorTableShape {
                expected: (n_est, n_gt),
                got: (values.len(), 1),
            });
        }
        Ok(Self { n_est, n_gt, values })
    }

    pub fn from_fn(n_est: usize, n_gt: usize, mut f: impl FnMut(usize, usize) -> Option<f64>) -> Self {
        let mut values = Vec::with_capacity(n_est * n_gt);
        for e in 0..n_est {
            for g in 0..n_gt {
                values.push(f(e, g));
            }
        }
        Self { n_est, n_gt, values }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_est, self.n_gt)
    }

    pub fn get(&self, est: usize, gt: usize) -> Option<f64> {
        self.values[est * self.n_gt + gt]
    }
}

/// Greedy matching for one threshold: estimates in descending score order
/// (ties by position) each take the unmatched GT with the smallest error,
/// provided it is below `theta`. Returns the per-GT correctness.
pub fn match_and_judge(scores: &[f64], errors: &ErrorTable, theta: f64) -> Result<Vec<bool>, ScoringError> {
    if errors.n_est != scores.len() {
        return Err(ScoringError::ErrorTableShape {
            expected: (scores.len(), errors.n_gt),
            got: errors.shape(),
        });
    }
    let mut matched = vec![false; errors.n_gt];
    for e in by_score_desc(scores) {
        let mut best: Option<(usize, f64)> = None;
        for (g, taken) in matched.iter().enumerate() {
            if *taken {
                continue;
            }
            if let Some(err) = errors.get(e, g) {
                if err < theta && best.is_none_or(|(_, b)| err < b) {
                    best = Some((g, err));
                }
            }
        }
        if let Some((g, _)) = best {
            matched[g] = true;
        }
    }
    Ok(matched)
}

/// `{0.05, 0.10, …, 0.50}`.
pub fn fraction_steps() -> Vec<f64> {
    (1..=10).map(|i| (5 * i) as f64 / 100.0).collect()
}

/// VSD misalignment tolerances as fractions of the object diameter.
pub fn vsd_tau_fractions() -> Vec<f64> {
    fraction_steps()
}

pub fn vsd_thetas() -> Vec<f64> {
    fraction_steps()
}

/// MSSD thresholds as fractions of the object diameter.
pub fn mssd_theta_fractions() -> Vec<f64> {
    fraction_steps()
}

/// MSPD thresholds as multiples of `r = w/640`.
pub fn mspd_theta_multiples() -> Vec<f64> {
    (1..=10).map(|i| (5 * i) as f64).collect()
}

/// MSPD thresholds in pixels for image width `w`.
pub fn mspd_thresholds_px(width: usize) -> Vec<f64> {
    scale_mspd_thresholds(&mspd_theta_multiples(), width)
}

pub fn scale_mspd_thresholds(multiples: &[f64], width: usize) -> Vec<f64> {
    multiples
        .iter()
        .map(|m| m * width as f64 / REFERENCE_IMAGE_WIDTH)
        .collect()
}

/// Recall for every threshold setting of one error function. For VSD the
/// rows are `τ` values and the columns `θ` values; the others have a single
/// row and no `τ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallGrid {
    pub function: ErrorFunction,
    pub taus: Vec<f64>,
    pub thetas: Vec<f64>,
    pub recalls: Vec<Vec<f64>>,
}

impl RecallGrid {
    pub fn rows(&self) -> usize {
        if self.function == ErrorFunction::Vsd {
            self.taus.len()
        } else {
            1
        }
    }

    pub fn cell_count(&self) -> usize {
        self.recalls.iter().map(Vec::len).sum()
    }

    pub fn validate(&self) -> Result<(), ScoringError> {
        let fail = |message: String| ScoringError::IncompleteGrid {
            function: self.function,
            message,
        };
        if self.thetas.is_empty() || (self.function == ErrorFunction::Vsd && self.taus.is_empty()) {
            return Err(fail("no thresholds".into()));
        }
        if self.recalls.len() != self.rows() {
            return Err(fail(format!("{} rows, expected {}", self.recalls.len(), self.rows())));
        }
        for (i, row) in self.recalls.iter().enumerate() {
            if row.len() != self.thetas.len() {
                return Err(fail(format!("row {i} has {} cells, expected {}", row.len(), self.thetas.len())));
            }
            if let Some(r) = row.iter().find(|r| !(0.0..=1.0).contains(*r)) {
                return Err(fail(format!("recall {r} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Mean recall over all cells of the grid.
pub fn average_recall(grid: &RecallGrid) -> Result<f64, ScoringError> {
    grid.validate()?;
    let sum: f64 = grid.recalls.iter().flatten().sum();
    Ok(sum / grid.cell_count() as f64)
}

/// Correct-match counts accumulated over images, turned into recall once
/// every image has been processed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrectCounts {
    pub gt_count: usize,
    /// `[τ][θ]`.
    pub vsd: Vec<Vec<usize>>,
    pub mssd: Vec<usize>,
    pub mspd: Vec<usize>,
}

impl CorrectCounts {
    pub fn zeros(n_tau: usize, n_vsd_theta: usize, n_mssd: usize, n_mspd: usize) -> Self {
        Self {
            gt_count: 0,
            vsd: vec![vec![0; n_vsd_theta]; n_tau],
            mssd: vec![0; n_mssd],
            mspd: vec![0; n_mspd],
        }
    }

    pub fn add(&mut self, other: &CorrectCounts) {
        self.gt_count += other.gt_count;
        for (a, b) in self.vsd.iter_mut().zip(&other.vsd) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (x, y) in self.mssd.iter_mut().zip(&other.mssd) {
            *x += y;
        }
        for (x, y) in self.mspd.iter_mut().zip(&other.mspd) {
            *x += y;
        }
    }

    fn recall(&self, c: usize) -> f64 {
        if self.gt_count == 0 {
            0.0
        } else {
            c as f64 / self.gt_count as f64
        }
    }

    /// Grids labeled with the given threshold coordinates (as configured,
    /// i.e. diameter fractions and multiples of `r`).
    pub fn grids(&self, thresholds: &ThresholdConfig) -> [RecallGrid; 3] {
        [
            RecallGrid {
                function: ErrorFunction::Vsd,
                taus: thresholds.vsd_taus.clone(),
                thetas: thresholds.vsd_thetas.clone(),
                recalls: self.vsd.iter().map(|row| row.iter().map(|&c| self.recall(c)).collect()).collect(),
            },
            RecallGrid {
                function: ErrorFunction::Mssd,
                taus: Vec::new(),
                thetas: thresholds.mssd_thetas.clone(),
                recalls: vec![self.mssd.iter().map(|&c| self.recall(c)).collect()],
            },
            RecallGrid {
                function: ErrorFunction::Mspd,
                taus: Vec::new(),
                thetas: thresholds.mspd_thetas.clone(),
                recalls: vec![self.mspd.iter().map(|&c| self.recall(c)).collect()],
            },
        ]
    }
}

/// Threshold grids. VSD `τ` and MSSD `θ` are fractions of the object
/// diameter; MSPD `θ` are multiples of `r = w/640`; VSD `θ` are unitless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfig {
    pub vsd_taus: Vec<f64>,
    pub vsd_thetas: Vec<f64>,
    pub mssd_thetas: Vec<f64>,
    pub mspd_thetas: Vec<f64>,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            vsd_taus: vsd_tau_fractions(),
            vsd_thetas: vsd_thetas(),
            mssd_thetas: mssd_theta_fractions(),
            mspd_thetas: mspd_theta_multiples(),
        }
    }
}

impl ThresholdConfig {
    pub fn validate(&self) -> Result<(), ScoringError> {
        let ok = |v: &[f64]| !v.is_empty() && v.iter().all(|x| *x > 0.0 && x.is_finite());
        let increasing = self.vsd_taus.windows(2).all(|w| w[0] < w[1]);
        if ok(&self.vsd_taus) && ok(&self.vsd_thetas) && ok(&self.mssd_thetas) && ok(&self.mspd_thetas) && increasing {
            Ok(())
        } else {
            Err(ScoringError::InvalidThresholds)
        }
    }

    pub fn empty_counts(&self) -> CorrectCounts {
        CorrectCounts::zeros(
            self.vsd_taus.len(),
            self.vsd_thetas.len(),
            self.mssd_thetas.len(),
            self.mspd_thetas.len(),
        )
    }
}

/// Estimate that could not be scored by some error function.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Diagnostic {
    pub scene_id: u32,
    pub im_id: u32,
    pub obj_id: u32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub name: String,
    pub ar_vsd: f64,
    pub ar_mssd: f64,
    pub ar_mspd: f64,
    pub ar_d: f64,
    pub gt_count: usize,
    pub estimate_count: usize,
    /// Mean over images of the per-image time (seconds).
    pub mean_time: Option<f64>,
    pub image_times: Vec<f64>,
    pub grids: Vec<RecallGrid>,
}

impl DatasetReport {
    /// `AR_D = (AR_VSD + AR_MSSD + AR_MSPD) / 3`.
    pub fn from_ars(name: impl Into<String>, ar_vsd: f64, ar_mssd: f64, ar_mspd: f64) -> Self {
        Self {
            name: name.into(),
            ar_vsd,
            ar_mssd,
            ar_mspd,
            ar_d: ar_d(ar_vsd, ar_mssd, ar_mspd),
            gt_count: 0,
            estimate_count: 0,
            mean_time: None,
            image_times: Vec::new(),
            grids: Vec::new(),
        }
    }

    pub fn from_grids(name: impl Into<String>, grids: [RecallGrid; 3]) -> Result<Self, ScoringError> {
        let ar_vsd = average_recall(&grids[0])?;
        let ar_mssd = average_recall(&grids[1])?;
        let ar_mspd = average_recall(&grids[2])?;
        let mut report = Self::from_ars(name, ar_vsd, ar_mssd, ar_mspd);
        report.grids = grids.to_vec();
        Ok(report)
    }

    pub fn with_times(mut self, image_times: Vec<f64>) -> Self {
        self.mean_time = mean(&image_times);
        self.image_times = image_times;
        self
    }
}

pub fn ar_d(ar_vsd: f64, ar_mssd: f64, ar_mspd: f64) -> f64 {
    (ar_vsd + ar_mssd + ar_mspd) / 3.0
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema: u32,
    pub method: String,
    pub datasets: Vec<DatasetReport>,
    pub ar_core: f64,
    /// Mean per-image time over all images of all datasets (seconds).
    pub mean_time: Option<f64>,
    #[serde(default)]
    pub diagnostics: Vec<Diagnostic>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// `AR_Core` is the unweighted mean of the per-dataset `AR_D`.
pub fn aggregate_report(method: impl Into<String>, per_dataset: Vec<DatasetReport>) -> Result<EvaluationReport, ScoringError> {
    if per_dataset.is_empty() {
        return Err(ScoringError::NoDatasets);
    }
    let ar_core = per_dataset.iter().map(|d| d.ar_d).sum::<f64>() / per_dataset.len() as f64;
    let all_times: Vec<f64> = per_dataset.iter().flat_map(|d| d.image_times.iter().copied()).collect();
    Ok(EvaluationReport {
        schema: REPORT_SCHEMA,
        method: method.into(),
        mean_time: mean(&all_times),
        datasets: per_dataset,
        ar_core,
        diagnostics: Vec::new(),
        warnings: Vec::new(),
    })
}

/// Per-image time: the maximum reported over the image's rows. The second
/// value lists images whose rows disagree.
pub fn image_times(estimates: &[PoseEstimate]) -> (BTreeMap<(u32, u32), f64>, Vec<(u32, u32)>) {
    let mut seen: BTreeMap<(u32, u32), (f64, f64)> = BTreeMap::new();
    for e in estimates {
        if let Some(t) = e.time {
            let entry = seen.entry((e.scene_id, e.im_id)).or_insert((t, t));
            entry.0 = entry.0.min(t);
            entry.1 = entry.1.max(t);
        }
    }
    let inconsistent = seen
        .iter()
        .filter(|(_, (lo, hi))| lo.partial_cmp(hi) != Some(Ordering::Equal))
        .map(|(k, _)| *k)
        .collect();
    (seen.into_iter().map(|(k, (_, hi))| (k, hi)).collect(), inconsistent)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(score: f64) -> PoseEstimate {
        PoseEstimate {
            scene_id: 1,
            im_id: 1,
            obj_id: 1,
            pose: RigidTransform::identity(),
            score,
            time: None,
        }
    }

    #[test]
    fn top_n_examples() {
        let targets: Targets = [((1, 1, 1), 2)].into_iter().collect();
        let five: Vec<_> = [0.1, 0.9, 0.3, 0.8, 0.2].into_iter().map(est).collect();
        let kept: Vec<f64> = select_top_n(&five, &targets).iter().map(|e| e.score).collect();
        assert_eq!(kept, vec![0.9, 0.8]);

        let three: Targets = [((1, 1, 1), 3)].into_iter().collect();
        assert_eq!(select_top_n(&[est(0.4)], &three).len(), 1);

        let mut ties: Vec<_> = [0.5, 0.5, 0.5].into_iter().map(est).collect();
        for (i, e) in ties.iter_mut().enumerate() {
            e.time = Some(i as f64);
        }
        let kept: Vec<_> = select_top_n(&ties, &targets).iter().map(|e| e.time).collect();
        assert_eq!(kept, vec![Some(0.0), Some(1.0)]);
    }

    #[test]
    fn greedy_matching_trace() {
        let table = ErrorTable::new(2, 2, vec![Some(5.0), Some(50.0), Some(8.0), Some(7.0)]).unwrap();
        assert_eq!(match_and_judge(&[0.9, 0.8], &table, 10.0).unwrap(), vec![true, true]);
        let single = ErrorTable::new(1, 1, vec![Some(0.0)]).unwrap();
        assert_eq!(match_and_judge(&[1.0], &single, 0.05).unwrap(), vec![true]);
        let far = ErrorTable::new(1, 2, vec![Some(10.0), Some(12.0)]).unwrap();
        assert_eq!(match_and_judge(&[1.0], &far, 10.0).unwrap(), vec![false, false]);
        let invalid = ErrorTable::new(1, 1, vec![None]).unwrap();
        assert_eq!(match_and_judge(&[1.0], &invalid, f64::INFINITY).unwrap(), vec![false]);
        assert!(match_and_judge(&[1.0, 2.0], &single, 1.0).is_err());
    }

    #[test]
    fn threshold_grids() {
        assert_eq!(mspd_thresholds_px(640), vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0]);
        let f = fraction_steps();
        assert_eq!(f.len(), 10);
        assert_eq!(f[0], 0.05);
        assert_eq!(f[9], 0.5);
        assert_eq!(f[5], 0.3);
    }

    #[test]
    fn incomplete_grid_is_rejected() {
        let grid = RecallGrid {
            function: ErrorFunction::Mssd,
            taus: vec![],
            thetas: vec![0.1, 0.2],
            recalls: vec![vec![1.0]],
        };
        assert!(matches!(average_recall(&grid), Err(ScoringError::IncompleteGrid { .. })));
    }

    #[test]
    fn aggregation() {
        let one = aggregate_report("m", vec![DatasetReport::from_ars("a", 0.7, 0.7, 0.7)]).unwrap();
        assert!((one.ar_core - 0.7).abs() < 1e-15);
        let two = aggregate_report(
            "m",
            vec![DatasetReport::from_ars("a", 0.0, 0.0, 0.0), DatasetReport::from_ars("b", 1.0, 1.0, 1.0)],
        )
        .unwrap();
        assert_eq!(two.ar_core, 0.5);
        assert_eq!(aggregate_report("m", vec![]), Err(ScoringError::NoDatasets));
    }

    #[test]
    fn times_take_the_image_maximum() {
        let mut rows: Vec<_> = [0.9, 0.8, 0.7].into_iter().map(est).collect();
        rows[0].time = Some(1.0);
        rows[1].time = Some(1.5);
        rows[2].im_id = 2;
        rows[2].time = Some(0.5);
        let (times, inconsistent) = image_times(&rows);
        assert_eq!(times[&(1, 1)], 1.5);
        assert_eq!(times[&(1, 2)], 0.5);
        assert_eq!(inconsistent, vec![(1, 1)]);
    }
}

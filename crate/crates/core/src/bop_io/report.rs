//! Report output: full JSON plus a percent table with one decimal.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::scoring::EvaluationReport;

use super::DatasetError;

pub fn percent(v: f64) -> String {
    format!("{:.1}", v * 100.0)
}

fn time_cell(t: Option<f64>) -> String {
    t.map_or("-".to_string(), |t| format!("{t:.3}"))
}

/// Per-dataset breakdown of one report.
pub fn format_report_table(report: &EvaluationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Method: {}", report.method);
    let _ = writeln!(
        s,
        "{:<16} {:>7} {:>8} {:>8} {:>6} {:>6} {:>9}",
        "Dataset", "AR_VSD", "AR_MSSD", "AR_MSPD", "AR_D", "GT", "Time (s)"
    );
    for d in &report.datasets {
        let _ = writeln!(
            s,
            "{:<16} {:>7} {:>8} {:>8} {:>6} {:>6} {:>9}",
            d.name,
            percent(d.ar_vsd),
            percent(d.ar_mssd),
            percent(d.ar_mspd),
            percent(d.ar_d),
            d.gt_count,
            time_cell(d.mean_time)
        );
    }
    let _ = writeln!(
        s,
        "{:<16} {:>7} {:>8} {:>8} {:>6} {:>6} {:>9}",
        "Avg.",
        "",
        "",
        "",
        percent(report.ar_core),
        "",
        time_cell(report.mean_time)
    );
    s
}

/// Methods ranked by `AR_Core` (descending; ties by method name), one column
/// per dataset with its `AR_D`.
pub fn format_leaderboard(reports: &[EvaluationReport]) -> Result<String, DatasetError> {
    if reports.is_empty() || reports.iter().any(|r| r.datasets.is_empty()) {
        return Err(DatasetError::EmptyReport);
    }
    let mut names: Vec<&str> = Vec::new();
    for r in reports {
        for d in &r.datasets {
            if !names.contains(&d.name.as_str()) {
                names.push(&d.name);
            }
        }
    }
    let mut ranked: Vec<&EvaluationReport> = reports.iter().collect();
    ranked.sort_by(|a, b| b.ar_core.total_cmp(&a.ar_core).then_with(|| a.method.cmp(&b.method)));

    let width = ranked.iter().map(|r| r.method.len()).max().unwrap_or(6).max(6);
    let mut s = String::new();
    let _ = write!(s, "{:>4}  {:<width$}", "#", "Method");
    for n in &names {
        let _ = write!(s, " {:>8}", n);
    }
    let _ = writeln!(s, " {:>6} {:>9}", "Avg.", "Time (s)");
    for (rank, r) in ranked.iter().enumerate() {
        let _ = write!(s, "{:>4}  {:<width$}", rank + 1, r.method);
        for n in &names {
            let cell = r
                .datasets
                .iter()
                .find(|d| d.name == *n)
                .map_or("-".to_string(), |d| percent(d.ar_d));
            let _ = write!(s, " {:>8}", cell);
        }
        let _ = writeln!(s, " {:>6} {:>9}", percent(r.ar_core), time_cell(r.mean_time));
    }
    Ok(s)
}

pub fn report_to_json(report: &EvaluationReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes") + "\n"
}

/// Writes `<path>` (JSON) and the same path with extension `txt` (table).
pub fn write_report(report: &EvaluationReport, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let path = path.as_ref();
    if report.datasets.is_empty() {
        return Err(DatasetError::EmptyReport);
    }
    let io = |p: &Path| {
        let p = p.to_path_buf();
        move |source| DatasetError::Io { path: p, source }
    };
    fs::write(path, report_to_json(report)).map_err(io(path))?;
    let table_path = path.with_extension("txt");
    fs::write(&table_path, format_report_table(report)).map_err(io(&table_path))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<EvaluationReport, DatasetError> {
    super::scene::read_json(path.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::{aggregate_report, DatasetReport};

    #[test]
    fn one_decimal_percent() {
        assert_eq!(percent(0.698), "69.8");
        assert_eq!(percent(1.0), "100.0");
        assert_eq!(percent(0.0), "0.0");
    }

    #[test]
    fn empty_report_is_rejected() {
        let mut r = aggregate_report("m", vec![DatasetReport::from_ars("a", 1.0, 1.0, 1.0)]).unwrap();
        r.datasets.clear();
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(write_report(&r, dir.path().join("r.json")), Err(DatasetError::EmptyReport)));
    }

    #[test]
    fn leaderboard_is_ranked() {
        let a = aggregate_report("low", vec![DatasetReport::from_ars("x", 0.2, 0.2, 0.2)]).unwrap();
        let b = aggregate_report("high", vec![DatasetReport::from_ars("x", 0.9, 0.9, 0.9)]).unwrap();
        let table = format_leaderboard(&[a, b]).unwrap();
        let high = table.find("high").unwrap();
        let low = table.find("low").unwrap();
        assert!(high < low, "{table}");
        assert!(table.contains("90.0"));
    }
}

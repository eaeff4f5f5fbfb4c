use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use poseval::bop_io::{format_leaderboard, format_report_table, read_report, write_report, EvalConfig};
use poseval::evaluate::{evaluate, EvalError};
use poseval::geometry::load_mesh;
use poseval::selftest::run_selftest;
use poseval::symmetry::{analyze_symmetries, ModelInfo, SearchOptions};

const EXIT_INPUT: u8 = 1;
const EXIT_INTERNAL: u8 = 2;

#[derive(Parser)]
#[command(name = "poseval", version, about = "Evaluate 6D object pose estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a submission against one or more datasets.
    Evaluate(EvaluateArgs),
    /// Search a mesh for discrete and continuous symmetries.
    Symmetries(SymmetriesArgs),
    /// Rank saved reports by AR_Core.
    Report {
        /// report.json files
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
    /// Check the metrics against naive reference implementations.
    Selftest {
        /// Perturb every reference value; all checks must then fail.
        #[arg(long)]
        corrupt: bool,
    },
}

#[derive(clap::Args)]
struct EvaluateArgs {
    /// JSON configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `name=root` of a dataset in the standard layout.
    #[arg(long = "dataset", value_name = "NAME=ROOT")]
    datasets: Vec<String>,
    /// `name=path` or a plain path when only one dataset is configured.
    #[arg(long = "submission", value_name = "[NAME=]PATH")]
    submissions: Vec<String>,
    /// `name=path` or a plain path; defaults to `ROOT/test_targets.json`.
    #[arg(long = "targets", value_name = "[NAME=]PATH")]
    targets: Vec<String>,
    /// Directory for report.json and report.txt.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
    /// Visibility tolerance in mm.
    #[arg(long)]
    vsd_delta: Option<f64>,
    /// Minimum visible fraction of a ground-truth instance.
    #[arg(long)]
    visib_threshold: Option<f64>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    split: Option<String>,
}

#[derive(clap::Args)]
struct SymmetriesArgs {
    /// PLY models; the object id is taken from `obj_NNNNNN.ply` names.
    #[arg(required = true)]
    models: Vec<PathBuf>,
    /// Object id, for a single model with a non-standard name.
    #[arg(long)]
    obj_id: Option<u32>,
    /// Hausdorff tolerance in mm; defaults to max(15, 0.1·diameter).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Output file in models_info layout; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Input(String),
    Internal(String),
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        if e.is_internal() {
            Failure::Internal(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

fn split_named(value: &str) -> Option<(&str, &str)> {
    value.split_once('=').filter(|(name, path)| !name.is_empty() && !path.is_empty())
}

/// Resolves `[name=]path` values; a bare path needs exactly one dataset.
fn named_paths(
    values: &[String],
    datasets: &BTreeMap<String, PathBuf>,
    flag: &str,
) -> Result<BTreeMap<String, PathBuf>, Failure> {
    let mut out = BTreeMap::new();
    for v in values {
        let (name, path) = match split_named(v) {
            Some((n, p)) if datasets.contains_key(n) => (n.to_string(), PathBuf::from(p)),
            _ if datasets.len() == 1 => (datasets.keys().next().cloned().unwrap_or_default(), PathBuf::from(v)),
            _ => return Err(Failure::Input(format!("--{flag} `{v}`: expected NAME=PATH with a configured dataset"))),
        };
        if out.insert(name.clone(), path).is_some() {
            return Err(Failure::Input(format!("--{flag}: dataset `{name}` given twice")));
        }
    }
    Ok(out)
}

fn build_config(args: &EvaluateArgs) -> Result<EvalConfig, Failure> {
    let mut config = match &args.config {
        Some(p) => EvalConfig::load(p).map_err(input)?,
        None => EvalConfig::default(),
    };
    for d in &args.datasets {
        let (name, root) = split_named(d).ok_or_else(|| Failure::Input(format!("--dataset `{d}`: expected NAME=ROOT")))?;
        config.datasets.insert(name.to_string(), PathBuf::from(root));
    }
    config.submissions.extend(named_paths(&args.submissions, &config.datasets, "submission")?);
    config.targets.extend(named_paths(&args.targets, &config.datasets, "targets")?);
    if let Some(w) = args.workers {
        config.workers = Some(w);
    }
    if let Some(d) = args.vsd_delta {
        config.visib_delta = d;
    }
    if let Some(t) = args.visib_threshold {
        config.visib_threshold = t;
    }
    if let Some(m) = &args.method {
        config.method = m.clone();
    }
    if let Some(s) = &args.split {
        config.split = s.clone();
    }
    config.validate().map_err(Failure::Input)?;
    Ok(config)
}

fn run_evaluate(args: &EvaluateArgs) -> Result<(), Failure> {
    let config = build_config(args)?;
    if let Some(n) = config.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Internal(e.to_string()))?;
    }
    let report = evaluate(&config)?;
    fs::create_dir_all(&args.out).map_err(input)?;
    let path = args.out.join("report.json");
    write_report(&report, &path).map_err(input)?;
    print!("{}", format_report_table(&report));
    info!("wrote {}", path.display());
    Ok(())
}

fn obj_id_from_name(path: &Path) -> Option<u32> {
    path.file_stem()?.to_str()?.strip_prefix("obj_")?.parse().ok()
}

fn run_symmetries(args: &SymmetriesArgs) -> Result<(), Failure> {
    if args.obj_id.is_some() && args.models.len() != 1 {
        return Err(Failure::Input("--obj-id needs exactly one model".into()));
    }
    if let Some(e) = args.epsilon {
        if !(e > 0.0 && e.is_finite()) {
            return Err(Failure::Input(format!("--epsilon must be positive, got {e}")));
        }
    }
    let mut infos = BTreeMap::new();
    for path in &args.models {
        let obj_id = args
            .obj_id
            .or_else(|| obj_id_from_name(path))
            .ok_or_else(|| Failure::Input(format!("{}: cannot derive an object id; use --obj-id", path.display())))?;
        let mesh = load_mesh(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        let analysis = analyze_symmetries(&mesh, &SearchOptions { epsilon: args.epsilon });
        eprintln!(
            "obj {obj_id}: {} discrete, {} continuous (epsilon {:.2} mm){}",
            analysis.discrete.len(),
            analysis.continuous.len(),
            analysis.epsilon,
            if analysis.needs_review { "; needs review" } else { "" }
        );
        infos.insert(obj_id, ModelInfo::from_analysis(mesh.diameter(), &analysis));
    }
    eprintln!("geometric symmetries only; confirm them against the object texture before use");
    let json = serde_json::to_string_pretty(&infos).map_err(|e| Failure::Internal(e.to_string()))? + "\n";
    match &args.out {
        Some(p) => fs::write(p, json).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?,
        None => print!("{json}"),
    }
    Ok(())
}

fn run_report(paths: &[PathBuf]) -> Result<(), Failure> {
    let reports = paths.iter().map(read_report).collect::<Result<Vec<_>, _>>().map_err(input)?;
    print!("{}", format_leaderboard(&reports).map_err(input)?);
    Ok(())
}

fn run_selftest_command(corrupt: bool) -> Result<(), Failure> {
    let results = run_selftest(corrupt);
    for r in &results {
        println!(
            "{} {:<24} {:>7.3}s  {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.seconds,
            r.detail
        );
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(Failure::Internal(format!("{failed} of {} checks failed", results.len())));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Evaluate(args) => run_evaluate(args),
        Command::Symmetries(args) => run_symmetries(args),
        Command::Report { reports } => run_report(reports),
        Command::Selftest { corrupt } => run_selftest_command(*corrupt),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}

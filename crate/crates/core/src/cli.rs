//! Command-line front end.
//!
//! Settings resolve as flags over config file over defaults, and every
//! output embeds the resolved settings.

use crate::baseline::{detect_baseline, BaselineConfig, Statistic, TestForm};
use crate::detect::{detect, DetectionReport, DetectorConfig, KPolicy, PartitionPrior};
use crate::eval::{
    curves_csv, curves_svg, detection_rate_curve, mean_one_minus_p_curve, precision_recall_table, ChartKind,
    Curve, PrecisionRecall,
};
use crate::graph::{load_edge_list, save_edge_list, save_sidecar, EdgeListFormat, Sidecar, Snapshot, TemporalNetwork};
use crate::rng::derive_seed;
use crate::sbm::{fit_best_k, BpOptions, Family, FitOptions};
use crate::synth::{builtin_spec, generate_series, PlantedSeriesSpec, Truth};
use crate::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "netshift", version, about = "Change-point detection for temporal networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit a block model to one graph (all snapshots of the input are summed).
    Fit(FitArgs),
    /// Run a sliding-window detector over a temporal edge list.
    Detect(DetectArgs),
    /// Generate planted change-point series.
    Simulate(SimulateArgs),
    /// Score detection reports against known change points.
    Evaluate(EvaluateArgs),
    /// Render a curve table as SVG.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    Sbm,
    Dcsbm,
    #[value(name = "mean_degree")]
    MeanDegree,
    #[value(name = "mean_geodesic")]
    MeanGeodesic,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FamilyArg {
    Bernoulli,
    Poisson,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Bernoulli => Family::Bernoulli,
            FamilyArg::Poisson => Family::Poisson,
        }
    }
}

/// Every tunable setting. Config files use the same field names; missing
/// fields take the defaults below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub detector: DetectorKind,
    pub window: Option<usize>,
    pub alpha: f64,
    pub bootstrap: usize,
    /// Fixed block count; overrides `kmin`/`kmax`.
    pub k: Option<usize>,
    pub kmin: usize,
    pub kmax: usize,
    /// `None` picks Bernoulli for simple graphs and Poisson for multigraphs.
    pub family: Option<FamilyArg>,
    pub degree_corrected: bool,
    pub restarts: usize,
    pub segment_restarts: usize,
    /// Block prior in segment likelihoods: omitted, once per segment or per snapshot.
    pub partition_prior: PartitionPrior,
    pub damping: f64,
    pub tolerance: f64,
    pub max_sweeps: usize,
    pub max_outer: usize,
    pub param_tolerance: f64,
    pub seed: u64,
    pub active_nodes: bool,
    pub t_test: TestForm,
    /// Worker threads; results do not depend on it, so it is not echoed.
    #[serde(skip_serializing)]
    pub jobs: Option<usize>,
}

impl Default for Settings {
    fn default() -> Self {
        let fit = FitOptions::default();
        Settings {
            detector: DetectorKind::Sbm,
            window: None,
            alpha: 0.05,
            bootstrap: 200,
            k: None,
            kmin: 1,
            kmax: 6,
            family: None,
            degree_corrected: false,
            restarts: fit.restarts,
            segment_restarts: 0,
            partition_prior: PartitionPrior::default(),
            damping: fit.bp.damping,
            tolerance: fit.bp.tolerance,
            max_sweeps: fit.bp.max_sweeps,
            max_outer: fit.max_outer,
            param_tolerance: fit.param_tolerance,
            seed: 0,
            active_nodes: false,
            t_test: TestForm::Prediction,
            jobs: None,
        }
    }
}

impl Settings {
    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if let Some(w) = self.window {
            if w < 2 {
                return bad(format!("window {w} < 2"));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} not in (0, 1)", self.alpha));
        }
        if self.bootstrap == 0 {
            return bad("bootstrap must be at least 1".into());
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1".into());
        }
        if self.k == Some(0) || self.kmin == 0 || self.kmin > self.kmax {
            return bad("K must be positive and kmin <= kmax".into());
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad(format!("damping {} not in (0, 1]", self.damping));
        }
        if !(self.tolerance > 0.0 && self.param_tolerance > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.max_sweeps == 0 || self.max_outer == 0 {
            return bad("iteration caps must be positive".into());
        }
        if self.jobs == Some(0) {
            return bad("jobs must be at least 1".into());
        }
        Ok(())
    }

    fn fit_options(&self) -> FitOptions {
        FitOptions {
            restarts: self.restarts,
            bp: BpOptions {
                damping: self.damping,
                tolerance: self.tolerance,
                max_sweeps: self.max_sweeps,
                ..BpOptions::default()
            },
            max_outer: self.max_outer,
            param_tolerance: self.param_tolerance,
            seed: self.seed,
        }
    }

    fn k_range(&self) -> std::ops::RangeInclusive<usize> {
        match self.k {
            Some(k) => k..=k,
            None => self.kmin..=self.kmax,
        }
    }

    fn k_policy(&self) -> KPolicy {
        match self.k {
            Some(k) => KPolicy::Fixed(k),
            None => KPolicy::Select {
                min: self.kmin,
                max: self.kmax,
            },
        }
    }
}

/// Flags shared by the commands that fit models. Unset flags fall back to
/// the config file and then to the defaults.
#[derive(Args, Debug, Default, Clone)]
pub struct EngineArgs {
    /// JSON config file with any of the setting names.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Fixed number of blocks.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub kmin: Option<usize>,
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    #[arg(long)]
    pub degree_corrected: bool,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub damping: Option<f64>,
    /// Message convergence threshold.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub max_sweeps: Option<usize>,
    #[arg(long)]
    pub max_outer: Option<usize>,
    #[arg(long, env = "NETSHIFT_SEED")]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Edge list (`t,u,v[,count]`).
    #[arg(long)]
    pub input: PathBuf,
    /// Where to write the fit as JSON (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Args, Debug)]
pub struct DetectArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub detector: Option<DetectorKind>,
    /// Window width; required here or in the config file.
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Restrict each window to nodes with a link inside it.
    #[arg(long)]
    pub active_nodes: bool,
    /// Format written to stdout when no `--output` is given.
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    /// Output stem; writes `<stem>.json` and `<stem>.csv`.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Built-in setup (`er-2c`, `2c-cp`, `cp-2c`) or a JSON spec file.
    #[arg(long)]
    pub spec: String,
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    #[arg(long, env = "NETSHIFT_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Detection reports (JSON or CSV).
    #[arg(long, required = true, num_args = 1..)]
    pub reports: Vec<PathBuf>,
    /// Truth files: one per report, or a single one shared by all.
    #[arg(long, required = true, num_args = 1..)]
    pub truth: Vec<PathBuf>,
    /// Largest delay for the precision/recall tables (default: horizon - 1).
    #[arg(long)]
    pub max_delay: Option<usize>,
    #[arg(long)]
    pub output_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    /// Curve table as written by `evaluate` (first column is x).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = PlotKind::Bars)]
    pub kind: PlotKind,
    #[arg(long, default_value = "")]
    pub title: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    Bars,
    Lines,
}

fn read_config(path: &Path) -> Result<Settings> {
    let file = File::open(path)?;
    serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::InvalidArgument(format!("config {}: {e}", path.display())))
}

fn resolve(engine: &EngineArgs) -> Result<Settings> {
    let mut s = match &engine.config {
        Some(p) => read_config(p)?,
        None => Settings::default(),
    };
    macro_rules! overlay {
        ($($field:ident),*) => {
            $(if let Some(v) = engine.$field { s.$field = v; })*
        };
    }
    overlay!(kmin, kmax, restarts, damping, tolerance, max_sweeps, max_outer, seed);
    if engine.k.is_some() {
        s.k = engine.k;
    }
    if engine.family.is_some() {
        s.family = engine.family;
    }
    if engine.jobs.is_some() {
        s.jobs = engine.jobs;
    }
    s.degree_corrected |= engine.degree_corrected;
    Ok(s)
}

/// Loads an edge list, picking up `<input>.sidecar.json` when present.
pub fn load_network(path: &Path) -> Result<TemporalNetwork> {
    let sidecar_path = sidecar_path(path);
    let sidecar = if sidecar_path.exists() {
        serde_json::from_reader(BufReader::new(File::open(&sidecar_path)?))?
    } else {
        Sidecar::default()
    };
    load_edge_list(BufReader::new(File::open(path)?), &EdgeListFormat::with_sidecar(sidecar))
}

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("sidecar.json")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match jobs {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(f),
    }
}

#[derive(Serialize)]
struct FitOutput<'a> {
    config: &'a Settings,
    input: &'a Path,
    fit: crate::sbm::FitSummary,
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let settings = resolve(&args.engine)?;
    settings.validate()?;
    let net = load_network(&args.input)?;
    let graph = Snapshot::sum(net.node_count(), net.directed(), net.snapshots())?;
    let family = match settings.family {
        Some(f) => f.into(),
        None if graph.is_simple() => Family::Bernoulli,
        None => Family::Poisson,
    };
    let fit = with_pool(settings.jobs, || {
        fit_best_k(&graph, settings.k_range(), family, settings.degree_corrected, &settings.fit_options())
    })?;
    let output = FitOutput {
        config: &settings,
        input: &args.input,
        fit: fit.summary(),
    };
    let line = format!(
        "K={} log_likelihood={:.6} description_length={:.6} converged={}",
        fit.k(),
        fit.log_likelihood,
        fit.description_length,
        fit.converged
    );
    match &args.output {
        Some(path) => {
            write_json(path, &output)?;
            println!("{line}");
        }
        None => {
            eprintln!("{line}");
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            serde_json::to_writer_pretty(&mut lock, &output)?;
            writeln!(lock)?;
        }
    }
    Ok(())
}

fn cmd_detect(args: &DetectArgs) -> Result<()> {
    let mut settings = resolve(&args.engine)?;
    if let Some(d) = args.detector {
        settings.detector = d;
    }
    if let Some(w) = args.window {
        settings.window = Some(w);
    }
    if let Some(a) = args.alpha {
        settings.alpha = a;
    }
    if let Some(b) = args.bootstrap {
        settings.bootstrap = b;
    }
    settings.active_nodes |= args.active_nodes;
    if settings.detector == DetectorKind::Dcsbm {
        settings.degree_corrected = true;
    }
    settings.validate()?;
    let window = settings
        .window
        .ok_or_else(|| Error::InvalidArgument("--window is required".into()))?;
    let net = load_network(&args.input)?;
    if window > net.len() {
        return Err(Error::WindowOutOfBounds {
            t0: 0,
            width: window,
            len: net.len(),
        });
    }
    let mut report = with_pool(settings.jobs, || match settings.detector {
        DetectorKind::Sbm | DetectorKind::Dcsbm => {
            let cfg = DetectorConfig {
                window,
                alpha: settings.alpha,
                bootstrap: settings.bootstrap,
                degree_corrected: settings.degree_corrected,
                k: settings.k_policy(),
                fit: settings.fit_options(),
                segment_restarts: settings.segment_restarts,
                prior: settings.partition_prior,
                active_nodes: settings.active_nodes,
                seed: settings.seed,
                ..DetectorConfig::default()
            };
            detect(&net, &cfg)
        }
        DetectorKind::MeanDegree | DetectorKind::MeanGeodesic => {
            let statistic = if settings.detector == DetectorKind::MeanDegree {
                Statistic::MeanDegree
            } else {
                Statistic::MeanGeodesic
            };
            detect_baseline(
                &net,
                &BaselineConfig {
                    statistic,
                    window,
                    alpha: settings.alpha,
                    form: settings.t_test,
                },
            )
        }
    })?;
    report.config = serde_json::json!({ "settings": settings, "input": args.input });
    match &args.output {
        Some(stem) => {
            report.write_json(BufWriter::new(File::create(stem.with_extension("json"))?))?;
            report.write_csv(BufWriter::new(File::create(stem.with_extension("csv"))?))?;
            eprintln!("detected: {:?}", report.detected_instants());
        }
        None => {
            let stdout = std::io::stdout();
            match args.format {
                OutputFormat::Json => {
                    report.write_json(stdout.lock())?;
                    println!();
                }
                OutputFormat::Csv => report.write_csv(stdout.lock())?,
            }
        }
    }
    Ok(())
}

fn load_spec(spec: &str) -> Result<PlantedSeriesSpec> {
    let path = Path::new(spec);
    if path.is_file() {
        let parsed: PlantedSeriesSpec = serde_json::from_reader(BufReader::new(File::open(path)?))
            .map_err(|e| Error::InvalidArgument(format!("spec {spec}: {e}")))?;
        parsed.validate()?;
        Ok(parsed)
    } else {
        builtin_spec(spec)
    }
}

#[derive(Serialize)]
struct SimulateManifest<'a> {
    spec: &'a PlantedSeriesSpec,
    runs: usize,
    seed: u64,
    files: Vec<String>,
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    if args.runs == 0 {
        return Err(Error::InvalidArgument("--runs must be at least 1".into()));
    }
    let spec = load_spec(&args.spec)?;
    std::fs::create_dir_all(&args.output_dir)?;
    let mut files = Vec::with_capacity(args.runs);
    for run in 0..args.runs {
        let run_spec = spec.clone().with_seed(derive_seed(args.seed, &[run as u64]));
        let series = generate_series(&run_spec)?;
        let stem = format!("run_{run:03}");
        let edges = args.output_dir.join(format!("{stem}.csv"));
        save_edge_list(&series.network, BufWriter::new(File::create(&edges)?))?;
        write_json(&sidecar_path(&edges), &save_sidecar(&series.network))?;
        write_json(&args.output_dir.join(format!("{stem}.truth.json")), &series.truth)?;
        files.push(format!("{stem}.csv"));
    }
    write_json(
        &args.output_dir.join("manifest.json"),
        &SimulateManifest {
            spec: &spec,
            runs: args.runs,
            seed: args.seed,
            files,
        },
    )?;
    println!("wrote {} series to {}", args.runs, args.output_dir.display());
    Ok(())
}

fn load_report(path: &Path) -> Result<DetectionReport> {
    let reader = BufReader::new(File::open(path)?);
    if path.extension().is_some_and(|e| e == "csv") {
        DetectionReport::read_csv(reader)
    } else {
        DetectionReport::read_json(reader)
    }
}

#[derive(Serialize)]
struct RunScores {
    report: PathBuf,
    truth: Vec<usize>,
    found: Vec<usize>,
    scores: Vec<PrecisionRecall>,
}

#[derive(Serialize)]
struct EvaluateOutput {
    reports: Vec<PathBuf>,
    truth: Vec<PathBuf>,
    horizon: usize,
    max_delay: usize,
    runs: Vec<RunScores>,
    detection_rate: Vec<f64>,
    mean_one_minus_p: Vec<f64>,
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    if args.truth.len() != 1 && args.truth.len() != args.reports.len() {
        return Err(Error::InvalidArgument(format!(
            "{} truth files for {} reports",
            args.truth.len(),
            args.reports.len()
        )));
    }
    let reports = args
        .reports
        .iter()
        .map(|p| load_report(p))
        .collect::<Result<Vec<_>>>()?;
    let truths = args
        .truth
        .iter()
        .map(|p| Ok(serde_json::from_reader::<_, Truth>(BufReader::new(File::open(p)?))?))
        .collect::<Result<Vec<_>>>()?;
    let horizon = reports[0].horizon;
    let max_delay = args.max_delay.unwrap_or(horizon.saturating_sub(1));
    let rate = detection_rate_curve(&reports, horizon)?;
    let one_minus_p = mean_one_minus_p_curve(&reports, horizon)?;

    let runs: Vec<RunScores> = reports
        .iter()
        .zip(&args.reports)
        .enumerate()
        .map(|(i, (report, path))| {
            let truth = &truths[if truths.len() == 1 { 0 } else { i }];
            let found = report.detected_instants();
            RunScores {
                report: path.clone(),
                truth: truth.change_points.clone(),
                scores: precision_recall_table(&found, &truth.change_points, max_delay),
                found,
            }
        })
        .collect();

    std::fs::create_dir_all(&args.output_dir)?;
    let mut pr = csv::Writer::from_path(args.output_dir.join("precision_recall.csv"))
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let csv_err = |e: csv::Error| Error::InvalidInput(e.to_string());
    pr.write_record(["run", "s", "precision", "recall", "precision_flag", "recall_flag"])
        .map_err(csv_err)?;
    let flag = |d: Option<crate::eval::Degenerate>| {
        d.map(|d| serde_json::to_value(d).unwrap().as_str().unwrap().to_string())
            .unwrap_or_default()
    };
    for (i, run) in runs.iter().enumerate() {
        for row in &run.scores {
            pr.write_record([
                i.to_string(),
                row.s.to_string(),
                row.precision.value.to_string(),
                row.recall.value.to_string(),
                flag(row.precision.degenerate),
                flag(row.recall.degenerate),
            ])
            .map_err(csv_err)?;
        }
    }
    pr.flush()?;

    let xs: Vec<f64> = (0..horizon).map(|t| t as f64).collect();
    std::fs::write(
        args.output_dir.join("curves.csv"),
        curves_csv(
            "t",
            &xs,
            &[
                Curve::new("detection_rate", rate.clone()),
                Curve::new("mean_one_minus_p", one_minus_p.clone()),
            ],
        )?,
    )?;
    write_json(
        &args.output_dir.join("evaluation.json"),
        &EvaluateOutput {
            reports: args.reports.clone(),
            truth: args.truth.clone(),
            horizon,
            max_delay,
            runs,
            detection_rate: rate,
            mean_one_minus_p: one_minus_p,
        },
    )?;
    println!("evaluated {} reports into {}", reports.len(), args.output_dir.display());
    Ok(())
}

fn cmd_plot(args: &PlotArgs) -> Result<()> {
    let mut reader = csv::Reader::from_path(&args.input).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let headers = reader.headers().map_err(|e| Error::InvalidInput(e.to_string()))?.clone();
    if headers.len() < 2 {
        return Err(Error::InvalidInput("curve table needs an x column and at least one curve".into()));
    }
    let mut xs = Vec::new();
    let mut curves: Vec<Curve> = headers.iter().skip(1).map(|h| Curve::new(h, Vec::new())).collect();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::InvalidInput(e.to_string()))?;
        let parse = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                line: i + 2,
                message: format!("not a number: {s:?}"),
            })
        };
        xs.push(parse(&record[0])?);
        for (c, field) in curves.iter_mut().zip(record.iter().skip(1)) {
            c.values.push(parse(field)?);
        }
    }
    let kind = match args.kind {
        PlotKind::Bars => ChartKind::Bars,
        PlotKind::Lines => ChartKind::Lines,
    };
    std::fs::write(&args.output, curves_svg(&args.title, &xs, &curves, kind)?)?;
    Ok(())
}

/// Runs a parsed command and maps failures to exit codes: 2 for usage and
/// configuration errors, 3 for data errors, 4 for numerical failures.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Plot(a) => cmd_plot(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config_and_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"restarts": 3, "kmax": 4, "alpha": 0.01}"#).unwrap();
        let engine = EngineArgs {
            config: Some(cfg),
            restarts: Some(5),
            ..EngineArgs::default()
        };
        let s = resolve(&engine).unwrap();
        assert_eq!(s.restarts, 5);
        assert_eq!(s.kmax, 4);
        assert_eq!(s.alpha, 0.01);
        assert_eq!(s.bootstrap, 200);
    }

    #[test]
    fn unknown_config_key_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"restrats": 3}"#).unwrap();
        let err = resolve(&EngineArgs {
            config: Some(cfg),
            ..EngineArgs::default()
        })
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn invalid_settings_are_rejected() {
        for s in [
            Settings { alpha: 1.0, ..Settings::default() },
            Settings { window: Some(1), ..Settings::default() },
            Settings { bootstrap: 0, ..Settings::default() },
            Settings { restarts: 0, ..Settings::default() },
            Settings { kmin: 3, kmax: 2, ..Settings::default() },
        ] {
            assert!(s.validate().is_err());
        }
        assert!(Settings::default().validate().is_ok());
    }
}

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use survival_core::distributions::{write_pmf_csv, DEFAULT_BINS_PER_DECADE};
use survival_core::pipeline::{
    assumptions_json, classify_sources, invariance_for_runs, projection_report,
    read_scaling_points, scaling_points, sha256_hex, Classified, FitOptions, Provenance,
    ReportBundle, RunError, RunSource,
};
use survival_core::plot::{emit_plot, PlotData, PlotFormat};
use survival_core::records::{ingest_records, write_jsonl, RecordFormat, RunManifest};
use survival_core::sandpile::{avalanche_distribution, run_sweep, SandpileConfig, Simulation};
use survival_core::scaling::{HardwareAssumptions, ScalingPoint, DEFAULT_TARGET_ALPHA};
use survival_core::synth::DiscretePowerLaw;
use survival_core::{fit_powerlaw, FitMethod, FitRange};

#[derive(Parser)]
#[command(
    name = "survival",
    version,
    about = "Failure-count decay rates, levels and scaling projections"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Inclusive fit window on failure counts
    #[arg(long, num_args = 2, value_names = ["X_MIN", "X_MAX"], global = true)]
    fit_range: Option<Vec<u64>>,

    #[arg(long, default_value_t = DEFAULT_BINS_PER_DECADE, global = true)]
    bins_per_decade: u32,

    /// Seed for every random draw (synth, sandpile)
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,

    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Logbin,
    Mle,
}

#[derive(Args)]
struct RunArgs {
    /// Record files (.jsonl or .csv)
    #[arg(required = true)]
    records: Vec<PathBuf>,

    /// Manifests, paired with the record files in order. Without one,
    /// `<stem>.manifest.json` beside the records is used if present.
    #[arg(long)]
    manifest: Vec<PathBuf>,

    #[arg(long, value_enum, default_value_t = Method::Logbin)]
    method: Method,
}

#[derive(Args)]
struct ProjectionArgs {
    #[arg(long, default_value_t = DEFAULT_TARGET_ALPHA)]
    target_alpha: f64,
    #[arg(long)]
    bytes_per_param: Option<f64>,
    #[arg(long)]
    gpu_memory_gb: Option<f64>,
    /// USD per GPU
    #[arg(long)]
    gpu_cost: Option<f64>,
    /// USD
    #[arg(long)]
    reference_market_cap: Option<f64>,
    #[arg(long)]
    doubling_months: Option<f64>,
    /// Largest model size available today
    #[arg(long)]
    baseline_params: Option<f64>,
}

impl ProjectionArgs {
    fn hardware(&self) -> HardwareAssumptions {
        let d = HardwareAssumptions::default();
        HardwareAssumptions {
            bytes_per_param: self.bytes_per_param.unwrap_or(d.bytes_per_param),
            gpu_memory_bytes: self.gpu_memory_gb.map_or(d.gpu_memory_bytes, |gb| gb * 1e9),
            gpu_unit_cost: self.gpu_cost.unwrap_or(d.gpu_unit_cost),
            reference_market_cap: self.reference_market_cap.unwrap_or(d.reference_market_cap),
            doubling_months: self.doubling_months.unwrap_or(d.doubling_months),
            current_max_params: self.baseline_params.unwrap_or(d.current_max_params),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate record files and report accepted and rejected rows
    Ingest {
        #[arg(required = true)]
        records: Vec<PathBuf>,
        /// Write the accepted records as normalized JSONL here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit and classify each run
    Classify {
        #[command(flatten)]
        runs: RunArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit decay rate against model size and extrapolate to a target rate
    Project {
        /// Record files whose manifests carry param_count
        records: Vec<PathBuf>,
        #[arg(long)]
        manifest: Vec<PathBuf>,
        /// CSV with columns run_id,param_count,alpha
        #[arg(long)]
        points: Option<PathBuf>,
        #[command(flatten)]
        projection: ProjectionArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate Abelian sandpiles; several dimensions run as a parallel sweep
    Sandpile {
        #[arg(long, num_args = 1.., default_value = "2")]
        dim: Vec<usize>,
        /// One side length for all dimensions, or one per dimension
        #[arg(long, num_args = 1.., default_value = "64")]
        side: Vec<usize>,
        /// Unrecorded drives before recording; default 50 per site
        #[arg(long)]
        burn_in: Option<u64>,
        #[arg(long, default_value_t = 100_000)]
        drives: u64,
        /// Avalanche sizes, one per line. A directory for sweeps.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Avalanche-size PMF as CSV (x,mass). A directory for sweeps.
        #[arg(long)]
        emit_distribution: Option<PathBuf>,
        /// Simulation metadata JSON. A directory for sweeps.
        #[arg(long)]
        metadata: Option<PathBuf>,
    },
    /// Compare fits before and after multiplying every count by k
    CheckScaleInvariance {
        #[command(flatten)]
        runs: RunArgs,
        #[arg(long, default_value_t = 2)]
        k: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classification, projection and scale-invariance in one bundle
    Report {
        #[command(flatten)]
        runs: RunArgs,
        /// Extra scaling points, CSV with columns run_id,param_count,alpha
        #[arg(long)]
        points: Option<PathBuf>,
        #[command(flatten)]
        projection: ProjectionArgs,
        #[arg(long, default_value_t = 2)]
        k: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a seeded synthetic power-law run and its manifest
    Synth {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 5000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        x_min: u64,
        #[arg(long, default_value_t = 100_000)]
        x_max: u64,
        #[arg(long)]
        run_id: String,
        #[arg(long)]
        param_count: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            println!("{}", json!({ "error": format!("{e:#}") }));
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let g = &cli.global;
    match &cli.command {
        Command::Ingest { records, out } => ingest(records, out.as_deref()),
        Command::Classify { runs, out } => {
            let opts = fit_options(g, runs.method)?;
            let classified = classify_sources(&sources(&runs.records, &runs.manifest)?, &opts);
            let bundle = bundle(
                &classified,
                None,
                vec![],
                assumptions_json(&opts, None, &[]),
            );
            finish(g, &bundle, &classified, None, out.as_deref())
        }
        Command::Project {
            records,
            manifest,
            points,
            projection,
            out,
        } => {
            if records.is_empty() && points.is_none() {
                bail!("project needs record files or --points");
            }
            let opts = fit_options(g, Method::Logbin)?;
            let classified = if records.is_empty() {
                Classified::default()
            } else {
                classify_sources(&sources(records, manifest)?, &opts)
            };
            project_bundle(
                g,
                &opts,
                classified,
                points.as_deref(),
                projection,
                None,
                true,
                out.as_deref(),
            )
        }
        Command::Report {
            runs,
            points,
            projection,
            k,
            out,
        } => {
            let opts = fit_options(g, runs.method)?;
            let classified = classify_sources(&sources(&runs.records, &runs.manifest)?, &opts);
            project_bundle(
                g,
                &opts,
                classified,
                points.as_deref(),
                projection,
                Some(*k),
                false,
                out.as_deref(),
            )
        }
        Command::CheckScaleInvariance { runs, k, out } => {
            let opts = fit_options(g, runs.method)?;
            let mut classified = classify_sources(&sources(&runs.records, &runs.manifest)?, &opts);
            let (entries, errors) = invariance_for_runs(&classified.runs, *k, &opts);
            classified.errors.extend(errors);
            let assumptions = assumptions_json(&opts, None, &[("k", json!(k))]);
            let mut b = bundle(&classified, None, entries, assumptions);
            b.classifications.clear();
            let code = exit_code(b.scale_invariance.len(), b.errors.len());
            if g.format == Format::Csv {
                let mut rows = csv_writer(out.as_deref(), "scale_invariance.csv")?;
                rows.write_record([
                    "run_id",
                    "k",
                    "alpha_original",
                    "alpha_scaled",
                    "delta",
                    "levels_match",
                    "assumption_violated",
                ])?;
                for e in &b.scale_invariance {
                    let r = &e.report;
                    rows.write_record([
                        e.run_id.clone(),
                        r.k.to_string(),
                        r.alpha_original.to_string(),
                        r.alpha_scaled.to_string(),
                        r.delta.to_string(),
                        r.levels_match.to_string(),
                        r.assumption_violated.to_string(),
                    ])?;
                }
                rows.flush()?;
            } else {
                write_json(&b, out.as_deref(), "report.json")?;
            }
            Ok(code)
        }
        Command::Sandpile {
            dim,
            side,
            burn_in,
            drives,
            out,
            emit_distribution,
            metadata,
        } => sandpile(
            g,
            dim,
            side,
            *burn_in,
            *drives,
            out,
            emit_distribution,
            metadata,
        ),
        Command::Synth {
            alpha,
            n,
            x_min,
            x_max,
            run_id,
            param_count,
            out,
        } => {
            let law = DiscretePowerLaw::new(*alpha, *x_min, *x_max)?;
            let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
            let records = law.records(&mut rng, *n, &format!("{run_id}-"));
            fs::create_dir_all(out)?;
            let mut manifest = RunManifest::new(run_id.clone());
            manifest.param_count = *param_count;
            manifest.task = "synthetic".into();
            manifest.dataset = format!("power law alpha={alpha} on [{x_min}, {x_max}]");
            manifest.seed = Some(g.seed as i64);
            manifest.validate()?;
            write_jsonl(&records, File::create(out.join(format!("{run_id}.jsonl")))?)?;
            let mut text = serde_json::to_string_pretty(&manifest)?;
            text.push('\n');
            fs::write(out.join(format!("{run_id}.manifest.json")), text)?;
            Ok(0)
        }
    }
}

fn fit_options(g: &Global, method: Method) -> anyhow::Result<FitOptions> {
    let range = match g.fit_range.as_deref() {
        Some([lo, hi]) => FitRange::new(*lo, *hi)?,
        Some(_) => bail!("--fit-range takes two values"),
        None => FitRange::default(),
    };
    if g.bins_per_decade == 0 {
        bail!("--bins-per-decade must be at least 1");
    }
    Ok(FitOptions {
        range,
        bins_per_decade: g.bins_per_decade,
        method: match method {
            Method::Logbin => FitMethod::LogBinLeastSquares,
            Method::Mle => FitMethod::MleDiscrete,
        },
    })
}

fn sources(records: &[PathBuf], manifests: &[PathBuf]) -> anyhow::Result<Vec<RunSource>> {
    if !manifests.is_empty() && manifests.len() != records.len() {
        bail!(
            "{} manifests given for {} record files; pass one per file or none",
            manifests.len(),
            records.len()
        );
    }
    Ok(records
        .iter()
        .enumerate()
        .map(|(i, path)| RunSource {
            records: path.clone(),
            manifest: manifests.get(i).cloned(),
        })
        .collect())
}

fn bundle(
    classified: &Classified,
    projection: Option<survival_core::pipeline::ProjectionReport>,
    scale_invariance: Vec<survival_core::pipeline::InvarianceEntry>,
    assumptions: serde_json::Value,
) -> ReportBundle {
    ReportBundle {
        classifications: classified.runs.iter().map(|r| r.report.clone()).collect(),
        projection,
        scale_invariance,
        errors: classified.errors.clone(),
        provenance: Provenance::new(assumptions, classified.inputs.clone()),
    }
}

fn exit_code(successes: usize, errors: usize) -> u8 {
    match (successes, errors) {
        (_, 0) => 0,
        (0, _) => 1,
        _ => 2,
    }
}

/// With `require_projection` unset, fewer than two sized points skip the
/// projection instead of recording an error.
#[allow(clippy::too_many_arguments)]
fn project_bundle(
    g: &Global,
    opts: &FitOptions,
    mut classified: Classified,
    points_csv: Option<&Path>,
    args: &ProjectionArgs,
    invariance_k: Option<u64>,
    require_projection: bool,
    out: Option<&Path>,
) -> anyhow::Result<u8> {
    let hw = args.hardware();
    let mut points: Vec<ScalingPoint> = scaling_points(&classified.runs);
    if let Some(path) = points_csv {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        classified
            .inputs
            .insert(path.display().to_string(), sha256_hex(&bytes));
        points.extend(read_scaling_points(path)?);
    }
    let mut extra = Vec::new();
    let skip = !require_projection && points_csv.is_none() && points.len() < 2;
    let projection = match hw
        .validate()
        .and_then(|_| projection_report(points, args.target_alpha, &hw))
    {
        _ if skip => {
            extra.push((
                "projection",
                json!("skipped: fewer than two runs with param_count"),
            ));
            None
        }
        Ok(p) => Some(p),
        Err(e) => {
            classified.errors.push(RunError {
                run_id: "projection".into(),
                error: e.to_string(),
            });
            None
        }
    };
    let mut invariance = Vec::new();
    if let Some(k) = invariance_k {
        let (entries, errors) = invariance_for_runs(&classified.runs, k, opts);
        invariance = entries;
        classified.errors.extend(errors);
        extra.push(("k", json!(k)));
    }
    let assumptions = assumptions_json(opts, Some((args.target_alpha, &hw)), &extra);
    let b = bundle(&classified, projection, invariance, assumptions);
    let proj_plot = b.projection.as_ref().and_then(PlotData::projection);
    finish(g, &b, &classified, proj_plot, out)
}

/// Writes the bundle (or its CSV summary) and any plot files; returns the
/// exit code.
fn finish(
    g: &Global,
    b: &ReportBundle,
    classified: &Classified,
    projection_plot: Option<PlotData>,
    out: Option<&Path>,
) -> anyhow::Result<u8> {
    let plot_format = match g.format {
        Format::Svg => {
            if out.is_none() {
                bail!("--format svg needs --out");
            }
            PlotFormat::Svg
        }
        _ => PlotFormat::Csv,
    };
    if let Some(dir) = out {
        for run in &classified.runs {
            let plot = PlotData::classification(&run.report.run_id, &run.plot);
            emit_plot(
                &plot,
                plot_format,
                dir,
                &format!("{}.plot", run.report.run_id),
            )?;
        }
        if let Some(plot) = &projection_plot {
            emit_plot(plot, plot_format, dir, "projection.plot")?;
        }
    }
    if g.format == Format::Csv {
        write_summary_csv(b, out)?;
        if out.is_some() {
            write_json(b, out, "report.json")?;
        }
    } else {
        write_json(b, out, "report.json")?;
    }
    Ok(b.exit_code() as u8)
}

fn write_summary_csv(b: &ReportBundle, out: Option<&Path>) -> anyhow::Result<()> {
    let mut w = csv_writer(out, "summary.csv")?;
    w.write_record([
        "run_id",
        "level",
        "alpha",
        "r_squared",
        "alpha_std_err",
        "x_min",
        "x_max",
        "points_used",
        "method",
        "zero_fraction",
        "records",
        "rejected",
        "param_count",
    ])?;
    for r in &b.classifications {
        w.write_record([
            r.run_id.clone(),
            r.level.to_string(),
            r.alpha.to_string(),
            r.r_squared.to_string(),
            r.alpha_std_err.to_string(),
            r.x_min.to_string(),
            r.x_max.to_string(),
            r.points_used.to_string(),
            json!(r.method).as_str().unwrap_or_default().to_string(),
            r.zero_fraction.to_string(),
            r.records.to_string(),
            r.rejected.to_string(),
            r.param_count.map(|p| p.to_string()).unwrap_or_default(),
        ])?;
    }
    if let Some(p) = b.projection.as_ref().and_then(|p| p.projection.as_ref()) {
        w.flush()?;
        drop(w);
        let mut w = csv_writer(out, "projection.csv")?;
        w.write_record([
            "target_alpha",
            "slope",
            "intercept",
            "r_squared",
            "required_params",
            "years_until",
            "gpu_count",
            "cost_ratio",
            "neuron_ratio",
        ])?;
        w.write_record(
            [
                p.target_alpha,
                p.slope,
                p.intercept,
                p.r_squared,
                p.required_params,
                p.years_until,
                p.gpu_count,
                p.cost_ratio,
                p.neuron_ratio,
            ]
            .map(|v| v.to_string()),
        )?;
        w.flush()?;
    }
    Ok(())
}

/// CSV writer to `<out>/<name>`, or stdout.
fn csv_writer(out: Option<&Path>, name: &str) -> anyhow::Result<csv::Writer<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            Box::new(File::create(dir.join(name))?)
        }
        None => Box::new(io::stdout().lock()),
    };
    Ok(csv::Writer::from_writer(sink))
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>, name: &str) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(name), text)?;
        }
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct IngestSummary {
    source: String,
    digest: String,
    rows: usize,
    accepted: usize,
    rejected: usize,
    rejects: Vec<survival_core::records::Rejection>,
}

fn ingest(paths: &[PathBuf], out: Option<&Path>) -> anyhow::Result<u8> {
    let mut files = Vec::new();
    let mut errors = Vec::new();
    for path in paths {
        let source = path.display().to_string();
        let res = fs::read(path)
            .map_err(anyhow::Error::from)
            .and_then(|bytes| {
                let ingested = ingest_records(bytes.as_slice(), RecordFormat::from_path(path))?;
                Ok((sha256_hex(&bytes), ingested))
            });
        match res {
            Ok((digest, ingested)) => {
                if let Some(dir) = out {
                    fs::create_dir_all(dir)?;
                    let stem = path
                        .file_name()
                        .map(|n| n.to_string_lossy().into_owned())
                        .unwrap_or_default();
                    let stem = stem.split('.').next().unwrap_or_default();
                    write_jsonl(
                        &ingested.records,
                        File::create(dir.join(format!("{stem}.jsonl")))?,
                    )?;
                }
                files.push(IngestSummary {
                    source,
                    digest,
                    rows: ingested.rows(),
                    accepted: ingested.records.len(),
                    rejected: ingested.rejects.len(),
                    rejects: ingested.rejects,
                });
            }
            Err(e) => errors.push(RunError {
                run_id: source,
                error: format!("{e:#}"),
            }),
        }
    }
    let code = exit_code(files.len(), errors.len());
    let mut text = serde_json::to_string_pretty(&json!({ "files": files, "errors": errors }))?;
    text.push('\n');
    io::stdout().lock().write_all(text.as_bytes())?;
    Ok(code)
}

#[derive(Serialize)]
struct SandpileSummary {
    dimension: usize,
    side_length: usize,
    recorded_drives: u64,
    zero_fraction: Option<f64>,
    alpha: Option<f64>,
    r_squared: Option<f64>,
    fit_range: FitRange,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    metadata: serde_json::Value,
}

#[allow(clippy::too_many_arguments)]
fn sandpile(
    g: &Global,
    dims: &[usize],
    sides: &[usize],
    burn_in: Option<u64>,
    drives: u64,
    out: &Option<PathBuf>,
    emit_distribution: &Option<PathBuf>,
    metadata: &Option<PathBuf>,
) -> anyhow::Result<u8> {
    if sides.len() != 1 && sides.len() != dims.len() {
        bail!("--side takes one value or one per --dim");
    }
    let opts = fit_options(g, Method::Logbin)?;
    let configs: Vec<SandpileConfig> = dims
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let mut c = SandpileConfig::new(d, sides[i.min(sides.len() - 1)], drives, g.seed);
            if let Some(b) = burn_in {
                c.burn_in_drives = b;
            }
            c
        })
        .collect();
    let sweep = configs.len() > 1;
    let target = |base: &Option<PathBuf>, c: &SandpileConfig, ext: &str| -> Option<PathBuf> {
        base.as_ref().map(|p| {
            if sweep {
                p.join(format!(
                    "sandpile_d{}_L{}.{ext}",
                    c.dimension, c.side_length
                ))
            } else {
                p.clone()
            }
        })
    };
    for dir in [out, emit_distribution, metadata]
        .into_iter()
        .flatten()
        .filter(|_| sweep)
    {
        fs::create_dir_all(dir)?;
    }

    let mut summaries = Vec::new();
    let mut failures = 0;
    for (config, result) in configs.iter().zip(run_sweep(&configs)) {
        let sim: Simulation = match result {
            Ok(sim) => sim,
            Err(e) => {
                failures += 1;
                summaries.push(SandpileSummary {
                    dimension: config.dimension,
                    side_length: config.side_length,
                    recorded_drives: config.recorded_drives,
                    zero_fraction: None,
                    alpha: None,
                    r_squared: None,
                    fit_range: opts.range,
                    error: Some(e.to_string()),
                    metadata: serde_json::Value::Null,
                });
                continue;
            }
        };
        if let Some(path) = target(out, config, "txt") {
            sim.log.write_to(io::BufWriter::new(File::create(path)?))?;
        }
        if let Some(path) = target(metadata, config, "json") {
            let mut text = serde_json::to_string_pretty(&sim.metadata)?;
            text.push('\n');
            fs::write(path, text)?;
        }
        let mut summary = SandpileSummary {
            dimension: config.dimension,
            side_length: config.side_length,
            recorded_drives: config.recorded_drives,
            zero_fraction: None,
            alpha: None,
            r_squared: None,
            fit_range: opts.range,
            error: None,
            metadata: serde_json::to_value(&sim.metadata)?,
        };
        match avalanche_distribution(&sim.log) {
            Ok(av) => {
                summary.zero_fraction = Some(av.zero_fraction);
                if let Some(path) = target(emit_distribution, config, "csv") {
                    write_pmf_csv(&av.distribution, File::create(path)?)?;
                }
                match fit_powerlaw(&av.distribution, opts.range, opts.bins_per_decade) {
                    Ok(fit) => {
                        summary.alpha = Some(fit.alpha);
                        summary.r_squared = Some(fit.r_squared);
                    }
                    Err(e) => summary.error = Some(e.to_string()),
                }
            }
            Err(e) => summary.error = Some(e.to_string()),
        }
        if summary.error.is_some() {
            failures += 1;
        }
        summaries.push(summary);
    }

    if g.format == Format::Csv {
        let mut w = csv::Writer::from_writer(io::stdout().lock());
        w.write_record([
            "dimension",
            "side_length",
            "recorded_drives",
            "zero_fraction",
            "alpha",
            "r_squared",
            "error",
        ])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for s in &summaries {
            w.write_record([
                s.dimension.to_string(),
                s.side_length.to_string(),
                s.recorded_drives.to_string(),
                opt(s.zero_fraction),
                opt(s.alpha),
                opt(s.r_squared),
                s.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
    } else {
        let assumptions = json!({ "fit": opts, "seed": g.seed });
        let provenance = Provenance::new(assumptions, BTreeMap::new());
        let mut text = serde_json::to_string_pretty(
            &json!({ "simulations": summaries, "provenance": provenance }),
        )?;
        text.push('\n');
        io::stdout().lock().write_all(text.as_bytes())?;
    }
    Ok(exit_code(summaries.len() - failures, failures))
}

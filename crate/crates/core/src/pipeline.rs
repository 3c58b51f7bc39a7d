//! Run-level orchestration: load runs, fit and classify each one, project
//! across model sizes, and collect everything into a report bundle with
//! provenance.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::{
    classify, region_plot_data, IntelligenceLevel, RegionPlot, AUTONOMOUS_BOUNDARY,
    CAPABLE_BOUNDARY,
};
use crate::distributions::{EmpiricalDistribution, DEFAULT_BINS_PER_DECADE};
use crate::error::{Error, Result};
use crate::powerlaw::{fit_powerlaw, fit_powerlaw_mle, FitMethod, FitRange, PowerLawFit};
use crate::records::{ingest_records, FailureRecord, RecordFormat, Rejection, RunManifest};
use crate::scale_invariance::{check_distribution_invariance, InvarianceReport};
use crate::scaling::{
    fit_scaling_line, project, HardwareAssumptions, ScalingLine, ScalingPoint, ScalingProjection,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub range: FitRange,
    pub bins_per_decade: u32,
    pub method: FitMethod,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            range: FitRange::default(),
            bins_per_decade: DEFAULT_BINS_PER_DECADE,
            method: FitMethod::LogBinLeastSquares,
        }
    }
}

impl FitOptions {
    pub fn fit(&self, dist: &EmpiricalDistribution) -> Result<PowerLawFit> {
        match self.method {
            FitMethod::LogBinLeastSquares => fit_powerlaw(dist, self.range, self.bins_per_decade),
            FitMethod::MleDiscrete => fit_powerlaw_mle(dist, self.range, self.bins_per_decade),
        }
    }
}

/// A run loaded from disk, before any fitting.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub manifest: RunManifest,
    pub records: Vec<FailureRecord>,
    pub rejects: Vec<Rejection>,
    pub source: String,
    pub digest: String,
}

/// Where to find a run: a record file and an optional manifest. Without an
/// explicit manifest, `<stem>.manifest.json` next to the records is used if
/// present, otherwise the run id is the file stem.
#[derive(Debug, Clone)]
pub struct RunSource {
    pub records: PathBuf,
    pub manifest: Option<PathBuf>,
}

impl RunSource {
    pub fn new(records: impl Into<PathBuf>) -> Self {
        RunSource {
            records: records.into(),
            manifest: None,
        }
    }

    fn stem(&self) -> String {
        let name = self
            .records
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        name.split('.').next().unwrap_or_default().to_string()
    }

    pub fn manifest_path(&self) -> Option<PathBuf> {
        if let Some(m) = &self.manifest {
            return Some(m.clone());
        }
        let sibling = self
            .records
            .with_file_name(format!("{}.manifest.json", self.stem()));
        sibling.exists().then_some(sibling)
    }

    /// Display name used for error entries before the manifest is known.
    pub fn label(&self) -> String {
        self.stem()
    }

    pub fn load(&self) -> Result<LoadedRun> {
        let bytes = fs::read(&self.records)?;
        let digest = sha256_hex(&bytes);
        let ingested = ingest_records(bytes.as_slice(), RecordFormat::from_path(&self.records))?;
        let manifest = match self.manifest_path() {
            Some(path) => RunManifest::from_path(&path)?,
            None => RunManifest::new(self.stem()),
        };
        manifest.validate()?;
        if ingested.records.is_empty() {
            return Err(Error::EmptyRun(manifest.run_id));
        }
        Ok(LoadedRun {
            manifest,
            records: ingested.records,
            rejects: ingested.rejects,
            source: self.records.display().to_string(),
            digest,
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub run_id: String,
    pub alpha: f64,
    /// log10 of the fitted prefactor.
    pub log_c: f64,
    pub r_squared: f64,
    pub level: IntelligenceLevel,
    pub boundaries: [f64; 2],
    pub alpha_std_err: f64,
    pub x_min: u64,
    pub x_max: u64,
    pub points_used: usize,
    pub method: FitMethod,
    /// Bins are weighted equally in the regression.
    pub bin_weighting: &'static str,
    pub zero_fraction: f64,
    pub records: usize,
    pub rejected: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub param_count: Option<u64>,
}

/// A classified run together with what is needed to plot it.
#[derive(Debug, Clone)]
pub struct ClassifiedRun {
    pub report: ClassificationReport,
    pub fit: PowerLawFit,
    pub distribution: EmpiricalDistribution,
    pub plot: RegionPlot,
}

pub fn classify_run(run: &LoadedRun, opts: &FitOptions) -> Result<ClassifiedRun> {
    let distribution = EmpiricalDistribution::from_records(&run.records)?;
    let fit = opts.fit(&distribution)?;
    let level = classify(&fit)?;
    let plot = region_plot_data(&distribution, &fit, opts.bins_per_decade)?;
    let report = ClassificationReport {
        run_id: run.manifest.run_id.clone(),
        alpha: fit.alpha,
        log_c: fit.log_c,
        r_squared: fit.r_squared,
        level,
        boundaries: [CAPABLE_BOUNDARY, AUTONOMOUS_BOUNDARY],
        alpha_std_err: fit.alpha_std_err,
        x_min: fit.range.x_min,
        x_max: fit.range.x_max,
        points_used: fit.points_used,
        method: fit.method,
        bin_weighting: "unweighted",
        zero_fraction: distribution.zero_mass(),
        records: run.records.len(),
        rejected: run.rejects.len(),
        param_count: run.manifest.param_count,
    };
    Ok(ClassifiedRun {
        report,
        fit,
        distribution,
        plot,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunError {
    pub run_id: String,
    pub error: String,
}

/// Outcome for a set of runs: successes and failures, each sorted by run id.
#[derive(Debug, Clone, Default)]
pub struct Classified {
    pub runs: Vec<ClassifiedRun>,
    pub errors: Vec<RunError>,
    pub inputs: BTreeMap<String, String>,
}

/// Loads and classifies runs in parallel. A failing run becomes an error
/// entry and does not affect the others.
pub fn classify_sources(sources: &[RunSource], opts: &FitOptions) -> Classified {
    let results: Vec<(String, Result<(LoadedRun, ClassifiedRun)>)> = sources
        .par_iter()
        .map(|src| {
            let res = src.load().and_then(|run| {
                let c = classify_run(&run, opts)?;
                Ok((run, c))
            });
            (src.label(), res)
        })
        .collect();

    let mut out = Classified::default();
    let mut seen = std::collections::BTreeSet::new();
    for (label, res) in results {
        match res {
            Ok((run, c)) => {
                if !seen.insert(c.report.run_id.clone()) {
                    out.errors.push(RunError {
                        run_id: c.report.run_id.clone(),
                        error: Error::DuplicateRun(c.report.run_id.clone()).to_string(),
                    });
                    continue;
                }
                out.inputs.insert(run.source.clone(), run.digest.clone());
                out.runs.push(c);
            }
            Err(e) => out.errors.push(RunError {
                run_id: label,
                error: e.to_string(),
            }),
        }
    }
    out.runs
        .sort_by(|a, b| a.report.run_id.cmp(&b.report.run_id));
    out.errors
        .sort_by(|a, b| a.run_id.cmp(&b.run_id).then(a.error.cmp(&b.error)));
    out
}

/// Projection section of a report. A flat or falling scaling line is
/// reported as not extrapolable rather than failing the bundle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionReport {
    pub points: Vec<ScalingPoint>,
    pub extrapolable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<ScalingLine>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projection: Option<ScalingProjection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn projection_report(
    mut points: Vec<ScalingPoint>,
    target_alpha: f64,
    hw: &HardwareAssumptions,
) -> Result<ProjectionReport> {
    points.sort_by(|a, b| {
        a.param_count
            .cmp(&b.param_count)
            .then(a.run_id.cmp(&b.run_id))
    });
    let line = fit_scaling_line(&points)?;
    match project(&points, target_alpha, hw) {
        Ok(projection) => Ok(ProjectionReport {
            points,
            extrapolable: true,
            line: Some(line),
            projection: Some(projection),
            error: None,
        }),
        Err(e @ Error::NonExtrapolable { .. }) => Ok(ProjectionReport {
            points,
            extrapolable: false,
            line: Some(line),
            projection: None,
            error: Some(e.to_string()),
        }),
        Err(e) => Err(e),
    }
}

/// Reads scaling points from CSV with columns `run_id,param_count,alpha`.
pub fn read_scaling_points(path: &Path) -> Result<Vec<ScalingPoint>> {
    #[derive(Deserialize)]
    struct Row {
        run_id: String,
        param_count: u64,
        alpha: f64,
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    reader
        .deserialize::<Row>()
        .map(|row| {
            let row = row?;
            ScalingPoint::new(row.run_id, row.param_count, row.alpha)
        })
        .collect()
}

/// Scaling points from classified runs that carry a parameter count.
pub fn scaling_points(runs: &[ClassifiedRun]) -> Vec<ScalingPoint> {
    runs.iter()
        .filter_map(|r| {
            let params = r.report.param_count?;
            ScalingPoint::new(r.report.run_id.clone(), params, r.report.alpha).ok()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool_version: &'static str,
    /// SHA-256 of the canonical JSON of `assumptions`.
    pub config_hash: String,
    /// SHA-256 of every input file, keyed by path as given.
    pub inputs: BTreeMap<String, String>,
    pub assumptions: serde_json::Value,
}

impl Provenance {
    pub fn new(assumptions: serde_json::Value, inputs: BTreeMap<String, String>) -> Self {
        let canonical = serde_json::to_vec(&assumptions).expect("json value serializes");
        Provenance {
            tool_version: TOOL_VERSION,
            config_hash: sha256_hex(&canonical),
            inputs,
            assumptions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceEntry {
    pub run_id: String,
    #[serde(flatten)]
    pub report: InvarianceReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportBundle {
    pub classifications: Vec<ClassificationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projection: Option<ProjectionReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub scale_invariance: Vec<InvarianceEntry>,
    pub errors: Vec<RunError>,
    pub provenance: Provenance,
}

impl ReportBundle {
    /// 0 when everything succeeded, 2 on partial failure, 1 when nothing did.
    pub fn exit_code(&self) -> i32 {
        let successes = self.classifications.len() + usize::from(self.projection.is_some());
        match (successes, self.errors.len()) {
            (_, 0) => 0,
            (0, _) => 1,
            _ => 2,
        }
    }
}

/// Options that shape every number in a bundle, recorded as provenance.
pub fn assumptions_json(
    opts: &FitOptions,
    projection: Option<(f64, &HardwareAssumptions)>,
    extra: &[(&str, serde_json::Value)],
) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    map.insert(
        "fit".into(),
        serde_json::to_value(opts).expect("options serialize"),
    );
    if let Some((target, hw)) = projection {
        map.insert("target_alpha".into(), target.into());
        map.insert(
            "hardware".into(),
            serde_json::to_value(hw).expect("assumptions serialize"),
        );
    }
    for (k, v) in extra {
        map.insert((*k).into(), v.clone());
    }
    serde_json::Value::Object(map)
}

/// Scale-invariance check for every classified run.
pub fn invariance_for_runs(
    runs: &[ClassifiedRun],
    k: u64,
    opts: &FitOptions,
) -> (Vec<InvarianceEntry>, Vec<RunError>) {
    let mut entries = Vec::new();
    let mut errors = Vec::new();
    for run in runs {
        match check_distribution_invariance(&run.distribution, k, opts.range, opts.bins_per_decade)
        {
            Ok(report) => entries.push(InvarianceEntry {
                run_id: run.report.run_id.clone(),
                report,
            }),
            Err(e) => errors.push(RunError {
                run_id: run.report.run_id.clone(),
                error: format!("scale invariance (k = {k}): {e}"),
            }),
        }
    }
    (entries, errors)
}

//! Experiment orchestration: configuration, Monte Carlo versus analytic
//! suites, reports and result files.
//!
//! Reports are deterministic for a fixed (config, seed): every random draw
//! comes from a substream indexed by sample number and all reductions run
//! over ordered vectors.

pub mod checks;
mod config;

pub use config::*;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const REPORT_SCHEMA: &str = "skewprod.report/1";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PassIf {
    Below,
    Above,
}

/// One statistic compared against its threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub name: String,
    pub metric: String,
    pub value: f64,
    pub threshold: f64,
    pub pass_if: PassIf,
    pub passed: bool,
    /// Perturbed variant that passes only when the underlying check fails.
    pub negative_control: bool,
}

impl TestOutcome {
    pub fn below(name: impl Into<String>, metric: &str, value: f64, threshold: f64) -> Self {
        TestOutcome {
            name: name.into(),
            metric: metric.into(),
            value,
            threshold,
            pass_if: PassIf::Below,
            passed: value < threshold,
            negative_control: false,
        }
    }

    pub fn above(name: impl Into<String>, metric: &str, value: f64, threshold: f64) -> Self {
        TestOutcome {
            name: name.into(),
            metric: metric.into(),
            value,
            threshold,
            pass_if: PassIf::Above,
            passed: value > threshold,
            negative_control: false,
        }
    }

    pub fn control(mut self) -> Self {
        self.negative_control = true;
        self
    }

    /// A check that could not be evaluated.
    pub fn failed(name: impl Into<String>, err: &Error) -> Self {
        TestOutcome {
            name: name.into(),
            metric: format!("error: {err}"),
            value: f64::NAN,
            threshold: f64::NAN,
            pass_if: PassIf::Below,
            passed: false,
            negative_control: false,
        }
    }
}

/// One histogram bin: densities per unit length over [bin_lo, bin_hi].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinRow {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub empirical: f64,
    pub analytic: f64,
    pub zscore: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub schema: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub sample_count: usize,
    pub tests: Vec<TestOutcome>,
    pub bins: Vec<BinRow>,
    /// Kept in memory only; result files stay byte-identical across reruns.
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

impl TestReport {
    pub fn new(config: ExperimentConfig) -> Self {
        TestReport {
            schema: REPORT_SCHEMA.into(),
            version: VERSION.into(),
            config,
            sample_count: 0,
            tests: Vec::new(),
            bins: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }

    pub fn passed(&self) -> bool {
        self.tests.iter().all(|t| t.passed)
    }

    pub fn failures(&self) -> Vec<&TestOutcome> {
        self.tests.iter().filter(|t| !t.passed).collect()
    }
}

/// Runs the experiment named by `config.kind`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<TestReport> {
    config.validate()?;
    let start = Instant::now();
    let mut report = match config.kind {
        ExperimentKind::SpectrumVsJpdf => run_spectrum_experiment(config)?,
        ExperimentKind::SphericalIdentity => run_spherical_suite(config)?,
        ExperimentKind::Corank2 => run_corank2_suite(config)?,
        ExperimentKind::KernelConsistency => run_kernel_suite(config)?,
        ExperimentKind::GammaIdentity => run_gamma_identity_suite(config)?,
        ExperimentKind::MellinClosedForms => run_mellin_suite(config)?,
    };
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Product spectra against the analytic one-point marginal.
pub fn run_spectrum_experiment(config: &ExperimentConfig) -> Result<TestReport> {
    let spec = config.product.clone().ok_or_else(|| Error::Config("spectrum experiment needs a [product] section".into()))?;
    let mut report = TestReport::new(config.clone());
    let out = checks::spectrum_checks(&spec, config.nsamples, config.bins, config.seed, config.marginal, &config.thresholds)?;
    report.sample_count = config.nsamples;
    report.tests = out.tests;
    report.bins = out.bins;
    Ok(report)
}

pub fn run_spherical_suite(config: &ExperimentConfig) -> Result<TestReport> {
    let (c, th, seed, ns) = (&config.spherical, &config.thresholds, config.seed, config.nsamples);
    let mut report = TestReport::new(config.clone());
    report.tests.push(checks::phi_named_value());
    report.tests.extend(checks::phi_closed_vs_mc(&c.phi_points, ns, seed, th));
    report.tests.extend(checks::phi_limit_checks(&c.limit_n, ns, seed, th));
    report.tests.extend(checks::factorization_checks(&c.factorization_s, ns, seed, th));
    report.tests.extend(checks::transform_factorization_checks(th));
    report.tests.extend(checks::harish_chandra_checks(ns, seed, th));
    report.tests.extend(checks::recursion_checks(&c.recursion_points, th));
    report.sample_count = ns;
    Ok(report)
}

pub fn run_corank2_suite(config: &ExperimentConfig) -> Result<TestReport> {
    let mut report = TestReport::new(config.clone());
    let out = checks::corank2_checks(&config.corank2.a, config.nsamples, config.bins, config.seed, &config.thresholds)?;
    report.sample_count = config.nsamples;
    report.tests = out.tests;
    report.bins = out.bins;
    Ok(report)
}

pub fn run_kernel_suite(config: &ExperimentConfig) -> Result<TestReport> {
    let mut report = TestReport::new(config.clone());
    report.tests = checks::kernel_checks(&config.kernel.contour, &config.thresholds);
    Ok(report)
}

pub fn run_mellin_suite(config: &ExperimentConfig) -> Result<TestReport> {
    let mut report = TestReport::new(config.clone());
    report.tests = checks::mellin_checks(&config.mellin, &config.thresholds);
    Ok(report)
}

pub fn run_gamma_identity_suite(config: &ExperimentConfig) -> Result<TestReport> {
    let c = &config.gamma_identity;
    let th = &config.thresholds;
    let sgrid = c.sgrid();
    let mut report = TestReport::new(config.clone());
    for p in &c.grid {
        report.tests.extend(checks::gamma_identity(p.nu, p.mu, p.n, &sgrid, c.exponent_shift, th));
    }
    if let Some(j) = &c.montecarlo {
        let out = checks::beta_product_montecarlo(j, c.comparator.as_ref(), config.nsamples, config.bins, config.seed, th)?;
        report.tests.extend(out.tests);
        report.bins = out.bins;
        report.sample_count = config.nsamples;
    }
    Ok(report)
}

/// Gamma-identity check at one parameter point with default thresholds.
pub fn run_prop45_check(nu: f64, mu: f64, nparam: usize, sgrid: &[num_complex::Complex64]) -> Result<TestReport> {
    let mut config = ExperimentConfig::preset(ExperimentKind::GammaIdentity, 0);
    config.gamma_identity.grid = vec![GammaIdentityPoint { nu, mu, n: nparam }];
    config.gamma_identity.montecarlo = None;
    let mut report = TestReport::new(config.clone());
    report.tests = checks::gamma_identity(nu, mu, nparam, sgrid, 0.0, &config.thresholds);
    if let Some(t) = report.tests.iter().find(|t| t.metric.starts_with("error")) {
        return Err(Error::Domain(format!("{}: {}", t.name, t.metric)));
    }
    Ok(report)
}

/// Output file flavour for the per-bin and per-test tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Jsonlines,
}

#[derive(Serialize)]
struct Summary<'a> {
    schema: &'a str,
    version: &'a str,
    kind: ExperimentKind,
    seed: u64,
    sample_count: usize,
    passed: bool,
    tests: &'a [TestOutcome],
    config: &'a ExperimentConfig,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io { path: path.display().to_string(), message: e.to_string() }
}

const BIN_HEADER: [&str; 5] = ["bin_lo", "bin_hi", "empirical", "analytic", "zscore"];
const TEST_HEADER: [&str; 7] = ["name", "metric", "value", "threshold", "pass_if", "passed", "negative_control"];

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut s = String::new();
    for r in rows {
        s.push_str(&serde_json::to_string(r).map_err(|e| io_err(path, e))?);
        s.push('\n');
    }
    fs::write(path, s).map_err(|e| io_err(path, e))
}

/// Writes `<stem>.bins.<ext>`, `<stem>.tests.<ext>` and `<stem>.summary.json`
/// into `dir`; returns the paths written.
pub fn emit_results(report: &TestReport, dir: &Path, stem: &str, format: OutputFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let ext = match format {
        OutputFormat::Csv => "csv",
        OutputFormat::Jsonlines => "jsonl",
    };
    let bins = dir.join(format!("{stem}.bins.{ext}"));
    let tests = dir.join(format!("{stem}.tests.{ext}"));
    match format {
        OutputFormat::Csv => {
            write_csv(&bins, &BIN_HEADER, &report.bins)?;
            write_csv(&tests, &TEST_HEADER, &report.tests)?;
        }
        OutputFormat::Jsonlines => {
            write_jsonl(&bins, &report.bins)?;
            write_jsonl(&tests, &report.tests)?;
        }
    }
    let summary = dir.join(format!("{stem}.summary.json"));
    let s = Summary {
        schema: REPORT_SCHEMA,
        version: VERSION,
        kind: report.config.kind,
        seed: report.config.seed,
        sample_count: report.sample_count,
        passed: report.passed(),
        tests: &report.tests,
        config: &report.config,
    };
    let mut text = serde_json::to_string_pretty(&s).map_err(|e| io_err(&summary, e))?;
    text.push('\n');
    fs::write(&summary, text).map_err(|e| io_err(&summary, e))?;
    Ok(vec![bins, tests, summary])
}

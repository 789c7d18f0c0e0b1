use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use skewprod::ensembles::{product_ensemble, PolynomialEnsembleSpec};
use skewprod::harness::{emit_results, run_experiment, ExperimentConfig, ExperimentKind, OutputFormat, TestReport, VERSION};
use skewprod::kernels::{correlation_rk, gram_biorth, kernel_batch};
use skewprod::linalg::{GeneralLinearMatrix, Matrix};
use skewprod::quad::QuadOptions;
use skewprod::rng::derive_seed;
use skewprod::samplers::{sample_spectra, ProductSpec};
use skewprod::spherical::{fn_closed, phi_closed, phi_montecarlo, psi_montecarlo, SphericalParameter};
use skewprod::{Error, Result, SingularSpectrum};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const TABLE_SCHEMA: &str = "skewprod.table/1";
const DEFAULT_SEED: u64 = 20261015;

#[derive(Parser)]
#[command(name = "skewprod", version, about = "Products g·x·gᵀ of random real matrices with antisymmetric matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample product spectra (singular values a_1 ≤ … ≤ a_n per row).
    Sample(Common),
    /// Tabulate the analytic one-point density of the configured product.
    Jpdf {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// Upper end of the grid; defaults to the support end or the sample maximum.
        #[arg(long)]
        ymax: Option<f64>,
    },
    /// Tabulate K_n(y', y) and R_2(y', y) of the configured product.
    Kernel {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 40)]
        points: usize,
        #[arg(long)]
        ymax: Option<f64>,
    },
    /// Evaluate Φ(s; a) and f_n(s; a); Monte Carlo estimates with --samples.
    Spherical {
        /// Comma-separated s_1, …, s_n.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        s: Vec<f64>,
        /// Comma-separated singular values a_1, …, a_n.
        #[arg(long, value_delimiter = ',', required = true)]
        a: Vec<f64>,
        /// Row-major 2n×2n matrix g for a Monte Carlo Ψ(s; g).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        g: Option<Vec<f64>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "jsonlines")]
        format: Format,
    },
    /// Run a verification suite; exit code 0 iff every test passes.
    Verify {
        /// spectrum, spherical, corank2, kernel, gamma, mellin or all.
        suite: Option<String>,
        #[command(flatten)]
        common: Common,
        /// Print the resolved configuration as TOML and exit.
        #[arg(long)]
        print_config: bool,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration (schema "skewprod.config/1").
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Jsonlines,
}

impl Format {
    fn output(self) -> OutputFormat {
        match self {
            Format::Csv => OutputFormat::Csv,
            Format::Jsonlines => OutputFormat::Jsonlines,
        }
    }

    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonlines => "jsonl",
        }
    }
}

impl Common {
    fn load(&self, kind: ExperimentKind) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::preset(kind, DEFAULT_SEED),
        };
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(n) = self.samples {
            c.nsamples = n;
        }
        c.validate()?;
        Ok(c)
    }

    fn product(&self) -> Result<(ExperimentConfig, ProductSpec)> {
        let c = self.load(ExperimentKind::SpectrumVsJpdf)?;
        let p = c.product.clone().ok_or_else(|| Error::Config("configuration has no [product] section".into()))?;
        Ok((c, p))
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io { path: path.display().to_string(), message: e.to_string() }
}

#[derive(Serialize)]
struct TableSummary<'a> {
    schema: &'a str,
    version: &'a str,
    command: &'a str,
    columns: &'a [String],
    rows: usize,
    config: &'a ExperimentConfig,
}

/// Writes `<dir>/<stem>.<ext>` with one row per entry plus a summary file.
fn write_table(dir: &Path, stem: &str, format: Format, columns: &[String], rows: &[Vec<f64>], config: &ExperimentConfig) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(format!("{stem}.{}", format.ext()));
    let mut text = String::new();
    match format {
        Format::Csv => {
            text.push_str(&columns.join(","));
            text.push('\n');
            for r in rows {
                let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
                text.push_str(&cells.join(","));
                text.push('\n');
            }
        }
        Format::Jsonlines => {
            for r in rows {
                let obj: serde_json::Map<String, serde_json::Value> =
                    columns.iter().cloned().zip(r.iter().map(|v| serde_json::json!(v))).collect();
                text.push_str(&serde_json::Value::Object(obj).to_string());
                text.push('\n');
            }
        }
    }
    fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    let summary = dir.join(format!("{stem}.summary.json"));
    let s = TableSummary { schema: TABLE_SCHEMA, version: VERSION, command: stem, columns, rows: rows.len(), config };
    let mut text = serde_json::to_string_pretty(&s).map_err(|e| io_err(&summary, e))?;
    text.push('\n');
    fs::write(&summary, text).map_err(|e| io_err(&summary, e))?;
    Ok(path)
}

fn cmd_sample(common: &Common) -> Result<bool> {
    let (c, p) = common.product()?;
    let spectra = sample_spectra(&p, c.nsamples, derive_seed(c.seed, "spectrum"))?;
    let mut columns = vec!["sample".to_string()];
    columns.extend((1..=p.n).map(|j| format!("a{j}")));
    let rows: Vec<Vec<f64>> =
        spectra.iter().enumerate().map(|(i, s)| std::iter::once(i as f64).chain(s.values().iter().copied()).collect()).collect();
    let path = write_table(&common.out, "samples", common.format, &columns, &rows, &c)?;
    eprintln!("wrote {} spectra to {}", rows.len(), path.display());
    Ok(true)
}

/// Grid upper end: the support end, or the largest of 2000 sampled values.
fn grid_end(p: &ProductSpec, ens: &PolynomialEnsembleSpec, seed: u64, ymax: Option<f64>) -> Result<f64> {
    if let Some(y) = ymax {
        if !(y > 0.0 && y.is_finite()) {
            return Err(Error::Config(format!("ymax must be positive, got {y}")));
        }
        return Ok(y);
    }
    let (hi, _) = ens.support();
    if hi.is_finite() {
        return Ok(hi);
    }
    let s = sample_spectra(p, 2000, derive_seed(seed, "grid"))?;
    Ok(s.iter().map(|x| x.values()[x.values().len() - 1]).fold(0.0, f64::max))
}

fn grid(hi: f64, points: usize) -> Vec<f64> {
    (1..=points).map(|k| hi * (k as f64 - 0.5) / points as f64).collect()
}

fn cmd_jpdf(common: &Common, points: usize, ymax: Option<f64>) -> Result<bool> {
    let (c, p) = common.product()?;
    let ens = product_ensemble(&p)?;
    let hi = grid_end(&p, &ens, c.seed, ymax)?;
    let ys = grid(hi, points.max(2));
    let n = p.n;
    let values: Vec<f64> = if n == 1 {
        ys.iter().map(|&y| ens.density(&[y])).collect::<Result<_>>()?
    } else if n <= 3 {
        ys.iter().map(|&y| ens.marginal_quadrature(y, QuadOptions::rel(1e-9).with_abs(1e-14))).collect::<Result<_>>()?
    } else {
        let sys = gram_biorth(&ens)?;
        let pairs: Vec<(f64, f64)> = ys.iter().map(|&y| (y, y)).collect();
        kernel_batch(&pairs, |a, b| sys.kernel(a, b))?.into_iter().map(|k| k / n as f64).collect()
    };
    let rows: Vec<Vec<f64>> = ys.iter().zip(&values).map(|(y, v)| vec![*y, *v]).collect();
    let path = write_table(&common.out, "jpdf", common.format, &["y".into(), "density".into()], &rows, &c)?;
    eprintln!("wrote {} grid points to {}", rows.len(), path.display());
    Ok(true)
}

fn cmd_kernel(common: &Common, points: usize, ymax: Option<f64>) -> Result<bool> {
    let (c, p) = common.product()?;
    let ens = product_ensemble(&p)?;
    let sys = gram_biorth(&ens)?;
    let hi = grid_end(&p, &ens, c.seed, ymax)?;
    let ys = grid(hi, points.max(2));
    let pairs: Vec<(f64, f64)> = ys.iter().flat_map(|&a| ys.iter().map(move |&b| (a, b))).collect();
    let k = kernel_batch(&pairs, |a, b| sys.kernel(a, b))?;
    let r2 = kernel_batch(&pairs, |a, b| correlation_rk(&[a, b], |x, y| sys.kernel(x, y)))?;
    let rows: Vec<Vec<f64>> = pairs.iter().zip(k.iter().zip(&r2)).map(|((a, b), (k, r))| vec![*a, *b, *k, *r]).collect();
    let columns: Vec<String> = ["y_prime", "y", "kernel", "r2"].iter().map(|s| s.to_string()).collect();
    let path = write_table(&common.out, "kernel", common.format, &columns, &rows, &c)?;
    eprintln!("wrote {} kernel values to {}", rows.len(), path.display());
    Ok(true)
}

#[derive(Serialize)]
struct SphericalRow {
    quantity: String,
    re: f64,
    im: f64,
    stderr: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_spherical(
    s: &[f64],
    a: &[f64],
    g: Option<&[f64]>,
    seed: Option<u64>,
    samples: Option<usize>,
    out: Option<&Path>,
    format: Format,
) -> Result<bool> {
    let sp = SphericalParameter::real(s)?;
    let av = SingularSpectrum::new(a.to_vec())?;
    if sp.n() != av.n() {
        return Err(Error::Config(format!("s has {} entries but a has {}", sp.n(), av.n())));
    }
    let seed = seed.unwrap_or(DEFAULT_SEED);
    let mut rows = Vec::new();
    let phi = phi_closed(&sp, &av)?;
    rows.push(SphericalRow { quantity: "phi".into(), re: phi.re, im: phi.im, stderr: None });
    let f = fn_closed(&sp, &av)?;
    rows.push(SphericalRow { quantity: "fn".into(), re: f.re, im: f.im, stderr: None });
    if let Some(ns) = samples {
        let mc = phi_montecarlo(&sp, &av, ns, derive_seed(seed, "phi"))?;
        rows.push(SphericalRow { quantity: "phi_mc".into(), re: mc.value.re, im: mc.value.im, stderr: Some(mc.stderr) });
    }
    if let Some(g) = g {
        let d = 2 * sp.n();
        if g.len() != d * d {
            return Err(Error::Config(format!("g needs {} entries for a {d}×{d} matrix, got {}", d * d, g.len())));
        }
        let gm = GeneralLinearMatrix::new(Matrix::from_row_slice(d, d, g))?;
        let mc = psi_montecarlo(&sp, &gm, samples.unwrap_or(100_000), derive_seed(seed, "psi"))?;
        rows.push(SphericalRow { quantity: "psi_mc".into(), re: mc.value.re, im: mc.value.im, stderr: Some(mc.stderr) });
    }
    let mut text = String::new();
    match format {
        Format::Csv => {
            text.push_str("quantity,re,im,stderr\n");
            for r in &rows {
                let se = r.stderr.map(|v| v.to_string()).unwrap_or_default();
                text.push_str(&format!("{},{},{},{}\n", r.quantity, r.re, r.im, se));
            }
        }
        Format::Jsonlines => {
            for r in &rows {
                text.push_str(&serde_json::to_string(r).map_err(|e| Error::Config(e.to_string()))?);
                text.push('\n');
            }
        }
    }
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            let path = dir.join(format!("spherical.{}", format.ext()));
            fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        }
        None => {
            std::io::stdout().write_all(text.as_bytes()).map_err(|e| io_err(Path::new("stdout"), e))?;
        }
    }
    Ok(true)
}

fn print_report(r: &TestReport) {
    for t in &r.tests {
        let tag = if t.passed { "ok  " } else { "FAIL" };
        let ctl = if t.negative_control { " (negative control)" } else { "" };
        println!("  {tag} {}{ctl}: {} = {:e} (threshold {:e})", t.name, t.metric, t.value, t.threshold);
    }
    println!(
        "{}: {} ({}/{} passed, {:.1}s)",
        r.config.kind.name(),
        if r.passed() { "PASS" } else { "FAIL" },
        r.tests.iter().filter(|t| t.passed).count(),
        r.tests.len(),
        r.wall_clock_seconds
    );
}

fn cmd_verify(suite: Option<&str>, common: &Common, print_config: bool) -> Result<bool> {
    let kinds = match (suite, &common.config) {
        (Some("all"), None) | (None, None) => ExperimentKind::ALL.to_vec(),
        (Some("all"), Some(_)) => return Err(Error::Config("--config runs a single suite; drop 'all'".into())),
        (Some(s), _) => vec![ExperimentKind::parse(s)?],
        (None, Some(_)) => Vec::new(),
    };
    let configs: Vec<ExperimentConfig> = if common.config.is_some() {
        let c = common.load(ExperimentKind::SpectrumVsJpdf)?;
        if let Some(k) = kinds.first() {
            if *k != c.kind {
                return Err(Error::Config(format!("suite '{}' does not match config kind '{}'", k.name(), c.kind.name())));
            }
        }
        vec![c]
    } else {
        kinds.into_iter().map(|k| common.load(k)).collect::<Result<_>>()?
    };
    if print_config {
        for c in &configs {
            println!("{}", c.to_toml()?);
        }
        return Ok(true);
    }
    let mut all = true;
    for c in &configs {
        let r = run_experiment(c)?;
        print_report(&r);
        let paths = emit_results(&r, &common.out, c.kind.name(), common.format.output())?;
        for p in paths {
            eprintln!("wrote {}", p.display());
        }
        all &= r.passed();
    }
    Ok(all)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sample(c) => cmd_sample(c),
        Command::Jpdf { common, points, ymax } => cmd_jpdf(common, *points, *ymax),
        Command::Kernel { common, points, ymax } => cmd_kernel(common, *points, *ymax),
        Command::Spherical { s, a, g, seed, samples, out, format } => {
            cmd_spherical(s, a, g.as_deref(), *seed, *samples, out.as_deref(), *format)
        }
        Command::Verify { suite, common, print_config } => cmd_verify(suite.as_deref(), common, *print_config),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("skewprod: {e}");
            ExitCode::from(2)
        }
    }
}

use crate::error::{Error, Result};
use crate::kernels::ContourSpec;
use crate::linalg::SingularSpectrum;
use crate::samplers::{BaseSpec, FactorSpec, GinibreSpec, JacobiSpec, ProductSpec};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CONFIG_SCHEMA: &str = "skewprod.config/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SpectrumVsJpdf,
    SphericalIdentity,
    Corank2,
    KernelConsistency,
    #[serde(rename = "prop45-identity")]
    GammaIdentity,
    MellinClosedForms,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::SpectrumVsJpdf,
        ExperimentKind::SphericalIdentity,
        ExperimentKind::Corank2,
        ExperimentKind::KernelConsistency,
        ExperimentKind::GammaIdentity,
        ExperimentKind::MellinClosedForms,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::SpectrumVsJpdf => "spectrum-vs-jpdf",
            ExperimentKind::SphericalIdentity => "spherical-identity",
            ExperimentKind::Corank2 => "corank2",
            ExperimentKind::KernelConsistency => "kernel-consistency",
            ExperimentKind::GammaIdentity => "prop45-identity",
            ExperimentKind::MellinClosedForms => "mellin-closed-forms",
        }
    }

    /// Accepts the kind names and the short suite names spectrum,
    /// spherical, kernel, gamma (alias prop45), mellin.
    pub fn parse(s: &str) -> Result<Self> {
        let k = match s {
            "spectrum" | "spectrum-vs-jpdf" => ExperimentKind::SpectrumVsJpdf,
            "spherical" | "spherical-identity" => ExperimentKind::SphericalIdentity,
            "corank2" => ExperimentKind::Corank2,
            "kernel" | "kernel-consistency" => ExperimentKind::KernelConsistency,
            "prop45" | "gamma" | "prop45-identity" => ExperimentKind::GammaIdentity,
            "mellin" | "mellin-closed-forms" => ExperimentKind::MellinClosedForms,
            _ => return Err(Error::Config(format!("unknown experiment kind '{s}'"))),
        };
        Ok(k)
    }
}

/// How the analytic one-point marginal is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarginalMethod {
    /// Integrate the joint density over n−1 variables (n ≤ 3).
    #[default]
    Quadrature,
    /// R₁/n from the kernel of the ensemble.
    Kernel,
}

/// Pass/fail thresholds; defaults follow the acceptance settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// KS distance; unset means 0.01 for a single value per sample and
    /// 0.015 otherwise.
    pub ks: Option<f64>,
    pub chi2_pvalue: f64,
    pub zscore: f64,
    pub identity: f64,
    pub negative_control: f64,
    pub recursion_rel: f64,
    pub normalization: f64,
    pub corank2_normalization: f64,
    pub closed_form: f64,
    pub cdf_mass: f64,
    pub limit_rel: f64,
    pub gram: f64,
    pub trace: f64,
    pub kernel_agreement: f64,
    pub marginal_sup: f64,
    pub diagonal: f64,
    pub mellin_rel: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            ks: None,
            chi2_pvalue: 1e-3,
            zscore: 3.0,
            identity: 1e-10,
            negative_control: 1e-2,
            recursion_rel: 1e-6,
            normalization: 1e-6,
            corank2_normalization: 1e-10,
            closed_form: 1e-12,
            cdf_mass: 1e-4,
            limit_rel: 5e-3,
            gram: 1e-8,
            trace: 1e-6,
            kernel_agreement: 1e-7,
            marginal_sup: 1e-5,
            diagonal: 1e-10,
            mellin_rel: 1e-8,
        }
    }
}

impl Thresholds {
    pub fn ks_for(&self, values_per_sample: usize) -> f64 {
        self.ks.unwrap_or(if values_per_sample == 1 { 0.01 } else { 0.015 })
    }

    fn validate(&self) -> Result<()> {
        let named = [
            ("ks", self.ks.unwrap_or(1.0)),
            ("chi2_pvalue", self.chi2_pvalue),
            ("zscore", self.zscore),
            ("identity", self.identity),
            ("negative_control", self.negative_control),
            ("recursion_rel", self.recursion_rel),
            ("normalization", self.normalization),
            ("corank2_normalization", self.corank2_normalization),
            ("closed_form", self.closed_form),
            ("cdf_mass", self.cdf_mass),
            ("limit_rel", self.limit_rel),
            ("gram", self.gram),
            ("trace", self.trace),
            ("kernel_agreement", self.kernel_agreement),
            ("marginal_sup", self.marginal_sup),
            ("diagonal", self.diagonal),
            ("mellin_rel", self.mellin_rel),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("threshold {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// A spherical parameter s with singular values a.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpherePoint {
    pub s: Vec<f64>,
    pub a: Vec<f64>,
}

impl SpherePoint {
    pub fn new(s: &[f64], a: &[f64]) -> Self {
        SpherePoint { s: s.to_vec(), a: a.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SphericalSuiteConfig {
    pub phi_points: Vec<SpherePoint>,
    pub limit_n: Vec<usize>,
    pub factorization_s: Vec<Vec<f64>>,
    pub recursion_points: Vec<SpherePoint>,
}

impl Default for SphericalSuiteConfig {
    fn default() -> Self {
        SphericalSuiteConfig {
            phi_points: vec![
                SpherePoint::new(&[2.0, 0.0], &[1.0, 2.0]),
                SpherePoint::new(&[5.0, 1.0], &[0.5, 1.5]),
                SpherePoint::new(&[3.5, 0.0], &[1.0, 1.2]),
                SpherePoint::new(&[4.0, 0.5], &[0.7, 2.0]),
                SpherePoint::new(&[6.0, 3.0, 0.5], &[0.4, 1.0, 2.0]),
            ],
            limit_n: vec![1, 2, 3, 4],
            factorization_s: vec![vec![2.0, 0.0], vec![5.0, 1.0]],
            recursion_points: vec![
                SpherePoint::new(&[5.0, 1.0], &[0.5, 1.5]),
                SpherePoint::new(&[3.5, 0.0], &[1.0, 1.2]),
                SpherePoint::new(&[2.0, 0.0], &[1.0, 2.0]),
                SpherePoint::new(&[6.0, 3.0, 0.5], &[0.4, 1.0, 2.0]),
                SpherePoint::new(&[7.0, 2.5, 0.0], &[0.6, 0.9, 1.7]),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Corank2Config {
    pub a: Vec<f64>,
}

impl Default for Corank2Config {
    fn default() -> Self {
        Corank2Config { a: vec![1.0, 2.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSuiteConfig {
    pub contour: ContourSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MellinSuiteConfig {
    pub nu: Vec<f64>,
    pub mu: Vec<f64>,
    pub jacobi_n: Vec<usize>,
    pub jmax: usize,
    pub convolution_s: Vec<f64>,
}

impl Default for MellinSuiteConfig {
    fn default() -> Self {
        MellinSuiteConfig {
            nu: vec![0.0, 0.5, 1.0],
            mu: vec![0.0, 0.5, 1.0],
            jacobi_n: vec![1, 2],
            jmax: 3,
            convolution_s: vec![1.0, 2.5, 4.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaIdentityPoint {
    pub nu: f64,
    pub mu: f64,
    pub n: usize,
}

/// Beta(α, β) factors whose product is the squared singular value on the
/// complex side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaProductComparator {
    pub alpha1: f64,
    pub beta1: f64,
    pub alpha2: f64,
    pub beta2: f64,
}

impl BetaProductComparator {
    /// Beta(ν+½, μ+n+½) · Beta(ν+1, μ+n+½).
    pub fn from_parameters(nu: f64, mu: f64, n: usize) -> Self {
        let b = mu + n as f64 + 0.5;
        BetaProductComparator { alpha1: nu + 0.5, beta1: b, alpha2: nu + 1.0, beta2: b }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GammaIdentityConfig {
    pub grid: Vec<GammaIdentityPoint>,
    pub s_re_min: f64,
    pub s_re_max: f64,
    pub s_points: usize,
    pub s_im: f64,
    /// Added to the exponent 2n+1 of the real-side Gamma; 0 is the identity.
    pub exponent_shift: f64,
    /// Real Jacobi sampler for the n = 1 distributional comparison.
    pub montecarlo: Option<JacobiSpec>,
    /// Overrides the Beta factors derived from the sampler parameters.
    pub comparator: Option<BetaProductComparator>,
}

impl Default for GammaIdentityConfig {
    fn default() -> Self {
        let mut grid = Vec::new();
        for nu in [0.0, 0.5, 1.0] {
            for mu in [0.0, 0.5, 1.0] {
                for n in [1, 2, 3] {
                    grid.push(GammaIdentityPoint { nu, mu, n });
                }
            }
        }
        GammaIdentityConfig {
            grid,
            s_re_min: 1.0,
            s_re_max: 5.0,
            s_points: 20,
            s_im: 0.0,
            exponent_shift: 0.0,
            montecarlo: Some(JacobiSpec { n: 1, big_n: 1, k1: 5 }),
            comparator: None,
        }
    }
}

impl GammaIdentityConfig {
    pub fn sgrid(&self) -> Vec<Complex64> {
        let m = self.s_points.max(2);
        (0..m)
            .map(|k| {
                let t = k as f64 / (m - 1) as f64;
                Complex64::new(self.s_re_min + t * (self.s_re_max - self.s_re_min), self.s_im)
            })
            .collect()
    }
}

/// Full description of one run; serialized into every result summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: String,
    pub kind: ExperimentKind,
    pub seed: u64,
    #[serde(default = "default_nsamples")]
    pub nsamples: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default)]
    pub product: Option<ProductSpec>,
    #[serde(default)]
    pub marginal: MarginalMethod,
    #[serde(default)]
    pub spherical: SphericalSuiteConfig,
    #[serde(default)]
    pub corank2: Corank2Config,
    #[serde(default)]
    pub kernel: KernelSuiteConfig,
    #[serde(default)]
    pub gamma_identity: GammaIdentityConfig,
    #[serde(default)]
    pub mellin: MellinSuiteConfig,
    #[serde(default)]
    pub thresholds: Thresholds,
}

fn default_nsamples() -> usize {
    100_000
}

fn default_bins() -> usize {
    50
}

impl ExperimentConfig {
    /// Default configuration of a suite.
    pub fn preset(kind: ExperimentKind, seed: u64) -> Self {
        let product = match kind {
            ExperimentKind::SpectrumVsJpdf => Some(ProductSpec {
                n: 2,
                factors: vec![FactorSpec::Ginibre(GinibreSpec { n: 2, nu: 0.0 })],
                base: BaseSpec::FixedMatrix { a: SingularSpectrum::new(vec![1.0, 2.0]).expect("valid spectrum") },
            }),
            _ => None,
        };
        let nsamples = match kind {
            ExperimentKind::SphericalIdentity => 1_000_000,
            _ => default_nsamples(),
        };
        ExperimentConfig {
            schema: CONFIG_SCHEMA.into(),
            kind,
            seed,
            nsamples,
            bins: default_bins(),
            product,
            marginal: MarginalMethod::default(),
            spherical: SphericalSuiteConfig::default(),
            corank2: Corank2Config::default(),
            kernel: KernelSuiteConfig::default(),
            gamma_identity: GammaIdentityConfig::default(),
            mellin: MellinSuiteConfig::default(),
            thresholds: Thresholds::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != CONFIG_SCHEMA {
            return Err(Error::Config(format!("unsupported schema '{}', expected '{CONFIG_SCHEMA}'", self.schema)));
        }
        if self.nsamples < 2 {
            return Err(Error::Config("nsamples must be at least 2".into()));
        }
        if self.bins < 2 {
            return Err(Error::Config("bins must be at least 2".into()));
        }
        self.thresholds.validate()?;
        if let Some(p) = &self.product {
            p.validate()?;
        }
        self.kernel.contour.validate()?;
        if self.kind == ExperimentKind::SpectrumVsJpdf && self.product.is_none() {
            return Err(Error::Config("spectrum-vs-jpdf needs a [product] section".into()));
        }
        let p = &self.gamma_identity;
        if !(p.s_re_max > p.s_re_min) || p.s_points < 2 {
            return Err(Error::Config("gamma_identity s-grid needs s_re_max > s_re_min and at least 2 points".into()));
        }
        Ok(())
    }
}

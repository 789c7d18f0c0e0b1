//! Densities on ℝ₊, Mellin transforms and Mellin convolutions, and the
//! catalogue of determinant-modulus densities 𝒜σ of the factor ensembles.

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::linalg::{lu_det_real, Matrix};
use crate::quad::{try_integrate, QuadOptions};
use crate::rng::{substream, RandomStream};
use crate::samplers::FactorSpec;
use crate::special::{ln_beta, ln_gamma};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// A real function on ℝ₊ with optional analytic extras.
pub trait RadialDensity: Send + Sync {
    fn eval(&self, a: f64) -> Result<f64>;
    /// Closed support interval (lo, hi); hi may be ∞.
    fn support(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
    fn exact_mellin(&self, _s: Complex64) -> Option<Complex64> {
        None
    }
    /// Taylor expansion of the analytic continuation along a jet.
    fn eval_jet(&self, _a: &Jet) -> Option<Jet> {
        None
    }
    fn label(&self) -> String;
}

/// Shared handle to a weight function w on ℝ₊.
#[derive(Clone)]
pub struct WeightFunction {
    inner: Arc<dyn RadialDensity>,
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WeightFunction({})", self.label())
    }
}

impl WeightFunction {
    pub fn new<D: RadialDensity + 'static>(d: D) -> Self {
        WeightFunction { inner: Arc::new(d) }
    }

    pub fn eval(&self, a: f64) -> Result<f64> {
        let (lo, hi) = self.support();
        if a < lo || a > hi || a <= 0.0 || !a.is_finite() || (hi.is_finite() && a == hi) {
            return Ok(0.0);
        }
        self.inner.eval(a)
    }

    pub fn support(&self) -> (f64, f64) {
        self.inner.support()
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.inner.breakpoints()
    }

    pub fn label(&self) -> String {
        self.inner.label()
    }

    pub fn has_exact_mellin(&self) -> bool {
        self.inner.exact_mellin(Complex64::from(1.0)).is_some()
    }

    /// Exact Mellin transform when available, quadrature otherwise.
    pub fn mellin(&self, s: Complex64) -> Result<Complex64> {
        match self.inner.exact_mellin(s) {
            Some(v) => Ok(v),
            None => mellin_numeric(self, s),
        }
    }

    pub fn eval_jet(&self, a: &Jet) -> Option<Jet> {
        self.inner.eval_jet(a)
    }

    /// Value of the analytic continuation at complex z.
    pub fn eval_complex(&self, z: Complex64) -> Option<Complex64> {
        self.inner.eval_jet(&Jet::constant(z, 0)).map(|j| j.c[0])
    }

    /// (1/c)·w(a/c).
    pub fn scaled(&self, c: f64) -> WeightFunction {
        WeightFunction::new(Scaled { inner: self.clone(), c })
    }

    /// Mellin convolution self ⊛ other.
    pub fn convolve(&self, other: &WeightFunction) -> WeightFunction {
        WeightFunction::new(Convolution { f: self.clone(), h: other.clone() })
    }

    /// (−a∂_a)^k w.
    pub fn log_derivative(&self, k: usize) -> WeightFunction {
        if k == 0 {
            return self.clone();
        }
        WeightFunction::new(LogDerivative { inner: self.clone(), k })
    }

    /// Geometric-grid cache with cubic interpolation in ln a, covering
    /// [lo, hi] with `per_decade` nodes per decade.
    pub fn cached(&self, lo: f64, hi: f64, per_decade: usize) -> Result<WeightFunction> {
        Ok(WeightFunction::new(Tabulated::build(self.clone(), lo, hi, per_decade)?))
    }
}

/// c·a^p·e^{−a} on (0, ∞).
#[derive(Debug, Clone, Copy)]
pub struct PowerExp {
    pub p: f64,
    pub log_norm: f64,
}

impl RadialDensity for PowerExp {
    fn eval(&self, a: f64) -> Result<f64> {
        Ok((self.log_norm + self.p * a.ln() - a).exp())
    }
    fn exact_mellin(&self, s: Complex64) -> Option<Complex64> {
        Some((ln_gamma(s + self.p) + self.log_norm).exp())
    }
    fn eval_jet(&self, a: &Jet) -> Option<Jet> {
        let l = a.ln().scale(Complex64::from(self.p));
        Some((&l - a).add_scalar(Complex64::from(self.log_norm)).exp())
    }
    fn label(&self) -> String {
        format!("a^{}·e^-a", self.p)
    }
}

/// c·a^p·(1−a)^q on (0, 1).
#[derive(Debug, Clone, Copy)]
pub struct PowerBeta {
    pub p: f64,
    pub q: f64,
    pub log_norm: f64,
}

impl RadialDensity for PowerBeta {
    fn eval(&self, a: f64) -> Result<f64> {
        if a >= 1.0 {
            return Ok(0.0);
        }
        Ok((self.log_norm + self.p * a.ln() + self.q * (-a).ln_1p()).exp())
    }
    fn support(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
    fn exact_mellin(&self, s: Complex64) -> Option<Complex64> {
        Some((ln_beta(s + self.p, Complex64::from(self.q + 1.0)) + self.log_norm).exp())
    }
    fn eval_jet(&self, a: &Jet) -> Option<Jet> {
        let one_minus = (-a).add_scalar(Complex64::from(1.0));
        let l = &a.ln().scale(Complex64::from(self.p)) + &one_minus.ln().scale(Complex64::from(self.q));
        Some(l.add_scalar(Complex64::from(self.log_norm)).exp())
    }
    fn label(&self) -> String {
        format!("a^{}·(1-a)^{}", self.p, self.q)
    }
}

/// Closure-backed density with optional exact Mellin transform.
pub struct FnDensity<F: Fn(f64) -> f64 + Send + Sync> {
    pub f: F,
    pub support: (f64, f64),
    pub breakpoints: Vec<f64>,
    pub label: String,
}

impl<F: Fn(f64) -> f64 + Send + Sync> RadialDensity for FnDensity<F> {
    fn eval(&self, a: f64) -> Result<f64> {
        Ok((self.f)(a))
    }
    fn support(&self) -> (f64, f64) {
        self.support
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }
    fn label(&self) -> String {
        self.label.clone()
    }
}

struct Scaled {
    inner: WeightFunction,
    c: f64,
}

impl RadialDensity for Scaled {
    fn eval(&self, a: f64) -> Result<f64> {
        Ok(self.inner.eval(a / self.c)? / self.c)
    }
    fn support(&self) -> (f64, f64) {
        let (lo, hi) = self.inner.support();
        (lo * self.c, hi * self.c)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.inner.breakpoints().iter().map(|b| b * self.c).collect()
    }
    fn exact_mellin(&self, s: Complex64) -> Option<Complex64> {
        self.inner.inner.exact_mellin(s).map(|m| m * ((s - 1.0) * self.c.ln()).exp())
    }
    fn eval_jet(&self, a: &Jet) -> Option<Jet> {
        let c = Complex64::from(self.c);
        self.inner.eval_jet(&a.scale(c.inv())).map(|j| j.scale(c.inv()))
    }
    fn label(&self) -> String {
        format!("({})[a/{}]/{}", self.inner.label(), self.c, self.c)
    }
}

struct Combination {
    terms: Vec<(f64, WeightFunction)>,
}

impl RadialDensity for Combination {
    fn eval(&self, a: f64) -> Result<f64> {
        let mut s = 0.0;
        for (c, w) in &self.terms {
            if *c != 0.0 {
                s += c * w.eval(a)?;
            }
        }
        Ok(s)
    }
    fn support(&self) -> (f64, f64) {
        self.terms.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), (_, w)| {
            let (l, h) = w.support();
            (lo.min(l), hi.max(h))
        })
    }
    fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.terms.iter().flat_map(|(_, w)| {
            let mut v = w.breakpoints();
            let hi = w.support().1;
            if hi.is_finite() {
                v.push(hi);
            }
            v
        })
        .collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }
    fn exact_mellin(&self, s: Complex64) -> Option<Complex64> {
        let mut acc = Complex64::from(0.0);
        for (c, w) in &self.terms {
            acc += w.inner.exact_mellin(s)? * *c;
        }
        Some(acc)
    }
    fn eval_jet(&self, a: &Jet) -> Option<Jet> {
        let mut acc = Jet::constant(Complex64::from(0.0), a.order());
        for (c, w) in &self.terms {
            acc = &acc + &w.eval_jet(a)?.scale(Complex64::from(*c));
        }
        Some(acc)
    }
    fn label(&self) -> String {
        let parts: Vec<String> = self.terms.iter().map(|(c, w)| format!("{c}·{}", w.label())).collect();
        parts.join(" + ")
    }
}

impl WeightFunction {
    /// Σ c_k w_k.
    pub fn combination(terms: Vec<(f64, WeightFunction)>) -> WeightFunction {
        WeightFunction::new(Combination { terms })
    }
}

struct Convolution {
    f: WeightFunction,
    h: WeightFunction,
}

impl RadialDensity for Convolution {
    fn eval(&self, a: f64) -> Result<f64> {
        mellin_convolve(&self.f, &self.h, a)
    }
    fn support(&self) -> (f64, f64) {
        let (a, b) = self.f.support();
        let (c, d) = self.h.support();
        (a * c, b * d)
    }
    fn exact_mellin(&self, s: Complex64) -> Option<Complex64> {
        Some(self.f.inner.exact_mellin(s)? * self.h.inner.exact_mellin(s)?)
    }
    fn label(&self) -> String {
        format!("({})⊛({})", self.f.label(), self.h.label())
    }
}

struct LogDerivative {
    inner: WeightFunction,
    k: usize,
}

impl LogDerivative {
    /// Taylor coefficients of (−1)^k g^{(k)}(t0 + τ) in τ, g(t) = w(e^t).
    fn taylor_in_log(&self, a0: Complex64, order: usize) -> Option<Vec<Complex64>> {
        let t = Jet::variable(a0.ln(), self.k + order);
        let g = self.inner.eval_jet(&t.exp())?;
        let sign = if self.k % 2 == 0 { 1.0 } else { -1.0 };
        let mut out = Vec::with_capacity(order + 1);
        for i in 0..=order {
            // d^k/dτ^k of Σ g_j τ^j at order i: g_{k+i}·(k+i)!/i!
            let mut f = 1.0;
            for m in (i + 1)..=(i + self.k) {
                f *= m as f64;
            }
            out.push(g.c[self.k + i] * f * sign);
        }
        Some(out)
    }
}

impl RadialDensity for LogDerivative {
    fn eval(&self, a: f64) -> Result<f64> {
        let c = self
            .taylor_in_log(Complex64::from(a), 0)
            .ok_or(Error::Smoothness { needed: self.k, available: 0 })?;
        Ok(c[0].re)
    }
    fn support(&self) -> (f64, f64) {
        self.inner.support()
    }
    fn exact_mellin(&self, s: Complex64) -> Option<Complex64> {
        // ℳ[(−a∂)f](s) = s·ℳf(s)
        Some(self.inner.inner.exact_mellin(s)? * s.powi(self.k as i32))
    }
    fn eval_jet(&self, a: &Jet) -> Option<Jet> {
        let a0 = a.value();
        let c = self.taylor_in_log(a0, a.order())?;
        let tau = a.ln().add_scalar(-a0.ln());
        let mut r = Jet::constant(Complex64::from(0.0), a.order());
        for k in (0..c.len()).rev() {
            r = &r * &tau;
            r.c[0] += c[k];
        }
        Some(r)
    }
    fn label(&self) -> String {
        format!("(-a∂)^{}[{}]", self.k, self.inner.label())
    }
}

struct Tabulated {
    inner: WeightFunction,
    u0: f64,
    du: f64,
    values: Vec<f64>,
}

impl Tabulated {
    fn build(inner: WeightFunction, lo: f64, hi: f64, per_decade: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::Domain(format!("cache range must satisfy 0 < lo < hi, got [{lo}, {hi}]")));
        }
        let du = std::f64::consts::LN_10 / per_decade as f64;
        let u0 = lo.ln() - 2.0 * du;
        let count = ((hi.ln() - lo.ln()) / du).ceil() as usize + 5;
        let values: Result<Vec<f64>> = (0..count).into_par_iter().map(|i| inner.eval((u0 + i as f64 * du).exp())).collect();
        Ok(Tabulated { inner, u0, du, values: values? })
    }
}

impl RadialDensity for Tabulated {
    fn eval(&self, a: f64) -> Result<f64> {
        let x = (a.ln() - self.u0) / self.du;
        let i = x.floor() as isize - 1;
        if i < 0 || (i + 3) as usize >= self.values.len() {
            return self.inner.eval(a);
        }
        let i = i as usize;
        let t = x - (i as f64 + 1.0);
        // 4-point Lagrange on nodes -1, 0, 1, 2
        let v = &self.values[i..i + 4];
        let l0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let l1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let l2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let l3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        Ok(l0 * v[0] + l1 * v[1] + l2 * v[2] + l3 * v[3])
    }
    fn support(&self) -> (f64, f64) {
        self.inner.support()
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.inner.breakpoints()
    }
    fn exact_mellin(&self, s: Complex64) -> Option<Complex64> {
        self.inner.inner.exact_mellin(s)
    }
    fn label(&self) -> String {
        format!("cached[{}]", self.inner.label())
    }
}

fn quad_opts() -> QuadOptions {
    QuadOptions { abs_tol: 1e-300, rel_tol: 1e-11, max_intervals: 4000 }
}

/// ℳf(s) = ∫₀^∞ f(a) a^{s−1} da, integrated in t = ln a.
pub fn mellin_numeric(f: &WeightFunction, s: Complex64) -> Result<Complex64> {
    let (lo, hi) = f.support();
    let tlo = if lo > 0.0 { lo.ln() } else { f64::NEG_INFINITY };
    let thi = if hi.is_finite() { hi.ln() } else { f64::INFINITY };
    let mut breaks: Vec<f64> = f.breakpoints().iter().filter(|b| **b > 0.0).map(|b| b.ln()).collect();
    breaks.push(0.0);
    try_integrate(
        |t: f64| {
            let a = t.exp();
            let v = f.eval(a)?;
            if v == 0.0 {
                return Ok(Complex64::from(0.0));
            }
            Ok((s * t).exp() * v)
        },
        tlo,
        thi,
        &breaks,
        QuadOptions { rel_tol: 1e-12, ..quad_opts() },
    )
}

/// (f⊛h)(y) = ∫₀^∞ (dt/t) f(t) h(y/t).
pub fn mellin_convolve(f: &WeightFunction, h: &WeightFunction, y: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::Domain(format!("convolution needs y > 0, got {y}")));
    }
    let (flo, fhi) = f.support();
    let (hlo, hhi) = h.support();
    // t ∈ [flo, fhi] ∩ [y/hhi, y/hlo]
    let lo = flo.max(if hhi.is_finite() { y / hhi } else { 0.0 });
    let hi = fhi.min(if hlo > 0.0 { y / hlo } else { f64::INFINITY });
    if lo >= hi {
        return Ok(0.0);
    }
    let tlo = if lo > 0.0 { lo.ln() } else { f64::NEG_INFINITY };
    let thi = if hi.is_finite() { hi.ln() } else { f64::INFINITY };
    let mut breaks: Vec<f64> = f.breakpoints().iter().filter(|b| **b > 0.0).map(|b| b.ln()).collect();
    breaks.extend(h.breakpoints().iter().filter(|b| **b > 0.0).map(|b| (y / b).ln()));
    // features sit near t ≈ 1 (f) and t ≈ y (h)
    breaks.extend([0.0, y.ln(), 0.5 * y.ln()]);
    breaks.retain(|b| *b > tlo && *b < thi);
    try_integrate(
        |tau: f64| {
            let t = tau.exp();
            let a = f.eval(t)?;
            if a == 0.0 {
                return Ok(0.0);
            }
            Ok(a * h.eval(y / t)?)
        },
        tlo,
        thi,
        &breaks,
        quad_opts(),
    )
}

/// Which factor ensemble a weight describes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WeightKind {
    Ginibre { nu: f64 },
    Jacobi { nu: f64, mu: f64, n: usize },
    Custom { label: String },
}

/// Determinant-modulus density 𝒜σ of a factor ensemble, normalized so that
/// ℳ∘𝒜σ(1) = 1.
#[derive(Debug, Clone)]
pub struct FactorizingWeight {
    pub kind: WeightKind,
    pub density: WeightFunction,
    /// Number of available derivatives (usize::MAX for analytic kinds).
    pub smoothness: usize,
}

impl FactorizingWeight {
    pub fn eval(&self, a: f64) -> Result<f64> {
        self.density.eval(a)
    }

    pub fn mellin(&self, s: Complex64) -> Result<Complex64> {
        self.density.mellin(s)
    }

    /// ℳ∘𝒜σ at real s.
    pub fn mellin_real(&self, s: f64) -> Result<f64> {
        Ok(self.mellin(Complex64::from(s))?.re)
    }

    pub fn support(&self) -> (f64, f64) {
        self.density.support()
    }

    pub fn ginibre(nu: f64) -> Result<Self> {
        a_sigma(&WeightKind::Ginibre { nu })
    }

    pub fn jacobi(nu: f64, mu: f64, n: usize) -> Result<Self> {
        a_sigma(&WeightKind::Jacobi { nu, mu, n })
    }

    pub fn from_factor(spec: &FactorSpec) -> Result<Self> {
        match spec {
            FactorSpec::Ginibre(g) => Self::ginibre(g.nu),
            FactorSpec::Jacobi(j) => Self::jacobi(j.nu(), j.mu(), j.n),
        }
    }

    /// ln ∏_{j=1}^{n} ℳ∘𝒜σ(2j−1).
    pub fn log_mellin_odd_product(&self, n: usize) -> Result<f64> {
        let mut s = 0.0;
        for j in 1..=n {
            let m = self.mellin_real(2.0 * j as f64 - 1.0)?;
            if !(m > 0.0) {
                return Err(Error::Domain(format!("ℳ∘𝒜σ({}) = {m} is not positive", 2 * j - 1)));
            }
            s += m.ln();
        }
        Ok(s)
    }

    /// True when the analytic continuation has a branch point at w = 1
    /// (Jacobi with non-integer exponent on 1 − w).
    pub fn branch_at_one(&self) -> bool {
        match self.kind {
            WeightKind::Jacobi { mu, n, .. } => {
                let q = 2.0 * (mu + n as f64);
                (q - q.round()).abs() > 1e-14
            }
            _ => false,
        }
    }
}

/// Catalogue lookup of 𝒜σ with exact Mellin transform.
pub fn a_sigma(kind: &WeightKind) -> Result<FactorizingWeight> {
    match *kind {
        WeightKind::Ginibre { nu } => {
            if !(nu > -0.5) {
                return Err(Error::Domain(format!("Ginibre needs ν > −1/2, got {nu}")));
            }
            let p = 2.0 * nu;
            let log_norm = -ln_gamma(Complex64::from(p + 1.0)).re;
            Ok(FactorizingWeight {
                kind: kind.clone(),
                density: WeightFunction::new(PowerExp { p, log_norm }),
                smoothness: usize::MAX,
            })
        }
        WeightKind::Jacobi { nu, mu, n } => {
            if !(nu > -0.5) || !(mu > -(n as f64) - 0.5) || n == 0 {
                return Err(Error::Domain(format!("Jacobi needs ν > −1/2, μ > −n − 1/2, n ≥ 1; got ν={nu}, μ={mu}, n={n}")));
            }
            let p = 2.0 * nu;
            let q = 2.0 * (mu + n as f64);
            let log_norm = -ln_beta(Complex64::from(p + 1.0), Complex64::from(q + 1.0)).re;
            Ok(FactorizingWeight {
                kind: kind.clone(),
                density: WeightFunction::new(PowerBeta { p, q, log_norm }),
                smoothness: usize::MAX,
            })
        }
        WeightKind::Custom { .. } => Err(Error::Domain("custom weights come from a_sigma_custom".into())),
    }
}

/// Where the 2×2 matrices z for a custom factor come from.
#[derive(Clone)]
pub enum MatrixSource {
    /// Direct sampler of z.
    Sampler(Arc<dyn Fn(&mut RandomStream) -> Matrix + Send + Sync>),
    /// Unnormalized density h(z); importance-sampled from a standard
    /// Gaussian proposal with entry scale `scale`.
    Density { h: Arc<dyn Fn(&Matrix) -> f64 + Send + Sync>, scale: f64 },
}

/// Result of the Monte Carlo estimate of a custom 𝒜σ.
#[derive(Debug, Clone)]
pub struct CustomWeight {
    pub weight: FactorizingWeight,
    /// (a_i, w_i) with a_i = |det z_i| and importance weights w_i.
    pub samples: Arc<Vec<(f64, f64)>>,
    pub effective_sample_size: f64,
    pub warnings: Vec<String>,
}

struct Empirical {
    samples: Arc<Vec<(f64, f64)>>,
    total: f64,
    bandwidth: f64,
    /// log-grid KDE values: a·f(a) as a density in u = ln a
    grid_u0: f64,
    grid_du: f64,
    grid: Vec<f64>,
}

impl RadialDensity for Empirical {
    fn eval(&self, a: f64) -> Result<f64> {
        if self.bandwidth == 0.0 || self.grid.is_empty() {
            return Ok(0.0);
        }
        let x = (a.ln() - self.grid_u0) / self.grid_du;
        if x < 0.0 || x >= (self.grid.len() - 1) as f64 {
            return Ok(0.0);
        }
        let i = x.floor() as usize;
        let t = x - i as f64;
        Ok(((1.0 - t) * self.grid[i] + t * self.grid[i + 1]) / a)
    }
    fn exact_mellin(&self, s: Complex64) -> Option<Complex64> {
        let mut acc = Complex64::from(0.0);
        for &(a, w) in self.samples.iter() {
            acc += Complex64::from(a).powc(s - 1.0) * w;
        }
        Some(acc / self.total)
    }
    fn label(&self) -> String {
        format!("empirical[{} samples]", self.samples.len())
    }
}

/// Monte Carlo estimate of 𝒜h(a) = ∫dz h(z) δ(a − |det z|) for 2×2 z.
pub fn a_sigma_custom(source: &MatrixSource, nsamples: usize, seed: u64, label: &str) -> Result<CustomWeight> {
    if nsamples < 2 {
        return Err(Error::Domain("need at least two samples".into()));
    }
    let samples: Vec<(f64, f64)> = (0..nsamples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i);
            match source {
                MatrixSource::Sampler(f) => {
                    let z = f(&mut rng);
                    (det2(&z).abs(), 1.0)
                }
                MatrixSource::Density { h, scale } => {
                    let z = crate::samplers::sample_ginibre_rect(2, 2, &mut rng) * *scale;
                    let r2: f64 = z.iter().map(|v| v * v).sum::<f64>() / (scale * scale);
                    let q = (-0.5 * r2).exp();
                    (det2(&z).abs(), h(&z) / q)
                }
            }
        })
        .filter(|p| p.1 > 0.0 && p.0 > 0.0)
        .collect();
    if samples.is_empty() {
        return Err(Error::Domain("no sample carried positive weight".into()));
    }
    let total: f64 = samples.iter().map(|p| p.1).sum();
    let sumsq: f64 = samples.iter().map(|p| p.1 * p.1).sum();
    let ess = total * total / sumsq;
    // weighted moments of u = ln a
    let mu = samples.iter().map(|p| p.1 * p.0.ln()).sum::<f64>() / total;
    let var = samples.iter().map(|p| p.1 * (p.0.ln() - mu).powi(2)).sum::<f64>() / total;
    let sd = var.sqrt();
    let mut warnings = Vec::new();
    let (bandwidth, grid_u0, grid_du, grid) = if sd <= 1e-12 {
        (0.0, 0.0, 0.0, Vec::new())
    } else {
        let h = 1.06 * sd * ess.powf(-0.2);
        let mut us: Vec<(f64, f64)> = samples.iter().map(|p| (p.0.ln(), p.1)).collect();
        us.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (umin, umax) = (us[0].0 - 5.0 * h, us[us.len() - 1].0 + 5.0 * h);
        let decades = (umax - umin) / std::f64::consts::LN_10;
        if ess / decades.max(1.0) < 1e3 {
            warnings.push(format!(
                "effective sample size {ess:.0} over {decades:.1} decades is below 10³ per decade; density is under-resolved"
            ));
        }
        let m = 2048;
        let du = (umax - umin) / (m - 1) as f64;
        let norm = 1.0 / (total * h * (2.0 * std::f64::consts::PI).sqrt());
        let grid: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|k| {
                let u = umin + k as f64 * du;
                let lo = us.partition_point(|p| p.0 < u - 8.0 * h);
                let hi = us.partition_point(|p| p.0 <= u + 8.0 * h);
                us[lo..hi].iter().map(|p| p.1 * (-0.5 * ((u - p.0) / h).powi(2)).exp()).sum::<f64>() * norm
            })
            .collect();
        (h, umin, du, grid)
    };
    let samples = Arc::new(samples);
    let emp = Empirical { samples: samples.clone(), total, bandwidth, grid_u0, grid_du, grid };
    Ok(CustomWeight {
        weight: FactorizingWeight {
            kind: WeightKind::Custom { label: label.to_string() },
            density: WeightFunction::new(emp),
            smoothness: 0,
        },
        samples,
        effective_sample_size: ess,
        warnings,
    })
}

fn det2(z: &Matrix) -> f64 {
    if z.nrows() == 2 && z.ncols() == 2 {
        z[(0, 0)] * z[(1, 1)] - z[(0, 1)] * z[(1, 0)]
    } else {
        let (s, l) = lu_det_real(z);
        s * l.exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::from(x)
    }

    #[test]
    fn numeric_mellin_examples() {
        let e = WeightFunction::new(PowerExp { p: 0.0, log_norm: 0.0 });
        assert!((mellin_numeric(&e, c(4.0)).unwrap() - 6.0).norm() < 1e-10);
        let step = WeightFunction::new(PowerBeta { p: 0.0, q: 0.0, log_norm: 0.0 });
        assert!((mellin_numeric(&step, c(3.0)).unwrap() - 1.0 / 3.0).norm() < 1e-12);
        let b = WeightFunction::new(PowerBeta { p: 2.0, q: 2.0, log_norm: 0.0 });
        assert!((mellin_numeric(&b, c(1.0)).unwrap() - 1.0 / 30.0).norm() < 1e-12);
    }

    #[test]
    fn convolution_examples() {
        let step = WeightFunction::new(PowerBeta { p: 0.0, q: 0.0, log_norm: 0.0 });
        for y in [0.01, 0.3, 0.9] {
            let v = mellin_convolve(&step, &step, y).unwrap();
            assert!((v - (1.0 / y as f64).ln()).abs() < 1e-12, "{y}");
        }
        assert_eq!(mellin_convolve(&step, &step, 1.5).unwrap(), 0.0);
    }

    #[test]
    fn normalization_and_catalogue() {
        let g = FactorizingWeight::ginibre(0.7).unwrap();
        assert!((g.mellin_real(1.0).unwrap() - 1.0).abs() < 1e-13);
        let j = FactorizingWeight::jacobi(0.5, -0.25, 2).unwrap();
        assert!((j.mellin_real(1.0).unwrap() - 1.0).abs() < 1e-13);
        assert!(FactorizingWeight::ginibre(-0.6).is_err());
        assert!(FactorizingWeight::jacobi(0.0, -2.6, 2).is_err());
    }

    #[test]
    fn log_derivative_matches_finite_difference() {
        let w = FactorizingWeight::jacobi(0.5, 0.0, 1).unwrap().density;
        let d1 = w.log_derivative(1);
        let d2 = w.log_derivative(2);
        let a: f64 = 0.37;
        let h = 1e-5;
        let fd1 = -a * (w.eval(a + h).unwrap() - w.eval(a - h).unwrap()) / (2.0 * h);
        assert!((d1.eval(a).unwrap() - fd1).abs() < 1e-7);
        let fd2 = -a * (d1.eval(a + h).unwrap() - d1.eval(a - h).unwrap()) / (2.0 * h);
        assert!((d2.eval(a).unwrap() - fd2).abs() < 1e-6);
        // Mellin: s^k ℳ
        let s = c(2.5);
        let (ex, nu) = (d2.mellin(s).unwrap(), mellin_numeric(&d2, s).unwrap());
        assert!((ex - nu).norm() < 1e-9, "{ex} {nu}");
    }

    #[test]
    fn cache_is_close() {
        let w = FactorizingWeight::ginibre(0.0).unwrap().density;
        let conv = w.convolve(&w);
        let cached = conv.cached(1e-4, 50.0, 512).unwrap();
        for y in [1e-3, 0.1, 1.0, 7.3] {
            let a = conv.eval(y).unwrap();
            let b = cached.eval(y).unwrap();
            assert!((a - b).abs() < 1e-8 * a.abs().max(1e-3), "{y} {a} {b}");
        }
    }
}

//! Spherical functions Φ on o(2n) and Ψ on Gl(2n), the f_n induction
//! machinery, the Harish-Chandra integral over O(2n) and the isometry between
//! densities on o(2n) and singular-value densities.

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::linalg::{
    build_canonical, confluent_ratio, haar_orthogonal, singular_spectrum, AntisymmetricMatrix, AxisSpec,
    GeneralLinearMatrix, LogValue, Matrix, SingularSpectrum,
};
use crate::mellin::{FactorizingWeight, WeightFunction};
use crate::quad::{integrate_box, Axis, QuadOptions};
use crate::rng::{derive_seed, substream};
use crate::special::{ln_factorial, vandermonde_c};
use crate::stats::{mean_stderr, mean_stderr_complex, ratio_estimate, McEstimate};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Relative distance below which points of s or a² are treated as equal.
pub const CONFLUENT_TOL: f64 = 1e-8;

/// Spectral parameter s ∈ ℂⁿ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalParameter {
    s: Vec<Complex64>,
}

impl SphericalParameter {
    pub fn new(s: Vec<Complex64>) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::Dimension("empty spectral parameter".into()));
        }
        if s.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("non-finite spectral parameter".into()));
        }
        Ok(SphericalParameter { s })
    }

    pub fn real(s: &[f64]) -> Result<Self> {
        Self::new(s.iter().map(|&x| Complex64::from(x)).collect())
    }

    pub fn n(&self) -> usize {
        self.s.len()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.s
    }

    /// Re(s_j − s_{j+1}) ≥ 2 for all j < n.
    pub fn in_convergence_domain(&self) -> bool {
        self.s.windows(2).all(|w| (w[0] - w[1]).re >= 2.0 - 1e-12)
    }

    /// Pairwise relative gap above 1e−10.
    pub fn is_distinct(&self) -> bool {
        for i in 0..self.n() {
            for j in (i + 1)..self.n() {
                let scale = self.s[i].norm().max(self.s[j].norm()).max(1.0);
                if (self.s[i] - self.s[j]).norm() <= 1e-10 * scale {
                    return false;
                }
            }
        }
        true
    }

    /// e_j = (s_j − s_{j+1})/2 − 1 with s_{n+1} = −n−1.
    pub fn exponents(&self) -> Vec<Complex64> {
        let n = self.n();
        (0..n)
            .map(|j| {
                let next = if j + 1 < n { self.s[j + 1] } else { Complex64::from(-(n as f64) - 1.0) };
                (self.s[j] - next) * 0.5 - 1.0
            })
            .collect()
    }

    /// (3n−2j)_j, the point where Φ(s; ·) reduces to (∏a)^{2n−1}.
    pub fn trivial(n: usize) -> Self {
        SphericalParameter { s: (1..=n).map(|j| Complex64::from((3 * n - 2 * j) as f64)).collect() }
    }

    fn require_n(&self, n: usize) -> Result<()> {
        if self.n() != n {
            return Err(Error::Dimension(format!("s has {} entries, spectrum has {n}", self.n())));
        }
        Ok(())
    }
}

/// ln ∏_{j<n} 2ʲ j!.
pub fn log_prefactor(n: usize) -> f64 {
    (0..n).map(|j| j as f64 * std::f64::consts::LN_2 + ln_factorial(j)).sum()
}

/// det[a_c^{s_b+n−1}] / (Δ_n(a²) Δ_n(s)), confluent where points coincide.
fn power_ratio(s: &SphericalParameter, a: &[f64]) -> Result<LogValue> {
    let n = s.n();
    if a.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Domain("closed form needs strictly positive singular values".into()));
    }
    let u: Vec<Complex64> = a.iter().map(|&x| Complex64::from(x * x)).collect();
    let shift = n as f64 - 1.0;
    confluent_ratio(
        AxisSpec::vandermonde(s.values(), CONFLUENT_TOL),
        AxisSpec::vandermonde(&u, CONFLUENT_TOL),
        |sb, i, u0, m| {
            let x = Jet::variable(u0, m);
            let half_log = x.ln().scale(Complex64::from(0.5));
            let mut j = x.powc((sb + shift) * 0.5);
            let mut fact = 1.0;
            for k in 1..=i {
                j = &j * &half_log;
                fact *= k as f64;
            }
            j.scale(Complex64::from(1.0 / fact)).c
        },
    )
}

/// Φ(s; i a⊗τ₂) in closed form.
pub fn phi_closed(s: &SphericalParameter, a: &SingularSpectrum) -> Result<Complex64> {
    s.require_n(a.n())?;
    let r = power_ratio(s, a.values())?;
    Ok(r.scale_log(log_prefactor(s.n())).to_complex())
}

/// Φ(s; ·) at a = (1,…,1) through the confluent limit.
pub fn phi_normalization_limit(s: &SphericalParameter) -> Result<Complex64> {
    phi_closed(s, &SingularSpectrum::ones(s.n()))
}

/// ∏_{k<l} (s_k − s_l − 1).
fn shifted_product(s: &[Complex64]) -> Complex64 {
    let mut p = Complex64::from(1.0);
    for l in 0..s.len() {
        for k in 0..l {
            p *= s[k] - s[l] - 1.0;
        }
    }
    p
}

fn log_even_factorials(n: usize) -> f64 {
    (0..n).map(|j| ln_factorial(2 * j)).sum()
}

/// c_n(s) = ∏(2j)! / (Δ_n(s) ∏_{k<l}(s_k − s_l − 1)).
pub fn cn_constant(s: &SphericalParameter) -> Result<Complex64> {
    let d = vandermonde_c(s.values()) * shifted_product(s.values());
    if d.norm() == 0.0 {
        return Err(Error::Domain("c_n(s) has a pole at this s".into()));
    }
    Ok(log_even_factorials(s.n()).exp() / d)
}

/// f_n(s; i a⊗τ₂) = c_n(s) det[a_c^{s_b+n−1}] / Δ_n(a²).
pub fn fn_closed(s: &SphericalParameter, a: &SingularSpectrum) -> Result<Complex64> {
    s.require_n(a.n())?;
    let d = shifted_product(s.values());
    if d.norm() == 0.0 {
        return Err(Error::Domain("f_n has a pole at this s".into()));
    }
    let r = power_ratio(s, a.values())?;
    Ok(r.scale_log(log_even_factorials(s.n())).to_complex() / d)
}

/// f_n(s; 1) = ∏(2j)! / (∏2ʲj! ∏_{k<l}(s_k − s_l − 1)).
pub fn fn_unit_closed(s: &SphericalParameter) -> Result<Complex64> {
    let d = shifted_product(s.values());
    if d.norm() == 0.0 {
        return Err(Error::Domain("f_n has a pole at this s".into()));
    }
    Ok((log_even_factorials(s.n()) - log_prefactor(s.n())).exp() / d)
}

/// f_n by one step of the corank-2 recursion, with f_{n−1} in closed form.
pub fn fn_recurrence(s: &SphericalParameter, a: &SingularSpectrum, opts: QuadOptions) -> Result<Complex64> {
    let n = s.n();
    s.require_n(a.n())?;
    if n < 2 {
        return Err(Error::Dimension("recursion needs n ≥ 2".into()));
    }
    if !s.in_convergence_domain() {
        return Err(Error::ConvergenceDomain("recursion requires Re(s_j − s_{j+1}) ≥ 2".into()));
    }
    if a.is_degenerate() || a.values()[0] <= 0.0 {
        return Err(Error::Domain("recursion requires distinct positive singular values".into()));
    }
    let av = a.values().to_vec();
    let sn = s.values()[n - 1];
    let sp: Vec<Complex64> = s.values()[..n - 1].iter().map(|&x| x - sn - n as f64).collect();
    let cprev = cn_constant(&SphericalParameter::new(sp.clone())?)?;
    let log_det_a: f64 = av.iter().map(|x| x.ln()).sum();
    let (vsign, vlog) = crate::linalg::log_vandermonde_sq(&av);
    let log_pref = ln_factorial(2 * n - 2) - ln_factorial(n - 1) - vlog;
    let pref = Complex64::from(vsign) * (log_pref + (sn + n as f64 - 1.0) * log_det_a).exp() * cprev;

    let m = n - 1;
    let powers: Vec<Complex64> = sp.iter().map(|&x| x + m as f64 - 1.0).collect();
    let top = av[m];
    let breaks: Vec<f64> = av[..m].to_vec();
    let axes: Vec<Axis> = (0..m).map(|_| Axis::with_breaks(0.0, top, &breaks)).collect();
    let integrand = |t: &[f64]| -> Result<Complex64> {
        // det of the n×n matrix with a row of ones over rows (a_c − t_b)₊
        let theta = Matrix::from_fn(n, n, |r, c| if r == 0 { 1.0 } else { (av[c] - t[r - 1]).max(0.0) });
        let th = theta.determinant();
        if th == 0.0 {
            return Ok(Complex64::from(0.0));
        }
        let rows: Vec<Vec<Complex64>> = powers
            .iter()
            .map(|&p| t.iter().map(|&x| if x > 0.0 { (p * x.ln()).exp() } else { Complex64::from(0.0) }).collect())
            .collect();
        let d = crate::linalg::det_complex_scaled(rows).to_complex();
        Ok(d * th)
    };
    let v: Complex64 = integrate_box(&integrand, &axes, opts)?;
    Ok(pref * v)
}

/// x^e for x ≥ 0 with complex e.
fn cpow_nonneg(x: f64, e: Complex64) -> Result<Complex64> {
    if e == Complex64::from(0.0) {
        return Ok(Complex64::from(1.0));
    }
    let x = x.max(0.0);
    if x == 0.0 {
        if e.re > 0.0 {
            return Ok(Complex64::from(0.0));
        }
        return Err(Error::ConvergenceDomain("singular block with non-positive exponent".into()));
    }
    Ok((e * x.ln()).exp())
}

/// ∏_{j<n} det(Π_{2j} m Π_{2j}ᵀ)^{e_j} · last, where `last` is the j=n
/// factor (k-independent, passed exactly).
fn block_product(m: &Matrix, e: &[Complex64], last: Complex64) -> Result<Complex64> {
    let n = e.len();
    let mut p = last;
    for j in 1..n {
        if e[j - 1] == Complex64::from(0.0) {
            continue;
        }
        let d = m.view((0, 0), (2 * j, 2 * j)).clone_owned().determinant();
        p *= cpow_nonneg(d, e[j - 1])?;
    }
    Ok(p)
}

/// Φ(s; i a⊗τ₂) as the ratio of two Haar averages over the same sample set.
pub fn phi_montecarlo(s: &SphericalParameter, a: &SingularSpectrum, nsamples: usize, seed: u64) -> Result<McEstimate> {
    let n = s.n();
    s.require_n(a.n())?;
    if !s.in_convergence_domain() {
        return Err(Error::ConvergenceDomain("Monte Carlo needs Re(s_j − s_{j+1}) ≥ 2".into()));
    }
    if a.values().iter().any(|&x| x < 1e-8) && s.values()[n - 1].re < 0.0 {
        return Err(Error::ConvergenceDomain("near-singular x needs Re s_n ≥ 0".into()));
    }
    if nsamples < 2 {
        return Err(Error::Domain("need at least two samples".into()));
    }
    let e = s.exponents();
    let x = build_canonical(a);
    let one = build_canonical(&SingularSpectrum::ones(n));
    let last = cpow_nonneg(a.values().iter().map(|v| v * v).product(), e[n - 1])?;
    let pairs: Vec<(Complex64, Complex64)> = (0..nsamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            let k = haar_orthogonal(2 * n, &mut rng);
            let km = k.matrix();
            let num = block_product(&(km * x.matrix() * km.transpose()), &e, last)?;
            let den = block_product(&(km * one.matrix() * km.transpose()), &e, Complex64::from(1.0))?;
            Ok((num, den))
        })
        .collect::<Result<Vec<_>>>()?;
    let (num, den): (Vec<Complex64>, Vec<Complex64>) = pairs.into_iter().unzip();
    Ok(ratio_estimate(&num, &den))
}

/// If g gᵀ = λ²·1 returns λ².
fn scalar_gram(p: &Matrix) -> Option<f64> {
    let m = p.nrows();
    let lambda2 = p.trace() / m as f64;
    let dev = (p - Matrix::identity(m, m) * lambda2).abs().max();
    (dev <= 1e-14 * lambda2).then_some(lambda2)
}

/// Ψ(s; g) for g gᵀ a multiple of the identity: ∏_j (λ²)^{2j e_j}.
fn psi_scalar(s: &SphericalParameter, lambda2: f64) -> Complex64 {
    if lambda2 == 1.0 {
        return Complex64::from(1.0);
    }
    let l = lambda2.ln();
    let mut acc = Complex64::from(0.0);
    for (j, ej) in s.exponents().iter().enumerate() {
        acc += ej * (2.0 * (j + 1) as f64 * l);
    }
    acc.exp()
}

fn gram(g: &GeneralLinearMatrix) -> Matrix {
    g.matrix() * g.matrix().transpose()
}

/// Per-sample values of ∏_j det(Π_{2j} k P kᵀ Π_{2j}ᵀ)^{e_j}.
fn psi_samples(s: &SphericalParameter, p: &Matrix, nsamples: usize, seed: u64) -> Result<Vec<Complex64>> {
    let n = s.n();
    let e = s.exponents();
    let last = cpow_nonneg(p.determinant(), e[n - 1])?;
    (0..nsamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            let k = haar_orthogonal(2 * n, &mut rng);
            let km = k.matrix();
            block_product(&(km * p * km.transpose()), &e, last)
        })
        .collect()
}

/// Ψ(s; g) by Haar averaging; exact for g gᵀ proportional to the identity.
pub fn psi_montecarlo(s: &SphericalParameter, g: &GeneralLinearMatrix, nsamples: usize, seed: u64) -> Result<McEstimate> {
    if g.n() != s.n() {
        return Err(Error::Dimension("g and s sizes differ".into()));
    }
    let p = gram(g);
    if let Some(l2) = scalar_gram(&p) {
        return Ok(McEstimate { value: psi_scalar(s, l2), stderr: 0.0, samples: nsamples });
    }
    if nsamples < 2 {
        return Err(Error::Domain("need at least two samples".into()));
    }
    let v = psi_samples(s, &p, nsamples, seed)?;
    let (m, se) = mean_stderr_complex(&v);
    Ok(McEstimate { value: m, stderr: se, samples: nsamples })
}

/// Relative error budget added to Monte Carlo identity checks.
pub const ROUNDING_FLOOR: f64 = 1e-10;

/// Left side, right side and z-score of a Monte Carlo identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub lhs: McEstimate,
    pub rhs: McEstimate,
    pub zscore: f64,
}

impl IdentityCheck {
    fn new(lhs: McEstimate, rhs: McEstimate) -> Self {
        // closed-form evaluations carry ~1e-12 relative rounding; a sample
        // set that is constant up to rounding must not read as a failure
        let floor = ROUNDING_FLOOR * lhs.value.norm().max(rhs.value.norm());
        let sigma = (lhs.stderr.powi(2) + rhs.stderr.powi(2) + floor * floor).sqrt();
        IdentityCheck { lhs, rhs, zscore: crate::stats::zscore(lhs.value, rhs.value, sigma) }
    }
}

/// ∫dk Φ(s; g k x kᵀ gᵀ) against Ψ(s; g) Φ(s; x).
pub fn factorization_check_phi(
    s: &SphericalParameter,
    g: &GeneralLinearMatrix,
    a: &SingularSpectrum,
    nsamples: usize,
    seed: u64,
) -> Result<IdentityCheck> {
    let n = s.n();
    if !s.in_convergence_domain() {
        return Err(Error::ConvergenceDomain("identity checked inside the convergence domain".into()));
    }
    if g.n() != n || a.n() != n {
        return Err(Error::Dimension("sizes of s, g and a differ".into()));
    }
    let phi_x = phi_closed(s, a)?;
    if g.matrix() == &Matrix::identity(2 * n, 2 * n) {
        let e = McEstimate::exact(phi_x);
        return Ok(IdentityCheck::new(e, e));
    }
    let x = build_canonical(a);
    let gm = g.matrix();
    let lseed = derive_seed(seed, "factorization-lhs");
    let vals: Vec<Complex64> = (0..nsamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(lseed, i as u64);
            let k = haar_orthogonal(2 * n, &mut rng);
            let y = AntisymmetricMatrix::antisymmetrize(&(gm * k.matrix() * x.matrix() * k.matrix().transpose() * gm.transpose()))?;
            phi_closed(s, &singular_spectrum(&y)?)
        })
        .collect::<Result<_>>()?;
    let (m, se) = mean_stderr_complex(&vals);
    let lhs = McEstimate { value: m, stderr: se, samples: nsamples };
    let psi = psi_montecarlo(s, g, nsamples, derive_seed(seed, "factorization-rhs"))?;
    let rhs = McEstimate { value: psi.value * phi_x, stderr: psi.stderr * phi_x.norm(), samples: nsamples };
    Ok(IdentityCheck::new(lhs, rhs))
}

/// ∫dk Ψ(s; g k g′) against Ψ(s; g) Ψ(s; g′).
pub fn factorization_check_psi(
    s: &SphericalParameter,
    g: &GeneralLinearMatrix,
    g2: &GeneralLinearMatrix,
    nsamples: usize,
    seed: u64,
) -> Result<IdentityCheck> {
    let n = s.n();
    if g.n() != n || g2.n() != n {
        return Err(Error::Dimension("sizes of s, g and g′ differ".into()));
    }
    let e = s.exponents();
    let (gm, hm) = (g.matrix(), g2.matrix());
    let hh = hm * hm.transpose();
    let lseed = derive_seed(seed, "psi-product-lhs");
    let vals: Vec<Complex64> = (0..nsamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(lseed, i as u64);
            let k = haar_orthogonal(2 * n, &mut rng);
            let k2 = haar_orthogonal(2 * n, &mut rng);
            let inner = gm * k.matrix() * &hh * k.matrix().transpose() * gm.transpose();
            let last = cpow_nonneg(inner.determinant(), e[n - 1])?;
            block_product(&(k2.matrix() * inner * k2.matrix().transpose()), &e, last)
        })
        .collect::<Result<_>>()?;
    let (m, se) = mean_stderr_complex(&vals);
    let lhs = McEstimate { value: m, stderr: se, samples: nsamples };
    let p1 = psi_montecarlo(s, g, nsamples, derive_seed(seed, "psi-product-g"))?;
    let p2 = psi_montecarlo(s, g2, nsamples, derive_seed(seed, "psi-product-h"))?;
    let value = p1.value * p2.value;
    let stderr = ((p1.stderr * p2.value.norm()).powi(2) + (p2.stderr * p1.value.norm()).powi(2)).sqrt();
    Ok(IdentityCheck::new(lhs, McEstimate { value, stderr, samples: nsamples }))
}

/// Taylor coefficients of G(w) = cosh √w = Σ w^m/(2m)! differentiated r times,
/// at w0 ≥ 0.
fn cosh_sqrt_derivative(r: usize, w0: f64) -> f64 {
    // term_m = m!/((m−r)! (2m)!) w0^{m−r}
    let mut term = (ln_factorial(r) - ln_factorial(2 * r)).exp();
    let mut sum = term;
    let mut m = r;
    loop {
        let ratio = (m + 1) as f64 / (m + 1 - r) as f64 * w0 / ((2 * m + 1) as f64 * (2 * m + 2) as f64);
        term *= ratio;
        sum += term;
        m += 1;
        if (term <= 1e-18 * sum && ratio < 0.5) || term == 0.0 || m > 100_000 {
            break;
        }
    }
    sum
}

/// ∏_{k<n}(2k)! det[cosh(x_i y_j)] / (Δ_n(x²) Δ_n(y²)).
pub fn harish_chandra_o2n(x: &SingularSpectrum, y: &SingularSpectrum) -> Result<f64> {
    let n = x.n();
    if y.n() != n {
        return Err(Error::Dimension("x and y sizes differ".into()));
    }
    let v: Vec<Complex64> = x.squares().into_iter().map(Complex64::from).collect();
    let u: Vec<Complex64> = y.squares().into_iter().map(Complex64::from).collect();
    let r = confluent_ratio(
        AxisSpec::vandermonde(&v, CONFLUENT_TOL),
        AxisSpec::vandermonde(&u, CONFLUENT_TOL),
        |v0, i, u0, m| {
            // (1/i!) u^i G^{(i)}(v u) expanded in u around u0
            let (v0, u0) = (v0.re, u0.re);
            let w0 = v0 * u0;
            let g: Vec<Complex64> = (0..=m)
                .map(|k| {
                    let lf = -ln_factorial(k) - ln_factorial(i);
                    Complex64::from(cosh_sqrt_derivative(i + k, w0) * v0.powi(k as i32) * lf.exp())
                })
                .collect();
            let mut ui = vec![Complex64::from(0.0); m + 1];
            // (u0 + t)^i
            for (k, c) in ui.iter_mut().enumerate().take(i.min(m) + 1) {
                *c = Complex64::from((ln_factorial(i) - ln_factorial(k) - ln_factorial(i - k)).exp() * u0.powi((i - k) as i32));
            }
            let mut out = vec![Complex64::from(0.0); m + 1];
            for p in 0..=m {
                for q in 0..=(m - p) {
                    out[p + q] += g[p] * ui[q];
                }
            }
            out
        },
    )?;
    Ok(r.scale_log(log_even_factorials(n)).to_real())
}

fn half_trace_product(x: &Matrix, z: &Matrix) -> f64 {
    0.5 * x.component_mul(&z.transpose()).sum()
}

/// Haar O(2n) average of exp(½ Tr X k Y kᵀ).
pub fn harish_chandra_montecarlo(x: &SingularSpectrum, y: &SingularSpectrum, nsamples: usize, seed: u64) -> Result<McEstimate> {
    let n = x.n();
    if y.n() != n {
        return Err(Error::Dimension("x and y sizes differ".into()));
    }
    let xm = build_canonical(x);
    let ym = build_canonical(y);
    let vals: Vec<f64> = (0..nsamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            let k = haar_orthogonal(2 * n, &mut rng);
            let z = k.matrix() * ym.matrix() * k.matrix().transpose();
            half_trace_product(xm.matrix(), &z).exp()
        })
        .collect();
    let (m, se) = mean_stderr(&vals);
    Ok(McEstimate { value: Complex64::from(m), stderr: se, samples: nsamples })
}

/// O(2) average at n = 1 done exactly: one rotation and one reflection
/// represent the two components, and the integrand is constant on each.
pub fn harish_chandra_o2_exact(x: f64, y: f64) -> Result<f64> {
    let xm = build_canonical(&SingularSpectrum::new(vec![x])?);
    let ym = build_canonical(&SingularSpectrum::new(vec![y])?);
    let (c, s) = (0.7f64.cos(), 0.7f64.sin());
    let rot = Matrix::from_row_slice(2, 2, &[c, -s, s, c]);
    let refl = Matrix::from_row_slice(2, 2, &[c, s, s, -c]);
    let avg = [rot, refl]
        .iter()
        .map(|k| half_trace_product(xm.matrix(), &(k * ym.matrix() * k.transpose())).exp())
        .sum::<f64>()
        / 2.0;
    Ok(avg)
}

/// ln C with C = (1/n!) ∏_{j<n} 2(2π)^{2j}/(2j)!.
pub fn log_isometry_constant(n: usize) -> f64 {
    let l2pi = (2.0 * std::f64::consts::PI).ln();
    -ln_factorial(n) + (0..n).map(|j| std::f64::consts::LN_2 + 2.0 * j as f64 * l2pi - ln_factorial(2 * j)).sum::<f64>()
}

/// C Δ_n²(a²) f_H(i a⊗τ₂).
pub fn isometry_density<F>(a: &SingularSpectrum, f_h: F) -> f64
where
    F: Fn(&AntisymmetricMatrix) -> f64,
{
    let (_, lv) = crate::linalg::log_vandermonde_sq(a.values());
    let fh = f_h(&build_canonical(a));
    if fh == 0.0 || lv == f64::NEG_INFINITY {
        return 0.0;
    }
    fh * (log_isometry_constant(a.n()) + 2.0 * lv).exp()
}

/// Density on o(2n) of independent standard normal upper-triangle entries.
pub fn gaussian_o2n_density(x: &AntisymmetricMatrix) -> f64 {
    let d = x.dim() as f64;
    let m = x.matrix();
    let tr = (m.transpose() * m).trace();
    (-tr / 4.0 - 0.25 * d * (d - 1.0) * (2.0 * std::f64::consts::PI).ln()).exp()
}

/// Spherical transform of a polynomial ensemble with weights w_1..w_n:
/// ∏2ʲj! det[ℳw_c(s_b−n+1)] / (Δ_n(s) det[ℳw_c(2b−1)]).
pub fn spherical_transform_polynomial(s: &SphericalParameter, weights: &[WeightFunction]) -> Result<Complex64> {
    let n = s.n();
    if weights.len() != n {
        return Err(Error::Dimension("need one weight per singular value".into()));
    }
    if !s.is_distinct() {
        return Err(Error::Domain("transform evaluated at pairwise distinct s".into()));
    }
    let mut top = Vec::with_capacity(n);
    let mut bottom = Vec::with_capacity(n);
    for b in 0..n {
        let sb = s.values()[b] - (n as f64 - 1.0);
        top.push(weights.iter().map(|w| w.mellin(sb)).collect::<Result<Vec<_>>>()?);
        let ob = Complex64::from(2.0 * b as f64 + 1.0);
        bottom.push(weights.iter().map(|w| w.mellin(ob)).collect::<Result<Vec<_>>>()?);
    }
    let t = crate::linalg::det_complex_scaled(top);
    let d = crate::linalg::det_complex_scaled(bottom);
    if d.is_zero() {
        return Err(Error::Singular(0.0));
    }
    let v = LogValue::from_complex(vandermonde_c(s.values()));
    Ok(t.div(&d).div(&v).scale_log(log_prefactor(n)).to_complex())
}

/// Spherical transform of a factorizing ensemble: ∏_j ℳ𝒜σ(s_j−n+1)/ℳ𝒜σ(2j−1).
pub fn spherical_transform_factorizing(s: &SphericalParameter, factor: &FactorizingWeight) -> Result<Complex64> {
    let n = s.n();
    let mut acc = Complex64::from(1.0);
    for j in 0..n {
        acc *= factor.mellin(s.values()[j] - (n as f64 - 1.0))?;
        acc /= factor.mellin(Complex64::from(2.0 * j as f64 + 1.0))?;
    }
    Ok(acc)
}

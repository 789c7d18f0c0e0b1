//! Joint densities of singular values: polynomial ensembles, products with
//! factorizing factors, fixed and degenerate base matrices, and the density
//! of a corank-2 projection.

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::linalg::{confluent_ratio, det_complex_scaled, log_vandermonde_sq, AxisSpec, LogValue, Matrix, SingularSpectrum};
use crate::mellin::{FactorizingWeight, PowerBeta, PowerExp, WeightFunction};
use crate::quad::{integrate_box, try_integrate, Axis, QuadOptions};
use crate::samplers::{BaseSpec, ProductSpec};
use crate::special::{ln_beta, ln_factorial, ln_gamma_real};
use crate::spherical::{spherical_transform_polynomial, SphericalParameter};
use num_complex::Complex64;
use std::f64::consts::LN_2;

/// Relative gap of ã below which the fixed-base formula switches to the
/// confluent evaluator.
pub const FIXED_GAP_TOL: f64 = 1e-8;

/// p(a) = C Δ_n(a²) det[w_b(a_c)] on ℝ₊ⁿ (unordered, integrates to 1).
#[derive(Debug, Clone)]
pub struct PolynomialEnsembleSpec {
    weights: Vec<WeightFunction>,
    /// B_{jb} = ℳw_b(2j+1).
    bimoment: Matrix,
    norm: LogValue,
    condition: f64,
}

fn bimoment(weights: &[WeightFunction]) -> Result<Matrix> {
    let n = weights.len();
    let mut b = Matrix::zeros(n, n);
    for j in 0..n {
        for (c, w) in weights.iter().enumerate() {
            b[(j, c)] = w.mellin(Complex64::from(2.0 * j as f64 + 1.0))?.re;
        }
    }
    Ok(b)
}

/// 2-norm condition number after row and column equilibration.
fn equilibrated_condition(b: &Matrix) -> f64 {
    let mut m = b.clone();
    for mut r in m.row_iter_mut() {
        let s = r.amax();
        if s > 0.0 {
            r /= s;
        }
    }
    for mut c in m.column_iter_mut() {
        let s = c.amax();
        if s > 0.0 {
            c /= s;
        }
    }
    let sv = m.singular_values();
    let (hi, lo) = (sv.max(), sv.min());
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

fn real_det(rows: Vec<Vec<f64>>) -> LogValue {
    det_complex_scaled(rows.into_iter().map(|r| r.into_iter().map(Complex64::from).collect()).collect())
}

impl PolynomialEnsembleSpec {
    /// Normalization C = 1/(n! det B) from the Mellin moments of the weights.
    pub fn new(weights: Vec<WeightFunction>) -> Result<Self> {
        let b = bimoment(&weights)?;
        let n = weights.len();
        let d = real_det((0..n).map(|j| b.row(j).iter().copied().collect()).collect());
        if d.is_zero() {
            return Err(Error::Singular(0.0));
        }
        let norm = LogValue::from_complex(Complex64::from(1.0)).div(&d).scale_log(-ln_factorial(n));
        Self::with_norm(weights, b, norm)
    }

    /// Uses a closed-form normalization; the bimoment matrix is still built
    /// for diagnostics and kernels.
    pub fn with_constant(weights: Vec<WeightFunction>, sign: f64, log_c: f64) -> Result<Self> {
        let b = bimoment(&weights)?;
        Self::with_norm(weights, b, LogValue::from_log_real(sign, log_c))
    }

    fn with_norm(weights: Vec<WeightFunction>, bimoment: Matrix, norm: LogValue) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Dimension("ensemble needs at least one weight".into()));
        }
        let condition = equilibrated_condition(&bimoment);
        Ok(PolynomialEnsembleSpec { weights, bimoment, norm, condition })
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[WeightFunction] {
        &self.weights
    }

    pub fn bimoment(&self) -> &Matrix {
        &self.bimoment
    }

    /// (sign, ln|C|).
    pub fn log_norm(&self) -> (f64, f64) {
        (self.norm.mantissa.re.signum(), self.norm.log)
    }

    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    /// Upper end of the joint support and the union of weight breakpoints.
    pub fn support(&self) -> (f64, Vec<f64>) {
        let hi = self.weights.iter().map(|w| w.support().1).fold(0.0, f64::max);
        let mut br: Vec<f64> = Vec::new();
        for w in &self.weights {
            br.extend(w.breakpoints());
            let h = w.support().1;
            if h.is_finite() {
                br.push(h);
            }
        }
        br.sort_by(f64::total_cmp);
        br.dedup();
        (hi, br)
    }

    /// Joint density at `a`; the input order is irrelevant.
    pub fn density(&self, a: &[f64]) -> Result<f64> {
        let n = self.n();
        if a.len() != n {
            return Err(Error::Dimension(format!("expected {n} values, got {}", a.len())));
        }
        if a.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::Domain("singular values must be ≥ 0".into()));
        }
        let mut a = a.to_vec();
        a.sort_by(f64::total_cmp);
        let (vs, vl) = log_vandermonde_sq(&a);
        if vs == 0.0 || vl == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        let rows: Vec<Vec<f64>> = self
            .weights
            .iter()
            .map(|w| a.iter().map(|&x| w.eval(x)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        let d = real_det(rows);
        if d.is_zero() {
            return Ok(0.0);
        }
        Ok(d.mul(&self.norm).scale_log(vl).to_real() * vs)
    }

    /// Product with one more factorizing factor: weights 𝒜σ ⊛ w_b and
    /// C ↦ C / ∏ℳ∘𝒜σ(2j−1).
    pub fn convolved(&self, factor: &FactorizingWeight) -> Result<Self> {
        let n = self.n();
        let weights: Vec<WeightFunction> = self.weights.iter().map(|w| factor.density.convolve(w)).collect();
        let mut b = self.bimoment.clone();
        for j in 0..n {
            let m = factor.mellin_real(2.0 * j as f64 + 1.0)?;
            for c in 0..n {
                b[(j, c)] *= m;
            }
        }
        let norm = self.norm.scale_log(-factor.log_mellin_odd_product(n)?);
        Self::with_norm(weights, b, norm)
    }

    /// Spherical transform of the ensemble.
    pub fn spherical_transform(&self, s: &SphericalParameter) -> Result<Complex64> {
        spherical_transform_polynomial(s, &self.weights)
    }

    /// One-point marginal by integrating out n−1 variables.
    pub fn marginal_quadrature(&self, y: f64, opts: QuadOptions) -> Result<f64> {
        let n = self.n();
        if n == 1 {
            return self.density(&[y]);
        }
        if n > 3 {
            return Err(Error::Dimension("quadrature marginal implemented for n ≤ 3".into()));
        }
        let (hi, mut br) = self.support();
        br.push(y);
        let axes: Vec<Axis> = (0..n - 1).map(|_| Axis::with_breaks(0.0, hi, &br)).collect();
        let f = |t: &[f64]| -> Result<f64> {
            let mut p = Vec::with_capacity(n);
            p.push(y);
            p.extend_from_slice(t);
            self.density(&p)
        };
        integrate_box(&f, &axes, opts)
    }

    /// ∫ p over ℝ₊ⁿ by nested quadrature.
    pub fn normalization_quadrature(&self, opts: QuadOptions) -> Result<f64> {
        let (hi, br) = self.support();
        let axes: Vec<Axis> = (0..self.n()).map(|_| Axis::with_breaks(0.0, hi, &br)).collect();
        integrate_box(&|t: &[f64]| self.density(t), &axes, opts)
    }
}

/// Strictly positive singular values ã of a fixed base matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedBaseSpec {
    atilde: SingularSpectrum,
}

impl FixedBaseSpec {
    pub fn new(atilde: SingularSpectrum) -> Result<Self> {
        if atilde.values()[0] <= 0.0 {
            return Err(Error::Domain("fixed base must be invertible (all ã > 0)".into()));
        }
        Ok(FixedBaseSpec { atilde })
    }

    pub fn atilde(&self) -> &SingularSpectrum {
        &self.atilde
    }

    pub fn n(&self) -> usize {
        self.atilde.n()
    }

    /// Common value when every ã_j coincides within the tolerance.
    pub fn fully_degenerate(&self) -> Option<f64> {
        let v = self.atilde.values();
        let (lo, hi) = (v[0], v[v.len() - 1]);
        ((hi - lo) <= FIXED_GAP_TOL * hi).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn partially_degenerate(&self) -> bool {
        self.atilde.degeneracy_gap() <= FIXED_GAP_TOL
    }
}

fn log_sum_mellin(factor: &FactorizingWeight, n: usize) -> Result<f64> {
    factor.log_mellin_odd_product(n)
}

/// Weights (1/ã_c)𝒜σ(a/ã_c) and the constant 1/(n! Δ_n(ã²) ∏ℳ∘𝒜σ(2j−1)).
pub fn fixed_base_ensemble(base: &FixedBaseSpec, factor: &FactorizingWeight) -> Result<PolynomialEnsembleSpec> {
    if base.partially_degenerate() {
        return Err(Error::Domain("direct fixed-base formula needs distinct ã; use jpdf_fixed".into()));
    }
    let n = base.n();
    let weights: Vec<WeightFunction> = base.atilde.values().iter().map(|&c| factor.density.scaled(c)).collect();
    let (vs, vl) = log_vandermonde_sq(base.atilde.values());
    let log_c = -ln_factorial(n) - vl - log_sum_mellin(factor, n)?;
    PolynomialEnsembleSpec::with_constant(weights, vs, log_c)
}

/// Weights (−a∂_a)^{c−1}𝒜σ and the constant
/// 1/(2^{n(n−1)/2} n! ∏_{k<n} k! ∏ℳ∘𝒜σ(2j−1)).
pub fn degenerate_ensemble(n: usize, factor: &FactorizingWeight) -> Result<PolynomialEnsembleSpec> {
    if factor.smoothness < n.saturating_sub(1) {
        return Err(Error::Smoothness { needed: n - 1, available: factor.smoothness });
    }
    let weights: Vec<WeightFunction> = (0..n).map(|c| factor.density.log_derivative(c)).collect();
    let log_c = -((n * (n - 1) / 2) as f64) * LN_2
        - ln_factorial(n)
        - (0..n).map(ln_factorial).sum::<f64>()
        - log_sum_mellin(factor, n)?;
    PolynomialEnsembleSpec::with_constant(weights, 1.0, log_c)
}

/// jPDF of the product of one factor with the polynomial ensemble `base`.
pub fn jpdf_fact_poly(a: &[f64], base: &PolynomialEnsembleSpec, factor: &FactorizingWeight) -> Result<f64> {
    base.convolved(factor)?.density(a)
}

/// jPDF of g x gᵀ with x fixed; degenerate ã is handled by the confluent
/// limit (partial) or the degenerate ensemble (full).
pub fn jpdf_fixed(a: &[f64], base: &FixedBaseSpec, factor: &FactorizingWeight) -> Result<f64> {
    let n = base.n();
    if a.len() != n {
        return Err(Error::Dimension(format!("expected {n} values, got {}", a.len())));
    }
    if let Some(lambda) = base.fully_degenerate() {
        if n > 1 {
            let scaled: Vec<f64> = a.iter().map(|x| x / lambda).collect();
            return Ok(jpdf_degenerate(&scaled, factor)? / lambda.powi(n as i32));
        }
    }
    if !base.partially_degenerate() {
        return fixed_base_ensemble(base, factor)?.density(a);
    }
    jpdf_fixed_confluent(a, base, factor)
}

fn jpdf_fixed_confluent(a: &[f64], base: &FixedBaseSpec, factor: &FactorizingWeight) -> Result<f64> {
    let n = base.n();
    if a.iter().any(|x| !(*x >= 0.0)) {
        return Err(Error::Domain("singular values must be ≥ 0".into()));
    }
    let mut a = a.to_vec();
    a.sort_by(f64::total_cmp);
    let (vs, vl) = log_vandermonde_sq(&a);
    if vs == 0.0 {
        return Ok(0.0);
    }
    let rows: Vec<Complex64> = a.iter().map(|&x| Complex64::from(x)).collect();
    let cols: Vec<Complex64> = base.atilde.squares().into_iter().map(Complex64::from).collect();
    let hi = factor.support().1;
    let missing = std::cell::Cell::new(false);
    let r = confluent_ratio(AxisSpec::plain(&rows), AxisSpec::vandermonde(&cols, FIXED_GAP_TOL), |ab, _, u0, m| {
        // Taylor coefficients in u = ã² of u^{−1/2} 𝒜σ(a u^{−1/2})
        let u = Jet::variable(u0, m);
        let inv = u.sqrt().recip();
        let arg = inv.scale(ab);
        if arg.value().re >= hi || ab.re == 0.0 {
            return vec![Complex64::from(0.0); m + 1];
        }
        match factor.density.eval_jet(&arg) {
            Some(w) => (&w * &inv).c,
            None => {
                missing.set(true);
                vec![Complex64::from(0.0); m + 1]
            }
        }
    })?;
    if missing.get() {
        return Err(Error::Smoothness { needed: n - 1, available: 0 });
    }
    let log_c = -ln_factorial(n) - log_sum_mellin(factor, n)?;
    Ok(r.scale_log(vl + log_c).to_real() * vs)
}

/// Limit ã → (1,…,1) of the fixed-base density.
pub fn jpdf_degenerate(a: &[f64], factor: &FactorizingWeight) -> Result<f64> {
    degenerate_ensemble(a.len(), factor)?.density(a)
}

/// Iterated convolution 𝒜σ_M ⊛ ⋯ ⊛ 𝒜σ_1 ⊛ w_b; Mellin transforms compose
/// exactly as products.
pub fn product_weights(base: &[WeightFunction], factors: &[FactorizingWeight]) -> Result<PolynomialEnsembleSpec> {
    let weights: Vec<WeightFunction> = base
        .iter()
        .map(|w| factors.iter().fold(w.clone(), |acc, f| f.density.convolve(&acc)))
        .collect();
    PolynomialEnsembleSpec::new(weights)
}

/// Polynomial ensemble of a configured product of factors with a base.
pub fn product_ensemble(spec: &ProductSpec) -> Result<PolynomialEnsembleSpec> {
    spec.validate()?;
    let factors: Vec<FactorizingWeight> = spec.factors.iter().map(FactorizingWeight::from_factor).collect::<Result<_>>()?;
    let (first, rest) = factors.split_first().ok_or_else(|| Error::Config("product needs at least one factor".into()))?;
    let mut ens = match &spec.base {
        BaseSpec::CanonicalIdentity => degenerate_ensemble(spec.n, first)?,
        BaseSpec::FixedMatrix { a } => {
            let base = FixedBaseSpec::new(a.clone())?;
            if let Some(lambda) = base.fully_degenerate().filter(|_| spec.n > 1) {
                let w: Vec<WeightFunction> = (0..spec.n).map(|c| first.density.log_derivative(c).scaled(lambda)).collect();
                PolynomialEnsembleSpec::new(w)?
            } else {
                fixed_base_ensemble(&base, first)?
            }
        }
    };
    for f in rest {
        ens = ens.convolved(f)?;
    }
    Ok(ens)
}

/// g^{(M)}(a) = ∫ dt/t 𝒜σ_M(t) g^{(M−1)}(a/t) evaluated recursively in the
/// original variable (independent of the log-variable convolution).
pub fn iterated_weight(w: &WeightFunction, factors: &[FactorizingWeight], a: f64) -> Result<f64> {
    let Some((last, inner)) = factors.split_last() else {
        return w.eval(a);
    };
    if !(a > 0.0) {
        return Ok(0.0);
    }
    let (flo, fhi) = last.support();
    let whi = inner.iter().fold(w.support().1, |acc, f| acc * f.support().1);
    let lo = flo.max(if whi.is_finite() { a / whi } else { 0.0 });
    if lo >= fhi {
        return Ok(0.0);
    }
    let opts = QuadOptions { rel_tol: 1e-11, abs_tol: 1e-300, max_intervals: 4000 };
    let mut breaks = vec![a];
    breaks.retain(|b| *b > lo && *b < fhi);
    try_integrate(
        |t: f64| {
            let s = last.eval(t)?;
            if s == 0.0 {
                return Ok(0.0);
            }
            Ok(s * iterated_weight(w, inner, a / t)? / t)
        },
        lo,
        fhi,
        &breaks,
        opts,
    )
}

/// jPDF of the M-fold product on a polynomial base through the recursion
/// over factors.
pub fn jpdf_recursive(a: &[f64], base: &PolynomialEnsembleSpec, factors: &[FactorizingWeight]) -> Result<f64> {
    let n = base.n();
    if a.len() != n {
        return Err(Error::Dimension(format!("expected {n} values, got {}", a.len())));
    }
    let mut a = a.to_vec();
    a.sort_by(f64::total_cmp);
    let (vs, vl) = log_vandermonde_sq(&a);
    if vs == 0.0 {
        return Ok(0.0);
    }
    let rows: Vec<Vec<f64>> = base
        .weights()
        .iter()
        .map(|w| a.iter().map(|&x| iterated_weight(w, factors, x)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let (cs, cl) = base.log_norm();
    let mut log_c = cl;
    for f in factors {
        log_c -= f.log_mellin_odd_product(n)?;
    }
    let d = real_det(rows);
    Ok(d.scale_log(vl + log_c).to_real() * vs * cs)
}

/// Muttalib–Borodin Jacobi weights x^{2ν+b−1}(1−x)^{2μ+n+1}, b = 1..n.
pub fn muttalib_borodin_jacobi_weights(n: usize, nu: f64, mu: f64) -> Result<Vec<WeightFunction>> {
    let q = 2.0 * mu + n as f64 + 1.0;
    if !(nu > -0.5) || !(q > -1.0) {
        return Err(Error::Domain(format!("Muttalib–Borodin weights need ν > −1/2 and 2μ+n+1 > −1 (ν={nu}, μ={mu})")));
    }
    Ok((1..=n)
        .map(|b| {
            let p = 2.0 * nu + b as f64 - 1.0;
            let log_norm = -ln_beta(Complex64::from(p + 1.0), Complex64::from(q + 1.0)).re;
            WeightFunction::new(PowerBeta { p, q, log_norm })
        })
        .collect())
}

/// Laguerre-type weights x^{2ν+b−1}e^{−x}, b = 1..n.
pub fn ginibre_degenerate_weights(n: usize, nu: f64) -> Result<Vec<WeightFunction>> {
    if !(nu > -0.5) {
        return Err(Error::Domain(format!("weights need ν > −1/2, got {nu}")));
    }
    Ok((1..=n)
        .map(|b| {
            let p = 2.0 * nu + b as f64 - 1.0;
            WeightFunction::new(PowerExp { p, log_norm: -ln_gamma_real(p + 1.0).0 })
        })
        .collect())
}

/// ((2n−2)!/(n−1)!) Δ_{n−1}(x²)/Δ_n(a²) det[1; (a_k − x_j)Θ(a_k − x_j)].
pub fn corank2_jpdf(x: &[f64], a: &SingularSpectrum) -> Result<f64> {
    let n = a.n();
    if n < 2 || x.len() != n - 1 {
        return Err(Error::Dimension(format!("need n ≥ 2 and n−1 projected values (n={n}, got {})", x.len())));
    }
    if a.is_degenerate() {
        return Err(Error::Domain("corank-2 density requires distinct a".into()));
    }
    if x.iter().any(|v| !(*v >= 0.0)) {
        return Ok(0.0);
    }
    let mut x = x.to_vec();
    x.sort_by(f64::total_cmp);
    let av = a.values();
    let theta = Matrix::from_fn(n, n, |r, c| if r == 0 { 1.0 } else { (av[c] - x[r - 1]).max(0.0) });
    let th = theta.determinant();
    if th == 0.0 {
        return Ok(0.0);
    }
    let (xs, xl) = log_vandermonde_sq(&x);
    let (asg, al) = log_vandermonde_sq(av);
    let log = ln_factorial(2 * n - 2) - ln_factorial(n - 1) + xl - al;
    Ok(xs * asg * th * log.exp())
}

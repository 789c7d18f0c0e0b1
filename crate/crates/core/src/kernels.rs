//! Bi-orthonormal systems, the χ polynomial, correlation kernels in series
//! and contour form, and k-point correlation functions.
//!
//! The base system of a polynomial ensemble is built from an LU
//! factorization of the bimoment matrix B = L·U: p̃ = L⁻¹·(1, x², x⁴, …)
//! and q̃ = w·U⁻¹, so that ∫p̃_j q̃_k = δ_jk with p̃_j even of degree 2j.

use crate::ensembles::{FixedBaseSpec, PolynomialEnsembleSpec, FIXED_GAP_TOL};
use crate::error::{Error, Result};
use crate::linalg::{lu_det_real, Matrix};
use crate::mellin::{FactorizingWeight, WeightFunction};
use crate::quad::{try_integrate, QuadOptions};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Relative tolerance for the N vs 2N node comparison and the imaginary
/// residue of a contour evaluation.
pub const CONTOUR_TOL: f64 = 1e-9;
/// Largest accepted equilibrated condition number of a bimoment matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// Discretization of the contour integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContourSpec {
    /// Radius of the circle around the origin; `None` picks a default.
    pub radius: Option<f64>,
    pub nodes: usize,
    /// Radius of the small circles around the a_j; `None` is a quarter
    /// of the smallest gap among ±a_j.
    pub rho: Option<f64>,
    pub circle_nodes: usize,
}

impl Default for ContourSpec {
    fn default() -> Self {
        ContourSpec { radius: None, nodes: 256, rho: None, circle_nodes: 256 }
    }
}

impl ContourSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, n) in [("nodes", self.nodes), ("circle_nodes", self.circle_nodes)] {
            if n < 64 || !n.is_power_of_two() {
                return Err(Error::Contour(format!("{name} must be a power of two ≥ 64, got {n}")));
            }
        }
        for (name, r) in [("radius", self.radius), ("rho", self.rho)] {
            if let Some(r) = r {
                if !(r > 0.0 && r.is_finite()) {
                    return Err(Error::Contour(format!("{name} must be positive, got {r}")));
                }
            }
        }
        Ok(())
    }
}

/// χ_{m1,m2}(z) = Σ_{j=m1}^{m2} z^{2j}/ℳ∘𝒜σ(2j+1); terms with infinite or
/// undefined moments are dropped.
pub fn chi_poly(factor: &FactorizingWeight, z: Complex64, m1: i64, m2: i64) -> Result<Complex64> {
    if m1 > m2 {
        return Err(Error::Domain(format!("χ needs m1 ≤ m2, got {m1} > {m2}")));
    }
    let coeffs = chi_coefficients(factor, m1, m2)?;
    Ok(eval_chi(&coeffs, m1, z))
}

fn chi_coefficients(factor: &FactorizingWeight, m1: i64, m2: i64) -> Result<Vec<f64>> {
    (m1..=m2)
        .map(|j| {
            let m = factor.mellin(Complex64::from(2.0 * j as f64 + 1.0))?;
            Ok(if m.re.is_finite() && m.re != 0.0 { 1.0 / m.re } else { 0.0 })
        })
        .collect()
}

fn eval_chi(coeffs: &[f64], m1: i64, z: Complex64) -> Complex64 {
    let w = z * z;
    let mut acc = Complex64::from(0.0);
    for c in coeffs.iter().rev() {
        acc = acc * w + *c;
    }
    if m1 != 0 {
        acc *= w.powi(m1 as i32);
    }
    acc
}

/// Σ c_k x^k by Horner.
fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * x + v)
}

fn horner_c(c: &[f64], x: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::from(0.0), |acc, v| acc * x + v)
}

/// Pairs {p_j, q_j} with ∫p_l q_k = δ_lk; p_j even polynomials.
#[derive(Debug, Clone)]
pub struct BiorthSystem {
    /// p_j(y) = Σ_k p[j][k] y^{2k}.
    p: Vec<Vec<f64>>,
    q: Vec<WeightFunction>,
    max_offdiag: f64,
    condition: f64,
}

impl BiorthSystem {
    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self, j: usize, y: f64) -> f64 {
        horner(&self.p[j], y * y)
    }

    /// Coefficients of p_j in powers of y².
    pub fn p_coefficients(&self, j: usize) -> &[f64] {
        &self.p[j]
    }

    pub fn q(&self, j: usize, y: f64) -> Result<f64> {
        self.q[j].eval(y)
    }

    pub fn q_function(&self, j: usize) -> &WeightFunction {
        &self.q[j]
    }

    /// Largest |PBC − I| entry of the construction, from exact moments.
    pub fn max_offdiag(&self) -> f64 {
        self.max_offdiag
    }

    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    /// K(y', y) = Σ p_j(y') q_j(y).
    pub fn kernel(&self, yp: f64, y: f64) -> Result<f64> {
        let mut s = 0.0;
        for j in 0..self.n() {
            let pj = self.p(j, yp);
            if pj != 0.0 {
                s += pj * self.q(j, y)?;
            }
        }
        Ok(s)
    }

    /// Upper end of the support of the q_j and their breakpoints.
    pub fn support(&self) -> (f64, Vec<f64>) {
        let hi = self.q.iter().map(|w| w.support().1).fold(0.0, f64::max);
        let mut br: Vec<f64> = Vec::new();
        for w in &self.q {
            br.extend(w.breakpoints());
            let h = w.support().1;
            if h.is_finite() {
                br.push(h);
            }
        }
        br.retain(|b| *b > 0.0 && *b < hi);
        br.sort_by(f64::total_cmp);
        br.dedup();
        (hi, br)
    }

    /// Gram matrix ∫p_l q_k by quadrature and its largest deviation from I.
    pub fn gram_quadrature(&self, opts: QuadOptions) -> Result<(Matrix, f64)> {
        // entries are O(1) and off-diagonals vanish: an absolute floor is needed
        let opts = opts.with_abs(opts.abs_tol.max(0.1 * opts.rel_tol));
        let n = self.n();
        let (hi, br) = self.support();
        let cells: Vec<(usize, usize)> = (0..n).flat_map(|l| (0..n).map(move |k| (l, k))).collect();
        let vals: Result<Vec<f64>> = cells
            .par_iter()
            .map(|&(l, k)| try_integrate(|y: f64| Ok(self.p(l, y) * self.q(k, y)?), 0.0, hi, &br, opts))
            .collect();
        let vals = vals?;
        let mut g = Matrix::zeros(n, n);
        let mut dev: f64 = 0.0;
        for (&(l, k), v) in cells.iter().zip(&vals) {
            g[(l, k)] = *v;
            dev = dev.max((v - if l == k { 1.0 } else { 0.0 }).abs());
        }
        Ok((g, dev))
    }

    /// ∫K(y, y) dy by quadrature.
    pub fn trace_quadrature(&self, opts: QuadOptions) -> Result<f64> {
        let (hi, br) = self.support();
        try_integrate(|y: f64| self.kernel(y, y), 0.0, hi, &br, opts)
    }

    /// System of the product with one more factor: p_j coefficients divided
    /// by ℳ∘𝒜σ(2k+1) and q_j ↦ 𝒜σ ⊛ q_j.
    pub fn pushed(&self, factor: &FactorizingWeight) -> Result<BiorthSystem> {
        let n = self.n();
        let inv = chi_coefficients(factor, 0, n as i64 - 1)?;
        let p = self.p.iter().map(|c| c.iter().zip(&inv).map(|(a, b)| a * b).collect()).collect();
        let q = self.q.iter().map(|w| factor.density.convolve(w)).collect();
        Ok(BiorthSystem { p, q, max_offdiag: self.max_offdiag, condition: self.condition })
    }
}

/// Base system of a polynomial ensemble from the LU factorization of its
/// column-equilibrated bimoment matrix.
pub fn gram_biorth(base: &PolynomialEnsembleSpec) -> Result<BiorthSystem> {
    let cond = base.condition_number();
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned(cond));
    }
    let n = base.n();
    let b = base.bimoment();
    let scale: Vec<f64> = (0..n).map(|c| 1.0 / b.column(c).amax()).collect();
    let mut m = b.clone();
    for c in 0..n {
        m.column_mut(c).scale_mut(scale[c]);
    }
    // Doolittle without pivoting; the leading minors must not vanish
    let mut l = Matrix::identity(n, n);
    let mut u = Matrix::zeros(n, n);
    for i in 0..n {
        for k in i..n {
            u[(i, k)] = m[(i, k)] - (0..i).map(|t| l[(i, t)] * u[(t, k)]).sum::<f64>();
        }
        let piv = u[(i, i)];
        let rowmax = m.row(i).amax();
        if !(piv.abs() > 1e-13 * rowmax) {
            return Err(Error::Singular(piv.abs() / rowmax));
        }
        for r in i + 1..n {
            l[(r, i)] = (m[(r, i)] - (0..i).map(|t| l[(r, t)] * u[(t, i)]).sum::<f64>()) / piv;
        }
    }
    let linv = l.try_inverse().ok_or(Error::Singular(0.0))?;
    let uinv = u.try_inverse().ok_or(Error::Singular(0.0))?;
    // q_k = Σ_c scale_c (U⁻¹)_{ck} w_c
    let q: Vec<WeightFunction> = (0..n)
        .map(|k| {
            let terms = (0..n).map(|c| (scale[c] * uinv[(c, k)], base.weights()[c].clone())).collect();
            WeightFunction::combination(terms)
        })
        .collect();
    let p: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| if i <= j { linv[(j, i)] } else { 0.0 }).collect()).collect();
    let mut cmat = uinv.clone();
    for c in 0..n {
        cmat.row_mut(c).scale_mut(scale[c]);
    }
    let resid = &linv * b * &cmat - Matrix::identity(n, n);
    Ok(BiorthSystem { p, q, max_offdiag: resid.amax(), condition: cond })
}

/// Coefficients in x of ∏_{i≠j}(a_i² − x)/(a_i² − a_j²).
fn lagrange_coefficients(a2: &[f64], j: usize) -> Vec<f64> {
    let mut c = vec![1.0];
    for (i, &ai) in a2.iter().enumerate() {
        if i == j {
            continue;
        }
        let d = ai - a2[j];
        let mut next = vec![0.0; c.len() + 1];
        for (k, v) in c.iter().enumerate() {
            next[k] += v * ai / d;
            next[k + 1] -= v / d;
        }
        c = next;
    }
    c
}

fn check_nondegenerate(atilde: &FixedBaseSpec) -> Result<Vec<f64>> {
    let a = atilde.atilde().values().to_vec();
    if atilde.atilde().degeneracy_gap() <= FIXED_GAP_TOL {
        return Err(Error::Domain("kernel of a fixed base needs pairwise distinct ã".into()));
    }
    Ok(a)
}

/// Series form of the fixed-base system: p_j = Σ_k ℓ_jk y^{2k}/ℳ∘𝒜σ(2k+1)
/// with ℓ_j the Lagrange polynomial at ã², and q_j = 𝒜σ(y/ã_j)/ã_j.
pub fn fixed_biorth(atilde: &FixedBaseSpec, factor: &FactorizingWeight) -> Result<BiorthSystem> {
    let a = check_nondegenerate(atilde)?;
    let n = a.len();
    let a2: Vec<f64> = a.iter().map(|x| x * x).collect();
    let inv = chi_coefficients(factor, 0, n as i64 - 1)?;
    let p = (0..n)
        .map(|j| lagrange_coefficients(&a2, j).iter().zip(&inv).map(|(l, m)| l * m).collect())
        .collect();
    let q = a.iter().map(|&aj| factor.density.scaled(aj)).collect();
    Ok(BiorthSystem { p, q, max_offdiag: 0.0, condition: 1.0 })
}

/// (1/2πi)∮ f(z) dz on |z| = r for vector-valued f, with the N vs 2N and
/// imaginary-part checks. Returns the real parts.
fn origin_contour<F>(f: F, r: f64, nodes: usize) -> Result<Vec<f64>>
where
    F: Fn(Complex64) -> Vec<Complex64>,
{
    let total = 2 * nodes;
    let mut full: Vec<Complex64> = Vec::new();
    let mut half: Vec<Complex64> = Vec::new();
    let mut scale: Vec<f64> = Vec::new();
    for k in 0..total {
        let z = Complex64::from_polar(r, 2.0 * PI * k as f64 / total as f64);
        let v = f(z);
        if full.is_empty() {
            full = vec![Complex64::from(0.0); v.len()];
            half = full.clone();
            scale = vec![0.0; v.len()];
        }
        for (i, vi) in v.iter().enumerate() {
            let t = vi * z;
            full[i] += t;
            scale[i] += t.norm();
            if k % 2 == 0 {
                half[i] += t;
            }
        }
    }
    let mut out = Vec::with_capacity(full.len());
    for i in 0..full.len() {
        let (vf, vh, s) = (full[i] / total as f64, half[i] / nodes as f64, scale[i] / total as f64);
        check_contour(vf, vh, s)?;
        out.push(vf.re);
    }
    Ok(out)
}

fn check_contour(full: Complex64, half: Complex64, scale: f64) -> Result<()> {
    let tol = CONTOUR_TOL * scale.max(f64::MIN_POSITIVE);
    if (full - half).norm() > tol {
        return Err(Error::Contour(format!("doubling the nodes changed the value by {:e} (scale {scale:e})", (full - half).norm())));
    }
    if full.im.abs() > tol {
        return Err(Error::Contour(format!("imaginary residue {:e} exceeds tolerance (scale {scale:e})", full.im)));
    }
    Ok(())
}

/// p_j(y') of the product with one more factor, by the z-contour
/// (1/2πi)∮ dz/z χ_{0,n−1}(z) p̃_j(y'/z).
fn pushed_p_contour(base: &BiorthSystem, factor: &FactorizingWeight, yp: f64, contour: &ContourSpec) -> Result<Vec<f64>> {
    contour.validate()?;
    let n = base.n();
    let chi = chi_coefficients(factor, 0, n as i64 - 1)?;
    let r = contour.radius.unwrap_or(1.0);
    origin_contour(
        |z| {
            let c = eval_chi(&chi, 0, z) / z;
            let x = Complex64::from(yp) / z;
            (0..n).map(|j| c * horner_c(&base.p[j], x * x)).collect()
        },
        r,
        contour.nodes,
    )
}

/// Kernel of the product of a polynomial ensemble with one factorizing
/// factor: z-contour for the polynomial part, quadrature for 𝒜σ ⊛ q̃_j.
pub fn kernel_poly(yp: f64, y: f64, base: &BiorthSystem, factor: &FactorizingWeight, contour: &ContourSpec) -> Result<f64> {
    check_arg(yp)?;
    check_arg(y)?;
    let p = pushed_p_contour(base, factor, yp, contour)?;
    let mut s = 0.0;
    for (j, pj) in p.iter().enumerate() {
        if *pj != 0.0 {
            s += pj * factor.density.convolve(&base.q[j]).eval(y)?;
        }
    }
    Ok(s)
}

/// Series form of [`kernel_poly`].
pub fn kernel_poly_series(yp: f64, y: f64, base: &BiorthSystem, factor: &FactorizingWeight) -> Result<f64> {
    check_arg(yp)?;
    check_arg(y)?;
    base.pushed(factor)?.kernel(yp, y)
}

fn check_arg(y: f64) -> Result<()> {
    if !(y >= 0.0 && y.is_finite()) {
        return Err(Error::Domain(format!("kernel argument must be finite and ≥ 0, got {y}")));
    }
    Ok(())
}

/// Kernel with a fixed base matrix: Σ_j p_j(y') q_j(y) with p_j from the
/// z-contour over Lagrange polynomials in (y'/z)².
pub fn kernel_fixed(yp: f64, y: f64, atilde: &FixedBaseSpec, factor: &FactorizingWeight, contour: &ContourSpec) -> Result<f64> {
    check_arg(yp)?;
    check_arg(y)?;
    contour.validate()?;
    let a = check_nondegenerate(atilde)?;
    let n = a.len();
    let a2: Vec<f64> = a.iter().map(|x| x * x).collect();
    let lag: Vec<Vec<f64>> = (0..n).map(|j| lagrange_coefficients(&a2, j)).collect();
    let chi = chi_coefficients(factor, 0, n as i64 - 1)?;
    let r = contour.radius.unwrap_or(0.5 * a[0]);
    let p = origin_contour(
        |z| {
            let c = eval_chi(&chi, 0, z) / z;
            let x = Complex64::from(yp) / z;
            lag.iter().map(|l| c * horner_c(l, x * x)).collect()
        },
        r,
        contour.nodes,
    )?;
    let mut s = 0.0;
    for (j, pj) in p.iter().enumerate() {
        if *pj != 0.0 {
            s += pj * factor.density.eval(y / a[j])? / a[j];
        }
    }
    Ok(s)
}

/// Double-contour form of the fixed-base kernel: z' on a circle around
/// the origin, z on small circles around each ã_j, integrand
/// χ(y'/z')/z' · 𝒜σ(y/z)/(z'² − z²) · ∏(ã_i² − z'²)/(ã_i² − z²).
pub fn kernel_fixed_contour(
    yp: f64,
    y: f64,
    atilde: &FixedBaseSpec,
    factor: &FactorizingWeight,
    contour: &ContourSpec,
) -> Result<f64> {
    check_arg(yp)?;
    check_arg(y)?;
    contour.validate()?;
    let a = check_nondegenerate(atilde)?;
    let n = a.len();
    let a2: Vec<f64> = a.iter().map(|x| x * x).collect();
    let mut gap = 2.0 * a[0];
    for w in a.windows(2) {
        gap = gap.min(w[1] - w[0]);
    }
    let rho0 = contour.rho.unwrap_or(0.25 * gap);
    let hi = factor.support().1;
    let mut rho = Vec::with_capacity(n);
    for &aj in &a {
        let mut r = rho0;
        if hi.is_finite() {
            // branch point / support edge of 𝒜σ(y/z) at z = y/hi
            let edge = y / hi;
            if !(edge < aj) {
                return Err(Error::Contour(format!("y = {y} lies outside the holomorphy domain of 𝒜σ(y/z) near ã = {aj}")));
            }
            r = r.min(0.5 * (aj - edge));
        }
        rho.push(r);
    }
    let inner = a.iter().zip(&rho).map(|(aj, r)| aj - r).fold(f64::INFINITY, f64::min);
    let rmin = rho.iter().cloned().fold(f64::INFINITY, f64::min);
    let ru = contour.radius.unwrap_or(0.5 * inner);
    if ru + 0.5 * rmin > inner || rho0 > 0.5 * gap {
        return Err(Error::Contour(format!("contours collide: |z'| = {ru}, ρ = {rho0}, innermost circle at {inner}")));
    }
    if y > 0.0 && factor.density.eval_complex(Complex64::from(y)).is_none() {
        return Err(Error::Contour("weight has no analytic continuation".into()));
    }
    let chi = chi_coefficients(factor, 0, n as i64 - 1)?;
    // z nodes with weights A(z)·dz/(2πi), doubled node sets
    let nz = 2 * contour.circle_nodes;
    let mut zs: Vec<(Complex64, Complex64, bool)> = Vec::with_capacity(n * nz);
    for (j, &aj) in a.iter().enumerate() {
        for k in 0..nz {
            let e = Complex64::from_polar(rho[j], 2.0 * PI * k as f64 / nz as f64);
            let z = aj + e;
            let w = if y == 0.0 {
                Complex64::from(factor.density.eval(0.0)?)
            } else {
                factor.density.eval_complex(Complex64::from(y) / z).ok_or_else(|| Error::Contour("weight has no analytic continuation".into()))?
            };
            let den: Complex64 = a2.iter().map(|&ai| ai - z * z).product();
            zs.push((z * z, w / den * e / nz as f64, k % 2 == 0));
        }
    }
    let nu = 2 * contour.nodes;
    let (mut full, mut half, mut scale) = (Complex64::from(0.0), Complex64::from(0.0), 0.0);
    // every other node in both directions carries 2·2 times the weight
    let half_factor = Complex64::from(4.0);
    for k in 0..nu {
        let u = Complex64::from_polar(ru, 2.0 * PI * k as f64 / nu as f64);
        let u2 = u * u;
        let (mut gf, mut gh) = (Complex64::from(0.0), Complex64::from(0.0));
        for &(z2, w, even) in &zs {
            let t = w / (u2 - z2);
            gf += t;
            if even {
                gh += t;
            }
        }
        let pre: Complex64 = a2.iter().map(|&ai| ai - u2).product::<Complex64>() * eval_chi(&chi, 0, Complex64::from(yp) / u) * 2.0 / nu as f64;
        let tf = pre * gf;
        full += tf;
        scale += tf.norm();
        if k % 2 == 0 {
            half += pre * gh * half_factor;
        }
    }
    check_contour(full, half, scale)?;
    Ok(full.re)
}

/// R_k(x_1, …, x_k) = det[K(x_l, x_m)].
pub fn correlation_rk<K>(points: &[f64], kernel: K) -> Result<f64>
where
    K: Fn(f64, f64) -> Result<f64>,
{
    let k = points.len();
    let mut m = Matrix::zeros(k, k);
    for (l, &x) in points.iter().enumerate() {
        for (c, &y) in points.iter().enumerate() {
            m[(l, c)] = kernel(x, y)?;
        }
    }
    let (s, log) = lu_det_real(&m);
    Ok(if s == 0.0 { 0.0 } else { s * log.exp() })
}

/// Kernel values on a list of (y', y) pairs, evaluated in parallel.
pub fn kernel_batch<K>(pairs: &[(f64, f64)], kernel: K) -> Result<Vec<f64>>
where
    K: Fn(f64, f64) -> Result<f64> + Sync,
{
    pairs.par_iter().map(|&(yp, y)| kernel(yp, y)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mellin::PowerExp;

    #[test]
    fn chi_examples() {
        let g = FactorizingWeight::ginibre(0.0).unwrap();
        let z = Complex64::new(0.3, 0.7);
        assert!((chi_poly(&g, z, 0, 0).unwrap() - 1.0).norm() < 1e-15);
        assert!((chi_poly(&g, z, 0, 1).unwrap() - (1.0 + z * z / 2.0)).norm() < 1e-14);
        let j = FactorizingWeight::jacobi(0.0, 0.0, 1).unwrap();
        assert!((chi_poly(&j, z, 0, 0).unwrap() - 1.0).norm() < 1e-13);
        assert!(chi_poly(&g, z, 1, 0).is_err());
    }

    #[test]
    fn lagrange_is_cardinal() {
        let a2 = [1.0, 4.0, 9.0];
        for j in 0..3 {
            let c = lagrange_coefficients(&a2, j);
            for (i, x) in a2.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((horner(&c, *x) - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn n1_exponential_base() {
        let w = WeightFunction::new(PowerExp { p: 0.0, log_norm: 0.0 });
        let base = PolynomialEnsembleSpec::new(vec![w]).unwrap();
        let sys = gram_biorth(&base).unwrap();
        assert!((sys.p(0, 0.7) - 1.0).abs() < 1e-15);
        assert!((sys.q(0, 0.7).unwrap() - (-0.7f64).exp()).abs() < 1e-15);
        assert!(sys.max_offdiag() < 1e-15);
    }

    #[test]
    fn contour_spec_validation() {
        assert!(ContourSpec::default().validate().is_ok());
        assert!(ContourSpec { nodes: 100, ..Default::default() }.validate().is_err());
        assert!(ContourSpec { nodes: 32, ..Default::default() }.validate().is_err());
        assert!(ContourSpec { radius: Some(-1.0), ..Default::default() }.validate().is_err());
    }
}

//! Monte Carlo summaries and goodness-of-fit statistics.

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Monte Carlo estimate with one-sigma standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: Complex64,
    pub stderr: f64,
    pub samples: usize,
}

impl McEstimate {
    pub fn exact(value: Complex64) -> Self {
        McEstimate { value, stderr: 0.0, samples: 0 }
    }

    /// Distance to `target` in units of the standard error. Zero error with
    /// a mismatch beyond `1e-12` relative counts as infinitely many sigmas.
    pub fn zscore_to(&self, target: Complex64) -> f64 {
        zscore(self.value, target, self.stderr)
    }
}

pub fn zscore(a: Complex64, b: Complex64, sigma: f64) -> f64 {
    let d = (a - b).norm();
    if sigma > 0.0 {
        d / sigma
    } else if d <= 1e-12 * a.norm().max(b.norm()).max(1e-300) {
        0.0
    } else {
        f64::INFINITY
    }
}

pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    if let Some(&x0) = xs.first() {
        if xs.iter().all(|&x| x == x0) {
            return (x0, 0.0);
        }
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (v / n).sqrt())
}

pub fn mean_stderr_complex(xs: &[Complex64]) -> (Complex64, f64) {
    if let Some(&x0) = xs.first() {
        if xs.iter().all(|&x| x == x0) {
            return (x0, 0.0);
        }
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<Complex64>() / n;
    let v = xs.iter().map(|x| (x - m).norm_sqr()).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (v / n).sqrt())
}

/// Ratio estimator mean(num)/mean(den) with delta-method error.
pub fn ratio_estimate(num: &[Complex64], den: &[Complex64]) -> McEstimate {
    if let (Some(&a), Some(&b)) = (num.first(), den.first()) {
        if num.iter().all(|&x| x == a) && den.iter().all(|&x| x == b) {
            return McEstimate { value: a / b, stderr: 0.0, samples: num.len() };
        }
    }
    let n = num.len() as f64;
    let mn = num.iter().sum::<Complex64>() / n;
    let md = den.iter().sum::<Complex64>() / n;
    let r = mn / md;
    let v = num
        .iter()
        .zip(den)
        .map(|(a, b)| (a - r * b).norm_sqr())
        .sum::<f64>()
        / (n - 1.0).max(1.0);
    McEstimate { value: r, stderr: (v / n).sqrt() / md.norm(), samples: num.len() }
}

/// One-sample KS distance of an unsorted sample against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// KS distance of a weighted sample.
pub fn ks_weighted<F: Fn(f64) -> f64>(sample: &[(f64, f64)], cdf: F) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = s.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    let mut d: f64 = 0.0;
    for &(x, w) in &s {
        let f = cdf(x);
        d = d.max((f - acc / total).abs());
        acc += w;
        d = d.max((acc / total - f).abs());
    }
    d
}

/// Asymptotic Kolmogorov tail probability P(D_n > d), with the usual
/// small-sample correction of the argument.
pub fn ks_pvalue(d: f64, n_eff: f64) -> f64 {
    let sn = n_eff.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let t = 2.0 * (if k % 2 == 1 { 1.0 } else { -1.0 }) * (-2.0 * kf * kf * lambda * lambda).exp();
        s += t;
        if t.abs() < 1e-16 {
            break;
        }
    }
    s.clamp(0.0, 1.0)
}

/// Two-sample KS distance and p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    (d, ks_pvalue(d, ne))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub pvalue: f64,
    pub merged_bins: usize,
}

/// Pearson chi-square; bins with expected count < `min_expected` are merged
/// into their right neighbour (the last into its left one).
pub fn chi_square(observed: &[f64], expected: &[f64], min_expected: f64) -> Result<ChiSquare> {
    let mut obs = Vec::new();
    let mut exp = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (a, b) in observed.iter().zip(expected) {
        o += a;
        e += b;
        if e >= min_expected {
            obs.push(o);
            exp.push(e);
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match exp.last_mut() {
            Some(l) => {
                *l += e;
                *obs.last_mut().unwrap() += o;
            }
            None => {
                obs.push(o);
                exp.push(e);
            }
        }
    }
    if exp.len() < 2 {
        return Err(Error::Domain("chi-square needs at least two populated bins".into()));
    }
    let stat: f64 = obs.iter().zip(&exp).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = exp.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Domain(e.to_string()))?;
    Ok(ChiSquare { statistic: stat, dof, pvalue: dist.sf(stat), merged_bins: observed.len() - exp.len() })
}

/// CDF of a density tabulated on a grid; cubic Hermite interpolation using
/// exact cell integrals and the density at the nodes.
#[derive(Debug, Clone)]
pub struct TabulatedCdf {
    x: Vec<f64>,
    f: Vec<f64>,
    p: Vec<f64>,
}

impl TabulatedCdf {
    /// `grid` must be ascending; the CDF is 0 at grid[0].
    pub fn from_density<D: Fn(f64) -> f64 + Sync>(pdf: D, grid: &[f64]) -> Result<Self> {
        use rayon::prelude::*;
        let cells: Vec<Result<f64>> = grid
            .par_windows(2)
            .map(|w| integrate(&pdf, w[0], w[1], &[], QuadOptions::rel(1e-11).with_abs(1e-15)))
            .collect();
        let mut f = vec![0.0];
        for c in cells {
            let v = c?;
            f.push(f.last().unwrap() + v);
        }
        let p = grid.par_iter().map(|&x| pdf(x)).collect();
        Ok(TabulatedCdf { x: grid.to_vec(), f, p })
    }

    pub fn total(&self) -> f64 {
        *self.f.last().unwrap()
    }

    pub fn lo(&self) -> f64 {
        self.x[0]
    }

    pub fn hi(&self) -> f64 {
        *self.x.last().unwrap()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.x[0] {
            return 0.0;
        }
        if x >= self.hi() {
            return self.total();
        }
        let i = match self.x.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => return self.f[i],
            Err(i) => i - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let t = (x - self.x[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.f[i] + h10 * h * self.p[i] + h01 * self.f[i + 1] + h11 * h * self.p[i + 1]
    }

    /// Smallest x with cdf(x) ≥ q (bisection).
    pub fn quantile(&self, q: f64) -> f64 {
        let (mut a, mut b) = (self.lo(), self.hi());
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if self.cdf(m) < q {
                a = m;
            } else {
                b = m;
            }
            if b - a <= 1e-15 * b.abs().max(1e-300) {
                break;
            }
        }
        0.5 * (a + b)
    }
}

/// Grid with `per_unit` uniform cells between consecutive knots.
pub fn knot_grid(knots: &[f64], cells_per_segment: usize) -> Vec<f64> {
    let mut g = vec![knots[0]];
    for w in knots.windows(2) {
        for k in 1..=cells_per_segment {
            g.push(w[0] + (w[1] - w[0]) * k as f64 / cells_per_segment as f64);
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_exponential() {
        let grid = knot_grid(&[0.0, 1.0, 5.0, 40.0], 200);
        let t = TabulatedCdf::from_density(|x: f64| (-x).exp(), &grid).unwrap();
        for x in [0.013f64, 0.5, 2.2, 7.0] {
            assert!((t.cdf(x) - (1.0 - (-x).exp())).abs() < 1e-8, "{x}");
        }
        assert!((t.quantile(0.5) - 2f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn chi_square_merges_small_bins() {
        let c = chi_square(&[10.0, 1.0, 9.0, 10.0], &[10.0, 1.0, 9.0, 10.0], 5.0).unwrap();
        assert_eq!(c.statistic, 0.0);
        assert_eq!(c.merged_bins, 1);
        assert!((c.pvalue - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ks_against_uniform() {
        let s: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_statistic(&s, |x| x) <= 0.0005 + 1e-12);
        assert!(ks_pvalue(0.0005, 1000.0) > 0.99);
        assert!(ks_pvalue(0.1, 1000.0) < 1e-6);
        let (d, p) = ks_two_sample(&s, &s);
        assert_eq!(d, 0.0);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn ratio_of_constants_has_zero_error() {
        let num = vec![Complex64::from(2.0); 10];
        let den = vec![Complex64::from(1.0); 10];
        let r = ratio_estimate(&num, &den);
        assert_eq!(r.value, Complex64::from(2.0));
        assert_eq!(r.stderr, 0.0);
    }
}

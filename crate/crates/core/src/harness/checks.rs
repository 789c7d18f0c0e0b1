//! Individual checks; every function returns pass/fail outcomes and turns
//! evaluation errors into failed outcomes instead of aborting a suite.

use super::{BinRow, MarginalMethod, MellinSuiteConfig, BetaProductComparator, SpherePoint, TestOutcome, Thresholds};
use crate::ensembles::*;
use crate::error::{Error, Result};
use crate::kernels::*;
use crate::linalg::{build_canonical, haar_orthogonal, project_corank2, singular_spectrum, SingularSpectrum};
use crate::mellin::{mellin_numeric, FactorizingWeight, PowerBeta, PowerExp, WeightFunction};
use crate::quad::{integrate_box, try_integrate, Axis, QuadOptions};
use crate::rng::{derive_seed, substream};
use crate::samplers::{sample_induced_ginibre, sample_spectra, BaseSpec, FactorSpec, GinibreSpec, JacobiSpec, ProductSpec};
use crate::special::{is_gamma_pole, ln_beta, ln_gamma};
use crate::spherical::*;
use crate::stats::{chi_square, knot_grid, ks_statistic, zscore, TabulatedCdf};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::{LN_2, PI};

/// Outcomes plus an optional per-bin table.
#[derive(Debug, Clone, Default)]
pub struct CheckOutput {
    pub tests: Vec<TestOutcome>,
    pub bins: Vec<BinRow>,
}

fn guard<F: FnOnce() -> Result<Vec<TestOutcome>>>(name: &str, f: F) -> Vec<TestOutcome> {
    f().unwrap_or_else(|e| vec![TestOutcome::failed(name, &e)])
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    format!("({})", parts.join(","))
}

fn spectrum(v: &[f64]) -> Result<SingularSpectrum> {
    SingularSpectrum::new(v.to_vec())
}

fn rel_err(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Knots 0, hi·10⁻ᵏ (k = decades..1), the breakpoints and hi.
fn cdf_knots(hi: f64, breaks: &[f64], decades: i32) -> Vec<f64> {
    let mut k = vec![0.0];
    for d in (1..=decades).rev() {
        k.push(hi * 10f64.powi(-d));
    }
    k.extend(breaks.iter().copied().filter(|b| *b > 0.0 && *b < hi));
    k.push(hi);
    k.sort_by(f64::total_cmp);
    k.dedup();
    k
}

fn tabulate<D: Fn(f64) -> Result<f64> + Sync>(pdf: D, knots: &[f64]) -> Result<TabulatedCdf> {
    let cdf = TabulatedCdf::from_density(|x| pdf(x).unwrap_or(f64::NAN), &knot_grid(knots, 40))?;
    if !cdf.total().is_finite() {
        return Err(Error::Domain("analytic density could not be evaluated on the grid".into()));
    }
    Ok(cdf)
}

/// KS distance, CDF mass, chi-square over equal-probability bins and a
/// rescaled negative control for pooled values against an analytic CDF.
pub fn binned_comparison(
    name: &str,
    values: &[f64],
    cdf: &TabulatedCdf,
    bins: usize,
    values_per_sample: usize,
    th: &Thresholds,
) -> Result<CheckOutput> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let total = cdf.total();
    let ks_th = th.ks_for(values_per_sample);
    let mut tests = vec![
        TestOutcome::below(format!("{name} cdf mass"), "abs_err", (total - 1.0).abs(), th.cdf_mass),
        TestOutcome::below(format!("{name} ks"), "ks", ks_statistic(&v, |x| cdf.cdf(x)), ks_th),
    ];
    let mut edges = vec![cdf.lo()];
    for k in 1..bins {
        edges.push(cdf.quantile(total * k as f64 / bins as f64));
    }
    edges.push(cdf.hi());
    let mut observed = Vec::with_capacity(bins);
    let mut expected = Vec::with_capacity(bins);
    let mut rows = Vec::with_capacity(bins);
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let count = (v.partition_point(|x| *x <= hi) - v.partition_point(|x| *x <= lo)) as f64;
        let mass = cdf.cdf(hi) - cdf.cdf(lo);
        let e = n * mass;
        let width = hi - lo;
        observed.push(count);
        expected.push(e);
        rows.push(BinRow {
            bin_lo: lo,
            bin_hi: hi,
            empirical: if width > 0.0 { count / (n * width) } else { 0.0 },
            analytic: if width > 0.0 { mass / width } else { 0.0 },
            zscore: if e > 0.0 { (count - e) / e.sqrt() } else { 0.0 },
        });
    }
    let chi = chi_square(&observed, &expected, 5.0)?;
    tests.push(TestOutcome::above(format!("{name} chi-square"), "pvalue", chi.pvalue, th.chi2_pvalue));
    let scaled = ks_statistic(&v, |x| cdf.cdf(x / 1.1));
    tests.push(TestOutcome::above(format!("{name} ks vs 10% rescaled density"), "ks", scaled, ks_th).control());
    Ok(CheckOutput { tests, bins: rows })
}

fn factor_label(f: &FactorSpec) -> String {
    match f {
        FactorSpec::Ginibre(g) => format!("ginibre(nu={})", g.nu),
        FactorSpec::Jacobi(j) => format!("jacobi(N={},K1={})", j.big_n, j.k1),
    }
}

pub fn product_label(spec: &ProductSpec) -> String {
    let f: Vec<String> = spec.factors.iter().map(factor_label).collect();
    let base = match &spec.base {
        BaseSpec::FixedMatrix { a } => fmt_vec(a.values()),
        BaseSpec::CanonicalIdentity => "identity".into(),
    };
    format!("spectrum n={} [{}] a={}", spec.n, f.join("·"), base)
}

/// Pooled product spectra against the analytic one-point marginal.
pub fn spectrum_checks(
    spec: &ProductSpec,
    nsamples: usize,
    bins: usize,
    seed: u64,
    method: MarginalMethod,
    th: &Thresholds,
) -> Result<CheckOutput> {
    spec.validate()?;
    let n = spec.n;
    let ens = product_ensemble(spec)?;
    let kernel = match method {
        MarginalMethod::Kernel if n > 1 => Some(gram_biorth(&ens)?),
        _ => None,
    };
    if kernel.is_none() && n > 3 {
        return Err(Error::Config("quadrature marginal needs n ≤ 3; use marginal = \"kernel\"".into()));
    }
    let marginal = |y: f64| -> Result<f64> {
        match (&kernel, n) {
            (_, 1) => ens.density(&[y]),
            (Some(k), _) => Ok(k.kernel(y, y)? / n as f64),
            (None, _) => ens.marginal_quadrature(y, QuadOptions::rel(1e-9).with_abs(1e-14)),
        }
    };
    let spectra = sample_spectra(spec, nsamples, derive_seed(seed, "spectrum"))?;
    let values: Vec<f64> = spectra.iter().flat_map(|s| s.values().to_vec()).collect();
    let (mut hi, breaks) = ens.support();
    if !hi.is_finite() {
        hi = 1.5 * values.iter().cloned().fold(0.0, f64::max);
    }
    let cdf = tabulate(marginal, &cdf_knots(hi, &breaks, 4))?;
    binned_comparison(&product_label(spec), &values, &cdf, bins, n, th)
}

/// Quadrature normalization of fixed-base Ginibre and Jacobi densities.
pub fn fixed_normalization_checks(th: &Thresholds) -> Vec<TestOutcome> {
    let cases: Vec<(&str, Vec<f64>, Result<FactorizingWeight>)> = vec![
        ("ginibre(nu=0)", vec![1.0], FactorizingWeight::ginibre(0.0)),
        ("ginibre(nu=0)", vec![1.0, 2.0], FactorizingWeight::ginibre(0.0)),
        ("ginibre(nu=1)", vec![0.7, 1.6], FactorizingWeight::ginibre(1.0)),
        ("jacobi(nu=0,mu=0)", vec![1.0], FactorizingWeight::jacobi(0.0, 0.0, 1)),
        ("jacobi(nu=0.5,mu=1)", vec![0.5, 0.9], FactorizingWeight::jacobi(0.5, 1.0, 2)),
    ];
    let mut out = Vec::new();
    for (label, a, f) in cases {
        let name = format!("normalization {label} a={}", fmt_vec(&a));
        out.extend(guard(&name.clone(), || {
            let e = fixed_base_ensemble(&FixedBaseSpec::new(spectrum(&a)?)?, &f?)?;
            let v = e.normalization_quadrature(QuadOptions::rel(1e-9))?;
            Ok(vec![TestOutcome::below(name, "abs_err", (v - 1.0).abs(), th.normalization)])
        }));
    }
    out
}

/// Fixed base near degeneracy against the degenerate density, and the
/// n = 1 Jacobi density 3(1−a)².
pub fn degenerate_limit_checks(th: &Thresholds) -> Vec<TestOutcome> {
    let mut out = Vec::new();
    let points = [[0.1, 0.3], [0.2, 0.5], [0.35, 0.45], [0.05, 0.25], [0.15, 0.55]];
    let factors = [("ginibre(nu=0)", FactorizingWeight::ginibre(0.0)), ("jacobi(nu=0,mu=0.5)", FactorizingWeight::jacobi(0.0, 0.5, 2))];
    for (label, f) in factors {
        let name = format!("fixed a=(1,1.001) vs degenerate {label}");
        out.extend(guard(&name.clone(), || {
            let f = f?;
            let base = FixedBaseSpec::new(spectrum(&[1.0, 1.001])?)?;
            let mut worst: f64 = 0.0;
            for p in &points {
                let a = jpdf_fixed(p, &base, &f)?;
                let b = jpdf_degenerate(p, &f)?;
                worst = worst.max((a - b).abs() / b.abs());
            }
            Ok(vec![TestOutcome::below(name, "max_rel_err", worst, th.limit_rel)])
        }));
    }
    let name = "degenerate jacobi n=1 equals 3(1-a)^2";
    out.extend(guard(name, || {
        let f = FactorizingWeight::jacobi(0.0, 0.0, 1)?;
        let mut worst: f64 = 0.0;
        for a in [0.05, 0.3, 0.5, 0.77, 0.95] {
            worst = worst.max((jpdf_degenerate(&[a], &f)? - 3.0 * (1.0 - a) * (1.0 - a)).abs());
        }
        Ok(vec![TestOutcome::below(name, "max_abs_err", worst, th.closed_form)])
    }));
    out
}

/// Φ((2,0); (1,2)) = 2.
pub fn phi_named_value() -> TestOutcome {
    let name = "phi closed s=(2,0) a=(1,2) equals 2";
    match SphericalParameter::real(&[2.0, 0.0]).and_then(|s| phi_closed(&s, &spectrum(&[1.0, 2.0])?)) {
        Ok(v) => TestOutcome::below(name, "abs_err", (v - 2.0).norm(), 1e-12),
        Err(e) => TestOutcome::failed(name, &e),
    }
}

/// phi_closed against phi_montecarlo; the first point also carries a 2%
/// perturbed negative control.
pub fn phi_closed_vs_mc(points: &[SpherePoint], nsamples: usize, seed: u64, th: &Thresholds) -> Vec<TestOutcome> {
    let mut out = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let name = format!("phi closed vs mc s={} a={}", fmt_vec(&p.s), fmt_vec(&p.a));
        out.extend(guard(&name.clone(), || {
            let s = SphericalParameter::real(&p.s)?;
            let a = spectrum(&p.a)?;
            let closed = phi_closed(&s, &a)?;
            let mc = phi_montecarlo(&s, &a, nsamples, derive_seed(seed, &format!("phi-{i}")))?;
            let mut v = vec![TestOutcome::below(name.clone(), "zscore", mc.zscore_to(closed), th.zscore)];
            if i == 0 {
                v.push(TestOutcome::above(format!("{name} perturbed by 2%"), "zscore", mc.zscore_to(closed * 1.02), th.zscore).control());
            }
            Ok(v)
        }));
    }
    out
}

fn limit_parameter(n: usize) -> Vec<f64> {
    (1..=n).map(|j| 2.5 * (n - j) as f64 + 0.3).collect()
}

/// Φ at a = 1 through the confluent limit and just off it, for each n,
/// plus a Monte Carlo point near a = 1 at n = 2.
pub fn phi_limit_checks(ns: &[usize], nsamples: usize, seed: u64, th: &Thresholds) -> Vec<TestOutcome> {
    let mut out = Vec::new();
    for &n in ns {
        let name = format!("phi limit a->1 n={n}");
        out.extend(guard(&name.clone(), || {
            let s = SphericalParameter::real(&limit_parameter(n))?;
            let at = phi_normalization_limit(&s)?;
            let near: Vec<f64> = (0..n).map(|j| 1.0 + 1e-12 * j as f64).collect();
            let off = phi_closed(&s, &spectrum(&near)?)?;
            Ok(vec![
                TestOutcome::below(name.clone(), "abs_err", (at - 1.0).norm(), 1e-8),
                TestOutcome::below(format!("{name} at a=1+1e-12·j"), "abs_err", (off - 1.0).norm(), 1e-8),
            ])
        }));
    }
    let name = "phi near a=1 closed vs mc n=2";
    out.extend(guard(name, || {
        let s = SphericalParameter::real(&[4.0, 0.5])?;
        let a = spectrum(&[0.95, 1.05])?;
        let mc = phi_montecarlo(&s, &a, nsamples, derive_seed(seed, "phi-limit"))?;
        let closed = phi_closed(&s, &a)?;
        Ok(vec![
            TestOutcome::below(name, "zscore", mc.zscore_to(closed), th.zscore),
            TestOutcome::above(format!("{name} against the negated value"), "zscore", mc.zscore_to(-closed), th.zscore).control(),
        ])
    }));
    out
}

/// Both factorization identities at n = 2 with random induced Ginibre g, g′.
pub fn factorization_checks(s_list: &[Vec<f64>], nsamples: usize, seed: u64, th: &Thresholds) -> Vec<TestOutcome> {
    let mut out = Vec::new();
    let draw = |i: u64| {
        let mut rng = substream(derive_seed(seed, "factorization-g"), i);
        sample_induced_ginibre(&GinibreSpec { n: 2, nu: 0.0 }, &mut rng)
    };
    for (i, s) in s_list.iter().enumerate() {
        let name = format!("factorization s={}", fmt_vec(s));
        out.extend(guard(&name.clone(), || {
            let (g, h) = (draw(0)?, draw(1)?);
            let sp = SphericalParameter::real(s)?;
            let phi = factorization_check_phi(&sp, &g, &spectrum(&[1.0, 2.0])?, nsamples, derive_seed(seed, &format!("fphi-{i}")))?;
            let psi = factorization_check_psi(&sp, &g, &h, nsamples, derive_seed(seed, &format!("fpsi-{i}")))?;
            let sigma = (psi.lhs.stderr.powi(2) + (1.02 * psi.rhs.stderr).powi(2)).sqrt();
            Ok(vec![
                TestOutcome::below(format!("{name} phi"), "zscore", phi.zscore, th.zscore),
                TestOutcome::below(format!("{name} psi"), "zscore", psi.zscore, th.zscore),
                TestOutcome::above(format!("{name} psi perturbed by 2%"), "zscore", zscore(psi.lhs.value, psi.rhs.value * 1.02, sigma), th.zscore)
                    .control(),
            ])
        }));
    }
    out
}

/// Transform of a convolved polynomial ensemble against the product of
/// the base and factor transforms.
pub fn transform_factorization_checks(th: &Thresholds) -> Vec<TestOutcome> {
    let name = "transform factorization";
    guard(name, || {
        let base = PolynomialEnsembleSpec::new(muttalib_borodin_jacobi_weights(2, 0.5, 0.0)?)?;
        let factors = [FactorizingWeight::ginibre(0.5)?, FactorizingWeight::jacobi(0.0, 0.5, 2)?];
        let mut worst: f64 = 0.0;
        let mut control: f64 = f64::INFINITY;
        for f in &factors {
            let conv = base.convolved(f)?;
            for s in [[2.0, 0.0], [3.5, 1.0], [5.0, 0.5]] {
                let sp = SphericalParameter::real(&s)?;
                let lhs = conv.spherical_transform(&sp)?;
                let rhs = base.spherical_transform(&sp)? * spherical_transform_factorizing(&sp, f)?;
                worst = worst.max(rel_err(lhs, rhs));
                let shifted = SphericalParameter::real(&[s[0] + 1.0, s[1]])?;
                let wrong = base.spherical_transform(&sp)? * spherical_transform_factorizing(&shifted, f)?;
                control = control.min(rel_err(lhs, wrong));
            }
        }
        Ok(vec![
            TestOutcome::below(name, "max_rel_err", worst, th.mellin_rel),
            TestOutcome::above(format!("{name} with shifted factor parameter"), "min_rel_err", control, th.mellin_rel).control(),
        ])
    })
}

/// O(2) at n = 1 exactly and O(4) at n = 2 by Monte Carlo.
pub fn harish_chandra_checks(nsamples: usize, seed: u64, th: &Thresholds) -> Vec<TestOutcome> {
    let mut out = Vec::new();
    let name = "harish-chandra n=1 exact";
    out.extend(guard(name, || {
        let mut worst: f64 = 0.0;
        for (x, y) in [(0.5, 1.3), (1.0, 2.0), (2.0, 0.7), (0.1, 0.2)] {
            let closed = harish_chandra_o2n(&spectrum(&[x])?, &spectrum(&[y])?)?;
            worst = worst.max((closed - harish_chandra_o2_exact(x, y)?).abs());
        }
        Ok(vec![TestOutcome::below(name, "max_abs_err", worst, th.closed_form)])
    }));
    let name = "harish-chandra n=2 closed vs mc";
    out.extend(guard(name, || {
        let x = spectrum(&[1.0, 2.0])?;
        let y = spectrum(&[1.0, 3.0])?;
        let closed = harish_chandra_o2n(&x, &y)?;
        let wrong = harish_chandra_o2n(&x, &y.scaled(1.05)?)?;
        let mc = harish_chandra_montecarlo(&x, &y, nsamples, derive_seed(seed, "harish-chandra"))?;
        Ok(vec![
            TestOutcome::below(name, "zscore", mc.zscore_to(Complex64::from(closed)), th.zscore),
            TestOutcome::above(format!("{name} with y scaled by 1.05"), "zscore", mc.zscore_to(Complex64::from(wrong)), th.zscore).control(),
        ])
    }));
    out
}

/// Recursion by quadrature against the closed form.
pub fn recursion_checks(points: &[SpherePoint], th: &Thresholds) -> Vec<TestOutcome> {
    points
        .par_iter()
        .map(|p| {
            let name = format!("fn recursion s={} a={}", fmt_vec(&p.s), fmt_vec(&p.a));
            guard(&name.clone(), || {
                let s = SphericalParameter::real(&p.s)?;
                let a = spectrum(&p.a)?;
                let r = fn_recurrence(&s, &a, QuadOptions::rel(1e-10))?;
                let c = fn_closed(&s, &a)?;
                Ok(vec![TestOutcome::below(name, "rel_err", rel_err(r, c), th.recursion_rel)])
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Projection density against its piecewise form, its normalization and
/// Haar O(2n) samples.
pub fn corank2_checks(a: &[f64], nsamples: usize, bins: usize, seed: u64, th: &Thresholds) -> Result<CheckOutput> {
    let spec = spectrum(a)?;
    let n = spec.n();
    if !(2..=3).contains(&n) {
        return Err(Error::Config(format!("corank-2 suite supports n = 2, 3; got {n}")));
    }
    let av = spec.values().to_vec();
    let label = format!("corank2 a={}", fmt_vec(&av));
    let mut tests = Vec::new();
    if n == 2 {
        let (a1, a2) = (av[0], av[1]);
        let piece = |x: f64| if x < a1 { 2.0 / (a1 + a2) } else { 2.0 * (a2 - x) / (a2 * a2 - a1 * a1) };
        let name = format!("{label} piecewise form");
        tests.extend(guard(&name.clone(), || {
            let mut worst: f64 = 0.0;
            for k in 1..20 {
                let x = a2 * k as f64 / 20.0;
                worst = worst.max((corank2_jpdf(&[x], &spec)? - piece(x)).abs());
            }
            Ok(vec![TestOutcome::below(name, "max_abs_err", worst, th.closed_form)])
        }));
    }
    let name = format!("{label} normalization");
    tests.extend(guard(&name.clone(), || {
        let ax = Axis::with_breaks(0.0, av[n - 1], &av);
        let axes = vec![ax; n - 1];
        let v: f64 = integrate_box(&|x: &[f64]| corank2_jpdf(x, &spec), &axes, QuadOptions::rel(1e-12).with_abs(1e-14))?;
        Ok(vec![TestOutcome::below(name, "abs_err", (v - 1.0).abs(), th.corank2_normalization)])
    }));
    let x = build_canonical(&spec);
    let mseed = derive_seed(seed, "corank2");
    let values: Vec<f64> = (0..nsamples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(mseed, i);
            let k = haar_orthogonal(2 * n, &mut rng);
            let p = project_corank2(&x.conjugate(k.matrix())?)?;
            Ok(singular_spectrum(&p)?.values().to_vec())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?
        .into_iter()
        .flatten()
        .collect();
    let marginal = |y: f64| -> Result<f64> {
        if n == 2 {
            corank2_jpdf(&[y], &spec)
        } else {
            let v: f64 = try_integrate(|t: f64| corank2_jpdf(&[y, t], &spec), 0.0, av[n - 1], &av, QuadOptions::rel(1e-11).with_abs(1e-14))?;
            Ok(v)
        }
    };
    let cdf = tabulate(marginal, &cdf_knots(av[n - 1], &av, 0))?;
    let mut out = binned_comparison(&label, &values, &cdf, bins, n - 1, th)?;
    // uniform density on (0, a_n) as a wrong model
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let total = sorted.len() as f64;
    let (obs, exp): (Vec<f64>, Vec<f64>) = out
        .bins
        .iter()
        .map(|b| {
            let c = (sorted.partition_point(|x| *x <= b.bin_hi) - sorted.partition_point(|x| *x <= b.bin_lo)) as f64;
            (c, total * (b.bin_hi - b.bin_lo) / av[n - 1])
        })
        .unzip();
    let chi = chi_square(&obs, &exp, 5.0)?;
    tests.append(&mut out.tests);
    tests.push(TestOutcome::below(format!("{label} chi-square against a uniform density"), "pvalue", chi.pvalue, th.chi2_pvalue).control());
    Ok(CheckOutput { tests, bins: out.bins })
}

fn exp_weight() -> WeightFunction {
    WeightFunction::new(PowerExp { p: 0.0, log_norm: 0.0 })
}

fn sample_pairs(lo: f64, hi: f64) -> Vec<(f64, f64)> {
    (0..20)
        .map(|i| {
            let t = (i as f64 + 0.5) / 20.0;
            let u = ((i * 7 % 20) as f64 + 0.5) / 20.0;
            (lo + (hi - lo) * t, lo + (hi - lo) * u)
        })
        .collect()
}

fn max_diff<F, G>(pairs: &[(f64, f64)], f: F, g: G) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
    G: Fn(f64, f64) -> Result<f64> + Sync,
{
    let a = kernel_batch(pairs, f)?;
    let b = kernel_batch(pairs, g)?;
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

/// Gram identities, traces, series against contour forms, R₁ against
/// quadrature marginals and the diagonal of R₂.
pub fn kernel_checks(contour: &ContourSpec, th: &Thresholds) -> Vec<TestOutcome> {
    let c = *contour;
    let quad = QuadOptions::rel(1e-11);
    let mut out = Vec::new();

    let name = "kernel gram identity";
    out.extend(guard(name, || {
        let g = FactorizingWeight::ginibre(0.0)?;
        let j = FactorizingWeight::jacobi(0.0, 0.5, 2)?;
        let mb = gram_biorth(&PolynomialEnsembleSpec::new(muttalib_borodin_jacobi_weights(2, 0.0, 0.0)?)?)?;
        let systems = [
            ("muttalib-borodin n=2", mb.clone()),
            ("ginibre-degenerate n=2", gram_biorth(&PolynomialEnsembleSpec::new(ginibre_degenerate_weights(2, 0.0)?)?)?),
            ("muttalib-borodin times jacobi", mb.pushed(&j)?),
            ("fixed ginibre a=(1,2)", fixed_biorth(&FixedBaseSpec::new(spectrum(&[1.0, 2.0])?)?, &g)?),
            ("fixed jacobi a=(0.5,0.9)", fixed_biorth(&FixedBaseSpec::new(spectrum(&[0.5, 0.9])?)?, &j)?),
        ];
        let mut v = Vec::new();
        for (label, s) in systems {
            let (_, dev) = s.gram_quadrature(quad)?;
            v.push(TestOutcome::below(format!("{name} {label}"), "max_abs_err", dev, th.gram));
        }
        Ok(v)
    }));

    let name = "kernel trace";
    out.extend(guard(name, || {
        let g = FactorizingWeight::ginibre(0.0)?;
        let opts = QuadOptions::rel(1e-9).with_abs(1e-12);
        let mut v = Vec::new();
        for a in [vec![1.0], vec![1.0, 2.0]] {
            let base = FixedBaseSpec::new(spectrum(&a)?)?;
            let t: f64 = try_integrate(|y: f64| kernel_fixed(y, y, &base, &g, &c), 0.0, f64::INFINITY, &a, opts)?;
            v.push(TestOutcome::below(format!("{name} fixed a={}", fmt_vec(&a)), "abs_err", (t - a.len() as f64).abs(), th.trace));
        }
        let bases = [
            ("exponential n=1", PolynomialEnsembleSpec::new(vec![exp_weight()])?),
            ("ginibre-degenerate n=2", PolynomialEnsembleSpec::new(ginibre_degenerate_weights(2, 0.0)?)?),
        ];
        for (label, b) in bases {
            let sys = gram_biorth(&b)?;
            let t: f64 = try_integrate(|y: f64| kernel_poly(y, y, &sys, &g, &c), 0.0, f64::INFINITY, &[1.0], opts)?;
            v.push(TestOutcome::below(format!("{name} product {label}"), "abs_err", (t - b.n() as f64).abs(), th.trace));
        }
        Ok(v)
    }));

    let name = "kernel series vs contour";
    out.extend(guard(name, || {
        let g = FactorizingWeight::ginibre(0.0)?;
        let j = FactorizingWeight::jacobi(0.0, 0.5, 2)?;
        let mut v = Vec::new();
        let base2 = FixedBaseSpec::new(spectrum(&[1.0, 2.0])?)?;
        let series = fixed_biorth(&base2, &g)?;
        let d = max_diff(&sample_pairs(0.0, 4.0), |a, b| kernel_fixed(a, b, &base2, &g, &c), |a, b| series.kernel(a, b))?;
        v.push(TestOutcome::below(format!("{name} fixed ginibre a=(1,2)"), "max_abs_err", d, th.kernel_agreement));
        let sys = gram_biorth(&PolynomialEnsembleSpec::new(muttalib_borodin_jacobi_weights(2, 0.0, 0.0)?)?)?;
        let d = max_diff(&sample_pairs(0.0, 0.95), |a, b| kernel_poly(a, b, &sys, &j, &c), |a, b| kernel_poly_series(a, b, &sys, &j))?;
        v.push(TestOutcome::below(format!("{name} product muttalib-borodin times jacobi"), "max_abs_err", d, th.kernel_agreement));
        let cases: [(&[f64], &FactorizingWeight, f64, &str); 3] =
            [(&[1.0], &g, 4.0, "ginibre a=(1)"), (&[1.0, 2.0], &g, 4.0, "ginibre a=(1,2)"), (&[0.5, 0.9], &j, 0.45, "jacobi a=(0.5,0.9)")];
        for (a, f, hi, label) in cases {
            let base = FixedBaseSpec::new(spectrum(a)?)?;
            let d = max_diff(&sample_pairs(0.0, hi), |x, y| kernel_fixed_contour(x, y, &base, f, &c), |x, y| kernel_fixed(x, y, &base, f, &c))?;
            v.push(TestOutcome::below(format!("{name} double contour {label}"), "max_abs_err", d, th.kernel_agreement));
        }
        let doubled = ContourSpec { nodes: 2 * c.nodes, ..c };
        let d = max_diff(&sample_pairs(0.0, 4.0), |a, b| kernel_fixed(a, b, &base2, &g, &c), |a, b| kernel_fixed(a, b, &base2, &g, &doubled))?;
        v.push(TestOutcome::below(format!("{name} node doubling"), "max_abs_err", d, CONTOUR_TOL));
        Ok(v)
    }));

    let name = "kernel R1 vs quadrature marginal";
    out.extend(guard(name, || {
        let cases: Vec<(Vec<f64>, FactorizingWeight, Vec<f64>, &str)> = vec![
            (vec![1.0, 2.0], FactorizingWeight::ginibre(0.0)?, vec![0.05, 0.3, 0.8, 1.5, 2.5, 4.0, 7.0], "ginibre a=(1,2)"),
            (vec![0.5, 0.9], FactorizingWeight::jacobi(0.0, 0.5, 2)?, vec![0.05, 0.2, 0.35, 0.45, 0.6, 0.75, 0.85], "jacobi a=(0.5,0.9)"),
        ];
        let mut v = Vec::new();
        for (a, f, ys, label) in cases {
            let base = FixedBaseSpec::new(spectrum(&a)?)?;
            let ens = fixed_base_ensemble(&base, &f)?;
            let wrong = FixedBaseSpec::new(spectrum(&[a[0], a[1] * 1.1])?)?;
            let (mut worst, mut control): (f64, f64) = (0.0, 0.0);
            for y in ys {
                let m = 2.0 * ens.marginal_quadrature(y, QuadOptions::rel(1e-11).with_abs(1e-14))?;
                worst = worst.max((correlation_rk(&[y], |p, q| kernel_fixed(p, q, &base, &f, &c))? - m).abs());
                control = control.max((correlation_rk(&[y], |p, q| kernel_fixed(p, q, &wrong, &f, &c))? - m).abs());
            }
            v.push(TestOutcome::below(format!("{name} {label}"), "sup_abs_err", worst, th.marginal_sup));
            v.push(TestOutcome::above(format!("{name} {label} with a_2 scaled by 1.1"), "sup_abs_err", control, th.marginal_sup).control());
        }
        Ok(v)
    }));

    let name = "kernel R2";
    out.extend(guard(name, || {
        let g = FactorizingWeight::ginibre(0.0)?;
        let base = FixedBaseSpec::new(spectrum(&[1.0, 2.0])?)?;
        let k = |p: f64, q: f64| kernel_fixed(p, q, &base, &g, &c);
        let mut diag: f64 = 0.0;
        for y in [0.1, 0.6, 1.3, 2.2, 3.7] {
            diag = diag.max(correlation_rk(&[y, y], k)?.abs());
        }
        let mut jp: f64 = 0.0;
        for p in [[0.3, 1.1], [0.7, 2.5], [1.9, 0.2], [0.05, 3.0]] {
            jp = jp.max((correlation_rk(&p, k)? / 2.0 - jpdf_fixed(&p, &base, &g)?).abs());
        }
        Ok(vec![
            TestOutcome::below(format!("{name} on the diagonal"), "max_abs", diag, th.diagonal),
            TestOutcome::below(format!("{name}/2 vs jpdf"), "max_abs_err", jp, th.marginal_sup),
        ])
    }));
    out
}

/// Closed Mellin transforms of the catalogue against quadrature, and
/// ℳ[f⊛h] = ℳf·ℳh with the convolution evaluated numerically.
pub fn mellin_checks(cfg: &MellinSuiteConfig, th: &Thresholds) -> Vec<TestOutcome> {
    let mut out = Vec::new();
    let js: Vec<Complex64> = (0..=cfg.jmax).map(|j| Complex64::from(2.0 * j as f64 + 1.0)).collect();
    let worst_over = |f: &FactorizingWeight| -> Result<(f64, f64)> {
        let (mut worst, mut control): (f64, f64) = (0.0, f64::INFINITY);
        for &s in &js {
            let exact = f.mellin(s)?;
            let quad = mellin_numeric(&f.density, s)?;
            worst = worst.max(rel_err(quad, exact));
            control = control.min(rel_err(mellin_numeric(&f.density, s + 0.5)?, exact));
        }
        Ok((worst, control))
    };
    for &nu in &cfg.nu {
        let name = format!("mellin ginibre nu={nu}");
        out.extend(guard(&name.clone(), || {
            let (w, c) = worst_over(&FactorizingWeight::ginibre(nu)?)?;
            Ok(vec![
                TestOutcome::below(name.clone(), "max_rel_err", w, th.mellin_rel),
                TestOutcome::above(format!("{name} at s+1/2"), "min_rel_err", c, th.mellin_rel).control(),
            ])
        }));
        for &mu in &cfg.mu {
            for &n in &cfg.jacobi_n {
                let name = format!("mellin jacobi nu={nu} mu={mu} n={n}");
                out.extend(guard(&name.clone(), || {
                    let (w, _) = worst_over(&FactorizingWeight::jacobi(nu, mu, n)?)?;
                    Ok(vec![TestOutcome::below(name, "max_rel_err", w, th.mellin_rel)])
                }));
            }
        }
    }
    let name = "mellin convolution factorization";
    out.extend(guard(name, || {
        let pairs = [
            (FactorizingWeight::ginibre(0.5)?, FactorizingWeight::ginibre(0.0)?),
            (FactorizingWeight::ginibre(0.0)?, FactorizingWeight::jacobi(0.5, 0.0, 1)?),
            (FactorizingWeight::jacobi(0.0, 0.5, 2)?, FactorizingWeight::jacobi(1.0, 0.0, 1)?),
        ];
        let mut worst: f64 = 0.0;
        for (f, h) in &pairs {
            let conv = f.density.convolve(&h.density);
            for &s in &cfg.convolution_s {
                let s = Complex64::from(s);
                worst = worst.max(rel_err(mellin_numeric(&conv, s)?, f.mellin(s)? * h.mellin(s)?));
            }
        }
        Ok(vec![TestOutcome::below(name, "max_rel_err", worst, th.mellin_rel)])
    }));
    out
}

/// lnΓ(2s+2ν) − lnΓ(2s+2μ+2ν+2n+1+shift) − lnΓ(s+ν) − lnΓ(s+ν+½)
/// + lnΓ(s+μ+ν+n+½) + lnΓ(s+μ+ν+n+1).
fn jacobi_log_ratio(s: Complex64, nu: f64, mu: f64, n: usize, shift: f64) -> Result<Complex64> {
    let nf = n as f64;
    let args = [
        (2.0 * s + 2.0 * nu, 1.0),
        (2.0 * s + 2.0 * mu + 2.0 * nu + 2.0 * nf + 1.0 + shift, -1.0),
        (s + nu, -1.0),
        (s + nu + 0.5, -1.0),
        (s + mu + nu + nf + 0.5, 1.0),
        (s + mu + nu + nf + 1.0, 1.0),
    ];
    let mut acc = Complex64::from(0.0);
    for (z, sign) in args {
        if is_gamma_pole(z) {
            return Err(Error::Domain(format!("Gamma pole at {z} on the s-grid")));
        }
        acc += ln_gamma(z) * sign;
    }
    Ok(acc)
}

/// Largest distance of the log-ratio from its grid mean, imaginary parts
/// taken modulo 2π.
fn jacobi_log_deviation(sgrid: &[Complex64], nu: f64, mu: f64, n: usize, shift: f64) -> Result<(f64, Complex64)> {
    let vals: Vec<Complex64> = sgrid.iter().map(|&s| jacobi_log_ratio(s, nu, mu, n, shift)).collect::<Result<_>>()?;
    let wrap = |x: f64| (x + PI).rem_euclid(2.0 * PI) - PI;
    let v0 = vals[0];
    let diffs: Vec<Complex64> = vals.iter().map(|v| Complex64::new(v.re - v0.re, wrap(v.im - v0.im))).collect();
    let mean = diffs.iter().sum::<Complex64>() / diffs.len() as f64;
    let dev = diffs.iter().map(|d| (d - mean).norm()).fold(0.0, f64::max);
    Ok((dev, v0 + mean))
}

/// s-independence of the Gamma ratio, its constant −(2μ+2n+1)ln 2, and
/// the perturbed exponent 2n+1 → 2n as negative control.
pub fn gamma_identity(nu: f64, mu: f64, n: usize, sgrid: &[Complex64], shift: f64, th: &Thresholds) -> Vec<TestOutcome> {
    let name = format!("jacobi gamma ratio nu={nu} mu={mu} n={n}");
    guard(&name.clone(), || {
        if !(nu > -0.5) || !(mu > -(n as f64) - 0.5) || n == 0 {
            return Err(Error::Domain(format!("parameters outside the validity domain: nu={nu}, mu={mu}, n={n}")));
        }
        if sgrid.is_empty() {
            return Err(Error::Domain("empty s-grid".into()));
        }
        let (dev, constant) = jacobi_log_deviation(sgrid, nu, mu, n, shift)?;
        let mut v = vec![TestOutcome::below(name.clone(), "max_dev", dev, th.identity)];
        if shift == 0.0 {
            let want = -(2.0 * mu + 2.0 * n as f64 + 1.0) * LN_2;
            v.push(TestOutcome::below(format!("{name} constant"), "abs_err", (constant - want).norm(), th.identity));
        }
        let (bad, _) = jacobi_log_deviation(sgrid, nu, mu, n, shift - 1.0)?;
        v.push(TestOutcome::above(format!("{name} with exponent 2n"), "max_dev", bad, th.negative_control).control());
        Ok(v)
    })
}

fn beta_weight(alpha: f64, beta: f64) -> Result<WeightFunction> {
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::Domain(format!("Beta({alpha}, {beta}) needs positive parameters")));
    }
    let log_norm = -ln_beta(Complex64::from(alpha), Complex64::from(beta)).re;
    Ok(WeightFunction::new(PowerBeta { p: alpha - 1.0, q: beta - 1.0, log_norm }))
}

/// Squared n = 1 real Jacobi spectra against the product of two Beta
/// variables from the complex side.
pub fn beta_product_montecarlo(
    jacobi: &JacobiSpec,
    comparator: Option<&BetaProductComparator>,
    nsamples: usize,
    bins: usize,
    seed: u64,
    th: &Thresholds,
) -> Result<CheckOutput> {
    jacobi.validate()?;
    if jacobi.n != 1 {
        return Err(Error::Config("the distributional comparison is implemented for n = 1".into()));
    }
    let c = comparator.copied().unwrap_or_else(|| BetaProductComparator::from_parameters(jacobi.nu(), jacobi.mu(), jacobi.n));
    let spec = ProductSpec { n: 1, factors: vec![FactorSpec::Jacobi(*jacobi)], base: BaseSpec::FixedMatrix { a: SingularSpectrum::ones(1) } };
    let values: Vec<f64> = sample_spectra(&spec, nsamples, derive_seed(seed, "beta-product"))?.iter().map(|s| s.values()[0].powi(2)).collect();
    let density = beta_weight(c.alpha1, c.beta1)?.convolve(&beta_weight(c.alpha2, c.beta2)?);
    let cdf = tabulate(|t| density.eval(t), &cdf_knots(1.0, &[0.5], 8))?;
    let label = format!("real jacobi n=1 (N={},K1={}) squared vs beta product", jacobi.big_n, jacobi.k1);
    binned_comparison(&label, &values, &cdf, bins, 1, th)
}

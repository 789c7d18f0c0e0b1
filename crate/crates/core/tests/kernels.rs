use proptest::prelude::*;
use skewprod::ensembles::*;
use skewprod::kernels::*;
use skewprod::mellin::{FactorizingWeight, PowerExp, WeightFunction};
use skewprod::quad::{integrate_box, try_integrate, Axis, QuadOptions};
use skewprod::SingularSpectrum;

fn fixed(v: &[f64]) -> FixedBaseSpec {
    FixedBaseSpec::new(SingularSpectrum::new(v.to_vec()).unwrap()).unwrap()
}

fn ginibre() -> FactorizingWeight {
    FactorizingWeight::ginibre(0.0).unwrap()
}

fn exp_base() -> PolynomialEnsembleSpec {
    PolynomialEnsembleSpec::new(vec![WeightFunction::new(PowerExp { p: 0.0, log_norm: 0.0 })]).unwrap()
}

#[test]
fn gram_identity_of_base_systems() {
    let opts = QuadOptions::rel(1e-12);
    for w in [muttalib_borodin_jacobi_weights(2, 0.0, 0.0).unwrap(), ginibre_degenerate_weights(2, 0.0).unwrap()] {
        let sys = gram_biorth(&PolynomialEnsembleSpec::new(w).unwrap()).unwrap();
        assert!(sys.max_offdiag() < 1e-12);
        let (_, dev) = sys.gram_quadrature(opts).unwrap();
        assert!(dev < 1e-10, "{dev}");
        for j in 0..2 {
            assert_eq!(sys.p_coefficients(j).len(), 2);
        }
        assert_eq!(sys.p_coefficients(0)[1], 0.0);
    }
}

#[test]
fn gram_identity_of_pushed_and_fixed_systems() {
    let opts = QuadOptions::rel(1e-11);
    let base = gram_biorth(&PolynomialEnsembleSpec::new(ginibre_degenerate_weights(2, 0.0).unwrap()).unwrap()).unwrap();
    let (_, dev) = base.pushed(&ginibre()).unwrap().gram_quadrature(opts).unwrap();
    assert!(dev < 1e-8, "{dev}");
    let (_, dev) = fixed_biorth(&fixed(&[1.0, 2.0]), &ginibre()).unwrap().gram_quadrature(opts).unwrap();
    assert!(dev < 1e-8, "{dev}");
    let j = FactorizingWeight::jacobi(0.5, 0.0, 2).unwrap();
    let (_, dev) = fixed_biorth(&fixed(&[0.5, 0.9]), &j).unwrap().gram_quadrature(opts).unwrap();
    assert!(dev < 1e-8, "{dev}");
}

#[test]
fn rejects_singular_bimoment() {
    let w = WeightFunction::new(PowerExp { p: 0.0, log_norm: 0.0 });
    match PolynomialEnsembleSpec::new(vec![w.clone(), w]) {
        Err(_) => {}
        Ok(spec) => assert!(gram_biorth(&spec).is_err()),
    }
}

#[test]
fn poly_kernel_n1_reduces_to_convolution() {
    let base = exp_base();
    let sys = gram_biorth(&base).unwrap();
    let c = ContourSpec::default();
    for y in [0.1, 0.5, 1.3, 4.0] {
        let k = kernel_poly(y, y, &sys, &ginibre(), &c).unwrap();
        let p = jpdf_fact_poly(&[y], &base, &ginibre()).unwrap();
        assert!((k - p).abs() < 1e-8 * p, "{y}: {k} vs {p}");
    }
}

#[test]
fn poly_kernel_trace_and_series() {
    let opts = QuadOptions::rel(1e-9);
    let c = ContourSpec::default();
    let g = ginibre();
    let base1 = gram_biorth(&exp_base()).unwrap();
    let base2 = gram_biorth(&PolynomialEnsembleSpec::new(ginibre_degenerate_weights(2, 0.0).unwrap()).unwrap()).unwrap();
    for (n, sys) in [(1.0, &base1), (2.0, &base2)] {
        let t: f64 = try_integrate(|y: f64| kernel_poly(y, y, sys, &g, &c), 0.0, f64::INFINITY, &[1.0], opts).unwrap();
        assert!((t - n).abs() < 1e-6, "{n}: {t}");
        for (yp, y) in [(0.3, 0.7), (1.5, 0.2), (2.0, 2.0), (0.0, 1.0)] {
            let a = kernel_poly(yp, y, sys, &g, &c).unwrap();
            let b = kernel_poly_series(yp, y, sys, &g).unwrap();
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
    }
}

#[test]
fn poly_kernel_n2_matches_marginal() {
    let base = PolynomialEnsembleSpec::new(muttalib_borodin_jacobi_weights(2, 0.0, 0.0).unwrap()).unwrap();
    let sys = gram_biorth(&base).unwrap();
    let j = FactorizingWeight::jacobi(0.0, 0.5, 2).unwrap();
    let prod = base.convolved(&j).unwrap();
    let c = ContourSpec::default();
    for y in [0.05, 0.2, 0.4, 0.7] {
        let r1 = correlation_rk(&[y], |a, b| kernel_poly(a, b, &sys, &j, &c)).unwrap();
        let m = 2.0 * prod.marginal_quadrature(y, QuadOptions::rel(1e-10)).unwrap();
        assert!((r1 - m).abs() < 1e-5, "{y}: {r1} vs {m}");
    }
}

#[test]
fn fixed_kernel_n1_ginibre() {
    let c = ContourSpec::default();
    for (yp, y) in [(0.2, 0.5), (1.0, 3.0), (4.0, 0.1)] {
        let k = kernel_fixed(yp, y, &fixed(&[1.0]), &ginibre(), &c).unwrap();
        assert!((k - (-y as f64).exp()).abs() < 1e-13);
    }
    let r1 = correlation_rk(&[0.8], |a, b| kernel_fixed(a, b, &fixed(&[1.0]), &ginibre(), &c)).unwrap();
    assert!((r1 - jpdf_fixed(&[0.8], &fixed(&[1.0]), &ginibre()).unwrap()).abs() < 1e-13);
}

#[test]
fn fixed_kernel_series_contour_and_doubling() {
    let c = ContourSpec::default();
    let c2 = ContourSpec { nodes: 512, ..c };
    let base = fixed(&[1.0, 2.0]);
    let sys = fixed_biorth(&base, &ginibre()).unwrap();
    for (yp, y) in [(0.3, 0.7), (1.5, 0.2), (2.5, 2.5), (0.0, 0.0)] {
        let a = kernel_fixed(yp, y, &base, &ginibre(), &c).unwrap();
        let b = sys.kernel(yp, y).unwrap();
        assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        let d = kernel_fixed(yp, y, &base, &ginibre(), &c2).unwrap();
        assert!((a - d).abs() < 1e-9);
    }
}

fn grid20(lo: f64, hi: f64) -> Vec<(f64, f64)> {
    (0..20)
        .map(|i| {
            let t = (i as f64 + 0.5) / 20.0;
            let u = ((i * 7 % 20) as f64 + 0.5) / 20.0;
            (lo + (hi - lo) * t, lo + (hi - lo) * u)
        })
        .collect()
}

#[test]
fn double_contour_matches_fixed_kernel() {
    let c = ContourSpec::default();
    let cases: [(&[f64], FactorizingWeight, f64, f64, f64); 3] = [
        (&[1.0], ginibre(), 0.0, 4.0, 1e-9),
        (&[1.0, 2.0], ginibre(), 0.0, 4.0, 1e-7),
        (&[0.5, 0.9], FactorizingWeight::jacobi(0.0, 0.5, 2).unwrap(), 0.0, 0.45, 1e-7),
    ];
    for (a, f, lo, hi, tol) in cases {
        let base = fixed(a);
        let pts = grid20(lo, hi);
        let left = kernel_batch(&pts, |yp, y| kernel_fixed_contour(yp, y, &base, &f, &c)).unwrap();
        let right = kernel_batch(&pts, |yp, y| kernel_fixed(yp, y, &base, &f, &c)).unwrap();
        for ((p, l), r) in pts.iter().zip(&left).zip(&right) {
            assert!((l - r).abs() < tol, "{a:?} {p:?}: {l} vs {r}");
        }
    }
}

#[test]
fn double_contour_rejects_outside_holomorphy() {
    let j = FactorizingWeight::jacobi(0.0, 0.5, 2).unwrap();
    assert!(kernel_fixed_contour(0.2, 0.6, &fixed(&[0.5, 0.9]), &j, &ContourSpec::default()).is_err());
    let bad = ContourSpec { radius: Some(0.9), ..Default::default() };
    assert!(kernel_fixed_contour(0.2, 0.3, &fixed(&[1.0, 2.0]), &ginibre(), &bad).is_err());
}

#[test]
fn fixed_kernel_matches_marginals() {
    let c = ContourSpec::default();
    let cases: [(&[f64], FactorizingWeight, Vec<f64>); 2] = [
        (&[1.0, 2.0], ginibre(), vec![0.1, 0.5, 1.0, 2.0, 4.0]),
        (&[0.5, 0.9], FactorizingWeight::jacobi(0.0, 0.5, 2).unwrap(), vec![0.05, 0.2, 0.45, 0.6, 0.85]),
    ];
    for (a, f, ys) in cases {
        let base = fixed(a);
        let ens = fixed_base_ensemble(&base, &f).unwrap();
        for y in ys {
            let r1 = kernel_fixed(y, y, &base, &f, &c).unwrap();
            let m = 2.0 * ens.marginal_quadrature(y, QuadOptions::rel(1e-11)).unwrap();
            assert!((r1 - m).abs() < 1e-5, "{a:?} {y}: {r1} vs {m}");
        }
    }
}

#[test]
fn two_point_function() {
    let c = ContourSpec::default();
    let base = fixed(&[1.0, 2.0]);
    let g = ginibre();
    let k = |a: f64, b: f64| kernel_fixed(a, b, &base, &g, &c);
    for y in [0.3, 1.1, 2.7] {
        assert!(correlation_rk(&[y, y], k).unwrap().abs() < 1e-10);
        assert!((correlation_rk(&[y], k).unwrap() - k(y, y).unwrap()).abs() < 1e-15);
    }
    for p in [[0.3, 1.1], [0.7, 2.5], [1.9, 0.2]] {
        let r2 = correlation_rk(&p, k).unwrap();
        let j = jpdf_fixed(&p, &base, &g).unwrap();
        assert!((r2 / 2.0 - j).abs() < 1e-5, "{p:?}: {r2} vs {j}");
    }
    // the series system gives the same R₂ and integrates to n(n−1)
    let sys = fixed_biorth(&base, &g).unwrap();
    let r2 = |x: &[f64]| correlation_rk(x, |a, b| sys.kernel(a, b));
    let ax = Axis::new(0.0, f64::INFINITY);
    let v: f64 = integrate_box(&r2, &[ax.clone(), ax], QuadOptions::rel(1e-8)).unwrap();
    assert!((v - 2.0).abs() < 1e-4, "{v}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn two_point_function_nonnegative(x in 0.0f64..6.0, y in 0.0f64..6.0) {
        let sys = fixed_biorth(&fixed(&[1.0, 2.0]), &ginibre()).unwrap();
        let r2 = correlation_rk(&[x, y], |a, b| sys.kernel(a, b)).unwrap();
        prop_assert!(r2 >= -1e-12);
    }
}

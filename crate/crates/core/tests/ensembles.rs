use num_complex::Complex64;
use proptest::prelude::*;
use skewprod::ensembles::*;
use skewprod::mellin::{mellin_numeric, FactorizingWeight, PowerExp, WeightFunction};
use skewprod::quad::{integrate_box, Axis, QuadOptions};
use skewprod::SingularSpectrum;

fn spec(v: &[f64]) -> SingularSpectrum {
    SingularSpectrum::new(v.to_vec()).unwrap()
}

fn fixed(v: &[f64]) -> FixedBaseSpec {
    FixedBaseSpec::new(spec(v)).unwrap()
}

#[test]
fn fixed_densities_normalize() {
    let opts = QuadOptions::rel(1e-9);
    for factor in [FactorizingWeight::ginibre(0.0).unwrap(), FactorizingWeight::ginibre(1.0).unwrap()] {
        for a in [&[1.0][..], &[1.0, 2.0][..]] {
            let v = fixed_base_ensemble(&fixed(a), &factor).unwrap().normalization_quadrature(opts).unwrap();
            assert!((v - 1.0).abs() < 1e-6, "{a:?}: {v}");
        }
    }
    for (nu, mu) in [(0.0, 0.0), (0.5, 1.0)] {
        for a in [&[1.0][..], &[0.5, 0.9][..]] {
            let factor = FactorizingWeight::jacobi(nu, mu, a.len()).unwrap();
            let v = fixed_base_ensemble(&fixed(a), &factor).unwrap().normalization_quadrature(opts).unwrap();
            assert!((v - 1.0).abs() < 1e-6, "{a:?}: {v}");
        }
    }
}

#[test]
fn degenerate_ginibre_normalizes() {
    let g = FactorizingWeight::ginibre(0.0).unwrap();
    let e = degenerate_ensemble(2, &g).unwrap();
    let v = e.normalization_quadrature(QuadOptions::rel(1e-9)).unwrap();
    assert!((v - 1.0).abs() < 1e-6, "{v}");
    // Δ₂(a²)Δ₂(a)e^{−a₁−a₂} shape
    let r = e.density(&[0.5, 1.5]).unwrap() / e.density(&[1.0, 2.0]).unwrap();
    let shape = |a: f64, b: f64| (b * b - a * a) * (b - a) * (-a - b).exp();
    assert!((r - shape(0.5, 1.5) / shape(1.0, 2.0)).abs() < 1e-12);
}

#[test]
fn degenerate_jacobi_matches_muttalib_borodin_n1() {
    let j = FactorizingWeight::jacobi(0.0, 0.0, 1).unwrap();
    for a in [0.1, 0.5, 0.9] {
        assert!((jpdf_degenerate(&[a], &j).unwrap() - 3.0 * (1.0 - a) * (1.0 - a)).abs() < 1e-12);
    }
}

#[test]
fn fixed_to_degenerate_limit() {
    for factor in [FactorizingWeight::ginibre(0.0).unwrap(), FactorizingWeight::jacobi(0.0, 0.5, 2).unwrap()] {
        let base = fixed(&[1.0, 1.001]);
        // bulk points: near a = 1 the O(δ) term of the Jacobi case carries ∂ln p/∂ã ≈ 2(μ+n)a/(1−a)
        for a in [[0.1, 0.3], [0.2, 0.5], [0.35, 0.45], [0.05, 0.25], [0.15, 0.55]] {
            let f = jpdf_fixed(&a, &base, &factor).unwrap();
            let d = jpdf_degenerate(&a, &factor).unwrap();
            assert!((f - d).abs() < 5e-3 * d.abs(), "{a:?}: {f} vs {d}");
        }
    }
}

#[test]
fn fixed_fully_degenerate_routes_to_limit() {
    let g = FactorizingWeight::ginibre(0.0).unwrap();
    let v = jpdf_fixed(&[0.4, 1.2], &fixed(&[1.0, 1.0]), &g).unwrap();
    assert!((v - jpdf_degenerate(&[0.4, 1.2], &g).unwrap()).abs() < 1e-14);
    let scaled = jpdf_fixed(&[0.8, 2.4], &fixed(&[2.0, 2.0]), &g).unwrap();
    assert!((scaled - v / 4.0).abs() < 1e-14);
}

#[test]
fn jacobi_support_is_bounded_by_base() {
    let j = FactorizingWeight::jacobi(0.0, 0.0, 2).unwrap();
    assert_eq!(jpdf_fixed(&[0.2, 0.95], &fixed(&[0.5, 0.9]), &j).unwrap(), 0.0);
    let g = FactorizingWeight::ginibre(0.0).unwrap();
    assert!(jpdf_fixed(&[0.2, 9.0], &fixed(&[0.5, 0.9]), &g).unwrap() > 0.0);
}

#[test]
fn product_weights_mellin() {
    let n = 2;
    let base = muttalib_borodin_jacobi_weights(n, 0.0, 0.0).unwrap();
    let j = FactorizingWeight::jacobi(0.0, 0.0, n).unwrap();
    let e = product_weights(&base, std::slice::from_ref(&j)).unwrap();
    for (w, b) in e.weights().iter().zip(&base) {
        for s in [1.0, 2.0, 3.0] {
            let s = Complex64::from(s);
            let exact = w.mellin(s).unwrap();
            assert!((exact - b.mellin(s).unwrap() * j.mellin(s).unwrap()).norm() < 1e-14 * exact.norm());
            let quad = mellin_numeric(w, s).unwrap();
            assert!((quad - exact).norm() < 1e-8 * exact.norm(), "{quad} vs {exact}");
        }
    }
    let g = FactorizingWeight::ginibre(0.0).unwrap();
    let w0 = WeightFunction::new(PowerExp { p: 0.0, log_norm: 0.0 });
    let e = product_weights(&[w0.clone()], &[g.clone(), g.clone()]).unwrap();
    let s3 = Complex64::from(3.0);
    assert!((e.weights()[0].mellin(s3).unwrap() - 8.0).norm() < 1e-12);
    assert!((mellin_numeric(&e.weights()[0], s3).unwrap() - 8.0).norm() < 1e-8 * 8.0);
    let none = product_weights(&[w0.clone()], &[]).unwrap();
    assert_eq!(none.density(&[0.7]).unwrap(), w0.eval(0.7).unwrap());
}

#[test]
fn fact_poly_matches_recursion_n1() {
    let base = PolynomialEnsembleSpec::new(muttalib_borodin_jacobi_weights(1, 0.5, 0.0).unwrap()).unwrap();
    let j = FactorizingWeight::jacobi(0.0, 0.5, 1).unwrap();
    for y in [0.05, 0.2, 0.5, 0.8] {
        let a = jpdf_fact_poly(&[y], &base, &j).unwrap();
        let b = jpdf_recursive(&[y], &base, std::slice::from_ref(&j)).unwrap();
        assert!((a - b).abs() < 1e-8 * a.abs(), "{y}: {a} vs {b}");
    }
}

#[test]
fn fact_poly_ginibre_n1_normalizes() {
    let w = WeightFunction::new(PowerExp { p: 0.0, log_norm: 0.0 });
    let base = PolynomialEnsembleSpec::new(vec![w]).unwrap();
    let e = base.convolved(&FactorizingWeight::ginibre(0.0).unwrap()).unwrap();
    let v = e.normalization_quadrature(QuadOptions::rel(1e-10)).unwrap();
    assert!((v - 1.0).abs() < 1e-6, "{v}");
    // (e^{−a} ⊛ e^{−a})(y) = 2K₀(2√y); at y = 1 compare with ∫ t^{−1}e^{−t−1/t} dt
    let k: f64 = skewprod::quad::integrate(|t: f64| (-t - 1.0 / t).exp() / t, 0.0, f64::INFINITY, &[1.0], QuadOptions::rel(1e-12)).unwrap();
    assert!((e.density(&[1.0]).unwrap() - k).abs() < 1e-9 * k);
}

#[test]
fn corank2_normalizes() {
    let opts = QuadOptions::rel(1e-12);
    let a = spec(&[1.0, 2.0]);
    let v: f64 = integrate_box(&|x: &[f64]| corank2_jpdf(x, &a), &[Axis::with_breaks(0.0, 2.0, &[1.0])], opts).unwrap();
    assert!((v - 1.0).abs() < 1e-10, "{v}");
    let a = spec(&[0.5, 1.2, 2.0]);
    let ax = Axis::with_breaks(0.0, 2.0, &[0.5, 1.2]);
    let v: f64 = integrate_box(&|x: &[f64]| corank2_jpdf(x, &a), &[ax.clone(), ax], QuadOptions::rel(1e-10)).unwrap();
    assert!((v - 1.0).abs() < 1e-8, "{v}");
}

#[test]
fn marginal_integrates_to_one() {
    let e = fixed_base_ensemble(&fixed(&[1.0, 2.0]), &FactorizingWeight::ginibre(0.0).unwrap()).unwrap();
    let v: f64 = skewprod::quad::try_integrate(
        |y: f64| e.marginal_quadrature(y, QuadOptions::rel(1e-10)),
        0.0,
        f64::INFINITY,
        &[],
        QuadOptions::rel(1e-8),
    )
    .unwrap();
    assert!((v - 1.0).abs() < 1e-6, "{v}");
}

#[test]
fn rejects_singular_base() {
    assert!(FixedBaseSpec::new(spec(&[0.0, 1.0])).is_err());
    assert!(corank2_jpdf(&[0.5], &spec(&[1.0, 1.0])).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn densities_nonnegative_and_symmetric(a in proptest::collection::vec(0.01f64..3.0, 2)) {
        let g = FactorizingWeight::ginibre(0.5).unwrap();
        let base = fixed(&[0.8, 1.7]);
        let v = jpdf_fixed(&a, &base, &g).unwrap();
        let w = jpdf_fixed(&[a[1], a[0]], &base, &g).unwrap();
        prop_assert!(v >= -1e-300);
        prop_assert_eq!(v, w);
        let d = jpdf_degenerate(&a, &g).unwrap();
        prop_assert!(d >= -1e-300);
    }

    #[test]
    fn corank2_nonnegative(x in proptest::collection::vec(0.0f64..2.5, 2)) {
        let v = corank2_jpdf(&x, &spec(&[0.5, 1.2, 2.0])).unwrap();
        prop_assert!(v >= -1e-15);
    }
}

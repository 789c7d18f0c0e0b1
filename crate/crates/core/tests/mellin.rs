use num_complex::Complex64;
use proptest::prelude::*;
use skewprod::mellin::*;

fn weight() -> impl Strategy<Value = FactorizingWeight> {
    prop_oneof![
        (0.0f64..4.0).prop_map(|nu| FactorizingWeight::ginibre(nu).unwrap()),
        (0.0f64..3.0, 0.0f64..3.0, 1usize..=3).prop_map(|(nu, mu, n)| FactorizingWeight::jacobi(nu, mu, n).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn weights_normalized_at_one(w in weight()) {
        prop_assert!((w.mellin_real(1.0).unwrap() - 1.0).abs() < 1e-12);
        let num = mellin_numeric(&w.density, Complex64::from(1.0)).unwrap();
        prop_assert!((num - 1.0).norm() < 1e-8, "{num}");
    }

    #[test]
    fn exact_mellin_matches_quadrature(w in weight(), re in 1.0f64..4.0, im in -2.0f64..2.0) {
        let s = Complex64::new(re, im);
        let exact = w.mellin(s).unwrap();
        let num = mellin_numeric(&w.density, s).unwrap();
        prop_assert!((exact - num).norm() <= 1e-8 * exact.norm().max(1e-300), "{exact} vs {num}");
    }

    #[test]
    fn weights_nonnegative_on_support(w in weight(), t in 0.0f64..1.0) {
        let (lo, hi) = w.support();
        let a = if hi.is_finite() { lo + t * (hi - lo) } else { t / (1.0 - t) };
        prop_assert!(w.eval(a).unwrap() >= 0.0);
    }
}

#[test]
fn convolution_transform_is_product() {
    let f = FactorizingWeight::ginibre(1.0).unwrap();
    let h = FactorizingWeight::jacobi(0.0, 1.0, 1).unwrap();
    let c = f.density.convolve(&h.density);
    for s in [Complex64::new(1.5, 0.0), Complex64::new(2.0, 1.0)] {
        let want = f.mellin(s).unwrap() * h.mellin(s).unwrap();
        let got = mellin_numeric(&c, s).unwrap();
        assert!((got - want).norm() < 1e-7 * want.norm(), "{got} vs {want}");
    }
}

use proptest::prelude::*;
use skewprod::linalg::log_vandermonde_sq;
use skewprod::*;

fn spectrum() -> impl Strategy<Value = SingularSpectrum> {
    (1usize..=4).prop_flat_map(|n| proptest::collection::vec(0.05f64..5.0, n)).prop_map(|v| SingularSpectrum::new(v).unwrap())
}

fn close(a: &SingularSpectrum, b: &SingularSpectrum, rel: f64) -> bool {
    let scale = a.values().iter().fold(0.0f64, |m, v| m.max(*v));
    a.n() == b.n() && a.values().iter().zip(b.values()).all(|(x, y)| (x - y).abs() <= rel * scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_roundtrip(a in spectrum()) {
        let back = singular_spectrum(&build_canonical(&a)).unwrap();
        prop_assert!(close(&a, &back, 1e-12), "{a:?} vs {back:?}");
    }

    #[test]
    fn orthogonal_conjugation_keeps_spectrum(a in spectrum(), seed in any::<u64>()) {
        let mut rng = substream(seed, 0);
        let k = haar_orthogonal(2 * a.n(), &mut rng);
        let y = build_canonical(&a).conjugate(k.matrix()).unwrap();
        let back = singular_spectrum(&y).unwrap();
        prop_assert!(close(&a, &back, 1e-10), "{a:?} vs {back:?}");
    }

    #[test]
    fn conjugation_stays_antisymmetric(n in 1usize..=3, seed in any::<u64>()) {
        let mut rng = substream(seed, 1);
        let g = skewprod::samplers::sample_ginibre_rect(2 * n, 2 * n, &mut rng);
        let x = skewprod::samplers::sample_gaussian_antisymmetric(n, &mut rng);
        let y = x.conjugate(&g).unwrap();
        prop_assert!(AntisymmetricMatrix::new(y.matrix().clone()).is_ok());
    }

    #[test]
    fn corank2_projection_is_antisymmetric(a in spectrum(), seed in any::<u64>()) {
        prop_assume!(a.n() >= 2);
        let mut rng = substream(seed, 2);
        let k = haar_orthogonal(2 * a.n(), &mut rng);
        let p = project_corank2(&build_canonical(&a).conjugate(k.matrix()).unwrap()).unwrap();
        prop_assert_eq!(p.n(), a.n() - 1);
        prop_assert!(AntisymmetricMatrix::new(p.matrix().clone()).is_ok());
        prop_assert!(singular_spectrum(&p).is_ok());
    }

    #[test]
    fn vandermonde_log_matches_direct(v in proptest::collection::vec(0.1f64..3.0, 1..6)) {
        let d = vandermonde_sq(&v);
        let (s, l) = log_vandermonde_sq(&v);
        if d == 0.0 {
            prop_assert_eq!(s, 0.0);
        } else {
            prop_assert_eq!(s, d.signum());
            prop_assert!((l - d.abs().ln()).abs() <= 1e-10 * l.abs().max(1.0));
        }
    }

    #[test]
    fn vandermonde_swap_flips_sign(v in proptest::collection::vec(0.1f64..3.0, 2..6), i in 0usize..6, j in 0usize..6) {
        let (i, j) = (i % v.len(), j % v.len());
        prop_assume!(i != j);
        let mut w = v.clone();
        w.swap(i, j);
        let (a, b) = (vandermonde_sq(&v), vandermonde_sq(&w));
        prop_assert!((a + b).abs() <= 1e-12 * a.abs().max(1e-300));
    }
}

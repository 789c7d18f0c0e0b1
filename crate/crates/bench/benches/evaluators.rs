use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use skewprod::ensembles::{jpdf_fixed, FixedBaseSpec};
use skewprod::kernels::{fixed_biorth, kernel_fixed, ContourSpec};
use skewprod::mellin::{mellin_convolve, FactorizingWeight};
use skewprod::quad::QuadOptions;
use skewprod::samplers::{sample_spectra, BaseSpec, FactorSpec, GinibreSpec, ProductSpec};
use skewprod::special::ln_gamma;
use skewprod::spherical::{fn_recurrence, phi_closed, SphericalParameter};
use skewprod::SingularSpectrum;
use std::hint::black_box;

fn spectrum(v: &[f64]) -> SingularSpectrum {
    SingularSpectrum::new(v.to_vec()).unwrap()
}

fn spherical(c: &mut Criterion) {
    let s2 = SphericalParameter::real(&[5.0, 1.0]).unwrap();
    let s3 = SphericalParameter::real(&[6.0, 3.0, 0.5]).unwrap();
    let a2 = spectrum(&[0.5, 1.5]);
    let a3 = spectrum(&[0.4, 1.0, 2.0]);
    c.bench_function("phi_closed n=2", |b| b.iter(|| phi_closed(black_box(&s2), black_box(&a2)).unwrap()));
    c.bench_function("phi_closed n=3", |b| b.iter(|| phi_closed(black_box(&s3), black_box(&a3)).unwrap()));
    let confluent = spectrum(&[1.0, 1.0, 1.0]);
    c.bench_function("phi_closed n=3 confluent", |b| b.iter(|| phi_closed(black_box(&s3), black_box(&confluent)).unwrap()));
    c.bench_function("fn_recurrence n=2", |b| b.iter(|| fn_recurrence(black_box(&s2), black_box(&a2), QuadOptions::rel(1e-10)).unwrap()));
}

fn densities(c: &mut Criterion) {
    let g = FactorizingWeight::ginibre(0.0).unwrap();
    let j = FactorizingWeight::jacobi(0.0, 0.5, 2).unwrap();
    let base = FixedBaseSpec::new(spectrum(&[1.0, 2.0])).unwrap();
    c.bench_function("jpdf_fixed ginibre n=2", |b| b.iter(|| jpdf_fixed(black_box(&[0.7, 2.5]), &base, &g).unwrap()));
    c.bench_function("mellin_convolve ginibre*jacobi", |b| b.iter(|| mellin_convolve(&g.density, &j.density, black_box(0.3)).unwrap()));
    c.bench_function("ln_gamma complex", |b| b.iter(|| ln_gamma(black_box(Complex64::new(3.7, 1.2)))));
}

fn kernels(c: &mut Criterion) {
    let g = FactorizingWeight::ginibre(0.0).unwrap();
    let base = FixedBaseSpec::new(spectrum(&[1.0, 2.0])).unwrap();
    let contour = ContourSpec::default();
    c.bench_function("kernel_fixed contour n=2", |b| b.iter(|| kernel_fixed(black_box(0.7), black_box(1.3), &base, &g, &contour).unwrap()));
    let sys = fixed_biorth(&base, &g).unwrap();
    c.bench_function("kernel series n=2", |b| b.iter(|| sys.kernel(black_box(0.7), black_box(1.3)).unwrap()));
}

fn samplers(c: &mut Criterion) {
    let spec = ProductSpec {
        n: 2,
        factors: vec![FactorSpec::Ginibre(GinibreSpec { n: 2, nu: 0.0 })],
        base: BaseSpec::FixedMatrix { a: spectrum(&[1.0, 2.0]) },
    };
    c.bench_function("sample_spectra n=2 x1000", |b| b.iter(|| sample_spectra(&spec, 1000, black_box(7)).unwrap()));
}

criterion_group!(benches, spherical, densities, kernels, samplers);
criterion_main!(benches);

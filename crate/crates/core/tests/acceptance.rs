//! One pass/fail line per acceptance criterion; exits non-zero when any
//! criterion fails. Run with `cargo test --release --test acceptance`.

use skewprod::harness::checks::*;
use skewprod::harness::*;
use skewprod::rng::derive_seed;
use skewprod::samplers::{sample_spectra, BaseSpec, FactorSpec, GinibreSpec, JacobiSpec, ProductSpec};
use skewprod::stats::ks_statistic;
use skewprod::{Error, SingularSpectrum};
use std::fs;
use std::process::ExitCode;
use std::time::Instant;

const SEED: u64 = 20261015;
const MC_SAMPLES: usize = 1_000_000;
const SPECTRUM_SAMPLES: usize = 100_000;

fn unwrap_check(name: &str, r: skewprod::Result<CheckOutput>) -> Vec<TestOutcome> {
    match r {
        Ok(o) => o.tests,
        Err(e) => vec![TestOutcome::failed(name, &e)],
    }
}

fn fixed_product(n: usize, factor: FactorSpec, a: &[f64]) -> ProductSpec {
    ProductSpec { n, factors: vec![factor], base: BaseSpec::FixedMatrix { a: SingularSpectrum::new(a.to_vec()).unwrap() } }
}

fn runtime(name: &str, secs: f64, limit: f64) -> TestOutcome {
    TestOutcome::below(name, "seconds", secs, limit)
}

fn c1(th: &Thresholds) -> Vec<TestOutcome> {
    let mut out = vec![phi_named_value()];
    for p in SphericalSuiteConfig::default().phi_points {
        let t = Instant::now();
        out.extend(phi_closed_vs_mc(std::slice::from_ref(&p), MC_SAMPLES, SEED, th));
        out.push(runtime(&format!("phi mc runtime s={:?}", p.s), t.elapsed().as_secs_f64(), 120.0));
    }
    out
}

fn c2(th: &Thresholds) -> Vec<TestOutcome> {
    phi_limit_checks(&[1, 2, 3, 4], MC_SAMPLES, SEED, th)
}

fn c3(th: &Thresholds) -> Vec<TestOutcome> {
    let mut out = factorization_checks(&SphericalSuiteConfig::default().factorization_s, MC_SAMPLES, SEED, th);
    out.extend(transform_factorization_checks(th));
    out
}

fn c4(th: &Thresholds) -> Vec<TestOutcome> {
    harish_chandra_checks(MC_SAMPLES, SEED, th)
}

fn c5(th: &Thresholds) -> Vec<TestOutcome> {
    unwrap_check("corank2", corank2_checks(&[1.0, 2.0], SPECTRUM_SAMPLES, 50, SEED, th))
}

fn c6(th: &Thresholds) -> Vec<TestOutcome> {
    let mut out = fixed_normalization_checks(th);
    let products = [
        fixed_product(1, FactorSpec::Ginibre(GinibreSpec { n: 1, nu: 0.0 }), &[1.0]),
        fixed_product(2, FactorSpec::Ginibre(GinibreSpec { n: 2, nu: 0.0 }), &[1.0, 2.0]),
        fixed_product(1, FactorSpec::Jacobi(JacobiSpec { n: 1, big_n: 1, k1: 6 }), &[1.0]),
        fixed_product(2, FactorSpec::Jacobi(JacobiSpec { n: 2, big_n: 2, k1: 10 }), &[0.5, 0.9]),
    ];
    for p in &products {
        out.extend(unwrap_check(&product_label(p), spectrum_checks(p, SPECTRUM_SAMPLES, 50, SEED, MarginalMethod::Quadrature, th)));
    }
    out
}

fn c7(th: &Thresholds) -> Vec<TestOutcome> {
    let mut out = degenerate_limit_checks(th);
    let spec = ProductSpec { n: 1, factors: vec![FactorSpec::Jacobi(JacobiSpec { n: 1, big_n: 1, k1: 5 })], base: BaseSpec::CanonicalIdentity };
    let name = "degenerate jacobi n=1 mc vs 3(1-a)^2";
    match sample_spectra(&spec, SPECTRUM_SAMPLES, derive_seed(SEED, "degenerate")) {
        Ok(s) => {
            let v: Vec<f64> = s.iter().map(|x| x.values()[0]).collect();
            let cdf = |a: f64| 1.0 - (1.0 - a.clamp(0.0, 1.0)).powi(3);
            out.push(TestOutcome::below(name, "ks", ks_statistic(&v, cdf), th.ks_for(1)));
            let wrong = |a: f64| 1.0 - (1.0 - a.clamp(0.0, 1.0)).powi(2);
            out.push(TestOutcome::above(format!("{name} against 2(1-a)"), "ks", ks_statistic(&v, wrong), th.ks_for(1)).control());
        }
        Err(e) => out.push(TestOutcome::failed(name, &e)),
    }
    out
}

fn c8(th: &Thresholds) -> Vec<TestOutcome> {
    kernel_checks(&KernelSuiteConfig::default().contour, th)
}

fn c9(th: &Thresholds) -> Vec<TestOutcome> {
    mellin_checks(&MellinSuiteConfig::default(), th)
}

fn c10(th: &Thresholds) -> Vec<TestOutcome> {
    let t = Instant::now();
    let mut out = recursion_checks(&SphericalSuiteConfig::default().recursion_points, th);
    out.push(runtime("recursion total runtime", t.elapsed().as_secs_f64(), 300.0));
    out
}

fn c11(_: &Thresholds) -> Vec<TestOutcome> {
    let mut c = ExperimentConfig::preset(ExperimentKind::GammaIdentity, SEED);
    c.nsamples = SPECTRUM_SAMPLES;
    match run_experiment(&c) {
        Ok(r) => r.tests,
        Err(e) => vec![TestOutcome::failed("gamma identity suite", &e)],
    }
}

fn rerun_identical(kind: ExperimentKind, nsamples: usize) -> skewprod::Result<TestOutcome> {
    let mut c = ExperimentConfig::preset(kind, SEED);
    c.nsamples = nsamples;
    let io = |e: std::io::Error| Error::Io { path: "tempdir".into(), message: e.to_string() };
    let (d1, d2) = (tempfile::tempdir().map_err(io)?, tempfile::tempdir().map_err(io)?);
    let a = emit_results(&run_experiment(&c)?, d1.path(), kind.name(), OutputFormat::Csv)?;
    // second run on a different worker count
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().map_err(|e| Error::Config(e.to_string()))?;
    let r = pool.install(|| run_experiment(&c))?;
    let b = emit_results(&r, d2.path(), kind.name(), OutputFormat::Csv)?;
    let mut differing = 0;
    for (x, y) in a.iter().zip(&b) {
        if fs::read(x).map_err(io)? != fs::read(y).map_err(io)? {
            differing += 1;
        }
    }
    Ok(TestOutcome::below(format!("{} rerun", kind.name()), "differing_files", differing as f64, 0.5))
}

fn c12(_: &Thresholds) -> Vec<TestOutcome> {
    [(ExperimentKind::SpectrumVsJpdf, SPECTRUM_SAMPLES), (ExperimentKind::Corank2, SPECTRUM_SAMPLES), (ExperimentKind::SphericalIdentity, 20_000)]
        .into_iter()
        .map(|(k, n)| rerun_identical(k, n).unwrap_or_else(|e| TestOutcome::failed(format!("{} rerun", k.name()), &e)))
        .collect()
}

type Criterion = (u32, &'static str, fn(&Thresholds) -> Vec<TestOutcome>);

fn main() -> ExitCode {
    let th = Thresholds::default();
    let criteria: [Criterion; 12] = [
        (1, "spherical function closed form vs Monte Carlo", c1),
        (2, "normalization limit a->1 and sign", c2),
        (3, "factorization identities", c3),
        (4, "Harish-Chandra O(2n) integral", c4),
        (5, "corank-2 projection density", c5),
        (6, "fixed-matrix joint densities", c6),
        (7, "degenerate (Muttalib-Borodin) limit", c7),
        (8, "correlation kernels", c8),
        (9, "Mellin closed forms and factorization", c9),
        (10, "corank-2 recursion vs closed form", c10),
        (11, "real/complex Jacobi Gamma identity", c11),
        (12, "determinism of verify outputs", c12),
    ];
    let mut failed = 0;
    for (id, title, run) in criteria {
        let t = Instant::now();
        let outcomes = run(&th);
        let ok = !outcomes.is_empty() && outcomes.iter().all(|o| o.passed);
        let passed = outcomes.iter().filter(|o| o.passed).count();
        println!(
            "criterion {id:>2}: {} {title} ({passed}/{} checks, {:.1}s)",
            if ok { "PASS" } else { "FAIL" },
            outcomes.len(),
            t.elapsed().as_secs_f64()
        );
        for o in outcomes.iter().filter(|o| !o.passed) {
            println!("    failed: {} [{} = {:e}, threshold {:e}]", o.name, o.metric, o.value, o.threshold);
        }
        if !ok {
            failed += 1;
        }
    }
    println!("acceptance: {} of 12 criteria passed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

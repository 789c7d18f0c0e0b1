use num_complex::Complex64;
use skewprod::harness::*;
use std::fs;

fn spectrum_config(nsamples: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::preset(ExperimentKind::SpectrumVsJpdf, 7);
    c.nsamples = nsamples;
    c
}

#[test]
fn config_roundtrips_through_toml() {
    for kind in ExperimentKind::ALL {
        let c = ExperimentConfig::preset(kind, 99);
        let text = c.to_toml().unwrap();
        assert!(text.contains("skewprod.config/1"));
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), c);
        assert_eq!(ExperimentKind::parse(kind.name()).unwrap(), kind);
    }
}

#[test]
fn config_requires_seed_and_known_fields() {
    let ok = "schema = \"skewprod.config/1\"\nkind = \"corank2\"\nseed = 3\n";
    let c = ExperimentConfig::from_toml_str(ok).unwrap();
    assert_eq!((c.nsamples, c.bins, c.corank2.a.clone()), (100_000, 50, vec![1.0, 2.0]));
    assert!(ExperimentConfig::from_toml_str("schema = \"skewprod.config/1\"\nkind = \"corank2\"\n").is_err());
    assert!(ExperimentConfig::from_toml_str(&format!("{ok}bogus = 1\n")).is_err());
    assert!(ExperimentConfig::from_toml_str(&format!("{ok}[thresholds]\nks_typo = 0.1\n")).is_err());
    assert!(ExperimentConfig::from_toml_str(&format!("{ok}[thresholds]\nzscore = -1.0\n")).is_err());
    assert!(ExperimentConfig::from_toml_str("schema = \"skewprod.config/2\"\nkind = \"corank2\"\nseed = 3\n").is_err());
    assert!(ExperimentConfig::from_toml_str("schema = \"skewprod.config/1\"\nkind = \"spectrum-vs-jpdf\"\nseed = 3\n").is_err());
}

#[test]
fn empty_report_gives_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let report = TestReport::new(ExperimentConfig::preset(ExperimentKind::KernelConsistency, 1));
    let paths = emit_results(&report, dir.path(), "empty", OutputFormat::Csv).unwrap();
    assert_eq!(fs::read_to_string(&paths[0]).unwrap(), "bin_lo,bin_hi,empirical,analytic,zscore\n");
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(&paths[2]).unwrap()).unwrap();
    assert_eq!(summary["schema"], "skewprod.report/1");
    assert_eq!(summary["passed"], true);
    assert_eq!(summary["config"]["seed"], 1);
}

#[test]
fn spectrum_report_has_fifty_bins() {
    let report = run_experiment(&spectrum_config(20_000)).unwrap();
    assert_eq!(report.bins.len(), 50);
    assert!(report.tests.iter().any(|t| t.negative_control));
    let dir = tempfile::tempdir().unwrap();
    let paths = emit_results(&report, dir.path(), "spectrum", OutputFormat::Csv).unwrap();
    let csv = fs::read_to_string(&paths[0]).unwrap();
    assert_eq!(csv.lines().count(), 51);
    let mass: f64 = report.bins.iter().map(|b| b.analytic * (b.bin_hi - b.bin_lo)).sum();
    assert!((mass - 1.0).abs() < 1e-4, "{mass}");
    let jl = emit_results(&report, dir.path(), "spectrum", OutputFormat::Jsonlines).unwrap();
    let rows: Vec<BinRow> = fs::read_to_string(&jl[0]).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows, report.bins);
}

#[test]
fn rerun_is_byte_identical_across_thread_counts() {
    let c = spectrum_config(5_000);
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let a = emit_results(&run_experiment(&c).unwrap(), d1.path(), "run", OutputFormat::Csv).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let r = pool.install(|| run_experiment(&c)).unwrap();
    let b = emit_results(&r, d2.path(), "run", OutputFormat::Csv).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
    }
}

#[test]
fn thresholds_are_configurable() {
    let mut c = spectrum_config(5_000);
    c.thresholds.ks = Some(1e-6);
    let r = run_experiment(&c).unwrap();
    assert!(!r.passed());
    assert!(r.failures().iter().any(|t| t.name.ends_with(" ks")));
}

fn sgrid() -> Vec<Complex64> {
    (0..20).map(|k| Complex64::new(1.0 + 0.2 * k as f64, 0.3)).collect()
}

#[test]
fn jacobi_gamma_identity() {
    for (nu, mu, n) in [(0.0, 0.0, 1), (1.0, 0.5, 2)] {
        let r = run_prop45_check(nu, mu, n, &sgrid()).unwrap();
        assert!(r.passed(), "{:?}", r.failures());
        let main = &r.tests[0];
        assert!(main.value < 1e-10);
        let control = r.tests.iter().find(|t| t.negative_control).unwrap();
        assert!(control.value > 1e-2);
    }
}

#[test]
fn gamma_identity_rejects_invalid_parameters_and_poles() {
    assert!(run_prop45_check(-0.5, 0.0, 1, &sgrid()).is_err());
    assert!(run_prop45_check(0.0, -1.5, 1, &sgrid()).is_err());
    // s + ν = 0 is a Gamma pole
    assert!(run_prop45_check(0.0, 0.0, 1, &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]).is_err());
}

#[test]
fn check_errors_become_failed_outcomes() {
    let mut c = ExperimentConfig::preset(ExperimentKind::SphericalIdentity, 1);
    c.spherical.phi_points = vec![SpherePoint::new(&[1.0, 2.0], &[1.0, 2.0])];
    c.spherical.limit_n = vec![];
    c.spherical.factorization_s = vec![];
    c.spherical.recursion_points = vec![];
    c.nsamples = 1000;
    let r = run_experiment(&c).unwrap();
    let bad: Vec<_> = r.failures();
    assert!(bad.iter().any(|t| t.name.contains("s=(1,2)") && t.metric.starts_with("error")), "{bad:?}");
}

#[test]
fn corank2_suite_small() {
    let mut c = ExperimentConfig::preset(ExperimentKind::Corank2, 11);
    c.nsamples = 20_000;
    c.corank2.a = vec![0.5, 1.0, 1.5];
    let r = run_experiment(&c).unwrap();
    assert!(r.passed(), "{:?}", r.failures());
}

#[test]
fn shipped_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            ExperimentConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            count += 1;
        }
    }
    assert!(count >= 3);
}

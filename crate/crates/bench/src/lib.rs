//! Benchmarks live in `benches/`; run `cargo bench -p skewprod-bench`.

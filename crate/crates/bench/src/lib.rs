//! Benchmarks for mchd-core; see `benches/`.

//! Criterion benchmarks for pathopt live in `benches/`.

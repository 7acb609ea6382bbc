//! Criterion benchmarks for the pdeclass pipeline live in `benches/`.

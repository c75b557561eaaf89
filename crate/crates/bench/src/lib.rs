//! Criterion benchmarks for the condition engine; see `benches/`.

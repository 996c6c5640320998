//! Criterion benchmarks for the diffusym pipeline live in `benches/`.

//! Criterion benchmarks for the twistlab kernels; see `benches/`.

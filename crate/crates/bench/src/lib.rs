//! Criterion benchmarks for `scramble-core`; see `benches/kernels.rs`.

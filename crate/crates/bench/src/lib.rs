//! Criterion benchmarks for the thermocap kernels live under `benches/`.

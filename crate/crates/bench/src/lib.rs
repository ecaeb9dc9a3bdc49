//! Benchmarks of the analytical and simulation kernels; see `benches/kernels.rs`.

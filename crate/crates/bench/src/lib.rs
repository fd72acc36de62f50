//! Benchmarks for zo-core; see `benches/`.

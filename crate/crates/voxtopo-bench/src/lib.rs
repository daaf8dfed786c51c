//! Benchmark-only crate; see `benches/benches.rs`. Nothing is exported.

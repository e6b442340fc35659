//! Benchmark-only crate; see `benches/key_rate.rs`.

//! Benchmarks for the solver live in `benches/`; this crate has no library API.

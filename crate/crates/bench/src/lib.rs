//! Benchmark-only crate; see benches/simulators.rs.

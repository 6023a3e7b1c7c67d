//! Empty library target; the benchmarks live in `benches/workbench.rs`.

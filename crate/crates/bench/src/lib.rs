//! Criterion benchmarks for the operators and the closed-loop runner; see
//! `benches/`.

//! Criterion benchmarks for the flow, the eigensolver and the functionals;
//! see `benches/`.

//! Criterion benchmarks for `complexface` live in `benches/`; run `cargo bench -p complexface-bench`.

//! Criterion benchmarks for overlapkit live under `benches/`.

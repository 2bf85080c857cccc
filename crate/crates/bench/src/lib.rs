//! Placeholder library for the bench crate; benches live under `benches/`.

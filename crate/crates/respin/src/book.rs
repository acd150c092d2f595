//! The guide's chapters, included as doc comments so every code listing in
//! the book runs under `cargo test --doc` and cannot drift from the crate.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[doc = include_str!("../../../book/src/circuits.md")]
mod circuits {}

#[doc = include_str!("../../../book/src/synthesis.md")]
mod synthesis {}

#[doc = include_str!("../../../book/src/blocks.md")]
mod blocks {}

#[doc = include_str!("../../../book/src/substitutions.md")]
mod substitutions {}

#[doc = include_str!("../../../book/src/optimization.md")]
mod optimization {}

#[doc = include_str!("../../../book/src/simulation.md")]
mod simulation {}

#[doc = include_str!("../../../book/src/benchmarks.md")]
mod benchmarks {}

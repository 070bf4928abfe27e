//! The guide's code listings, compiled and run by `cargo test --doc`.
//!
//! mdbook cannot test listings that depend on a local crate, so each chapter
//! is pulled in as the docs of an empty module instead.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/scene-graphs.md")]
pub mod scene_graphs {}
#[doc = include_str!("../../../book/src/lexicon.md")]
pub mod lexicon {}
#[doc = include_str!("../../../book/src/embeddings.md")]
pub mod embeddings {}
#[doc = include_str!("../../../book/src/queries.md")]
pub mod queries {}
#[doc = include_str!("../../../book/src/approximation.md")]
pub mod approximation {}
#[doc = include_str!("../../../book/src/ranking.md")]
pub mod ranking {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

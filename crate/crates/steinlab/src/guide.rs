//! The book chapters, routed through rustdoc.
//!
//! mdBook cannot run code fences against an external crate, so every
//! chapter under `book/src/` is also included here as module docs: `cargo
//! test --doc` then compiles and runs each snippet, keeping the guide and
//! the library in lockstep. A failing doc-test names its chapter module.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/shrinkage.md")]
pub mod shrinkage {}

#[doc = include_str!("../../../book/src/geometry.md")]
pub mod geometry_regions {}

#[doc = include_str!("../../../book/src/distributions.md")]
pub mod distributions {}

#[doc = include_str!("../../../book/src/symmetry.md")]
pub mod directional_symmetry {}

#[doc = include_str!("../../../book/src/monte-carlo.md")]
pub mod monte_carlo {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod command_line {}

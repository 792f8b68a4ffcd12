//! Compiles the Rust snippets of the guide in `book/src` as doctests.
//!
//! mdbook cannot link external crates when it tests code, so each chapter
//! is pulled in here as the documentation of an empty module.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/basis1d.md")]
pub mod basis1d {}
#[doc = include_str!("../../../book/src/basis2d.md")]
pub mod basis2d {}
#[doc = include_str!("../../../book/src/mesh.md")]
pub mod mesh {}
#[doc = include_str!("../../../book/src/dofmap.md")]
pub mod dofmap {}
#[doc = include_str!("../../../book/src/assembly.md")]
pub mod assembly {}
#[doc = include_str!("../../../book/src/solver.md")]
pub mod solver {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

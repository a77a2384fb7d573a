//! The chapters of the book under `book/src`, compiled so that `cargo test`
//! runs every snippet against the current library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/angles.md")]
pub mod angles {}

#[doc = include_str!("../../../book/src/models.md")]
pub mod models {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}

#[doc = include_str!("../../../book/src/inequalities.md")]
pub mod inequalities {}

#[doc = include_str!("../../../book/src/signaling.md")]
pub mod signaling {}

#[doc = include_str!("../../../book/src/wire.md")]
pub mod wire {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

//! Traversability estimation for vertically challenging terrain.
//!
//! The crate covers the whole loop: procedural elevation maps and a
//! vehicle-terrain simulator ([`terrain`], [`dynamics`]), patch-wise
//! traversability values from a quasi-static roll/pitch model plus two
//! learned Gaussian uncertainty regressors ([`stability`], [`learn`]),
//! orientation-averaged label maps and a map encoder that reconstructs them
//! in one pass ([`travmap`]), A* and traversability-guided MPPI planning
//! ([`plan`]), and a closed-loop benchmark harness ([`bench`]).

pub mod bench;
mod codec;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod learn;
pub mod plan;
pub mod seed;
pub mod stability;
pub mod terrain;
pub mod travmap;

pub use error::{Result, TntError};

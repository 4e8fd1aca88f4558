//! Substructuring domain decomposition for nonlocal volume-constrained
//! diffusion on triangulated squares.
//!
//! The crate assembles the single-domain nonlocal finite element system,
//! builds an element-aligned overlapping decomposition with overlap-count
//! weights, assembles the weighted subdomain systems together with the
//! interface equality constraints, and solves the coupled saddle-point
//! system. Every piece needed to check that the decomposed solution matches
//! the single-domain one is exposed.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod assembly;
pub mod constraints;
pub mod dd;
pub mod decomposition;
pub mod dense;
pub mod error;
pub mod field;
pub mod kernel;
pub mod mesh;
pub mod multi;
pub mod point;
pub mod quadrature;
pub mod solver;
pub mod sparse;
mod spatial;

pub use error::{Error, Result};
pub use point::Point;

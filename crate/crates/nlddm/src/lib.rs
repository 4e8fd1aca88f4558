//! Configuration-driven runner for the nonlocal substructuring pipeline,
//! with the plain-text, MatrixMarket and CSV formats it reads and writes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod io;
pub mod runner;

pub use config::RunConfig;
pub use error::{RunError, RunResult};

//! Basis-gate selection for parametric conversion/gain couplers.
//!
//! The crate computes canonical two-qubit coordinates, builds coverage sets
//! for repeated basis-gate templates (optionally with parallel single-qubit
//! drives), scores candidate bases under hardware speed limits, and
//! transpiles circuits into calibrated pulses.

pub mod costs;
pub mod coverage;
pub mod error;
pub mod hamiltonian;
pub mod hull;
pub mod linalg;
pub mod optimize;
pub mod speedlimit;
pub mod template;
pub mod transpile;
pub mod weyl;

pub use error::{Error, Result};

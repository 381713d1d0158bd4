//! Simulation and nonparametric inference for a size- and growth-rate
//! structured cell division process.
//!
//! Cells grow exponentially at an inherited rate and split into two equal
//! halves at a size-dependent rate `B`. The crate simulates genealogies,
//! estimates `B` from observed cells and cross-checks the estimates against
//! the invariant measure of the underlying Markov chain and the steady state
//! of the growth-fragmentation equation.

pub mod error;
pub mod estimator;
pub mod experiments;
pub mod invariant;
pub mod model;
pub mod quadrature;
pub mod rng;
pub mod simulator;

pub use error::{Error, Result};

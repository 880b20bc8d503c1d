//! Hybrid quantum-classical random-walk solver for `(1 − γP) x = b` with a
//! Hamming-cube stochastic matrix `P`, simulated under configurable quantum
//! noise, plus the experiment harness used to study sparsity and
//! detect-and-retry mitigation.

pub mod circuit_sim;
pub mod error;
pub mod harness;
pub mod matrix_model;
pub mod oracle;
pub mod seed;
pub mod solver;

pub use error::{Error, Result};

//! Empirical and regularized risk minimization with localization-based
//! complexity estimates, and a Monte Carlo harness that checks nonexact
//! oracle inequalities against simulated data.

pub mod cli;
pub mod complexity;
pub mod concentration;
pub mod error;
pub mod fmt;
pub mod harness;
pub mod model;
pub mod seeds;
pub mod solvers;

pub use error::{Error, Result};

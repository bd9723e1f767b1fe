//! Weak phase transitions and large-deviation rates for binary and box `l1` recovery
//! from Gaussian random linear systems, with numeric oracles, an exact LP solver and a
//! Monte Carlo harness.

pub mod analytic_pt;
pub mod cli;
pub mod error;
pub mod ldp;
pub mod linalg_lp;
pub mod montecarlo;
pub mod oracles;
pub mod solve1d;
pub mod specfun;

pub use analytic_pt::{Model, ModelParams};
pub use error::{Error, Result};

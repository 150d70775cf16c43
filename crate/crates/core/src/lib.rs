//! Bayesian coordinate differential privacy.
//!
//! Budget calibration for per-coordinate privacy demands under correlated
//! priors, the layered mean-estimation mechanism built on an LDP ball
//! channel, exact auditing of finite mechanisms, private least squares, and
//! a seeded experiment harness.

pub mod audit;
pub mod calibration;
pub mod error;
pub mod harness;
pub mod mean;
pub mod mechanisms;
pub mod regression;

pub use error::{Error, Result};

//! Experiment harness: seeded streams, the correlated prior, configuration,
//! the two simulations, CSV output and the command line.

pub mod cli;
pub mod config;
pub mod experiment;
pub mod output;
pub mod prior;
pub mod seeding;

pub use config::{ExperimentConfig, Kind, ZetaPolicy};
pub use experiment::{
    quantile, run_mean_experiment, run_ols_experiment, ExperimentOutput, MechanismTag, TrialRecord, TrialSummary,
};
pub use prior::CorrelatedBernoulli;

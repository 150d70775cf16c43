//! A reduced mean-estimation sweep over the correlation `q`, printed as the
//! summary CSV. `bcdp mean-sim --seed 7` runs the full-size version.
//!
//! Run with `cargo run --release --example mean_experiment`.

use bcdp::harness::output::write_summary;
use bcdp::harness::{run_mean_experiment, ExperimentConfig, Kind};

fn main() -> bcdp::Result<()> {
    let config = ExperimentConfig {
        n: Some(500),
        trials: 40,
        seed: Some(7),
        ..ExperimentConfig::mean_default()
    };
    let out = run_mean_experiment(&config)?;
    write_summary(Kind::MeanSim, &out, std::io::stdout().lock())
}

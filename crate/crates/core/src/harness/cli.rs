//! Command-line entry point.
//!
//! Exit codes: 0 on success, 1 for usage and configuration errors (bad
//! flags, unreadable or invalid inputs), 2 when a run fails after its inputs
//! were accepted.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::audit::{audit, format};
use crate::calibration::{calibrate_budgets, PrivacyDemand};
use crate::error::Error;
use crate::harness::config::{ExperimentConfig, Kind, ZetaPolicy};
use crate::harness::experiment::{run_mean_experiment, run_ols_experiment};
use crate::harness::output;

#[derive(Parser, Debug)]
#[command(name = "bcdp", version, about = "Bayesian coordinate differential privacy tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the calibrated budget vector, in the order of --delta.
    Calibrate {
        #[arg(long)]
        epsilon: f64,
        /// Comma-separated per-coordinate demands.
        #[arg(long, value_delimiter = ',', required = true)]
        delta: Vec<f64>,
        #[arg(long)]
        q: f64,
        /// A number in (0, 1] or `heuristic` for (1 + q) / 2.
        #[arg(long, default_value = "heuristic")]
        zeta: ZetaPolicy,
    },
    /// Print the exact privacy levels of a kernel under a prior.
    Audit {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long)]
        prior: PathBuf,
    },
    /// Layered mechanism against the LDP baseline over a grid of q.
    MeanSim {
        #[command(flatten)]
        common: SimArgs,
        /// Users per trial.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Private least squares over a grid of sample sizes.
    OlsSim {
        #[command(flatten)]
        common: SimArgs,
        /// Comma-separated sample sizes.
        #[arg(long, value_delimiter = ',')]
        n_grid: Option<Vec<usize>>,
        /// Skip privatization (debugging).
        #[arg(long)]
        identity_channel: bool,
    },
}

#[derive(Args, Debug)]
struct SimArgs {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    /// Output directory (default: the config's `output`, else `.`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    q_grid: Option<Vec<f64>>,
    #[arg(long)]
    zeta: Option<ZetaPolicy>,
    /// Independent sign data instead of the correlated prior.
    #[arg(long)]
    iid_data: bool,
    /// Fresh data in every trial.
    #[arg(long)]
    redraw_data: bool,
}

impl SimArgs {
    fn load(&self, kind: Kind) -> Result<ExperimentConfig, Error> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::read(path)?,
            None if kind == Kind::MeanSim => ExperimentConfig::mean_default(),
            None => ExperimentConfig::ols_default(),
        };
        if let Some(k) = config.kind {
            if k != kind {
                return Err(Error::Config(format!("config is for `{}`, not `{}`", k.name(), kind.name())));
            }
        }
        config.kind = Some(kind);
        config.seed = Some(self.seed);
        if let Some(t) = self.trials {
            config.trials = t;
        }
        if let Some(g) = &self.q_grid {
            config.q_grid = g.clone();
        }
        if let Some(z) = self.zeta {
            config.zeta = z;
        }
        config.iid_data |= self.iid_data;
        config.redraw_data |= self.redraw_data;
        Ok(config)
    }

    fn out_dir(&self, config: &ExperimentConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| config.output.clone())
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

enum Failure {
    Input(Error),
    Run(Error),
}

fn execute(command: Command, out: &mut dyn Write) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Run(Error::io("<stdout>", e));
    match command {
        Command::Calibrate { epsilon, delta, q, zeta } => {
            let demand = PrivacyDemand::new(epsilon, delta, q, zeta.zeta(q)).map_err(Failure::Input)?;
            let c = calibrate_budgets(&demand).map_err(Failure::Run)?;
            let line: Vec<String> = c.in_caller_order().iter().map(f64::to_string).collect();
            writeln!(out, "{}", line.join(",")).map_err(io)
        }
        Command::Audit { kernel, prior } => {
            let m = format::read_kernel(&kernel).map_err(Failure::Input)?;
            let p = format::read_prior(&prior).map_err(Failure::Input)?;
            let report = audit(&m, &p).map_err(Failure::Input)?;
            write!(out, "{report}").map_err(io)
        }
        Command::MeanSim { common, n } => {
            let mut config = common.load(Kind::MeanSim).map_err(Failure::Input)?;
            if n.is_some() {
                config.n = n;
            }
            config.validate_mean().map_err(Failure::Input)?;
            let result = run_mean_experiment(&config).map_err(Failure::Run)?;
            output::write_all(&common.out_dir(&config), Kind::MeanSim, &config, &result).map_err(Failure::Run)?;
            output::write_summary(Kind::MeanSim, &result, out).map_err(Failure::Run)
        }
        Command::OlsSim { common, n_grid, identity_channel } => {
            let mut config = common.load(Kind::OlsSim).map_err(Failure::Input)?;
            if n_grid.is_some() {
                config.n_grid = n_grid;
            }
            config.identity_channel |= identity_channel;
            config.validate_ols().map_err(Failure::Input)?;
            let result = run_ols_experiment(&config).map_err(Failure::Run)?;
            output::write_all(&common.out_dir(&config), Kind::OlsSim, &config, &result).map_err(Failure::Run)?;
            output::write_summary(Kind::OlsSim, &result, out).map_err(Failure::Run)
        }
    }
}

/// Runs the CLI with explicit output streams and returns the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { write!(out, "{rendered}") } else { write!(err, "{rendered}") };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(Failure::Input(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
        Err(Failure::Run(e)) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

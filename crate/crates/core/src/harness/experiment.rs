//! The mean-estimation and least-squares simulations.

use rayon::prelude::*;
use serde::Serialize;

use crate::calibration::calibrate_budgets;
use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::harness::prior::{iid_signs, CorrelatedBernoulli};
use crate::harness::seeding::{stream, Purpose};
use crate::mean::{project_box, IdentityPrivatizer, MeanMechanism, PointPrivatizer};
use crate::mechanisms::{BallChannel, LdpChannelSpec};
use crate::regression::{run_ols_with, ExactRisk, FeasibleSet, RegressionDataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MechanismTag {
    Bcdp,
    LdpBaseline,
    Identity,
}

impl MechanismTag {
    pub fn name(self) -> &'static str {
        match self {
            MechanismTag::Bcdp => "bcdp",
            MechanismTag::LdpBaseline => "ldp-baseline",
            MechanismTag::Identity => "identity",
        }
    }
}

/// One trial's error: squared l2 error of the mean, or excess risk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub q: f64,
    pub mechanism: MechanismTag,
    pub n: usize,
    pub trial: usize,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSummary {
    pub q: f64,
    pub mechanism: MechanismTag,
    pub n: usize,
    pub median: f64,
    pub p25: f64,
    pub p75: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<TrialRecord>,
    pub summary: Vec<TrialSummary>,
}

impl ExperimentOutput {
    pub fn median(&self, q: f64, mechanism: MechanismTag, n: usize) -> Option<f64> {
        self.summary
            .iter()
            .find(|s| s.q == q && s.mechanism == mechanism && s.n == n)
            .map(|s| s.median)
    }
}

/// Sample quantile with linear interpolation between order statistics
/// (`h = (len - 1) p`). `sorted` must be ascending and non-empty.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn summarize(records: &[TrialRecord]) -> Vec<TrialSummary> {
    let mut out: Vec<TrialSummary> = Vec::new();
    let mut start = 0;
    while start < records.len() {
        let head = records[start];
        let end = records[start..]
            .iter()
            .position(|r| (r.q, r.mechanism, r.n) != (head.q, head.mechanism, head.n))
            .map_or(records.len(), |k| start + k);
        let mut errors: Vec<f64> = records[start..end].iter().map(|r| r.error).collect();
        errors.sort_by(f64::total_cmp);
        out.push(TrialSummary {
            q: head.q,
            mechanism: head.mechanism,
            n: head.n,
            median: quantile(&errors, 0.5),
            p25: quantile(&errors, 0.25),
            p75: quantile(&errors, 0.75),
        });
        start = end;
    }
    out
}

fn draw_point(config: &ExperimentConfig, dim: usize, q: f64, rng: &mut rand_chacha::ChaCha8Rng) -> Result<Vec<f64>> {
    if config.iid_data {
        Ok(iid_signs(dim, rng))
    } else {
        Ok(CorrelatedBernoulli::new(dim, q)?.sample(rng))
    }
}

fn mean_data(config: &ExperimentConfig, seed: u64, qi: usize, trial: Option<usize>) -> Result<Vec<Vec<f64>>> {
    let q = config.q_grid[qi];
    let n = config.n.expect("validated");
    (0..n)
        .map(|u| {
            let mut rng = match trial {
                None => stream(seed, Purpose::MeanData, &[qi as u64, u as u64]),
                Some(t) => stream(seed, Purpose::MeanData, &[qi as u64, t as u64, u as u64]),
            };
            draw_point(config, config.d, q, &mut rng)
        })
        .collect()
}

fn mean_trial(
    data: &[Vec<f64>],
    privatizer: &dyn PointPrivatizer,
    seed: u64,
    purpose: Purpose,
    qi: usize,
    trial: usize,
) -> Result<f64> {
    let d = privatizer.dim();
    let n = data.len() as f64;
    let mut truth = vec![0.0; d];
    let mut sum = vec![0.0; d];
    for (u, x) in data.iter().enumerate() {
        let mut rng = stream(seed, purpose, &[qi as u64, trial as u64, u as u64]);
        let y = privatizer.privatize(x, &mut rng)?;
        for i in 0..d {
            truth[i] += x[i] / n;
            sum[i] += y[i] / n;
        }
    }
    let estimate = project_box(&sum);
    Ok(estimate.iter().zip(&truth).map(|(a, b)| (a - b).powi(2)).sum())
}

/// Squared error of the layered mechanism and of the LDP baseline (ball
/// channel on the whole vector at level `min_i min(delta_i, epsilon)`), per
/// `q` on the grid and per trial.
pub fn run_mean_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate_mean()?;
    let seed = config.seed()?;
    let n = config.n.expect("validated");
    let mut records = Vec::new();
    for (qi, &q) in config.q_grid.iter().enumerate() {
        let demand = config.demand(q)?;
        let bcdp = MeanMechanism::new(&calibrate_budgets(&demand)?)?;
        let spec = LdpChannelSpec::new(demand.min_effective_delta(), config.d, (config.d as f64).sqrt())?;
        let baseline = BallChannel::new(spec)?;
        let fixed = if config.redraw_data { None } else { Some(mean_data(config, seed, qi, None)?) };

        let per_trial: Vec<(f64, f64)> = (0..config.trials)
            .into_par_iter()
            .map(|t| {
                let redrawn;
                let data = match &fixed {
                    Some(d) => d,
                    None => {
                        redrawn = mean_data(config, seed, qi, Some(t))?;
                        &redrawn
                    }
                };
                Ok((
                    mean_trial(data, &bcdp, seed, Purpose::MeanBcdp, qi, t)?,
                    mean_trial(data, &baseline, seed, Purpose::MeanBaseline, qi, t)?,
                ))
            })
            .collect::<Result<_>>()?;

        let record = |mechanism, trial, error| TrialRecord {
            q,
            mechanism,
            n,
            trial,
            error,
        };
        records.extend(per_trial.iter().enumerate().map(|(t, e)| record(MechanismTag::Bcdp, t, e.0)));
        records.extend(per_trial.iter().enumerate().map(|(t, e)| record(MechanismTag::LdpBaseline, t, e.1)));
    }
    let summary = summarize(&records);
    Ok(ExperimentOutput { records, summary })
}

fn ols_data(
    config: &ExperimentConfig,
    seed: u64,
    coords: &[u64],
    n: usize,
) -> Result<RegressionDataset> {
    let q = config.q_grid[coords[0] as usize];
    let theta = config.theta_star.as_ref().expect("validated");
    let mut z = Vec::with_capacity(n);
    let mut l = Vec::with_capacity(n);
    for u in 0..n {
        let mut path = coords.to_vec();
        path.push(u as u64);
        let mut rng = stream(seed, Purpose::OlsData, &path);
        let row = draw_point(config, config.d - 1, q, &mut rng)?;
        let label: f64 = row.iter().zip(theta).map(|(a, b)| a * b).sum();
        l.push(label.clamp(-1.0, 1.0));
        z.push(row);
    }
    RegressionDataset::new(z, l)
}

/// Excess empirical risk of private least squares for every `n` on the grid.
///
/// Labels are `clamp(z' theta_star, -1, 1)`. With `identity_channel` the
/// privatizer is replaced by the identity and records are tagged
/// `identity`.
pub fn run_ols_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate_ols()?;
    let seed = config.seed()?;
    let grid = config.n_grid.clone().expect("validated");
    let feasible = match config.radius {
        Some(r) => FeasibleSet::new(r)?,
        None => FeasibleSet::for_features(config.d - 1),
    };
    let mut records = Vec::new();
    for (qi, &q) in config.q_grid.iter().enumerate() {
        let (tag, privatizer): (MechanismTag, Box<dyn PointPrivatizer>) = if config.identity_channel {
            (MechanismTag::Identity, Box::new(IdentityPrivatizer { dim: config.d }))
        } else {
            let budget = calibrate_budgets(&config.demand(q)?)?;
            (MechanismTag::Bcdp, Box::new(MeanMechanism::new(&budget.halved())?))
        };
        for (ni, &n) in grid.iter().enumerate() {
            let batch = [qi as u64, ni as u64];
            let fixed = if config.redraw_data {
                None
            } else {
                let data = ols_data(config, seed, &batch, n)?;
                let risk = ExactRisk::new(&data, &feasible);
                Some((data, risk))
            };
            let errors: Vec<f64> = (0..config.trials)
                .into_par_iter()
                .map(|t| {
                    let redrawn;
                    let (data, risk) = match &fixed {
                        Some(pair) => (&pair.0, &pair.1),
                        None => {
                            let data = ols_data(config, seed, &[qi as u64, ni as u64, t as u64], n)?;
                            let risk = ExactRisk::new(&data, &feasible);
                            redrawn = (data, risk);
                            (&redrawn.0, &redrawn.1)
                        }
                    };
                    let mut rng = stream(seed, Purpose::OlsPrivate, &[qi as u64, ni as u64, t as u64]);
                    let out = run_ols_with(data, privatizer.as_ref(), &feasible, &mut rng)?;
                    Ok(out.excess_risk(risk))
                })
                .collect::<Result<_>>()?;
            records.extend(errors.into_iter().enumerate().map(|(trial, error)| TrialRecord {
                q,
                mechanism: tag,
                n,
                trial,
                error,
            }));
        }
    }
    let summary = summarize(&records);
    Ok(ExperimentOutput { records, summary })
}

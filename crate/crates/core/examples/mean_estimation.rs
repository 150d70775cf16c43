//! Layered mean estimation against the LDP baseline on one population.
//!
//! Run with `cargo run --release --example mean_estimation`.

use bcdp::calibration::{calibrate_budgets, PrivacyDemand};
use bcdp::mean::{aggregate_mean, predicted_mse_shape, project_box, MeanMechanism};
use bcdp::mechanisms::{ball_channel_sample, LdpChannelSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> bcdp::Result<()> {
    let d = 10;
    let n = 2000;
    let mut delta = vec![0.2, 0.2];
    delta.extend([2.0; 8]);
    let demand = PrivacyDemand::new(2.0, delta, 0.0, 0.5)?;
    let c = calibrate_budgets(&demand)?;
    println!("c = {:.3?}", c.in_caller_order());
    println!("predicted shape {:.4}", predicted_mse_shape(&c, n));

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let users: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect();
    let truth: Vec<f64> = (0..d).map(|i| users.iter().map(|x| x[i]).sum::<f64>() / n as f64).collect();
    let sq = |est: &[f64]| est.iter().zip(&truth).map(|(a, b)| (a - b).powi(2)).sum::<f64>();

    let mechanism = MeanMechanism::new(&c)?;
    let reports = users
        .iter()
        .map(|x| mechanism.sample(x, &mut rng))
        .collect::<bcdp::Result<Vec<_>>>()?;
    let layered = aggregate_mean(&reports, d)?;

    let spec = LdpChannelSpec::new(demand.min_effective_delta(), d, (d as f64).sqrt())?;
    let mut sum = vec![0.0; d];
    for x in &users {
        let y = ball_channel_sample(x, &spec, &mut rng)?;
        sum.iter_mut().zip(&y.value).for_each(|(s, v)| *s += v / n as f64);
    }
    let baseline = project_box(&sum);

    println!("squared error, layered:  {:.4}", sq(&layered.mean_hat));
    println!("squared error, baseline: {:.4}", sq(&baseline));
    Ok(())
}

//! Private least squares with the label as the least protected coordinate.
//!
//! Run with `cargo run --release --example private_regression`.

use bcdp::calibration::PrivacyDemand;
use bcdp::mean::IdentityPrivatizer;
use bcdp::regression::{run_ols_with, run_private_ols, ExactRisk, FeasibleSet, RegressionDataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> bcdp::Result<()> {
    let star = [0.25, -0.25, 0.25, 0.25];
    let n = 5000;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let z: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..4).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect())
        .collect();
    let l = z
        .iter()
        .map(|row| row.iter().zip(&star).map(|(a, b)| a * b).sum::<f64>().clamp(-1.0, 1.0))
        .collect();
    let data = RegressionDataset::new(z, l)?;
    let ball = FeasibleSet::for_features(4);
    let risk = ExactRisk::new(&data, &ball);

    let demand = PrivacyDemand::new(2.0, vec![0.5, 0.5, 2.0, 2.0, 2.0], 0.0, 0.5)?;
    let private = run_private_ols(&data, &demand, &ball, &mut rng)?;
    println!("budget        {:.3?}", private.budget.as_ref().map(|c| c.in_caller_order()));
    println!("private theta {:.3?}", private.theta);
    println!(
        "excess risk   {:.4} (surrogate indefinite: {}, min eigenvalue {:.3})",
        private.excess_risk(&risk),
        private.solve.indefinite,
        private.solve.min_eigenvalue
    );

    let exact = run_ols_with(&data, &IdentityPrivatizer { dim: 5 }, &ball, &mut rng)?;
    println!("without privacy: theta {:.3?}, excess risk {:.2e}", exact.theta, exact.excess_risk(&risk));
    Ok(())
}

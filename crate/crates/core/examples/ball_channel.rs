//! The LDP ball channel: one report lands on a sphere, the average recovers
//! the input.
//!
//! Run with `cargo run --example ball_channel`.

use bcdp::mechanisms::{ball_channel_bound, ball_channel_sample, LdpChannelSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> bcdp::Result<()> {
    let v = [0.5, -0.25, 0.75];
    let spec = LdpChannelSpec::new(1.0, 3, 3f64.sqrt())?;
    println!("output radius B = {:.4}", ball_channel_bound(&spec)?);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let one = ball_channel_sample(&v, &spec, &mut rng)?;
    println!("one report: {:.3?}", one.value);

    let n = 200_000;
    let mut mean = [0.0; 3];
    for _ in 0..n {
        let z = ball_channel_sample(&v, &spec, &mut rng)?;
        mean.iter_mut().zip(&z.value).for_each(|(m, x)| *m += x / n as f64);
    }
    println!("average of {n}: {mean:.3?} (input {v:?})");
    Ok(())
}

//! The linear sufficient condition `A c <= 1` for coordinate budgets.
//!
//! Run with `cargo run --example feasibility_relaxation`.

use bcdp::calibration::{cdp_to_bcdp_bound, feasibility_matrix};

fn main() -> bcdp::Result<()> {
    let delta = [0.3, 1.0, 2.0];
    let q = [0.2, 0.2, 0.2];
    let a = feasibility_matrix(&delta, &q)?;
    for i in 0..a.dim() {
        let row: Vec<f64> = (0..a.dim()).map(|j| a.get(i, j)).collect();
        println!("A[{i}] = {row:.4?}");
    }

    // Scale a direction until it touches the relaxed region.
    let dir = [1.0, 2.0, 4.0];
    let load = a.apply(&dir)?.into_iter().fold(0.0, f64::max);
    let c: Vec<f64> = dir.iter().map(|v| v / load).collect();
    println!("c = {c:.4?}, feasible: {}", a.is_feasible(&c)?);

    let levels = cdp_to_bcdp_bound(&c, &q, None)?;
    for i in 0..3 {
        println!("coordinate {i}: bcdp bound {:.4} <= demand {}", levels[i], delta[i]);
    }
    Ok(())
}

//! Turn per-coordinate privacy demands into coordinate budgets.
//!
//! Run with `cargo run --example calibrate_budgets`.

use bcdp::calibration::{calibrate_budgets, cdp_to_bcdp_bound, verify_budget, PrivacyDemand, BUDGET_TOLERANCE};

fn main() -> bcdp::Result<()> {
    // Two sensitive coordinates among ten, overall LDP level 2.
    let mut delta = vec![0.2, 0.2];
    delta.extend([2.0; 8]);

    for q in [0.0, 0.05, 0.5] {
        let demand = PrivacyDemand::new(2.0, delta.clone(), q, 0.5)?;
        let c = calibrate_budgets(&demand)?;
        verify_budget(&demand, &c, BUDGET_TOLERANCE)?;

        let caller = c.in_caller_order();
        let achieved = cdp_to_bcdp_bound(&caller, &vec![q; caller.len()], Some(demand.epsilon()))?;
        println!("q = {q}");
        println!("  c        = {:.4?}", caller);
        println!("  bcdp <=  = {:.4?}", achieved);
        println!("  ldp      = {:.4}", c.ldp_level());
    }
    Ok(())
}

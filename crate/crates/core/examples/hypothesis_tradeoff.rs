//! BCDP as a limit on hypothesis tests about one coordinate.
//!
//! At the audited levels no test beats the tradeoff; shaving the level of a
//! coordinate produces a witness test that does.
//!
//! Run with `cargo run --example hypothesis_tradeoff`.

use bcdp::audit::{exact_bcdp_levels, fixtures, ht_tradeoff_check, TradeoffCheck};

fn main() -> bcdp::Result<()> {
    let m = fixtures::table_mechanism(0.2, 0.6, 0.9)?;
    let prior = fixtures::bernoulli_product(2);
    let levels = exact_bcdp_levels(&m, &prior)?;
    println!("audited levels {levels:?}");
    println!("holds at audited levels: {}", ht_tradeoff_check(&m, &prior, &levels)?.holds());

    let mut shaved = levels.clone();
    shaved[1] -= 1e-3;
    match ht_tradeoff_check(&m, &prior, &shaved)? {
        TradeoffCheck::Holds => println!("unexpectedly still holds"),
        TradeoffCheck::Violated(w) => println!(
            "coordinate {}: test 'reject when y = {}' has type I {:.4} and type II {:.4} for {} vs {}",
            w.coordinate, w.output, w.type_one, w.type_two, w.null_value, w.alt_value
        ),
    }
    Ok(())
}

//! Exact audits of two small mechanisms.
//!
//! The table mechanism is not LDP at any level yet keeps both coordinates at
//! `log 2` under independent bits. The XOR mechanism leaks nothing about
//! `x1` in one report but everything in two.
//!
//! Run with `cargo run --example audit_table_and_xor`.

use bcdp::audit::{audit, compose_product, exact_bcdp_levels, fixtures, format, postprocess};

fn main() -> bcdp::Result<()> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let table = format::read_kernel(dir.join("example31.tsv"))?;
    let prior = format::read_prior(dir.join("bern2.tsv"))?;
    println!("table mechanism\n{}", audit(&table, &prior)?);

    let xor = fixtures::xor_mechanism();
    let bits = fixtures::bernoulli_product(3);
    println!("xor, one report:  bcdp = {:?}", exact_bcdp_levels(&xor, &bits)?);
    let twice = compose_product(&xor, &xor)?;
    println!("xor, two reports: bcdp = {:?}", exact_bcdp_levels(&twice, &bits)?);

    // Keeping only the first bit of each report cannot leak more.
    let first_bit = postprocess(&xor, &[0, 0, 1, 1])?;
    println!("xor, first bit:   bcdp = {:?}", exact_bcdp_levels(&first_bit, &bits)?);
    Ok(())
}

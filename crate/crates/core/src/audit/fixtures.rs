//! Small mechanisms with known exact levels.

use crate::audit::finite::{DiscretePrior, FiniteMechanism, ProductDomain};
use crate::error::{Error, Result};

/// Two-bit mechanism with one binary output and
/// `P(M(x) = 1 | x1, x2)` given by the table
///
/// ```text
///            x1 = 0   x1 = 1
///   x2 = 0     a        b
///   x2 = 1     0        c
/// ```
///
/// The zero entry makes it not LDP for any finite level, while under an
/// independent uniform prior every coordinate keeps a finite BCDP level
/// (`log 2` for `a = b = c = 1/2`).
pub fn table_mechanism(a: f64, b: f64, c: f64) -> Result<FiniteMechanism> {
    if [a, b, c].iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
        return Err(Error::Domain(format!(
            "table parameters must lie in (0, 1], got ({a}, {b}, {c})"
        )));
    }
    let domain = ProductDomain::new(vec![2, 2])?;
    FiniteMechanism::from_fn(domain, 2, |x, y| {
        let one = match (x[0], x[1]) {
            (0, 0) => a,
            (1, 0) => b,
            (0, 1) => 0.0,
            _ => c,
        };
        if y == 1 {
            one
        } else {
            1.0 - one
        }
    })
}

/// Three-bit mechanism that reports `(x1 ^ x2, x3)` or `(x2, x1 ^ x3)` with
/// equal probability. Output `(u, v)` is labelled `2u + v`.
///
/// Under independent uniform bits one report says nothing about `x1`, but
/// two independent reports can reveal it.
pub fn xor_mechanism() -> FiniteMechanism {
    let domain = ProductDomain::new(vec![2, 2, 2]).expect("fixed sizes");
    FiniteMechanism::from_fn(domain, 4, |x, y| {
        let first = 2 * (x[0] ^ x[1]) + x[2];
        let second = 2 * x[1] + (x[0] ^ x[2]);
        0.5 * f64::from(u8::from(y == first)) + 0.5 * f64::from(u8::from(y == second))
    })
    .expect("rows sum to one")
}

/// Independent fair bits on `d` coordinates.
pub fn bernoulli_product(d: usize) -> DiscretePrior {
    let domain = ProductDomain::new(vec![2; d]).expect("d >= 1");
    DiscretePrior::uniform(domain)
}

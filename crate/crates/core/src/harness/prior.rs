//! The correlated Bernoulli prior used in the experiments.
//!
//! With probability `q` every coordinate equals one shared fair bit `Z`;
//! otherwise the coordinates are independent fair bits.

use rand::Rng;

use crate::audit::{DiscretePrior, ProductDomain};
use crate::error::{Error, Result};

/// Largest dimension for which the exact pmf is built.
pub const MAX_EXACT_DIM: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatedBernoulli {
    dim: usize,
    q: f64,
}

impl CorrelatedBernoulli {
    pub fn new(dim: usize, q: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("prior dimension must be positive".into()));
        }
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Domain(format!("q must lie in [0, 1], got {q}")));
        }
        Ok(CorrelatedBernoulli { dim, q })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Exact pmf on `{0, 1}^d`.
    pub fn exact(&self) -> Result<DiscretePrior> {
        if self.dim > MAX_EXACT_DIM {
            return Err(Error::Domain(format!(
                "exact prior needs 2^{} masses; limit is d = {MAX_EXACT_DIM}",
                self.dim
            )));
        }
        let domain = ProductDomain::new(vec![2; self.dim])?;
        let last = domain.len() - 1;
        let base = (1.0 - self.q) / domain.len() as f64;
        let pmf = (0..domain.len())
            .map(|x| if x == 0 || x == last { base + self.q / 2.0 } else { base })
            .collect();
        DiscretePrior::new(domain, pmf)
    }

    /// One draw mapped to `{-1, 1}^d` by `x -> 2x - 1`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let sign = |b: bool| if b { 1.0 } else { -1.0 };
        if rng.random::<f64>() < self.q {
            vec![sign(rng.random()); self.dim]
        } else {
            (0..self.dim).map(|_| sign(rng.random())).collect()
        }
    }
}

/// The literal i.i.d. data model: independent `2 Bern(1/2) - 1` coordinates.
pub fn iid_signs<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

use rand::Rng;

use crate::error::{Error, Result};

/// Rows of a kernel and the mass of a prior must sum to one within this.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-12;

/// A finite product domain `X_1 x ... x X_d` where `X_j = {0, .., sizes[j] - 1}`.
///
/// Points are indexed in mixed radix with the last coordinate varying fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductDomain {
    sizes: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl ProductDomain {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::Domain("a product domain needs at least one coordinate".into()));
        }
        if sizes.contains(&0) {
            return Err(Error::Domain(format!("coordinate sizes must be positive: {sizes:?}")));
        }
        let mut strides = vec![1; sizes.len()];
        for j in (0..sizes.len() - 1).rev() {
            strides[j] = strides[j + 1] * sizes[j + 1];
        }
        let len = strides[0] * sizes[0];
        Ok(ProductDomain {
            sizes,
            strides,
            len,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Number of coordinates `d`.
    pub fn dim(&self) -> usize {
        self.sizes.len()
    }

    /// Number of points `|X|`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Value of coordinate `coord` at point `index`.
    pub fn value(&self, index: usize, coord: usize) -> usize {
        (index / self.strides[coord]) % self.sizes[coord]
    }

    pub fn point(&self, index: usize) -> Vec<usize> {
        (0..self.dim()).map(|j| self.value(index, j)).collect()
    }

    pub fn index_of(&self, point: &[usize]) -> Result<usize> {
        Error::check_dim(self.dim(), point.len())?;
        point
            .iter()
            .zip(&self.sizes)
            .zip(&self.strides)
            .try_fold(0, |acc, ((&v, &size), &stride)| {
                if v < size {
                    Ok(acc + v * stride)
                } else {
                    Err(Error::Domain(format!("value {v} outside coordinate of size {size}")))
                }
            })
    }

    /// Index of the point with coordinate `coord` removed, in the product of
    /// the remaining coordinates (same mixed-radix convention).
    pub fn rest_index(&self, index: usize, coord: usize) -> usize {
        let stride = self.strides[coord];
        let high = index / (stride * self.sizes[coord]);
        let low = index % stride;
        high * stride + low
    }

    /// Number of points of `X_{-coord}`.
    pub fn rest_len(&self, coord: usize) -> usize {
        self.len / self.sizes[coord]
    }

    /// Index of the point obtained from `index` by setting coordinate `coord`
    /// to `value`.
    pub fn with_value(&self, index: usize, coord: usize, value: usize) -> usize {
        index - self.value(index, coord) * self.strides[coord] + value * self.strides[coord]
    }
}

/// A row-stochastic kernel from a finite product domain to `{0, .., outputs - 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMechanism {
    domain: ProductDomain,
    outputs: usize,
    kernel: Vec<f64>,
}

impl FiniteMechanism {
    /// `kernel` is row-major: `kernel[x * outputs + y] = P(M(x) = y)`.
    pub fn new(domain: ProductDomain, outputs: usize, kernel: Vec<f64>) -> Result<Self> {
        if outputs == 0 {
            return Err(Error::Domain("a mechanism needs at least one output".into()));
        }
        Error::check_dim(domain.len() * outputs, kernel.len())?;
        for (x, row) in kernel.chunks(outputs).enumerate() {
            if let Some(p) = row.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
                return Err(Error::Domain(format!("row {x} has invalid probability {p}")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > STOCHASTIC_TOLERANCE {
                return Err(Error::Domain(format!("row {x} sums to {total}, not 1")));
            }
        }
        Ok(FiniteMechanism {
            domain,
            outputs,
            kernel,
        })
    }

    /// Builds a kernel from a closure `P(M(x) = y)` over point tuples.
    pub fn from_fn(
        domain: ProductDomain,
        outputs: usize,
        mut prob: impl FnMut(&[usize], usize) -> f64,
    ) -> Result<Self> {
        let mut kernel = Vec::with_capacity(domain.len() * outputs);
        for x in 0..domain.len() {
            let point = domain.point(x);
            kernel.extend((0..outputs).map(|y| prob(&point, y)));
        }
        Self::new(domain, outputs, kernel)
    }

    pub fn domain(&self) -> &ProductDomain {
        &self.domain
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.kernel[x * self.outputs..(x + 1) * self.outputs]
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.kernel[x * self.outputs + y]
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    /// Draws one output for input point `x`.
    pub fn sample<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let row = self.row(x);
        for (y, p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return y;
            }
        }
        // Rounding left the cumulative sum just short of one.
        row.iter().rposition(|p| *p > 0.0).unwrap_or(0)
    }
}

/// A probability mass function over a finite product domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePrior {
    domain: ProductDomain,
    pmf: Vec<f64>,
}

impl DiscretePrior {
    pub fn new(domain: ProductDomain, pmf: Vec<f64>) -> Result<Self> {
        Error::check_dim(domain.len(), pmf.len())?;
        if let Some(p) = pmf.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::Domain(format!("invalid prior mass {p}")));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > STOCHASTIC_TOLERANCE {
            return Err(Error::Domain(format!("prior sums to {total}, not 1")));
        }
        Ok(DiscretePrior { domain, pmf })
    }

    pub fn uniform(domain: ProductDomain) -> Self {
        let mass = 1.0 / domain.len() as f64;
        let pmf = vec![mass; domain.len()];
        DiscretePrior { domain, pmf }
    }

    /// Product of independent per-coordinate marginals.
    pub fn independent(marginals: &[Vec<f64>]) -> Result<Self> {
        let domain = ProductDomain::new(marginals.iter().map(Vec::len).collect())?;
        let pmf = (0..domain.len())
            .map(|x| {
                marginals
                    .iter()
                    .enumerate()
                    .map(|(j, m)| m[domain.value(x, j)])
                    .product()
            })
            .collect();
        Self::new(domain, pmf)
    }

    pub fn domain(&self) -> &ProductDomain {
        &self.domain
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn mass(&self, x: usize) -> f64 {
        self.pmf[x]
    }

    /// Marginal law of coordinate `coord`.
    pub fn marginal(&self, coord: usize) -> Vec<f64> {
        let mut m = vec![0.0; self.domain.sizes()[coord]];
        for (x, p) in self.pmf.iter().enumerate() {
            m[self.domain.value(x, coord)] += p;
        }
        m
    }

    /// Values of coordinate `coord` with positive marginal mass.
    pub fn support(&self, coord: usize) -> Vec<usize> {
        self.marginal(coord)
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(s, _)| s)
            .collect()
    }

    /// Law of `x_{-coord}` given `x_coord = value`, indexed by
    /// [`ProductDomain::rest_index`]. `None` when the value has no mass.
    pub fn conditional_rest(&self, coord: usize, value: usize) -> Option<Vec<f64>> {
        let mut out = vec![0.0; self.domain.rest_len(coord)];
        let mut total = 0.0;
        for (x, p) in self.pmf.iter().enumerate() {
            if self.domain.value(x, coord) == value {
                out[self.domain.rest_index(x, coord)] += p;
                total += p;
            }
        }
        if total > 0.0 {
            out.iter_mut().for_each(|p| *p /= total);
            Some(out)
        } else {
            None
        }
    }
}

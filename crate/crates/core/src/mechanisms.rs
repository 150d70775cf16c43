//! Base LDP randomizers.
//!
//! [`BallChannel`] privatizes a vector in the Euclidean ball of radius `r` by
//! reporting a point on a sphere of radius `B`, biased towards a randomly
//! rounded copy of the input. [`RandomizedResponse`] is the `k`-ary
//! randomized response, whose kernel can be audited exactly.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::audit::{FiniteMechanism, ProductDomain};
use crate::error::{Error, Result};

/// A local randomizer with a known LDP level.
pub trait LocalRandomizer {
    type Input: ?Sized;
    type Output;

    fn ldp_level(&self) -> f64;

    fn randomize<R: Rng + ?Sized>(&self, input: &Self::Input, rng: &mut R) -> Result<Self::Output>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdpChannelSpec {
    pub alpha: f64,
    pub dim: usize,
    pub radius: f64,
}

impl LdpChannelSpec {
    pub fn new(alpha: f64, dim: usize, radius: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!("alpha must be finite and non-negative, got {alpha}")));
        }
        if dim == 0 {
            return Err(Error::Domain("channel dimension must be positive".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!("radius must be positive, got {radius}")));
        }
        Ok(LdpChannelSpec { alpha, dim, radius })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomizerSample {
    pub value: Vec<f64>,
}

/// Radius `B` of the output sphere.
///
/// `B = r (e^a + 1)/(e^a - 1) * sqrt(pi) * Gamma((d+1)/2) / Gamma(d/2)`, the
/// value for which the report is an unbiased estimate of the input.
pub fn ball_channel_bound(spec: &LdpChannelSpec) -> Result<f64> {
    if spec.alpha == 0.0 {
        return Err(Error::ZeroBudgetChannel);
    }
    let em1 = spec.alpha.exp_m1();
    let odds = (em1 + 2.0) / em1;
    let ratio = half_gamma_ratio(spec.dim as f64 / 2.0);
    Ok(spec.radius * odds * std::f64::consts::PI.sqrt() * ratio)
}

/// `Gamma(x + 1/2) / Gamma(x)`.
///
/// Log-gamma differences cancel badly once `x` is large, so past 500 the
/// asymptotic series is used instead (truncation error below 1e-16 there).
fn half_gamma_ratio(x: f64) -> f64 {
    if x < 500.0 {
        return (libm::lgamma(x + 0.5) - libm::lgamma(x)).exp();
    }
    let t = 1.0 / x;
    x.sqrt() * (1.0 + t * (-1.0 / 8.0 + t * (1.0 / 128.0 + t * (5.0 / 1024.0 - t * 21.0 / 32768.0))))
}

/// Draws one report of the ball channel for input `v`.
///
/// With `K ~ Bern(e^a / (e^a + 1))` and `S ~ Bern(1/2 + |v| / 2r)`, the
/// report is uniform on the half of the radius-`B` sphere on the side of
/// `(2S - 1) v` selected by `K`. For `v = 0` the first basis vector stands in
/// for the direction of `v`; since `S` is then a fair coin the report is
/// uniform on the whole sphere either way.
pub fn ball_channel_sample<R: Rng + ?Sized>(
    v: &[f64],
    spec: &LdpChannelSpec,
    rng: &mut R,
) -> Result<RandomizerSample> {
    Error::check_dim(spec.dim, v.len())?;
    let bound = ball_channel_bound(spec)?;
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm <= spec.radius * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!(
            "input norm {norm} exceeds channel radius {}",
            spec.radius
        )));
    }

    let keep_side = rng.random::<f64>() < 1.0 / (1.0 + (-spec.alpha).exp());
    let toward = rng.random::<f64>() < (0.5 + norm / (2.0 * spec.radius)).min(1.0);
    let sign = if keep_side == toward { 1.0 } else { -1.0 };

    let mut z: Vec<f64> = vec![0.0; spec.dim];
    loop {
        z.iter_mut()
            .for_each(|x| *x = StandardNormal.sample(rng));
        let along = if norm > 0.0 {
            z.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
        } else {
            z[0]
        };
        let len = z.iter().map(|x| x * x).sum::<f64>().sqrt();
        if along == 0.0 || len == 0.0 {
            // Boundary of the half-sphere, probability zero.
            continue;
        }
        let scale = if along * sign > 0.0 { bound / len } else { -bound / len };
        z.iter_mut().for_each(|x| *x *= scale);
        return Ok(RandomizerSample { value: z });
    }
}

/// The ball channel as a reusable randomizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallChannel {
    spec: LdpChannelSpec,
    bound: f64,
}

impl BallChannel {
    pub fn new(spec: LdpChannelSpec) -> Result<Self> {
        let bound = ball_channel_bound(&spec)?;
        Ok(BallChannel { spec, bound })
    }

    pub fn spec(&self) -> &LdpChannelSpec {
        &self.spec
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }
}

impl LocalRandomizer for BallChannel {
    type Input = [f64];
    type Output = RandomizerSample;

    fn ldp_level(&self) -> f64 {
        self.spec.alpha
    }

    fn randomize<R: Rng + ?Sized>(&self, input: &[f64], rng: &mut R) -> Result<RandomizerSample> {
        ball_channel_sample(input, &self.spec, rng)
    }
}

/// `k`-ary randomized response: keep the input with probability
/// `e^a / (e^a + k - 1)`, otherwise report one of the other `k - 1` values
/// uniformly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomizedResponse {
    k: usize,
    alpha: f64,
}

impl RandomizedResponse {
    pub fn new(k: usize, alpha: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::Domain(format!("randomized response needs k >= 2, got {k}")));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!("alpha must be finite and non-negative, got {alpha}")));
        }
        Ok(RandomizedResponse { k, alpha })
    }

    /// `(P(y = x), P(y = x') for each x' != x)`.
    pub fn probabilities(&self) -> (f64, f64) {
        let other = (-self.alpha).exp();
        let denom = 1.0 + (self.k - 1) as f64 * other;
        (1.0 / denom, other / denom)
    }

    pub fn kernel(&self) -> FiniteMechanism {
        let (keep, flip) = self.probabilities();
        let domain = ProductDomain::new(vec![self.k]).expect("k >= 2");
        FiniteMechanism::from_fn(domain, self.k, |x, y| if x[0] == y { keep } else { flip })
            .expect("randomized response rows are stochastic")
    }
}

impl LocalRandomizer for RandomizedResponse {
    type Input = usize;
    type Output = usize;

    fn ldp_level(&self) -> f64 {
        self.alpha
    }

    fn randomize<R: Rng + ?Sized>(&self, input: &usize, rng: &mut R) -> Result<usize> {
        if *input >= self.k {
            return Err(Error::Domain(format!("value {input} outside 0..{}", self.k)));
        }
        let (keep, _) = self.probabilities();
        if rng.random::<f64>() < keep {
            return Ok(*input);
        }
        let other = rng.random_range(0..self.k - 1);
        Ok(if other >= *input { other + 1 } else { other })
    }
}

/// Kernel of `k`-ary randomized response at level `alpha`.
pub fn rr_kernel(k: usize, alpha: f64) -> Result<FiniteMechanism> {
    Ok(RandomizedResponse::new(k, alpha)?.kernel())
}

//! Layered mean estimation under coordinate budgets.
//!
//! Layer `k` spends the increment `c_k - c_{k-1}` on an LDP ball-channel
//! report of the suffix `x_{k..d}` (internal order), so the most sensitive
//! coordinates appear in the fewest layers. Each coordinate combines the
//! layers that saw it with weights `w_k = (c_k - c_{k-1})^2 / (d - k + 1)`.

use rand::Rng;

use crate::calibration::CoordinateBudget;
use crate::error::{Error, Result};
use crate::mechanisms::{BallChannel, LdpChannelSpec, LocalRandomizer};

/// A user vector in `[-1, 1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPoint(Vec<f64>);

impl DataPoint {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        check_box(&x)?;
        Ok(DataPoint(x))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

fn check_box(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::Empty("data point"));
    }
    match x.iter().position(|v| !(-1.0..=1.0).contains(v)) {
        Some(i) => Err(Error::Domain(format!("coordinate {i} = {} outside [-1, 1]", x[i]))),
        None => Ok(()),
    }
}

/// One layer of the mechanism.
#[derive(Debug, Clone)]
pub struct Layer {
    /// Internal index `k` (0-based) of the first coordinate the layer sees.
    pub start: usize,
    pub increment: f64,
    pub weight: f64,
    pub channel: BallChannel,
}

/// Output of one user's layered report.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredReport {
    /// Per-coordinate unbiased estimate in caller order, not projected.
    pub nu_hat: Vec<f64>,
    /// Layer weights `w_k` in internal order; zero for skipped layers.
    pub weights: Vec<f64>,
    /// `sum_{k <= i} w_k` for each coordinate, caller order.
    pub cumulative_weight: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateVector {
    /// Projected estimate in `[-1, 1]^d`.
    pub mean_hat: Vec<f64>,
    /// Average of the reports before projection.
    pub raw_mean: Vec<f64>,
    /// `(1/n) / sum_{k <= i} w_k`, infinite where no layer saw coordinate `i`.
    pub variance_pred: Vec<f64>,
}

/// The layered mechanism for a fixed budget.
#[derive(Debug, Clone)]
pub struct MeanMechanism {
    budget: CoordinateBudget,
    layers: Vec<Layer>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl MeanMechanism {
    pub fn new(budget: &CoordinateBudget) -> Result<Self> {
        let c = budget.internal();
        let d = c.len();
        let mut layers = Vec::new();
        let mut weights = vec![0.0; d];
        let mut prev = 0.0;
        for (k, &ck) in c.iter().enumerate() {
            let increment = ck - prev;
            prev = ck;
            // Zero increments would need an infinite channel radius; they
            // carry zero weight anyway.
            if increment <= 0.0 {
                continue;
            }
            let width = d - k;
            let spec = LdpChannelSpec::new(increment, width, (width as f64).sqrt())?;
            let weight = increment * increment / width as f64;
            weights[k] = weight;
            layers.push(Layer {
                start: k,
                increment,
                weight,
                channel: BallChannel::new(spec)?,
            });
        }
        let cumulative: Vec<f64> = weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        Ok(MeanMechanism {
            budget: budget.clone(),
            layers,
            weights,
            cumulative,
        })
    }

    pub fn dim(&self) -> usize {
        self.budget.dim()
    }

    pub fn budget(&self) -> &CoordinateBudget {
        &self.budget
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// `sum_{k <= i} w_k` in caller order.
    pub fn cumulative_weight(&self) -> Vec<f64> {
        self.budget.to_caller_order(&self.cumulative)
    }

    /// Caller coordinates read by each layer.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let perm = self.budget.perm();
        self.layers
            .iter()
            .map(|l| perm[l.start..].to_vec())
            .collect()
    }

    /// Sum of the layer increments, the LDP level of one report.
    pub fn consumed_budget(&self) -> f64 {
        self.layers.iter().map(|l| l.increment).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<LayeredReport> {
        Error::check_dim(self.dim(), x.len())?;
        check_box(x)?;
        let xs = self.budget.to_internal_order(x);
        let d = xs.len();
        let mut acc = vec![0.0; d];
        for layer in &self.layers {
            let y = layer.channel.randomize(&xs[layer.start..], rng)?;
            for (a, v) in acc[layer.start..].iter_mut().zip(&y.value) {
                *a += layer.weight * v;
            }
        }
        let nu: Vec<f64> = acc
            .iter()
            .zip(&self.cumulative)
            .map(|(a, w)| if *w > 0.0 { a / w } else { 0.0 })
            .collect();
        Ok(LayeredReport {
            nu_hat: self.budget.to_caller_order(&nu),
            weights: self.weights.clone(),
            cumulative_weight: self.cumulative_weight(),
        })
    }
}

/// One layered report for `x` under budget `c`.
pub fn m_mean_sample<R: Rng + ?Sized>(
    x: &DataPoint,
    c: &CoordinateBudget,
    rng: &mut R,
) -> Result<LayeredReport> {
    MeanMechanism::new(c)?.sample(x.as_slice(), rng)
}

/// Averages the reports of `n` users and clamps to `[-1, 1]^d`.
pub fn aggregate_mean(reports: &[LayeredReport], d: usize) -> Result<EstimateVector> {
    let first = reports.first().ok_or(Error::Empty("reports"))?;
    let n = reports.len() as f64;
    let mut raw = vec![0.0; d];
    for r in reports {
        Error::check_dim(d, r.nu_hat.len())?;
        raw.iter_mut().zip(&r.nu_hat).for_each(|(m, v)| *m += v);
    }
    raw.iter_mut().for_each(|m| *m /= n);
    Error::check_dim(d, first.cumulative_weight.len())?;
    Ok(EstimateVector {
        mean_hat: project_box(&raw),
        variance_pred: first
            .cumulative_weight
            .iter()
            .map(|w| if *w > 0.0 { 1.0 / (n * w) } else { f64::INFINITY })
            .collect(),
        raw_mean: raw,
    })
}

/// Coordinatewise clamp to `[-1, 1]`.
pub fn project_box(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.clamp(-1.0, 1.0)).collect()
}

/// `sum_i 1 / sum_{k <= i} w_k`, infinite if some coordinate gets no layer.
pub fn predicted_variance_sum(c: &CoordinateBudget) -> f64 {
    let d = c.dim() as f64;
    let mut prev = 0.0;
    let mut cumulative = 0.0;
    let mut total = 0.0;
    for (k, &ck) in c.internal().iter().enumerate() {
        let inc = ck - prev;
        prev = ck;
        cumulative += inc * inc / (d - k as f64);
        total += 1.0 / cumulative;
    }
    total
}

/// Shape of the mean-squared-error bound without constants:
/// `min((1/n) sum_i 1 / sum_{k <= i} w_k, d)`.
pub fn predicted_mse_shape(c: &CoordinateBudget, n: usize) -> f64 {
    let d = c.dim() as f64;
    (predicted_variance_sum(c) / n as f64).min(d)
}

/// A per-user privatizer producing an unbiased, unprojected estimate of the
/// user's vector.
pub trait PointPrivatizer: Sync {
    fn dim(&self) -> usize;

    fn privatize(&self, x: &[f64], rng: &mut dyn rand::RngCore) -> Result<Vec<f64>>;
}

impl PointPrivatizer for MeanMechanism {
    fn dim(&self) -> usize {
        MeanMechanism::dim(self)
    }

    fn privatize(&self, x: &[f64], mut rng: &mut dyn rand::RngCore) -> Result<Vec<f64>> {
        Ok(self.sample(x, &mut rng)?.nu_hat)
    }
}

impl PointPrivatizer for BallChannel {
    fn dim(&self) -> usize {
        self.spec().dim
    }

    fn privatize(&self, x: &[f64], mut rng: &mut dyn rand::RngCore) -> Result<Vec<f64>> {
        Ok(self.randomize(x, &mut rng)?.value)
    }
}

/// Releases the input unchanged. Not private; for checking the
/// downstream estimators in isolation.
#[derive(Debug, Clone, Copy)]
pub struct IdentityPrivatizer {
    pub dim: usize,
}

impl PointPrivatizer for IdentityPrivatizer {
    fn dim(&self) -> usize {
        self.dim
    }

    fn privatize(&self, x: &[f64], _rng: &mut dyn rand::RngCore) -> Result<Vec<f64>> {
        Error::check_dim(self.dim, x.len())?;
        Ok(x.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::ball_channel_sample;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn budget(c: &[f64]) -> CoordinateBudget {
        CoordinateBudget::sorted(c.to_vec()).unwrap()
    }

    fn moments(samples: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
        let n = samples.len() as f64;
        let d = samples[0].len();
        let mut mean = vec![0.0; d];
        let mut sq = vec![0.0; d];
        for s in samples {
            for i in 0..d {
                mean[i] += s[i] / n;
                sq[i] += s[i] * s[i] / n;
            }
        }
        let var = (0..d).map(|i| sq[i] - mean[i] * mean[i]).collect();
        (mean, var)
    }

    #[test]
    fn one_dimension_is_a_single_channel_call() {
        let c = budget(&[0.8]);
        let m = MeanMechanism::new(&c).unwrap();
        assert_eq!(m.layers().len(), 1);
        let spec = LdpChannelSpec::new(0.8, 1, 1.0).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let r = m.sample(&[0.3], &mut a).unwrap();
            let y = ball_channel_sample(&[0.3], &spec, &mut b).unwrap();
            assert_eq!(r.nu_hat, y.value);
        }
    }

    #[test]
    fn zero_increment_layers_are_skipped() {
        let c = budget(&[0.5, 0.5, 1.2]);
        let m = MeanMechanism::new(&c).unwrap();
        let starts: Vec<usize> = m.layers().iter().map(|l| l.start).collect();
        assert_eq!(starts, vec![0, 2]);

        let x = [0.1, -0.7, 0.4];
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        let r = m.sample(&x, &mut a).unwrap();
        let y1 = ball_channel_sample(&x, &LdpChannelSpec::new(0.5, 3, 3f64.sqrt()).unwrap(), &mut b).unwrap();
        let y3 = ball_channel_sample(&x[2..], &LdpChannelSpec::new(0.7, 1, 1.0).unwrap(), &mut b).unwrap();
        let (w1, w3) = (0.25 / 3.0, 0.49);
        assert_eq!(r.weights[1], 0.0);
        assert_eq!(r.nu_hat[0], y1.value[0]);
        assert_eq!(r.nu_hat[1], y1.value[1]);
        let expect = (w1 * y1.value[2] + w3 * y3.value[0]) / (w1 + w3);
        assert!((r.nu_hat[2] - expect).abs() < 1e-12);
    }

    #[test]
    fn unseen_coordinates_report_the_midpoint() {
        let c = budget(&[0.0, 0.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = m_mean_sample(&DataPoint::new(vec![0.9, -0.9, 0.0]).unwrap(), &c, &mut rng).unwrap();
        assert_eq!(&r.nu_hat[..2], &[0.0, 0.0]);
        let est = aggregate_mean(&[r], 3).unwrap();
        assert_eq!(est.variance_pred[0], f64::INFINITY);
        assert!(est.variance_pred[2].is_finite());
    }

    #[test]
    fn rejects_bad_inputs() {
        let c = budget(&[0.5, 1.0]);
        let m = MeanMechanism::new(&c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(m.sample(&[0.1], &mut rng).is_err());
        assert!(m.sample(&[0.1, 1.5], &mut rng).is_err());
        assert!(DataPoint::new(vec![f64::NAN]).is_err());
        assert!(aggregate_mean(&[], 2).is_err());
    }

    #[test]
    fn monte_carlo_unbiased() {
        let c = budget(&[0.5, 1.0, 2.0]);
        let x = [0.2, -0.4, 0.9];
        let m = MeanMechanism::new(&c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let samples: Vec<Vec<f64>> = (0..100_000).map(|_| m.sample(&x, &mut rng).unwrap().nu_hat).collect();
        let (mean, var) = moments(&samples);
        for i in 0..3 {
            let se = (var[i] / samples.len() as f64).sqrt();
            assert!((mean[i] - x[i]).abs() < 4.0 * se, "coord {i}: {} vs {}", mean[i], x[i]);
        }
    }

    #[test]
    fn combined_layers_beat_each_single_layer() {
        // Coordinate 3 is seen by all three layers.
        let c = budget(&[0.5, 1.0, 2.0]);
        let m = MeanMechanism::new(&c).unwrap();
        let x = [0.2, -0.4, 0.9];
        let xs = x.to_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 100_000;
        let mut combined = Vec::with_capacity(n);
        let mut singles = vec![Vec::new(); 3];
        for _ in 0..n {
            let mut acc = 0.0;
            for (l, single) in m.layers().iter().zip(singles.iter_mut()) {
                let y = l.channel.randomize(&xs[l.start..], &mut rng).unwrap();
                let v = *y.value.last().unwrap();
                single.push(vec![v]);
                acc += l.weight * v;
            }
            combined.push(vec![acc / m.cumulative_weight()[2]]);
        }
        let var_combined = moments(&combined).1[0];
        for single in &singles {
            let var_single = moments(single).1[0];
            assert!(var_combined <= 1.05 * var_single, "{var_combined} vs {var_single}");
        }
    }

    #[test]
    fn permuted_budget_matches_sorted_run() {
        // Caller coordinate 2 is the most sensitive, then 0, then 1.
        let perm = vec![2, 0, 1];
        let c = CoordinateBudget::new(vec![0.3, 0.9, 1.5], perm.clone()).unwrap();
        let sorted = budget(&[0.3, 0.9, 1.5]);
        let x = [0.5, -0.2, 0.8];
        let xs: Vec<f64> = perm.iter().map(|&p| x[p]).collect();
        let a = MeanMechanism::new(&c).unwrap();
        let b = MeanMechanism::new(&sorted).unwrap();
        let mut ra = ChaCha8Rng::seed_from_u64(5);
        let mut rb = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let ya = a.sample(&x, &mut ra).unwrap();
            let yb = b.sample(&xs, &mut rb).unwrap();
            for (k, &p) in perm.iter().enumerate() {
                assert_eq!(ya.nu_hat[p], yb.nu_hat[k]);
            }
        }
        assert_eq!(a.incidence(), vec![vec![2, 0, 1], vec![0, 1], vec![1]]);
    }

    #[test]
    fn accounting_matches_the_top_budget() {
        let c = budget(&[0.2, 0.2, 0.7, 0.7, 2.0]);
        let m = MeanMechanism::new(&c).unwrap();
        assert!((m.consumed_budget() - 2.0).abs() < 1e-15);
        // Layer k only reads coordinates at or after k.
        for (layer, seen) in m.layers().iter().zip(m.incidence()) {
            assert!(seen.iter().all(|&i| i >= layer.start));
            assert_eq!(seen.len(), 5 - layer.start);
        }
    }

    #[test]
    fn aggregation_averages_then_clamps() {
        let r = |v: Vec<f64>| LayeredReport {
            nu_hat: v,
            weights: vec![1.0, 0.0],
            cumulative_weight: vec![1.0, 1.0],
        };
        let est = aggregate_mean(&[r(vec![2.0, -3.0]), r(vec![0.0, 5.0])], 2).unwrap();
        assert_eq!(est.raw_mean, vec![1.0, 1.0]);
        assert_eq!(est.mean_hat, vec![1.0, 1.0]);
        assert_eq!(est.variance_pred, vec![0.5, 0.5]);
        let inside = aggregate_mean(&[r(vec![0.3, -0.4])], 2).unwrap();
        assert_eq!(inside.mean_hat, vec![0.3, -0.4]);
    }

    #[test]
    fn predicted_variance_is_non_increasing() {
        let c = budget(&[0.1, 0.4, 0.9, 1.6]);
        let m = MeanMechanism::new(&c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = m.sample(&[0.0; 4], &mut rng).unwrap();
        let est = aggregate_mean(&[r], 4).unwrap();
        assert!(est.variance_pred.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn golden_mse_shape() {
        let mut c = vec![0.2, 0.2];
        c.extend([2.0; 8]);
        let c = budget(&c);
        // Exact rational evaluation of the nested sums.
        assert!((predicted_variance_sum(&c) - 519.559_902_200_489).abs() < 1e-9);
        assert!((predicted_mse_shape(&c, 2000) - 519.559_902_200_489 / 2000.0).abs() < 1e-12);
        assert_eq!(predicted_mse_shape(&c, 10), 10.0);
        assert_eq!(predicted_mse_shape(&budget(&[0.0; 4]), 100), 4.0);
    }

    #[test]
    fn uniform_budget_has_the_ldp_shape() {
        for d in 1..20 {
            for &eps in &[0.1, 1.0, 4.0] {
                let c = CoordinateBudget::uniform(eps, d).unwrap();
                let n = 1000;
                let shape = predicted_mse_shape(&c, n);
                let d2 = (d * d) as f64 / (n as f64 * eps * eps);
                assert!((shape - d2.min(d as f64)).abs() < 1e-9 * d2);
            }
        }
    }

    #[test]
    fn identity_privatizer_is_transparent() {
        let p = IdentityPrivatizer { dim: 2 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(p.privatize(&[0.5, -1.0], &mut rng).unwrap(), vec![0.5, -1.0]);
        assert!(p.privatize(&[0.5], &mut rng).is_err());
    }

    proptest! {
        #[test]
        fn projection_never_increases_error(
            target in prop::collection::vec(-1.0f64..=1.0, 1..8),
            noise in prop::collection::vec(-20.0f64..20.0, 8),
        ) {
            let raw: Vec<f64> = target.iter().zip(&noise).map(|(t, e)| t + e).collect();
            let projected = project_box(&raw);
            let before: f64 = raw.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum();
            let after: f64 = projected.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum();
            prop_assert!(after <= before);
        }

        #[test]
        fn weights_are_convex(c in prop::collection::vec(0.0f64..3.0, 1..8), seed in any::<u64>()) {
            let mut c = c;
            c.sort_by(f64::total_cmp);
            let b = budget(&c);
            let m = MeanMechanism::new(&b).unwrap();
            let x = vec![0.25; c.len()];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = m.sample(&x, &mut rng).unwrap();
            prop_assert!(r.weights.iter().all(|w| *w >= 0.0));
            prop_assert!((m.consumed_budget() - c[c.len() - 1]).abs() < 1e-12);
            for (i, w) in r.cumulative_weight.iter().enumerate() {
                if *w == 0.0 {
                    prop_assert_eq!(r.nu_hat[i], 0.0);
                }
            }
        }
    }
}

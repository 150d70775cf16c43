//! Per-coordinate budget calibration.
//!
//! A [`PrivacyDemand`] states what a user asks for: a global LDP level
//! `epsilon`, a per-coordinate BCDP level `delta_i`, a bound `q` on how much
//! any coordinate can shift the conditional law of the others (in total
//! variation), and a split parameter `zeta`. [`calibrate_budgets`] turns it
//! into a non-decreasing vector of coordinate-DP budgets `c` that the layered
//! mean mechanism consumes.
//!
//! All budget arithmetic goes through `ln_1p` / `exp_m1` so that small
//! budgets and small `q` do not lose precision.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Tolerance used when checking the calibrated budget against its demand.
pub const BUDGET_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyDemand {
    epsilon: f64,
    delta: Vec<f64>,
    q: f64,
    zeta: f64,
}

impl PrivacyDemand {
    /// `delta` may be given in any order; `f64::INFINITY` means the
    /// coordinate has no demand beyond `epsilon`.
    pub fn new(epsilon: f64, delta: Vec<f64>, q: f64, zeta: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::InvalidDemand(format!(
                "epsilon must be finite and non-negative, got {epsilon}"
            )));
        }
        if delta.is_empty() {
            return Err(Error::InvalidDemand("delta must have at least one coordinate".into()));
        }
        if let Some((i, d)) = delta.iter().enumerate().find(|(_, d)| d.is_nan() || **d < 0.0) {
            return Err(Error::InvalidDemand(format!(
                "delta[{i}] must be non-negative or +inf, got {d}"
            )));
        }
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidDemand(format!("q must lie in [0, 1], got {q}")));
        }
        if !(zeta > 0.0 && zeta <= 1.0) {
            return Err(Error::InvalidDemand(format!("zeta must lie in (0, 1], got {zeta}")));
        }
        Ok(PrivacyDemand {
            epsilon,
            delta,
            q,
            zeta,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn dim(&self) -> usize {
        self.delta.len()
    }

    /// `min(delta_i, epsilon)`, in caller order.
    pub fn effective_delta(&self) -> Vec<f64> {
        self.delta.iter().map(|d| d.min(self.epsilon)).collect()
    }

    /// Smallest effective per-coordinate level; the level at which a plain
    /// LDP mechanism would have to run to honour every coordinate.
    pub fn min_effective_delta(&self) -> f64 {
        self.effective_delta()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Calibrated coordinate-DP budgets.
///
/// `c` is stored in the internal, sensitivity-ascending order in which it is
/// non-decreasing. `perm[k]` is the caller index of internal coordinate `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateBudget {
    c: Vec<f64>,
    perm: Vec<usize>,
}

impl CoordinateBudget {
    /// Builds a budget from values already in internal order.
    pub fn new(c: Vec<f64>, perm: Vec<usize>) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::InvalidDemand("budget must have at least one coordinate".into()));
        }
        Error::check_dim(c.len(), perm.len())?;
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || seen[p] {
                return Err(Error::InvalidDemand(format!("{perm:?} is not a permutation")));
            }
            seen[p] = true;
        }
        if c.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidDemand(format!("budgets must be finite and non-negative: {c:?}")));
        }
        if c.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidDemand(format!("budgets must be non-decreasing: {c:?}")));
        }
        Ok(CoordinateBudget { c, perm })
    }

    /// A budget whose caller order is already sensitivity-ascending.
    pub fn sorted(c: Vec<f64>) -> Result<Self> {
        let perm = (0..c.len()).collect();
        Self::new(c, perm)
    }

    /// The same budget on every coordinate: a single layer carrying everything.
    pub fn uniform(level: f64, dim: usize) -> Result<Self> {
        Self::sorted(vec![level; dim])
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    /// Budgets in internal (non-decreasing) order.
    pub fn internal(&self) -> &[f64] {
        &self.c
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Budgets indexed like the caller's coordinates.
    pub fn in_caller_order(&self) -> Vec<f64> {
        self.to_caller_order(&self.c)
    }

    /// Total LDP level consumed by one layered report: `c_d`.
    pub fn ldp_level(&self) -> f64 {
        *self.c.last().expect("budget is never empty")
    }

    /// Every budget scaled by one half, as used for each of the two copies in
    /// private least squares.
    pub fn halved(&self) -> Self {
        CoordinateBudget {
            c: self.c.iter().map(|v| v / 2.0).collect(),
            perm: self.perm.clone(),
        }
    }

    /// Reorders a caller-indexed slice into internal order.
    pub fn to_internal_order<T: Copy>(&self, values: &[T]) -> Vec<T> {
        self.perm.iter().map(|&p| values[p]).collect()
    }

    /// Reorders an internally indexed slice back into caller order.
    pub fn to_caller_order<T: Copy + Default>(&self, values: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); values.len()];
        for (k, &p) in self.perm.iter().enumerate() {
            out[p] = values[k];
        }
        out
    }
}

/// `log(1 + q (e^x - 1))`, the extra leakage a coordinate inherits from
/// correlated coordinates whose combined budget is `x`.
pub(crate) fn correlation_leak(q: f64, x: f64) -> f64 {
    if q == 0.0 {
        return 0.0;
    }
    (q * x.exp_m1()).ln_1p()
}

/// Computes the budget vector `c` for a demand.
///
/// With `dt_i = min(delta_i, epsilon)` in ascending order:
/// `c_d = min(log((e^{zeta dt_1} + q - 1) / q), dt_d)` and for `i < d`,
/// `c_i = c_d` when `c_d <= dt_i`, otherwise `dt_i - log(1 + q e^{c_d} - q)`.
/// At `q = 0` the first term of `c_d` is `+inf`.
///
/// A zero entry in `delta` is legal. With `q > 0` it forces `c = 0`; with
/// `q = 0` only that coordinate's budget is zero.
pub fn calibrate_budgets(demand: &PrivacyDemand) -> Result<CoordinateBudget> {
    let d = demand.dim();
    let mut perm: Vec<usize> = (0..d).collect();
    // `sort_by` is stable, so ties keep caller order.
    perm.sort_by(|&a, &b| {
        demand.delta[a]
            .partial_cmp(&demand.delta[b])
            .unwrap_or(Ordering::Equal)
    });
    let dt: Vec<f64> = perm
        .iter()
        .map(|&p| demand.delta[p].min(demand.epsilon))
        .collect();

    let q = demand.q;
    let correlated_cap = if q == 0.0 {
        f64::INFINITY
    } else {
        // log((e^{z} + q - 1) / q) == log1p(expm1(z) / q)
        ((demand.zeta * dt[0]).exp_m1() / q).ln_1p()
    };
    let c_top = correlated_cap.min(dt[d - 1]);
    let leak = correlation_leak(q, c_top);

    let c: Vec<f64> = dt
        .iter()
        .map(|&t| {
            if c_top <= t {
                c_top
            } else {
                // Never negative in exact arithmetic; clamp the rounding.
                (t - leak).max(0.0)
            }
        })
        .collect();

    CoordinateBudget::new(c, perm)
}

/// Checks the calibrated budget against the demand it was built for.
///
/// Verifies `0 <= c_1 <= ... <= c_d <= min(epsilon, dt_d)` and, for every
/// coordinate with `c_d > dt_i`, `c_i + log(1 + q e^{c_d} - q) <= delta_i`.
pub fn verify_budget(demand: &PrivacyDemand, budget: &CoordinateBudget, tol: f64) -> Result<()> {
    Error::check_dim(demand.dim(), budget.dim())?;
    let c = budget.internal();
    let dt = budget.to_internal_order(&demand.effective_delta());
    let delta = budget.to_internal_order(demand.delta());
    let c_top = budget.ldp_level();
    if c[0] < 0.0 || c.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidDemand(format!("budget is not non-decreasing: {c:?}")));
    }
    if c_top > demand.epsilon + tol || c_top > dt[dt.len() - 1] + tol {
        return Err(Error::InvalidDemand(format!(
            "c_d = {c_top} exceeds min(epsilon, dt_d)"
        )));
    }
    let leak = correlation_leak(demand.q, c_top);
    for k in 0..c.len() {
        if c_top > dt[k] && c[k] + leak > delta[k] + tol {
            return Err(Error::InvalidDemand(format!(
                "internal coordinate {k}: c_k + leak = {} exceeds delta = {}",
                c[k] + leak,
                delta[k]
            )));
        }
    }
    Ok(())
}

/// Converts coordinate-DP budgets into BCDP levels under a prior whose
/// conditional total-variation bounds are `q`.
///
/// Without `epsilon` returns `c_i + log(1 + q_i e^{sum_{j != i} c_j} - q_i)`.
/// When the mechanism is known to be `epsilon`-LDP, returns the sharper
/// `min(c_i + log(1 + q_i e^epsilon - q_i), epsilon)`.
pub fn cdp_to_bcdp_bound(c: &[f64], q: &[f64], epsilon: Option<f64>) -> Result<Vec<f64>> {
    Error::check_dim(c.len(), q.len())?;
    if let Some(v) = c.iter().find(|v| v.is_nan() || **v < 0.0) {
        return Err(Error::Domain(format!("budgets must be non-negative, got {v}")));
    }
    if let Some(v) = q.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Domain(format!("q must lie in [0, 1], got {v}")));
    }
    let bound = match epsilon {
        None => {
            let total: f64 = c.iter().sum();
            c.iter()
                .zip(q)
                .map(|(&ci, &qi)| ci + correlation_leak(qi, total - ci))
                .collect()
        }
        Some(eps) => c
            .iter()
            .zip(q)
            .map(|(&ci, &qi)| (ci + correlation_leak(qi, eps)).min(eps))
            .collect(),
    };
    Ok(bound)
}

/// Linear relaxation of the nonlinear CDP-to-BCDP constraint.
///
/// `A[i][i] = 1 / delta_i` and `A[i][j] = 1 / log(1 + (e^{delta_i} - 1) / q_i)`
/// off the diagonal. Any `c >= 0` with `A c <= 1` satisfies
/// `c_i + log(1 + q_i e^{sum_{j != i} c_j} - q_i) <= delta_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl FeasibilityMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.dim + col]
    }

    pub fn apply(&self, c: &[f64]) -> Result<Vec<f64>> {
        Error::check_dim(self.dim, c.len())?;
        Ok(self
            .entries
            .chunks(self.dim)
            .map(|row| row.iter().zip(c).map(|(a, x)| a * x).sum())
            .collect())
    }

    /// Whether `A c <= 1` componentwise.
    pub fn is_feasible(&self, c: &[f64]) -> Result<bool> {
        Ok(self.apply(c)?.iter().all(|v| *v <= 1.0))
    }
}

pub fn feasibility_matrix(delta: &[f64], q: &[f64]) -> Result<FeasibilityMatrix> {
    Error::check_dim(delta.len(), q.len())?;
    if delta.is_empty() {
        return Err(Error::Empty("delta"));
    }
    if let Some(v) = delta.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::Domain(format!("delta must lie in (0, inf), got {v}")));
    }
    if let Some(v) = q.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
        return Err(Error::Domain(format!(
            "q must lie in (0, 1] for the relaxation, got {v}"
        )));
    }
    let dim = delta.len();
    let mut entries = vec![0.0; dim * dim];
    for i in 0..dim {
        let off = 1.0 / (delta[i].exp_m1() / q[i]).ln_1p();
        for j in 0..dim {
            entries[i * dim + j] = if i == j { 1.0 / delta[i] } else { off };
        }
    }
    Ok(FeasibilityMatrix { dim, entries })
}

/// Mean-squared-error shape for the two-group demand (`k` coordinates at
/// `delta`, the remaining `d - k` at `epsilon`) with `zeta = 1/2`, without
/// the universal constant.
pub fn corollary_rate(d: usize, k: usize, delta: f64, epsilon: f64, q: f64, n: usize) -> Result<f64> {
    if k == 0 || k > d {
        return Err(Error::Domain(format!("need 1 <= k <= d, got k = {k}, d = {d}")));
    }
    if !(epsilon > 2.0 * delta) || !(delta > 0.0) {
        return Err(Error::Domain(format!(
            "need epsilon > 2 delta > 0, got epsilon = {epsilon}, delta = {delta}"
        )));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("q must lie in [0, 1], got {q}")));
    }
    if n == 0 {
        return Err(Error::Empty("n"));
    }
    let (df, kf, nf) = (d as f64, k as f64, n as f64);
    let rest = df - kf;
    let sensitive = df * kf / (delta * delta);
    let rate = if q <= corollary_threshold(delta, epsilon) {
        sensitive + rest * rest / (epsilon * epsilon)
    } else {
        let c_top = corollary_top_budget(delta, q);
        let gap = c_top - delta / 2.0;
        sensitive + rest * rest / (rest / df * delta * delta + gap * gap)
    };
    Ok(rate / nf)
}

/// The correlation level below which the two-group demand leaves the less
/// sensitive coordinates at the full `epsilon`.
pub fn corollary_threshold(delta: f64, epsilon: f64) -> f64 {
    (delta / 2.0).exp_m1() / epsilon.exp_m1()
}

/// `c_d = log((e^{delta/2} + q - 1) / q)` for the two-group demand.
pub fn corollary_top_budget(delta: f64, q: f64) -> f64 {
    if q == 0.0 {
        f64::INFINITY
    } else {
        ((delta / 2.0).exp_m1() / q).ln_1p()
    }
}

//! Exact privacy levels of a finite mechanism, alone or paired with a prior.
//!
//! Every definition quantifies over sets: output regions `R` and input events
//! `S`, `S'`. On a finite domain the supremum is always attained at
//! singletons, for two reasons:
//!
//! * a ratio of sums `sum_y a_y / sum_y b_y` never exceeds `max_y a_y / b_y`,
//!   so output regions reduce to single outputs;
//! * conditioning on an input event yields a convex mixture of the
//!   conditionals on its atoms, and a ratio of mixtures is again bounded by
//!   the largest ratio of components, so input events reduce to single
//!   values (or single points for BDP).
//!
//! Levels are extended reals: `f64::INFINITY` marks an output that is
//! possible under one input event and impossible under another. Outputs
//! impossible under both are skipped.

use crate::audit::finite::{DiscretePrior, FiniteMechanism};
use crate::error::{Error, Result};

/// Relative slack allowed when checking the hypothesis-testing tradeoff.
pub const TRADEOFF_TOLERANCE: f64 = 1e-12;

/// All exact levels of a mechanism-prior pair.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub ldp_level: f64,
    pub cdp_levels: Vec<f64>,
    pub bdp_level: f64,
    pub bcdp_levels: Vec<f64>,
    pub tv_bounds: Vec<f64>,
}

impl std::fmt::Display for AuditReport {
    /// One `name<TAB>values` line per quantity; infinite levels print as `inf`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let row = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join("\t");
        writeln!(f, "ldp\t{}", self.ldp_level)?;
        writeln!(f, "bdp\t{}", self.bdp_level)?;
        writeln!(f, "cdp\t{}", row(&self.cdp_levels))?;
        writeln!(f, "bcdp\t{}", row(&self.bcdp_levels))?;
        writeln!(f, "tv\t{}", row(&self.tv_bounds))
    }
}

pub fn audit(mechanism: &FiniteMechanism, prior: &DiscretePrior) -> Result<AuditReport> {
    check_pair(mechanism, prior)?;
    let dim = mechanism.domain().dim();
    Ok(AuditReport {
        ldp_level: exact_ldp_level(mechanism),
        cdp_levels: exact_cdp_levels(mechanism),
        bdp_level: exact_bdp_level(mechanism, prior)?,
        bcdp_levels: exact_bcdp_levels(mechanism, prior)?,
        tv_bounds: (0..dim).map(|i| conditional_tv(prior, i)).collect(),
    })
}

/// Largest `log(a_y / b_y)` over outputs `y` and ordered pairs of rows.
fn max_log_ratio<'a>(rows: impl IntoIterator<Item = &'a [f64]>, outputs: usize) -> f64 {
    let mut hi = vec![0.0f64; outputs];
    let mut lo = vec![f64::INFINITY; outputs];
    let mut any = false;
    for row in rows {
        any = true;
        for (y, &p) in row.iter().enumerate() {
            hi[y] = hi[y].max(p);
            lo[y] = lo[y].min(p);
        }
    }
    if !any {
        return 0.0;
    }
    let mut level = 0.0f64;
    for (h, l) in hi.into_iter().zip(lo) {
        if h == 0.0 {
            continue;
        }
        if l == 0.0 {
            return f64::INFINITY;
        }
        level = level.max((h / l).ln());
    }
    level
}

fn check_pair(mechanism: &FiniteMechanism, prior: &DiscretePrior) -> Result<()> {
    if mechanism.domain() != prior.domain() {
        return Err(Error::Domain(format!(
            "mechanism domain {:?} differs from prior domain {:?}",
            mechanism.domain().sizes(),
            prior.domain().sizes()
        )));
    }
    Ok(())
}

/// Smallest `epsilon` for which the mechanism is `epsilon`-LDP.
pub fn exact_ldp_level(mechanism: &FiniteMechanism) -> f64 {
    let n = mechanism.domain().len();
    max_log_ratio((0..n).map(|x| mechanism.row(x)), mechanism.outputs())
}

/// Smallest `c` for which the mechanism is `c`-CDP: coordinate `i` compares
/// only inputs that agree outside coordinate `i`.
pub fn exact_cdp_levels(mechanism: &FiniteMechanism) -> Vec<f64> {
    let dom = mechanism.domain();
    (0..dom.dim())
        .map(|i| {
            let size = dom.sizes()[i];
            (0..dom.len())
                .filter(|&x| dom.value(x, i) == 0)
                .map(|base| {
                    max_log_ratio(
                        (0..size).map(|v| mechanism.row(dom.with_value(base, i, v))),
                        mechanism.outputs(),
                    )
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Smallest `epsilon` for which the pair is `epsilon`-BDP; only inputs with
/// positive prior mass are compared.
pub fn exact_bdp_level(mechanism: &FiniteMechanism, prior: &DiscretePrior) -> Result<f64> {
    check_pair(mechanism, prior)?;
    let n = mechanism.domain().len();
    Ok(max_log_ratio(
        (0..n)
            .filter(|&x| prior.mass(x) > 0.0)
            .map(|x| mechanism.row(x)),
        mechanism.outputs(),
    ))
}

/// Output law given `x_coord = s`, for every value `s` (`None` without mass).
pub fn coordinate_conditionals(
    mechanism: &FiniteMechanism,
    prior: &DiscretePrior,
    coord: usize,
) -> Result<Vec<Option<Vec<f64>>>> {
    check_pair(mechanism, prior)?;
    let dom = mechanism.domain();
    if coord >= dom.dim() {
        return Err(Error::Domain(format!("coordinate {coord} out of range")));
    }
    let size = dom.sizes()[coord];
    let outputs = mechanism.outputs();
    let mut joint = vec![vec![0.0; outputs]; size];
    let mut marginal = vec![0.0; size];
    for x in 0..dom.len() {
        let p = prior.mass(x);
        if p == 0.0 {
            continue;
        }
        let s = dom.value(x, coord);
        marginal[s] += p;
        for (acc, k) in joint[s].iter_mut().zip(mechanism.row(x)) {
            *acc += p * k;
        }
    }
    Ok(joint
        .into_iter()
        .zip(marginal)
        .map(|(row, m)| (m > 0.0).then(|| row.into_iter().map(|v| v / m).collect()))
        .collect())
}

/// Smallest `delta` for which the pair is `delta`-BCDP.
///
/// A coordinate whose prior puts mass on a single value has no pair of
/// events to compare and gets level 0.
pub fn exact_bcdp_levels(mechanism: &FiniteMechanism, prior: &DiscretePrior) -> Result<Vec<f64>> {
    check_pair(mechanism, prior)?;
    (0..mechanism.domain().dim())
        .map(|i| {
            let cond = coordinate_conditionals(mechanism, prior, i)?;
            Ok(max_log_ratio(
                cond.iter().flatten().map(Vec::as_slice),
                mechanism.outputs(),
            ))
        })
        .collect()
}

/// Largest total-variation distance between the laws of `x_{-coord}` given
/// two values of `x_coord`.
///
/// TV is jointly convex, so conditioning on value sets instead of single
/// values cannot increase it.
pub fn conditional_tv(prior: &DiscretePrior, coord: usize) -> f64 {
    let size = prior.domain().sizes()[coord];
    let conds: Vec<Vec<f64>> = (0..size)
        .filter_map(|s| prior.conditional_rest(coord, s))
        .collect();
    let mut worst = 0.0f64;
    for (a, pa) in conds.iter().enumerate() {
        for pb in &conds[a + 1..] {
            let tv: f64 = 0.5 * pa.iter().zip(pb).map(|(x, y)| (x - y).abs()).sum::<f64>();
            worst = worst.max(tv);
        }
    }
    worst.min(1.0)
}

/// A single output region, pair of coordinate values and coordinate at which
/// `e^delta * alpha + beta >= 1` fails.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffWitness {
    pub coordinate: usize,
    /// The rejection region is the single output `{output}`.
    pub output: usize,
    /// Coordinate value under the null hypothesis.
    pub null_value: usize,
    /// Coordinate value under the alternative.
    pub alt_value: usize,
    pub type_one: f64,
    pub type_two: f64,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TradeoffCheck {
    Holds,
    Violated(TradeoffWitness),
}

impl TradeoffCheck {
    pub fn holds(&self) -> bool {
        matches!(self, TradeoffCheck::Holds)
    }

    pub fn witness(&self) -> Option<&TradeoffWitness> {
        match self {
            TradeoffCheck::Holds => None,
            TradeoffCheck::Violated(w) => Some(w),
        }
    }
}

/// Checks that every test of `x_i = s` against `x_i = s'` from one output of
/// the mechanism has `e^{delta_i} * alpha + beta >= 1`.
///
/// Testing single outputs suffices: the inequality for a region follows by
/// summing it over the region's outputs. Pairs with `s = s'` are included,
/// so a negative level always fails.
pub fn ht_tradeoff_check(
    mechanism: &FiniteMechanism,
    prior: &DiscretePrior,
    delta: &[f64],
) -> Result<TradeoffCheck> {
    check_pair(mechanism, prior)?;
    Error::check_dim(mechanism.domain().dim(), delta.len())?;
    if let Some(d) = delta.iter().find(|d| d.is_nan()) {
        return Err(Error::Domain(format!("level must not be NaN, got {d}")));
    }
    for (i, &level) in delta.iter().enumerate() {
        if level == f64::INFINITY {
            continue;
        }
        let scale = level.exp();
        let cond = coordinate_conditionals(mechanism, prior, i)?;
        for (s, null) in cond.iter().enumerate() {
            let Some(null) = null else { continue };
            for (t, alt) in cond.iter().enumerate() {
                let Some(alt) = alt else { continue };
                for y in 0..mechanism.outputs() {
                    let type_one = null[y];
                    let detect = alt[y];
                    if scale * type_one < detect * (1.0 - TRADEOFF_TOLERANCE) {
                        return Ok(TradeoffCheck::Violated(TradeoffWitness {
                            coordinate: i,
                            output: y,
                            null_value: s,
                            alt_value: t,
                            type_one,
                            type_two: 1.0 - detect,
                            level,
                        }));
                    }
                }
            }
        }
    }
    Ok(TradeoffCheck::Holds)
}

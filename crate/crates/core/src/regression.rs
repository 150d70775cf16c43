//! Private least squares from two independently privatized copies.
//!
//! Each user's packed vector `x = [z; l]` (label last) is privatized twice
//! by the layered mean mechanism at half the budget. Products of the two
//! copies give an unbiased estimate of the least-squares quadratic, which is
//! then minimized over an l2 ball by projected gradient descent.

use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::RngCore;

use crate::calibration::{calibrate_budgets, CoordinateBudget, PrivacyDemand};
use crate::error::{Error, Result};
use crate::mean::{MeanMechanism, PointPrivatizer};

/// Features `z` (one row per user) and labels `l`, all in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDataset {
    z: Vec<Vec<f64>>,
    l: Vec<f64>,
}

impl RegressionDataset {
    pub fn new(z: Vec<Vec<f64>>, l: Vec<f64>) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        Error::check_dim(z.len(), l.len())?;
        let p = z[0].len();
        if p == 0 {
            return Err(Error::Domain("regression needs at least one feature".into()));
        }
        for (i, row) in z.iter().enumerate() {
            Error::check_dim(p, row.len())?;
            if row.iter().chain([&l[i]]).any(|v| !(-1.0..=1.0).contains(v)) {
                return Err(Error::Domain(format!("row {i} has entries outside [-1, 1]")));
            }
        }
        Ok(RegressionDataset { z, l })
    }

    /// Splits packed rows `[z; l]`, label last.
    pub fn from_packed(rows: Vec<Vec<f64>>) -> Result<Self> {
        let mut z = Vec::with_capacity(rows.len());
        let mut l = Vec::with_capacity(rows.len());
        for mut row in rows {
            let label = row.pop().ok_or(Error::Empty("row"))?;
            z.push(row);
            l.push(label);
        }
        Self::new(z, l)
    }

    /// Reads comma-separated rows, label in the last column. Lines starting
    /// with `#` are skipped.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(file);
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .map(|t| {
                    t.parse::<f64>().map_err(|_| Error::Parse {
                        path: path.to_path_buf(),
                        line: record.position().map_or(i + 1, |p| p.line() as usize),
                        message: format!("cannot parse `{t}`"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Self::from_packed(rows)
    }

    pub fn len(&self) -> usize {
        self.l.len()
    }

    pub fn is_empty(&self) -> bool {
        self.l.is_empty()
    }

    /// Number of features `d - 1`.
    pub fn features(&self) -> usize {
        self.z[0].len()
    }

    pub fn features_of(&self, i: usize) -> &[f64] {
        &self.z[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.l
    }

    pub fn packed(&self, i: usize) -> Vec<f64> {
        let mut x = self.z[i].clone();
        x.push(self.l[i]);
        x
    }
}

/// Two privatized reports per user, packed like the input.
#[derive(Debug, Clone)]
pub struct PrivatizedCopies {
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl PrivatizedCopies {
    pub(crate) fn new(first: Vec<Vec<f64>>, second: Vec<Vec<f64>>) -> Self {
        PrivatizedCopies { first, second }
    }

    pub fn first(&self) -> &[Vec<f64>] {
        &self.first
    }

    pub fn second(&self) -> &[Vec<f64>] {
        &self.second
    }

    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }
}

/// Privatizes every user twice with the layered mechanism at budget `c / 2`.
pub fn privatize_pairs(
    dataset: &RegressionDataset,
    c: &CoordinateBudget,
    rng: &mut dyn RngCore,
) -> Result<PrivatizedCopies> {
    Error::check_dim(dataset.features() + 1, c.dim())?;
    let mechanism = MeanMechanism::new(&c.halved())?;
    privatize_pairs_with(dataset, &mechanism, rng)
}

/// Two independent draws of `privatizer` per user, first copy then second.
pub fn privatize_pairs_with(
    dataset: &RegressionDataset,
    privatizer: &dyn PointPrivatizer,
    rng: &mut dyn RngCore,
) -> Result<PrivatizedCopies> {
    Error::check_dim(dataset.features() + 1, privatizer.dim())?;
    let mut first = Vec::with_capacity(dataset.len());
    let mut second = Vec::with_capacity(dataset.len());
    for i in 0..dataset.len() {
        let x = dataset.packed(i);
        first.push(privatizer.privatize(&x, rng)?);
        second.push(privatizer.privatize(&x, rng)?);
    }
    Ok(PrivatizedCopies::new(first, second))
}

/// The quadratic `f(theta) = theta' A theta / 2 - b' theta`, up to a
/// constant, fitted from `samples` users.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateObjective {
    a: DMatrix<f64>,
    b: DVector<f64>,
    samples: usize,
}

impl SurrogateObjective {
    pub fn from_parts(a: DMatrix<f64>, b: DVector<f64>, samples: usize) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Domain(format!("A is {}x{}", a.nrows(), a.ncols())));
        }
        Error::check_dim(a.nrows(), b.len())?;
        if samples == 0 {
            return Err(Error::Empty("samples"));
        }
        Ok(SurrogateObjective { a, b, samples })
    }

    /// `A = (1/n) sum z1 z2'`, `b = (1/n) sum l1 z2`.
    pub fn from_copies(copies: &PrivatizedCopies) -> Result<Self> {
        let n = copies.len();
        if n == 0 {
            return Err(Error::Empty("privatized copies"));
        }
        let p = copies.first[0].len() - 1;
        let mut a = DMatrix::zeros(p, p);
        let mut b = DVector::zeros(p);
        for (x1, x2) in copies.first.iter().zip(&copies.second) {
            Error::check_dim(p + 1, x1.len())?;
            Error::check_dim(p + 1, x2.len())?;
            let z1 = DVector::from_column_slice(&x1[..p]);
            let z2 = DVector::from_column_slice(&x2[..p]);
            a.ger(1.0, &z1, &z2, 1.0);
            b.axpy(x1[p], &z2, 1.0);
        }
        let scale = 1.0 / n as f64;
        Self::from_parts(a * scale, b * scale, n)
    }

    /// The non-private objective `(1/2n) sum (l - z' theta)^2` without its
    /// constant term.
    pub fn exact(dataset: &RegressionDataset) -> Self {
        let p = dataset.features();
        let mut a = DMatrix::zeros(p, p);
        let mut b = DVector::zeros(p);
        for i in 0..dataset.len() {
            let z = DVector::from_column_slice(dataset.features_of(i));
            a.ger(1.0, &z, &z, 1.0);
            b.axpy(dataset.labels()[i], &z, 1.0);
        }
        let scale = 1.0 / dataset.len() as f64;
        SurrogateObjective {
            a: a * scale,
            b: b * scale,
            samples: dataset.len(),
        }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn symmetrized(&self) -> DMatrix<f64> {
        (&self.a + self.a.transpose()) * 0.5
    }

    pub fn value(&self, theta: &DVector<f64>) -> f64 {
        0.5 * theta.dot(&(&self.a * theta)) - self.b.dot(theta)
    }

    pub fn gradient(&self, theta: &DVector<f64>) -> DVector<f64> {
        self.symmetrized() * theta - &self.b
    }
}

/// `(A + A') theta / 2 - b`.
pub fn surrogate_gradient(s: &SurrogateObjective, theta: &[f64]) -> Result<Vec<f64>> {
    Error::check_dim(s.dim(), theta.len())?;
    Ok(s.gradient(&DVector::from_column_slice(theta)).as_slice().to_vec())
}

/// Closed l2 ball of radius `R` around the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibleSet {
    radius: f64,
}

impl FeasibleSet {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!("radius must be positive and finite, got {radius}")));
        }
        Ok(FeasibleSet { radius })
    }

    /// `R = sqrt(p)`, enough for every `theta` in `[-1, 1]^p`.
    pub fn for_features(p: usize) -> Self {
        FeasibleSet {
            radius: (p.max(1) as f64).sqrt(),
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn project(&self, theta: &DVector<f64>) -> DVector<f64> {
        let norm = theta.norm();
        if norm > self.radius {
            theta * (self.radius / norm)
        } else {
            theta.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub theta: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// The stopping rule fired before the iteration cap.
    pub converged: bool,
    /// The symmetrized matrix has a negative eigenvalue, so the
    /// suboptimality guarantee does not apply.
    pub indefinite: bool,
    pub min_eigenvalue: f64,
    pub step_constant: f64,
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    let p = m.nrows();
    let mut v = DVector::from_fn(p, |i, _| 1.0 / (i + 1) as f64);
    v /= v.norm();
    let mut estimate = 0.0;
    for _ in 0..500 {
        let w = m * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let done = (norm - estimate).abs() <= 1e-12 * norm;
        estimate = norm;
        v = w / norm;
        if done {
            break;
        }
    }
    estimate
}

/// Projected gradient descent on the symmetrized surrogate over `feasible`.
///
/// Step `1/L` with `L` a power-iteration estimate of the spectral norm plus
/// 10%. Stops once the gradient mapping is at most `accuracy / (2R)`, which
/// for a convex surrogate bounds the suboptimality of the next iterate by
/// `accuracy`. At most `10 n` iterations; the best iterate seen is returned.
pub fn opt(s: &SurrogateObjective, feasible: &FeasibleSet, accuracy: f64) -> Result<SolveReport> {
    solve(s, feasible, accuracy, (10 * s.samples).max(100))
}

pub(crate) fn solve(
    s: &SurrogateObjective,
    feasible: &FeasibleSet,
    accuracy: f64,
    max_iterations: usize,
) -> Result<SolveReport> {
    if !(accuracy > 0.0) {
        return Err(Error::Domain(format!("accuracy must be positive, got {accuracy}")));
    }
    let sym = s.symmetrized();
    let min_eigenvalue = SymmetricEigen::new(sym.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let norm = spectral_norm(&sym);
    let lipschitz = if norm > 0.0 { 1.1 * norm } else { 1.0 };
    let threshold = accuracy / (2.0 * feasible.radius());

    let mut theta = DVector::zeros(s.dim());
    let mut best = (s.value(&theta), theta.clone());
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iterations {
        let grad = &sym * &theta - &s.b;
        let next = feasible.project(&(&theta - &grad * (1.0 / lipschitz)));
        let mapping = (&theta - &next).norm() * lipschitz;
        theta = next;
        iterations += 1;
        let value = s.value(&theta);
        if value < best.0 {
            best = (value, theta.clone());
        }
        if mapping <= threshold {
            converged = true;
            break;
        }
    }
    Ok(SolveReport {
        theta: best.1.as_slice().to_vec(),
        value: best.0,
        iterations,
        converged,
        indefinite: min_eigenvalue < 0.0,
        min_eigenvalue,
        step_constant: lipschitz,
    })
}

/// Exact empirical risk `f(theta) = (1/2n) sum (l - z' theta)^2` and its
/// minimum over the feasible set.
#[derive(Debug, Clone)]
pub struct ExactRisk {
    objective: SurrogateObjective,
    constant: f64,
    minimizer: DVector<f64>,
    minimum: f64,
}

impl ExactRisk {
    pub fn new(dataset: &RegressionDataset, feasible: &FeasibleSet) -> Self {
        let objective = SurrogateObjective::exact(dataset);
        let constant = 0.5 * dataset.labels().iter().map(|l| l * l).sum::<f64>() / dataset.len() as f64;
        let minimizer = ball_constrained_minimizer(&objective, feasible.radius());
        let minimum = objective.value(&minimizer) + constant;
        ExactRisk {
            objective,
            constant,
            minimizer,
            minimum,
        }
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        self.objective.value(&DVector::from_column_slice(theta)) + self.constant
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        self.objective
            .gradient(&DVector::from_column_slice(theta))
            .as_slice()
            .to_vec()
    }

    pub fn minimizer(&self) -> &[f64] {
        self.minimizer.as_slice()
    }

    pub fn minimum(&self) -> f64 {
        self.minimum
    }

    /// `f(theta) - min f`, clipped at zero against rounding.
    pub fn excess(&self, theta: &[f64]) -> f64 {
        (self.value(theta) - self.minimum).max(0.0)
    }
}

/// Minimizer of a positive semidefinite quadratic over the ball, from the
/// eigendecomposition: either the minimum-norm stationary point, or the
/// point on the sphere with `(A + lambda I) theta = b` for some `lambda > 0`.
fn ball_constrained_minimizer(s: &SurrogateObjective, radius: f64) -> DVector<f64> {
    let eig = SymmetricEigen::new(s.symmetrized());
    let coef = eig.eigenvectors.transpose() * &s.b;
    let scale = eig.eigenvalues.amax().max(1e-300);
    let tiny = 1e-12 * scale;
    let at = |lambda: f64| -> DVector<f64> {
        let mut c = coef.clone();
        for (ci, &e) in c.iter_mut().zip(eig.eigenvalues.iter()) {
            let denom = e.max(0.0) + lambda;
            *ci = if denom > tiny { *ci / denom } else { 0.0 };
        }
        &eig.eigenvectors * c
    };
    let null_part = coef
        .iter()
        .zip(eig.eigenvalues.iter())
        .any(|(c, &e)| e <= tiny && c.abs() > 1e-12 * s.b.norm().max(1e-300));
    let free = at(0.0);
    if !null_part && free.norm() <= radius {
        return free;
    }
    let (mut lo, mut hi) = (0.0, s.b.norm() / radius + scale);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if at(mid).norm() > radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(hi)
}

/// Result of one private least-squares run.
#[derive(Debug, Clone)]
pub struct OlsOutcome {
    pub theta: Vec<f64>,
    pub budget: Option<CoordinateBudget>,
    pub solve: SolveReport,
}

impl OlsOutcome {
    pub fn excess_risk(&self, risk: &ExactRisk) -> f64 {
        risk.excess(&self.theta)
    }
}

/// Calibrates the budget for `demand`, privatizes two copies at half of it,
/// and solves the surrogate to accuracy `1/n`.
pub fn run_private_ols(
    dataset: &RegressionDataset,
    demand: &PrivacyDemand,
    feasible: &FeasibleSet,
    rng: &mut dyn RngCore,
) -> Result<OlsOutcome> {
    Error::check_dim(dataset.features() + 1, demand.dim())?;
    let budget = calibrate_budgets(demand)?;
    let mechanism = MeanMechanism::new(&budget.halved())?;
    let mut outcome = run_ols_with(dataset, &mechanism, feasible, rng)?;
    outcome.budget = Some(budget);
    Ok(outcome)
}

/// The same pipeline with an arbitrary per-copy privatizer.
pub fn run_ols_with(
    dataset: &RegressionDataset,
    privatizer: &dyn PointPrivatizer,
    feasible: &FeasibleSet,
    rng: &mut dyn RngCore,
) -> Result<OlsOutcome> {
    let copies = privatize_pairs_with(dataset, privatizer, rng)?;
    // The solver only ever sees the privatized copies.
    let surrogate = SurrogateObjective::from_copies(&copies)?;
    let solve = opt(&surrogate, feasible, 1.0 / dataset.len() as f64)?;
    let theta = feasible
        .project(&DVector::from_column_slice(&solve.theta))
        .as_slice()
        .to_vec();
    Ok(OlsOutcome {
        theta,
        budget: None,
        solve,
    })
}

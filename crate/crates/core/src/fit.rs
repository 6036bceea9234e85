//! Weighted nonlinear least squares for the decay models
//!
//! ```text
//! zeroth order:  F(m) = A p^m + B
//! first order:   F(m) = A p^m + C (m − 1) p^(m−2) + B
//! ```
//!
//! Both models are linear in the amplitudes once `p` is fixed. Every start
//! point picks `p` from a small grid, solves the amplitudes exactly, and then
//! refines all parameters jointly with Levenberg-Marquardt. `p` is projected
//! onto `(0, 1]` after each step.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{cell_seed, mean_and_stderr, DecayDataset, DecayPoint};

/// Starting values of `p` for the multi-start search.
pub const START_GRID: [f64; 4] = [0.5, 0.9, 0.99, 0.999];

const P_MIN: f64 = 1e-12;
const MAX_ITERATIONS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitModel {
    Zeroth,
    First,
}

impl FitModel {
    fn parameter_count(self) -> usize {
        match self {
            FitModel::Zeroth => 3,
            FitModel::First => 4,
        }
    }

    pub fn min_lengths(self) -> usize {
        match self {
            FitModel::Zeroth => 3,
            FitModel::First => 4,
        }
    }
}

impl std::str::FromStr for FitModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zeroth" => Ok(FitModel::Zeroth),
            "first" => Ok(FitModel::First),
            _ => Err(Error::Parse(format!("unknown model '{s}'"))),
        }
    }
}

/// A fitted value with its one-sigma uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn new(value: f64, stderr: f64) -> Self {
        Self { value, stderr }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub p: Estimate,
    pub a: Estimate,
    pub b: Estimate,
    /// First-order correction, absent for the zeroth-order model.
    pub c: Option<Estimate>,
    /// Weighted sum of squared residuals at the optimum.
    pub objective: f64,
    /// Square root of `objective`.
    pub residual_norm: f64,
    pub converged: bool,
    /// All means were equal; parameters follow the fixed `p = 1` convention.
    pub degenerate: bool,
    /// First-order correction is within two sigma of zero.
    pub ill_conditioned: bool,
    /// Whether residuals were weighted by `1/stderr²`.
    pub weighted: bool,
    /// Uncertainties come from the inverse normal matrix, scaled by the
    /// reduced chi-square when the fit is unweighted.
    pub uncertainty_method: String,
}

impl FitResult {
    pub fn evaluate(&self, m: f64) -> f64 {
        let c = self.c.map_or(0.0, |c| c.value);
        model_value(self.a.value, self.b.value, c, self.p.value, m)
    }

    fn parameters(&self) -> Vec<f64> {
        let mut v = vec![self.a.value, self.b.value];
        if let Some(c) = self.c {
            v.push(c.value);
        }
        v.push(self.p.value);
        v
    }
}

fn model_value(a: f64, b: f64, c: f64, p: f64, m: f64) -> f64 {
    let first = if c == 0.0 { 0.0 } else { c * (m - 1.0) * p.powf(m - 2.0) };
    a * p.powf(m) + first + b
}

/// Amplitude basis functions at fixed `p`: `[p^m, 1]` or `[p^m, 1, (m−1)p^(m−2)]`.
fn basis(model: FitModel, p: f64, m: f64) -> Vec<f64> {
    let mut row = vec![p.powf(m), 1.0];
    if model == FitModel::First {
        row.push((m - 1.0) * p.powf(m - 2.0));
    }
    row
}

struct Problem {
    model: FitModel,
    m: Vec<f64>,
    y: Vec<f64>,
    sqrt_w: Vec<f64>,
}

impl Problem {
    fn unpack(&self, theta: &DVector<f64>) -> (f64, f64, f64, f64) {
        match self.model {
            FitModel::Zeroth => (theta[0], theta[1], 0.0, theta[2]),
            FitModel::First => (theta[0], theta[1], theta[2], theta[3]),
        }
    }

    fn residuals(&self, theta: &DVector<f64>) -> DVector<f64> {
        let (a, b, c, p) = self.unpack(theta);
        DVector::from_iterator(
            self.m.len(),
            self.m
                .iter()
                .zip(&self.y)
                .zip(&self.sqrt_w)
                .map(|((&m, &y), &w)| w * (model_value(a, b, c, p, m) - y)),
        )
    }

    fn cost(&self, theta: &DVector<f64>) -> f64 {
        self.residuals(theta).norm_squared()
    }

    fn jacobian(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let (a, _, c, p) = self.unpack(theta);
        let k = self.model.parameter_count();
        let mut jac = DMatrix::zeros(self.m.len(), k);
        for (i, (&m, &w)) in self.m.iter().zip(&self.sqrt_w).enumerate() {
            let mut row = basis(self.model, p, m);
            let mut dp = a * m * p.powf(m - 1.0);
            if self.model == FitModel::First {
                dp += c * (m - 1.0) * (m - 2.0) * p.powf(m - 3.0);
            }
            row.push(dp);
            for (j, v) in row.into_iter().enumerate() {
                jac[(i, j)] = w * v;
            }
        }
        jac
    }

    /// Amplitudes minimizing the weighted residual at fixed `p`.
    fn linear_start(&self, p: f64) -> DVector<f64> {
        let k = self.model.parameter_count() - 1;
        let mut x = DMatrix::zeros(self.m.len(), k);
        let mut rhs = DVector::zeros(self.m.len());
        for (i, ((&m, &y), &w)) in self.m.iter().zip(&self.y).zip(&self.sqrt_w).enumerate() {
            for (j, v) in basis(self.model, p, m).into_iter().enumerate() {
                x[(i, j)] = w * v;
            }
            rhs[i] = w * y;
        }
        let amplitudes = x
            .svd(true, true)
            .solve(&rhs, 1e-14)
            .unwrap_or_else(|_| DVector::zeros(k));
        let mut theta = DVector::zeros(k + 1);
        theta.rows_mut(0, k).copy_from(&amplitudes);
        theta[k] = p;
        theta
    }

    fn project(&self, theta: &mut DVector<f64>) {
        let last = theta.len() - 1;
        theta[last] = theta[last].clamp(P_MIN, 1.0);
    }

    /// Levenberg-Marquardt with Marquardt diagonal scaling.
    fn levenberg_marquardt(&self, mut theta: DVector<f64>) -> (DVector<f64>, f64, bool) {
        let k = theta.len();
        let mut cost = self.cost(&theta);
        let mut lambda = 1e-3;
        for _ in 0..MAX_ITERATIONS {
            if cost == 0.0 {
                return (theta, cost, true);
            }
            let jac = self.jacobian(&theta);
            let r = self.residuals(&theta);
            let normal = jac.tr_mul(&jac);
            let gradient = jac.tr_mul(&r);
            let scale = normal.diagonal().map(|v| v.max(1e-30));
            let mut improved = false;
            let mut small_step = false;
            while lambda < 1e20 {
                let mut damped = normal.clone();
                for i in 0..k {
                    damped[(i, i)] += lambda * scale[i];
                }
                let Some(step) = damped.cholesky().map(|ch| ch.solve(&(-&gradient))) else {
                    lambda *= 10.0;
                    continue;
                };
                let mut candidate = &theta + &step;
                self.project(&mut candidate);
                let actual = &candidate - &theta;
                small_step = actual.norm() <= 1e-15 * (theta.norm() + 1e-15);
                let new_cost = self.cost(&candidate);
                if new_cost < cost {
                    let relative = (cost - new_cost) / cost;
                    theta = candidate;
                    cost = new_cost;
                    lambda = (lambda / 10.0).max(1e-15);
                    improved = true;
                    if relative < 1e-15 || small_step {
                        return (theta, cost, true);
                    }
                    break;
                }
                if small_step {
                    break;
                }
                lambda *= 10.0;
            }
            if !improved {
                // No downhill step exists at any damping: a stationary point
                // (possibly on the p = 1 boundary).
                return (theta, cost, small_step || lambda >= 1e20);
            }
        }
        (theta, cost, false)
    }
}

fn distinct_lengths(points: &[DecayPoint]) -> usize {
    let mut ms: Vec<u64> = points.iter().map(|p| p.m).collect();
    ms.sort_unstable();
    ms.dedup();
    ms.len()
}

/// Fits the zeroth-order model `A p^m + B`.
pub fn fit_zeroth(data: &DecayDataset) -> Result<FitResult> {
    fit(data, FitModel::Zeroth)
}

/// Fits the first-order model `A p^m + C (m−1) p^(m−2) + B`.
pub fn fit_first(data: &DecayDataset) -> Result<FitResult> {
    fit(data, FitModel::First)
}

pub fn fit(data: &DecayDataset, model: FitModel) -> Result<FitResult> {
    fit_points(&data.points, model)
}

pub fn fit_points(points: &[DecayPoint], model: FitModel) -> Result<FitResult> {
    let distinct = distinct_lengths(points);
    if distinct < model.min_lengths() {
        return Err(Error::InsufficientData {
            needed: model.min_lengths(),
            got: distinct,
        });
    }
    if points.iter().any(|p| !p.mean.is_finite()) {
        return Err(Error::Parse("non-finite mean in decay data".into()));
    }
    // Sorting makes the result independent of input order.
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| {
        (a.m, a.mean, a.stderr)
            .partial_cmp(&(b.m, b.mean, b.stderr))
            .expect("finite values")
    });

    let weighted = sorted.iter().all(|p| p.stderr > 0.0);
    let problem = Problem {
        model,
        m: sorted.iter().map(|p| p.m as f64).collect(),
        y: sorted.iter().map(|p| p.mean).collect(),
        sqrt_w: sorted
            .iter()
            .map(|p| if weighted { 1.0 / p.stderr } else { 1.0 })
            .collect(),
    };

    let (lo, hi) = problem
        .y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| (lo.min(y), hi.max(y)));
    if hi - lo <= 1e-12 * hi.abs().max(1.0) {
        return Ok(degenerate_result(model, &problem, weighted));
    }

    let (theta, cost, converged) = START_GRID
        .iter()
        .map(|&p0| problem.levenberg_marquardt(problem.linear_start(p0)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty start grid");

    let n = problem.m.len();
    let k = model.parameter_count();
    let jac = problem.jacobian(&theta);
    let normal = jac.tr_mul(&jac);
    let scale = if weighted {
        1.0
    } else if n > k {
        cost / (n - k) as f64
    } else {
        0.0
    };
    let covariance = normal
        .clone()
        .pseudo_inverse(1e-14 * normal.amax().max(f64::MIN_POSITIVE))
        .unwrap_or_else(|_| DMatrix::zeros(k, k))
        * scale;
    let se = |i: usize| covariance[(i, i)].max(0.0).sqrt();

    let c = (model == FitModel::First).then(|| Estimate::new(theta[2], se(2)));
    let ill_conditioned = c.is_some_and(|c| c.value.abs() < 2.0 * c.stderr || c.value == 0.0);
    Ok(FitResult {
        model,
        p: Estimate::new(theta[k - 1], se(k - 1)),
        a: Estimate::new(theta[0], se(0)),
        b: Estimate::new(theta[1], se(1)),
        c,
        objective: cost,
        residual_norm: cost.sqrt(),
        converged,
        degenerate: false,
        ill_conditioned,
        weighted,
        uncertainty_method: "covariance".into(),
    })
}

fn degenerate_result(model: FitModel, problem: &Problem, weighted: bool) -> FitResult {
    let mean = problem.y.iter().sum::<f64>() / problem.y.len() as f64;
    let c = (model == FitModel::First).then(|| Estimate::exact(0.0));
    let mut theta = DVector::zeros(model.parameter_count());
    theta[1] = mean;
    let last = theta.len() - 1;
    theta[last] = 1.0;
    let cost = problem.cost(&theta);
    FitResult {
        model,
        p: Estimate::exact(1.0),
        a: Estimate::exact(0.0),
        b: Estimate::exact(mean),
        c,
        objective: cost,
        residual_norm: cost.sqrt(),
        converged: true,
        degenerate: true,
        ill_conditioned: model == FitModel::First,
        weighted,
        uncertainty_method: "covariance".into(),
    }
}

/// Spread of one parameter across bootstrap resamples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSpread {
    /// Half-width of the central 68.27% percentile interval.
    pub stderr: f64,
    /// Plain sample standard deviation of the replicates.
    pub std: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub model: FitModel,
    pub resamples: usize,
    pub seed: u64,
    pub p: BootstrapSpread,
    pub a: BootstrapSpread,
    pub b: BootstrapSpread,
    pub c: Option<BootstrapSpread>,
}

pub const DEFAULT_RESAMPLES: usize = 1000;

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    let t = pos - lo as f64;
    sorted[lo] * (1.0 - t) + sorted[hi] * t
}

fn spread(mut values: Vec<f64>) -> BootstrapSpread {
    let (mean, _) = mean_and_stderr(&values);
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    values.sort_by(f64::total_cmp);
    let lower = percentile(&values, 0.158_655_253_931_457);
    let upper = percentile(&values, 0.841_344_746_068_543);
    BootstrapSpread {
        stderr: (upper - lower) / 2.0,
        std,
        lower,
        upper,
    }
}

/// Nonparametric bootstrap over the retained per-sequence survivals.
///
/// Each resample redraws `K` sequences with replacement at every length and
/// refits. Resample `b` uses its own seeded stream, so the result is
/// reproducible and schedule independent.
pub fn bootstrap_uncertainty(
    data: &DecayDataset,
    model: FitModel,
    resamples: usize,
    seed: u64,
) -> Result<BootstrapSummary> {
    let raw = data.raw.as_ref().ok_or(Error::MissingRawData)?;
    if resamples < 100 {
        return Err(Error::OutOfRange {
            name: "resamples",
            value: resamples as f64,
            range: ">= 100".into(),
        });
    }
    if raw.len() != data.points.len() || raw.iter().any(Vec::is_empty) {
        return Err(Error::MissingRawData);
    }
    let fits = (0..resamples as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(seed, b, u64::MAX));
            let points: Vec<DecayPoint> = data
                .points
                .iter()
                .zip(raw)
                .map(|(point, values)| {
                    let draw: Vec<f64> = (0..values.len())
                        .map(|_| values[rng.random_range(0..values.len())])
                        .collect();
                    let (mean, stderr) = mean_and_stderr(&draw);
                    DecayPoint {
                        m: point.m,
                        mean,
                        stderr,
                        k: draw.len(),
                    }
                })
                .collect();
            fit_points(&points, model).map(|f| f.parameters())
        })
        .collect::<Result<Vec<_>>>()?;
    let column = |j: usize| spread(fits.iter().map(|f| f[j]).collect());
    let k = model.parameter_count();
    Ok(BootstrapSummary {
        model,
        resamples,
        seed,
        a: column(0),
        b: column(1),
        c: (model == FitModel::First).then(|| column(2)),
        p: column(k - 1),
    })
}

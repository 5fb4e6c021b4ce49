//! Monte Carlo check of the equilibrium identity
//! `E Σ_{x removable} f(x, γ - x) = E ∫ f(x, γ) e^{-h(x, γ)} dx`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::config::{PointConfiguration, Region};
use crate::estimate::{Quadrature, QuadratureSpec};
use crate::geometry::Point;
use crate::models::{dot, Feasible, Model, ModelError, ModelParams};

/// Default `|z|` above which a report counts as a breach.
pub const Z_THRESHOLD: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GnzError {
    #[error("empty sample set")]
    EmptySampleSet,
    #[error("sample {index} has infinite energy")]
    InfeasibleSample { index: usize },
    #[error("invalid functional: {0}")]
    InvalidFunctional(String),
    #[error("quadrature density must be at least 1, got {0}")]
    InvalidQuadrature(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunctional {
    ConstantOne,
    /// Component `i` (0-based) of the local statistic vector.
    StatisticComponent(usize),
    /// `1` when no other point lies within the closed ball of this radius.
    EmptyBall(f64),
}

impl TestFunctional {
    pub fn validate(&self, model: &Model) -> Result<(), GnzError> {
        match *self {
            TestFunctional::StatisticComponent(i) if i >= model.dim() => Err(GnzError::InvalidFunctional(format!(
                "statistic component {} of a {}-dimensional model",
                i + 1,
                model.dim()
            ))),
            TestFunctional::EmptyBall(r) if !(r > 0.0 && r.is_finite()) => {
                Err(GnzError::InvalidFunctional(format!("empty ball radius {r}")))
            }
            _ => Ok(()),
        }
    }

    /// Name used in reports; statistic components count from 1.
    pub fn name(&self) -> String {
        match self {
            TestFunctional::ConstantOne => "constant_one".into(),
            TestFunctional::StatisticComponent(i) => format!("statistic_component_{}", i + 1),
            TestFunctional::EmptyBall(r) => format!("empty_ball_{r}"),
        }
    }

    /// `f(x, γ)` given the local statistics of `x` against `γ`.
    fn eval(&self, t: &[f64], x: &Point, others: &PointConfiguration, skip: Option<usize>) -> f64 {
        match *self {
            TestFunctional::ConstantOne => 1.0,
            TestFunctional::StatisticComponent(i) => t[i],
            TestFunctional::EmptyBall(r) => {
                let mut hit = false;
                others.for_each_within(x, r, |j, _, _| hit |= Some(j) != skip);
                if hit {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }
}

/// `Σ_{x ∈ R(γ) ∩ region} f(x, γ - x)`
pub fn gnz_lhs(
    f: &TestFunctional,
    cfg: &PointConfiguration,
    model: &Model,
    alpha: f64,
    region: &Region,
) -> Result<f64, GnzError> {
    let feas = model.feasible(alpha, cfg)?;
    Ok(lhs_all(core::slice::from_ref(f), &feas, region)?[0])
}

/// Quadrature value of `∫_region f(x, γ) e^{-h(x, γ)} dx`.
pub fn gnz_rhs(
    f: &TestFunctional,
    cfg: &PointConfiguration,
    model: &Model,
    params: &ModelParams,
    region: &Region,
    quad: &QuadratureSpec,
) -> Result<f64, GnzError> {
    model.check_params(params)?;
    let feas = model.feasible(params.alpha, cfg)?;
    let grid = checked_grid(quad, region, cfg)?;
    Ok(rhs_all(core::slice::from_ref(f), &feas, &params.theta, &grid)?[0])
}

fn checked_grid(quad: &QuadratureSpec, region: &Region, cfg: &PointConfiguration) -> Result<Quadrature, GnzError> {
    if !quad.is_valid() {
        return Err(GnzError::InvalidQuadrature(quad.density));
    }
    Ok(quad.grid(region, cfg.window()))
}

fn lhs_all(fs: &[TestFunctional], feas: &Feasible<'_>, region: &Region) -> Result<Vec<f64>, GnzError> {
    let cfg = feas.cfg();
    let mut out = alloc::vec![0.0; fs.len()];
    for (i, (id, x)) in cfg.iter().enumerate() {
        if !region.contains(&x, cfg.window()) {
            continue;
        }
        // None means x is not removable and contributes nothing
        let Some(t) = feas.removal_statistics(id)? else { continue };
        for (o, f) in out.iter_mut().zip(fs) {
            *o += f.eval(&t, &x, cfg, Some(i));
        }
    }
    Ok(out)
}

fn rhs_all(fs: &[TestFunctional], feas: &Feasible<'_>, theta: &[f64], grid: &Quadrature) -> Result<Vec<f64>, GnzError> {
    let cfg = feas.cfg();
    let mut sums = alloc::vec![0.0; fs.len()];
    for x in &grid.points {
        let Some(t) = feas.local_statistics(x)?.t else { continue };
        let w = libm::exp(-dot(theta, &t));
        for (s, f) in sums.iter_mut().zip(fs) {
            *s += f.eval(&t, x, cfg, None) * w;
        }
    }
    Ok(sums.into_iter().map(|s| grid.scale(s)).collect())
}

/// Left and right sides of the identity on one configuration, one pair per
/// functional.
pub fn gnz_sample(
    fs: &[TestFunctional],
    cfg: &PointConfiguration,
    model: &Model,
    params: &ModelParams,
    region: &Region,
    quad: &QuadratureSpec,
) -> Result<Vec<(f64, f64)>, GnzError> {
    model.check_params(params)?;
    for f in fs {
        f.validate(model)?;
    }
    let feas = model.feasible(params.alpha, cfg)?;
    let grid = checked_grid(quad, region, cfg)?;
    let lhs = lhs_all(fs, &feas, region)?;
    let rhs = rhs_all(fs, &feas, &params.theta, &grid)?;
    Ok(lhs.into_iter().zip(rhs).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnzRow {
    pub functional: TestFunctional,
    pub lhs_mean: f64,
    pub rhs_mean: f64,
    pub lhs_se: f64,
    pub rhs_se: f64,
    pub z: f64,
    pub n_samples: usize,
    /// Effective sample size of the per-sample differences.
    pub ess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnzReport {
    pub rows: Vec<GnzRow>,
}

impl GnzReport {
    /// Builds the report from per-sample values, `values[s][k]` being the
    /// pair for sample `s` and functional `k`.
    pub fn from_values(fs: &[TestFunctional], values: &[Vec<(f64, f64)>]) -> Result<Self, GnzError> {
        if values.is_empty() {
            return Err(GnzError::EmptySampleSet);
        }
        let rows = fs
            .iter()
            .enumerate()
            .map(|(k, f)| {
                let lhs: Vec<f64> = values.iter().map(|v| v[k].0).collect();
                let rhs: Vec<f64> = values.iter().map(|v| v[k].1).collect();
                let diff: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
                let ess = effective_sample_size(&diff);
                let d_mean = mean(&diff);
                let d_se = libm::sqrt(variance(&diff) / ess);
                let z = if d_se > 0.0 {
                    d_mean / d_se
                } else if d_mean == 0.0 {
                    0.0
                } else {
                    f64::INFINITY.copysign(d_mean)
                };
                GnzRow {
                    functional: *f,
                    lhs_mean: mean(&lhs),
                    rhs_mean: mean(&rhs),
                    lhs_se: libm::sqrt(variance(&lhs) / effective_sample_size(&lhs)),
                    rhs_se: libm::sqrt(variance(&rhs) / effective_sample_size(&rhs)),
                    z,
                    n_samples: values.len(),
                    ess,
                }
            })
            .collect();
        Ok(GnzReport { rows })
    }

    pub fn max_abs_z(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(libm::fabs(r.z)))
    }

    pub fn passes(&self, z_max: f64) -> bool {
        self.rows.iter().all(|r| libm::fabs(r.z) <= z_max)
    }
}

/// Evaluates both sides on every sample and summarises them.
pub fn gnz_report(
    samples: &[PointConfiguration],
    model: &Model,
    params: &ModelParams,
    fs: &[TestFunctional],
    region: &Region,
    quad: &QuadratureSpec,
) -> Result<GnzReport, GnzError> {
    if samples.is_empty() {
        return Err(GnzError::EmptySampleSet);
    }
    let mut values = Vec::with_capacity(samples.len());
    for (index, cfg) in samples.iter().enumerate() {
        match gnz_sample(fs, cfg, model, params, region, quad) {
            Err(GnzError::Model(ModelError::InfeasibleBase)) => return Err(GnzError::InfeasibleSample { index }),
            r => values.push(r?),
        }
    }
    GnzReport::from_values(fs, &values)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Unbiased sample variance; zero for a single value.
fn variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

/// Effective sample size from the initial positive sequence estimator of
/// the integrated autocorrelation time, capped at the sample count.
pub fn effective_sample_size(v: &[f64]) -> f64 {
    let n = v.len();
    if n < 4 {
        return n as f64;
    }
    let m = mean(v);
    let acov = |lag: usize| -> f64 { (0..n - lag).map(|i| (v[i] - m) * (v[i + lag] - m)).sum::<f64>() / n as f64 };
    let g0 = acov(0);
    if !(g0 > 0.0) {
        return n as f64;
    }
    let mut tau = -1.0;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = (acov(lag) + acov(lag + 1)) / g0;
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        lag += 2;
    }
    (n as f64 / tau.max(1.0)).clamp(1.0, n as f64)
}

//! Two-step estimation: the hardcore parameter from the feasibility
//! boundary of the data, then θ by minimising the pseudo-likelihood
//! contrast with that estimate plugged in.

mod quadrature;

pub use quadrature::{Quadrature, QuadratureSpec, DEFAULT_DENSITY};

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::config::{PointConfiguration, Region};
use crate::geometry::Point;
use crate::models::{dot, Feasible, Model, ModelError};

/// Gradient norm at which Newton stops.
pub const GRADIENT_TOLERANCE: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 100;
/// Initial relative nudge above a non-attained hardcore estimate.
pub const EPSILON_FLOOR: f64 = 1e-9;
pub const MAX_DOUBLINGS: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("hardcore statistic undefined: {0}")]
    Undefined(&'static str),
    #[error("window energy is infinite at alpha = {0}")]
    InfeasibleAlpha(f64),
    #[error("degenerate data: the minimiser lies on the box boundary")]
    DegenerateData(Box<EstimationResult>),
    #[error("invalid parameter box: {0}")]
    InvalidBox(String),
    #[error("quadrature density must be at least 1, got {0}")]
    InvalidQuadrature(f64),
    #[error("region is empty after erosion by {0}")]
    RegionTooSmall(f64),
    #[error(transparent)]
    Model(ModelError),
}

impl From<ModelError> for EstimateError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Undefined(s) => EstimateError::Undefined(s),
            e => EstimateError::Model(e),
        }
    }
}

/// Closed box `[lower, upper]` bounding θ.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ThetaBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, EstimateError> {
        if lower.len() != upper.len() {
            return Err(EstimateError::InvalidBox("bound lengths differ".into()));
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(EstimateError::InvalidBox(format!("[{l}, {u}]")));
            }
        }
        Ok(ThetaBox { lower, upper })
    }

    /// `[-b, b]^p`
    pub fn symmetric(p: usize, b: f64) -> Result<Self, EstimateError> {
        ThetaBox::new(vec![-b; p], vec![b; p])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }

    fn clamp(&self, theta: &mut [f64]) {
        for ((t, l), u) in theta.iter_mut().zip(&self.lower).zip(&self.upper) {
            *t = t.clamp(*l, *u);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub alpha_hat: f64,
    pub attained: bool,
    pub epsilon: f64,
    pub theta_hat: Vec<f64>,
    pub pll_value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub at_boundary: Vec<bool>,
    pub removable_count: usize,
}

impl EstimationResult {
    /// The hardcore parameter the contrast was evaluated at.
    pub fn alpha_used(&self) -> f64 {
        self.alpha_hat + self.epsilon
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaEstimate {
    pub alpha_hat: f64,
    pub epsilon: f64,
    pub attained: bool,
}

/// `α̂` from the data and the nudge `ε` making the window energy finite.
pub fn estimate_alpha(model: &Model, cfg: &PointConfiguration, region: &Region) -> Result<AlphaEstimate, EstimateError> {
    let hc = model.hardcore_statistic(cfg, region)?;
    let a = hc.value;
    let feasible = |alpha: f64| -> Result<bool, EstimateError> {
        match model.window_statistics(alpha, cfg, region) {
            Ok(t) => Ok(t.is_some()),
            Err(ModelError::InvalidModel(_)) => Ok(false),
            Err(e) => Err(e.into()),
        }
    };
    if hc.attained {
        if !feasible(a)? {
            return Err(EstimateError::InfeasibleAlpha(a));
        }
        return Ok(AlphaEstimate { alpha_hat: a, epsilon: 0.0, attained: true });
    }
    let mut eps = EPSILON_FLOOR * a;
    for _ in 0..=MAX_DOUBLINGS {
        if feasible(a + eps)? {
            return Ok(AlphaEstimate { alpha_hat: a, epsilon: eps, attained: false });
        }
        eps *= 2.0;
    }
    Err(EstimateError::InfeasibleAlpha(a + eps / 2.0))
}

/// The region shrunk by `range` on every side, for plane data whose
/// neighbourhoods must be fully observed.
pub fn minus_sampling(region: &Region, cfg: &PointConfiguration, range: f64) -> Result<Region, EstimateError> {
    let w = cfg.window();
    if w.is_torus() || range <= 0.0 {
        return Ok(region.clone());
    }
    let out = match region {
        Region::Whole | Region::Rect { .. } => {
            let (lo, hi) = region.bounds(w);
            let r = Region::Rect {
                min: Point::new(lo.x + range, lo.y + range),
                max: Point::new(hi.x - range, hi.y - range),
            };
            (lo.x + range < hi.x - range && lo.y + range < hi.y - range).then_some(r)
        }
        Region::Ball { center, radius } => (*radius > range).then_some(Region::Ball {
            center: *center,
            radius: radius - range,
        }),
    };
    out.ok_or(EstimateError::RegionTooSmall(range))
}

/// Everything the contrast needs at a fixed hardcore parameter: statistics
/// at the dummy points and the summed statistics of removable points.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLikelihood {
    /// Finite statistics `t(x_j, γ)` at dummy points; infinite ones
    /// contribute `e^{-∞} = 0` and are dropped.
    quad_stats: Vec<Vec<f64>>,
    quad: Quadrature,
    removable_sum: Vec<f64>,
    removable_count: usize,
    area: f64,
    dim: usize,
}

impl PseudoLikelihood {
    pub fn new(
        model: &Model,
        cfg: &PointConfiguration,
        region: &Region,
        alpha: f64,
        quad: &QuadratureSpec,
    ) -> Result<Self, EstimateError> {
        if !quad.is_valid() {
            return Err(EstimateError::InvalidQuadrature(quad.density));
        }
        let feas = match model.feasible(alpha, cfg) {
            Ok(f) => f,
            Err(ModelError::InfeasibleBase) => return Err(EstimateError::InfeasibleAlpha(alpha)),
            Err(e) => return Err(e.into()),
        };
        let grid = quad.grid(region, cfg.window());
        let mut quad_stats = Vec::with_capacity(grid.points.len());
        for x in &grid.points {
            if let Some(t) = feas.local_statistics(x)?.t {
                quad_stats.push(t);
            }
        }
        let dim = model.dim();
        let (removable_sum, removable_count) = removable_sum(&feas, region, dim)?;
        Ok(PseudoLikelihood {
            quad_stats,
            area: region.area(cfg.window()),
            quad: grid,
            removable_sum,
            removable_count,
            dim,
        })
    }

    /// Assembles a contrast from precomputed parts: dummy-point statistics
    /// (finite ones only) with their quadrature, and the removable sum.
    pub fn from_parts(
        quad_stats: Vec<Vec<f64>>,
        quad: Quadrature,
        removable_sum: Vec<f64>,
        removable_count: usize,
        area: f64,
    ) -> Self {
        let dim = removable_sum.len();
        PseudoLikelihood { quad_stats, quad, removable_sum, removable_count, area, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn removable_count(&self) -> usize {
        self.removable_count
    }

    pub fn removable_sum(&self) -> &[f64] {
        &self.removable_sum
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        let integral = self
            .quad
            .scale(self.quad_stats.iter().map(|t| libm::exp(-dot(theta, t))).sum());
        (integral + dot(theta, &self.removable_sum)) / self.area
    }

    /// Gradient and Hessian (row-major `p × p`) of the contrast in θ.
    pub fn gradient_hessian(&self, theta: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p = self.dim;
        let mut g = vec![0.0; p];
        let mut h = vec![0.0; p * p];
        for t in &self.quad_stats {
            let e = libm::exp(-dot(theta, t));
            for i in 0..p {
                g[i] -= t[i] * e;
                for j in 0..p {
                    h[i * p + j] += t[i] * t[j] * e;
                }
            }
        }
        for i in 0..p {
            g[i] = (self.quad.scale(g[i]) + self.removable_sum[i]) / self.area;
        }
        for v in &mut h {
            *v = self.quad.scale(*v) / self.area;
        }
        (g, h)
    }

    /// Whether, with no removable points, every statistic component keeps
    /// one sign on the dummy points, so the contrast is monotone in θ.
    pub fn is_degenerate(&self) -> bool {
        self.dim > 0
            && self.removable_count == 0
            && (0..self.dim).all(|i| {
                self.quad_stats.iter().all(|t| t[i] >= 0.0) || self.quad_stats.iter().all(|t| t[i] <= 0.0)
            })
    }

    /// `minimize` tagged with the hardcore parameter the contrast was built
    /// at. Degenerate data still yields the flagged result inside the error.
    pub fn fit(&self, theta_box: &ThetaBox, alpha: f64) -> Result<EstimationResult, EstimateError> {
        let fill = |mut r: EstimationResult| {
            r.alpha_hat = alpha;
            r
        };
        match self.minimize(theta_box) {
            Ok(r) if self.is_degenerate() => Err(EstimateError::DegenerateData(Box::new(fill(r)))),
            Ok(r) => Ok(fill(r)),
            Err(EstimateError::DegenerateData(r)) => Err(EstimateError::DegenerateData(Box::new(fill(*r)))),
            Err(e) => Err(e),
        }
    }

    /// Damped Newton from the box centre with iterates clamped to the box.
    pub fn minimize(&self, theta_box: &ThetaBox) -> Result<EstimationResult, EstimateError> {
        let p = self.dim;
        if theta_box.dim() != p {
            return Err(ModelError::ThetaDimension { expected: p, got: theta_box.dim() }.into());
        }
        let mut theta = theta_box.center();
        let mut f = self.value(&theta);
        let mut iterations = 0;
        let mut singular = false;
        let (mut g, mut h) = self.gradient_hessian(&theta);
        loop {
            let free = free_components(&theta, &g, theta_box);
            let gnorm = projected_norm(&g, &free);
            if gnorm <= GRADIENT_TOLERANCE || iterations >= MAX_ITERATIONS {
                break;
            }
            iterations += 1;
            let Some(dir) = newton_direction(&g, &h, &free) else {
                singular = true;
                break;
            };
            let mut step = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let mut cand: Vec<f64> = theta.iter().zip(&dir).map(|(t, d)| t + step * d).collect();
                theta_box.clamp(&mut cand);
                let fc = self.value(&cand);
                let (gc, hc) = self.gradient_hessian(&cand);
                let gc_norm = projected_norm(&gc, &free_components(&cand, &gc, theta_box));
                // near the optimum f is flat to rounding; a smaller gradient decides
                if fc < f || (fc <= f + 1e-14 * f.abs().max(1.0) && gc_norm < gnorm) {
                    theta = cand;
                    f = fc;
                    g = gc;
                    h = hc;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        let free = free_components(&theta, &g, theta_box);
        let at_boundary = theta
            .iter()
            .zip(theta_box.lower.iter().zip(&theta_box.upper))
            .map(|(t, (l, u))| t == l || t == u)
            .collect();
        let result = EstimationResult {
            alpha_hat: f64::NAN,
            attained: false,
            epsilon: 0.0,
            gradient_norm: projected_norm(&g, &free),
            theta_hat: theta,
            pll_value: f,
            iterations,
            at_boundary,
            removable_count: self.removable_count,
        };
        if singular {
            return Err(EstimateError::DegenerateData(Box::new(result)));
        }
        Ok(result)
    }
}

fn removable_sum(feas: &Feasible<'_>, region: &Region, dim: usize) -> Result<(Vec<f64>, usize), EstimateError> {
    let cfg = feas.cfg();
    let mut sum = vec![0.0; dim];
    let mut count = 0;
    for (id, x) in cfg.iter() {
        if !region.contains(&x, cfg.window()) {
            continue;
        }
        if let Some(t) = feas.removal_statistics(id)? {
            count += 1;
            for (s, v) in sum.iter_mut().zip(&t) {
                *s += v;
            }
        }
    }
    Ok((sum, count))
}

/// Components not held at a bound by a gradient pushing outwards.
fn free_components(theta: &[f64], g: &[f64], b: &ThetaBox) -> Vec<bool> {
    (0..theta.len())
        .map(|i| !((theta[i] <= b.lower[i] && g[i] > 0.0) || (theta[i] >= b.upper[i] && g[i] < 0.0)))
        .collect()
}

fn projected_norm(g: &[f64], free: &[bool]) -> f64 {
    libm::sqrt(g.iter().zip(free).filter(|(_, f)| **f).map(|(v, _)| v * v).sum())
}

/// Solves `H d = -g` on the free components by Cholesky; `None` when the
/// restricted Hessian is singular.
fn newton_direction(g: &[f64], h: &[f64], free: &[bool]) -> Option<Vec<f64>> {
    let p = g.len();
    let idx: Vec<usize> = (0..p).filter(|&i| free[i]).collect();
    let q = idx.len();
    let mut l = vec![0.0; q * q];
    let scale = idx.iter().map(|&i| h[i * p + i]).fold(0.0f64, f64::max);
    if !(scale > 0.0) {
        return None;
    }
    for a in 0..q {
        for b in 0..=a {
            let mut s = h[idx[a] * p + idx[b]];
            for c in 0..b {
                s -= l[a * q + c] * l[b * q + c];
            }
            if a == b {
                if !(s > 1e-14 * scale) {
                    return None;
                }
                l[a * q + a] = libm::sqrt(s);
            } else {
                l[a * q + b] = s / l[b * q + b];
            }
        }
    }
    let mut y = vec![0.0; q];
    for a in 0..q {
        let mut s = -g[idx[a]];
        for c in 0..a {
            s -= l[a * q + c] * y[c];
        }
        y[a] = s / l[a * q + a];
    }
    let mut x = vec![0.0; q];
    for a in (0..q).rev() {
        let mut s = y[a];
        for c in a + 1..q {
            s -= l[c * q + a] * x[c];
        }
        x[a] = s / l[a * q + a];
    }
    let mut d = vec![0.0; p];
    for (a, &i) in idx.iter().enumerate() {
        d[i] = x[a];
    }
    Some(d)
}

/// `PLL(γ, α, θ)`
pub fn pll(
    model: &Model,
    cfg: &PointConfiguration,
    region: &Region,
    alpha: f64,
    theta: &[f64],
    quad: &QuadratureSpec,
) -> Result<f64, EstimateError> {
    model.check_params(&crate::models::ModelParams::new(alpha, theta.to_vec()))?;
    Ok(PseudoLikelihood::new(model, cfg, region, alpha, quad)?.value(theta))
}

pub fn pll_gradient_hessian(
    model: &Model,
    cfg: &PointConfiguration,
    region: &Region,
    alpha: f64,
    theta: &[f64],
    quad: &QuadratureSpec,
) -> Result<(Vec<f64>, Vec<f64>), EstimateError> {
    model.check_params(&crate::models::ModelParams::new(alpha, theta.to_vec()))?;
    Ok(PseudoLikelihood::new(model, cfg, region, alpha, quad)?.gradient_hessian(theta))
}

/// `θ̂` at a given hardcore parameter. Degenerate data still yields the
/// flagged result inside the error.
pub fn estimate_theta(
    model: &Model,
    cfg: &PointConfiguration,
    region: &Region,
    alpha: f64,
    theta_box: &ThetaBox,
    quad: &QuadratureSpec,
) -> Result<EstimationResult, EstimateError> {
    PseudoLikelihood::new(model, cfg, region, alpha, quad)?.fit(theta_box, alpha)
}

/// `α̂` then `θ̂` at `α̂ + ε`. Plane data is fitted on the region eroded
/// by the interaction range.
pub fn two_step(
    model: &Model,
    cfg: &PointConfiguration,
    region: &Region,
    theta_box: &ThetaBox,
    quad: &QuadratureSpec,
) -> Result<EstimationResult, EstimateError> {
    let a = estimate_alpha(model, cfg, region)?;
    let alpha = a.alpha_hat + a.epsilon;
    let fit_region = minus_sampling(region, cfg, model.interaction_range(alpha))?;
    let set = |mut r: EstimationResult| {
        r.alpha_hat = a.alpha_hat;
        r.epsilon = a.epsilon;
        r.attained = a.attained;
        r
    };
    match estimate_theta(model, cfg, &fit_region, alpha, theta_box, quad) {
        Ok(r) => Ok(set(r)),
        Err(EstimateError::DegenerateData(r)) => Err(EstimateError::DegenerateData(Box::new(set(*r)))),
        Err(e) => Err(e),
    }
}

/// `K(θ, θ') = PLL(θ) - PLL(θ')` at a common hardcore parameter.
pub fn contrast_kn(
    model: &Model,
    cfg: &PointConfiguration,
    region: &Region,
    alpha: f64,
    theta: &[f64],
    theta_star: &[f64],
    quad: &QuadratureSpec,
) -> Result<f64, EstimateError> {
    let pl = PseudoLikelihood::new(model, cfg, region, alpha, quad)?;
    Ok(pl.value(theta) - pl.value(theta_star))
}

//! Energy models. Every energy here is linear in θ: `H = θ·T(γ)` or `+∞`,
//! so the models work with statistic vectors `T` (`None` meaning infinite)
//! and energies are dot products.

mod delaunay;
mod hard_sphere;
mod knn;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::config::{ConfigError, Neighbor, PointConfiguration, PointId, Region};
use crate::geometry::{GeometryError, Point};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("theta has {got} components but the model has {expected}")]
    ThetaDimension { expected: usize, got: usize },
    #[error("the base configuration has infinite energy")]
    InfeasibleBase,
    #[error("hardcore statistic undefined: {0}")]
    Undefined(&'static str),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedEnergy {
    Finite(f64),
    Infinite,
}

impl ExtendedEnergy {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedEnergy::Finite(_))
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            ExtendedEnergy::Finite(v) => Some(*v),
            ExtendedEnergy::Infinite => None,
        }
    }

    pub fn from_statistics(theta: &[f64], t: Option<&[f64]>) -> Self {
        match t {
            Some(t) => ExtendedEnergy::Finite(dot(theta, t)),
            None => ExtendedEnergy::Infinite,
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub theta: Vec<f64>,
}

impl ModelParams {
    pub fn new(alpha: f64, theta: Vec<f64>) -> Self {
        ModelParams { alpha, theta }
    }
}

/// Statistics of inserting one point: `t` is absent when the insertion
/// violates a hardcore clause.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalStatistics {
    pub t: Option<Vec<f64>>,
}

impl LocalStatistics {
    pub fn feasible(&self) -> bool {
        self.t.is_some()
    }

    pub fn energy(&self, theta: &[f64]) -> ExtendedEnergy {
        ExtendedEnergy::from_statistics(theta, self.t.as_deref())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardcoreThreshold {
    pub value: f64,
    /// Whether the infimum itself gives finite energy.
    pub attained: bool,
}

/// Pair potential used by the kNN model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Phi {
    Constant(f64),
    /// `max(0, 1 - u/c)`
    TruncatedLinear(f64),
    /// `height` on `[0, radius]`, zero beyond.
    Step { radius: f64, height: f64 },
}

impl Phi {
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            Phi::Constant(c) => c,
            Phi::TruncatedLinear(c) => (1.0 - u / c).max(0.0),
            Phi::Step { radius, height } => {
                if u <= radius {
                    height
                } else {
                    0.0
                }
            }
        }
    }

    /// Declared bound on `|phi|`.
    pub fn bound(&self) -> f64 {
        match *self {
            Phi::Constant(c) => libm::fabs(c),
            Phi::TruncatedLinear(_) => 1.0,
            Phi::Step { height, .. } => libm::fabs(height),
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        let ok = match *self {
            Phi::Constant(c) => c.is_finite() && c != 0.0,
            Phi::TruncatedLinear(c) => c.is_finite() && c > 0.0,
            Phi::Step { radius, height } => {
                radius.is_finite() && radius > 0.0 && height.is_finite() && height != 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(ModelError::InvalidModel("phi must be finite and non-null near 0".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardSphereSpec {
    pub steps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelaunaySpec {
    pub min_edge: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnSpec {
    pub k: usize,
    pub phi: Phi,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    HardSphere(HardSphereSpec),
    Delaunay(DelaunaySpec),
    Knn(KnnSpec),
    Poisson,
}

impl Model {
    pub fn hard_sphere(steps: Vec<f64>) -> Result<Self, ModelError> {
        let increasing = steps.windows(2).all(|w| w[0] < w[1]);
        if steps.is_empty() || !increasing || !(steps[0] > 0.0) || !steps.iter().all(|r| r.is_finite()) {
            return Err(ModelError::InvalidModel("steps must satisfy 0 < r_1 < ... < r_p".into()));
        }
        Ok(Model::HardSphere(HardSphereSpec { steps }))
    }

    pub fn delaunay(min_edge: f64) -> Result<Self, ModelError> {
        if !(min_edge.is_finite() && min_edge > 0.0) {
            return Err(ModelError::InvalidModel("min_edge must be positive".into()));
        }
        Ok(Model::Delaunay(DelaunaySpec { min_edge }))
    }

    pub fn knn(k: usize, phi: Phi) -> Result<Self, ModelError> {
        if k == 0 {
            return Err(ModelError::InvalidModel("k must be at least 1".into()));
        }
        phi.validate()?;
        Ok(Model::Knn(KnnSpec { k, phi }))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::HardSphere(_) => "hardsphere",
            Model::Delaunay(_) => "delaunay",
            Model::Knn(_) => "knn",
            Model::Poisson => "poisson",
        }
    }

    /// Number of components of θ.
    pub fn dim(&self) -> usize {
        match self {
            Model::HardSphere(s) => s.steps.len(),
            Model::Delaunay(_) | Model::Knn(_) => 1,
            Model::Poisson => 0,
        }
    }

    pub fn check_alpha(&self, alpha: f64) -> Result<(), ModelError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(ModelError::InvalidModel("alpha must be positive and finite".into()));
        }
        if let Model::Delaunay(d) = self {
            if alpha <= d.min_edge {
                return Err(ModelError::InvalidModel("alpha must exceed min_edge".into()));
            }
        }
        Ok(())
    }

    pub fn check_params(&self, params: &ModelParams) -> Result<(), ModelError> {
        self.check_alpha(params.alpha)?;
        if params.theta.len() != self.dim() {
            return Err(ModelError::ThetaDimension {
                expected: self.dim(),
                got: params.theta.len(),
            });
        }
        if !params.theta.iter().all(|t| t.is_finite()) {
            return Err(ModelError::InvalidModel("theta must be finite".into()));
        }
        Ok(())
    }

    /// Radius beyond which inserting or deleting a point has no effect.
    pub fn interaction_range(&self, alpha: f64) -> f64 {
        match self {
            Model::HardSphere(s) => 1.0 / alpha + s.steps[s.steps.len() - 1],
            Model::Delaunay(_) | Model::Knn(_) => 2.0 * alpha,
            Model::Poisson => 0.0,
        }
    }

    /// `T_Λ(γ)`, or `None` when the window energy is infinite.
    pub fn window_statistics(
        &self,
        alpha: f64,
        cfg: &PointConfiguration,
        region: &Region,
    ) -> Result<Option<Vec<f64>>, ModelError> {
        self.check_alpha(alpha)?;
        match self {
            Model::HardSphere(s) => Ok(hard_sphere::window_statistics(s, alpha, cfg, region)),
            Model::Delaunay(s) => delaunay::window_statistics(s, alpha, cfg, region),
            Model::Knn(s) => Ok(knn::window_statistics(s, alpha, cfg, region)),
            Model::Poisson => Ok(Some(Vec::new())),
        }
    }

    pub fn window_energy(
        &self,
        params: &ModelParams,
        cfg: &PointConfiguration,
        region: &Region,
    ) -> Result<ExtendedEnergy, ModelError> {
        self.check_params(params)?;
        let t = self.window_statistics(params.alpha, cfg, region)?;
        Ok(ExtendedEnergy::from_statistics(&params.theta, t.as_deref()))
    }

    /// Checks that `cfg` has finite energy and returns a handle for local
    /// computations on it.
    pub fn feasible<'a>(&'a self, alpha: f64, cfg: &'a PointConfiguration) -> Result<Feasible<'a>, ModelError> {
        match self.window_statistics(alpha, cfg, &Region::Whole)? {
            Some(_) => Ok(Feasible { model: self, alpha, cfg }),
            None => Err(ModelError::InfeasibleBase),
        }
    }

    pub fn local_energy(
        &self,
        params: &ModelParams,
        x: &Point,
        cfg: &PointConfiguration,
    ) -> Result<ExtendedEnergy, ModelError> {
        self.check_params(params)?;
        let s = self.sufficient_statistics(params.alpha, x, cfg)?;
        Ok(s.energy(&params.theta))
    }

    pub fn sufficient_statistics(
        &self,
        alpha: f64,
        x: &Point,
        cfg: &PointConfiguration,
    ) -> Result<LocalStatistics, ModelError> {
        self.feasible(alpha, cfg)?.local_statistics(x)
    }

    pub fn is_removable(&self, alpha: f64, id: PointId, cfg: &PointConfiguration) -> Result<bool, ModelError> {
        self.feasible(alpha, cfg)?.is_removable(id)
    }

    pub fn removable_set(
        &self,
        alpha: f64,
        cfg: &PointConfiguration,
        region: &Region,
    ) -> Result<Vec<PointId>, ModelError> {
        self.feasible(alpha, cfg)?.removable_set(region)
    }

    /// `inf{α : H_Λ finite}` together with whether it is attained.
    pub fn hardcore_statistic(&self, cfg: &PointConfiguration, region: &Region) -> Result<HardcoreThreshold, ModelError> {
        match self {
            Model::HardSphere(_) => hard_sphere::hardcore_statistic(cfg, region),
            Model::Delaunay(s) => delaunay::hardcore_statistic(s, cfg, region),
            Model::Knn(s) => knn::hardcore_statistic(s, cfg, region),
            Model::Poisson => Err(ModelError::Undefined("the Poisson model has no hardcore")),
        }
    }

    /// A bound `K` with `h(x, γ) ≥ -K` for every finite local energy.
    pub fn local_stability_bound(&self, params: &ModelParams) -> f64 {
        let tmax = params.theta.iter().fold(0.0f64, |m, t| m.max(libm::fabs(*t)));
        let a = params.alpha;
        match self {
            Model::HardSphere(s) => {
                // disjoint disks of radius 1/(2α) centred within the outer radius
                let outer = 1.0 / a + s.steps[s.steps.len() - 1];
                let pack = libm::pow(2.0 * a * outer + 1.0, 2.0);
                tmax * pack * s.steps.len() as f64
            }
            Model::Delaunay(s) => {
                let half = 0.5 * s.min_edge;
                let pack = libm::pow((2.0 * a + half) / half, 2.0);
                tmax * 6.0 * a * 3.0 * pack
            }
            Model::Knn(s) => tmax * (s.k + 5 * s.k) as f64 * s.phi.bound(),
            Model::Poisson => 0.0,
        }
    }
}

/// A model paired with a configuration known to have finite energy.
#[derive(Debug, Clone, Copy)]
pub struct Feasible<'a> {
    model: &'a Model,
    alpha: f64,
    cfg: &'a PointConfiguration,
}

impl<'a> Feasible<'a> {
    /// Skips the feasibility check; the caller vouches for it.
    pub(crate) fn assume(model: &'a Model, alpha: f64, cfg: &'a PointConfiguration) -> Self {
        Feasible { model, alpha, cfg }
    }

    pub fn model(&self) -> &'a Model {
        self.model
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn cfg(&self) -> &'a PointConfiguration {
        self.cfg
    }

    /// `T(γ') - T(γ)` where `γ'` is `γ` with `removed` deleted and `added`
    /// inserted, or `None` when `γ'` has infinite energy. An added point on
    /// top of a remaining point makes `γ'` infeasible.
    pub fn delta(&self, removed: &[PointId], added: &[Point]) -> Result<Option<Vec<f64>>, ModelError> {
        let view = View::new(self.cfg, removed, added)?;
        if view.has_collision() {
            return Ok(None);
        }
        match self.model {
            Model::HardSphere(s) => Ok(hard_sphere::delta(s, self.alpha, &view)),
            Model::Delaunay(s) => delaunay::delta(s, self.alpha, &view),
            Model::Knn(s) => knn::delta(s, self.alpha, &view),
            Model::Poisson => Ok(Some(Vec::new())),
        }
    }

    pub fn local_statistics(&self, x: &Point) -> Result<LocalStatistics, ModelError> {
        Ok(LocalStatistics {
            t: self.delta(&[], core::slice::from_ref(x))?,
        })
    }

    /// `t(x, γ - x)` when `x` is removable.
    pub fn removal_statistics(&self, id: PointId) -> Result<Option<Vec<f64>>, ModelError> {
        Ok(self
            .delta(&[id], &[])?
            .map(|d| d.into_iter().map(|v| -v).collect()))
    }

    pub fn is_removable(&self, id: PointId) -> Result<bool, ModelError> {
        if let Model::HardSphere(_) | Model::Poisson = self.model {
            return match self.cfg.index_of(id) {
                Some(_) => Ok(true),
                None => Err(ConfigError::UnknownId(id).into()),
            };
        }
        Ok(self.delta(&[id], &[])?.is_some())
    }

    pub fn removable_set(&self, region: &Region) -> Result<Vec<PointId>, ModelError> {
        let mut out = Vec::new();
        for (id, p) in self.cfg.iter() {
            if region.contains(&p, self.cfg.window()) && self.is_removable(id)? {
                out.push(id);
            }
        }
        Ok(out)
    }
}

/// The configuration `γ'` obtained from `cfg` by deleting some points and
/// appending others, queried without materialising it.
pub(crate) struct View<'a> {
    pub cfg: &'a PointConfiguration,
    /// Sorted indices into `cfg` of deleted points.
    pub removed: Vec<usize>,
    pub added: &'a [Point],
}

impl<'a> View<'a> {
    pub fn new(cfg: &'a PointConfiguration, removed: &[PointId], added: &'a [Point]) -> Result<Self, ModelError> {
        let mut idx = Vec::with_capacity(removed.len());
        for id in removed {
            idx.push(cfg.index_of(*id).ok_or(ConfigError::UnknownId(*id))?);
        }
        idx.sort_unstable();
        idx.dedup();
        for p in added {
            if !cfg.window().contains(p) {
                return Err(ConfigError::OutsideWindow(*p).into());
            }
        }
        Ok(View { cfg, removed: idx, added })
    }

    fn has_collision(&self) -> bool {
        self.added.iter().enumerate().any(|(i, p)| {
            self.added[..i].contains(p) || {
                let mut hit = false;
                self.cfg.for_each_within(p, 0.0, |j, _, _| hit |= !self.is_removed(j));
                hit
            }
        })
    }

    pub fn is_removed(&self, index: usize) -> bool {
        self.removed.binary_search(&index).is_ok()
    }

    pub fn added_id(&self, i: usize) -> PointId {
        PointId(self.cfg.next_id().0 + i as u32)
    }

    pub fn removed_points(&self) -> impl Iterator<Item = Point> + '_ {
        self.removed.iter().map(|&i| self.cfg.points()[i])
    }

    /// Positions of every changed point, deleted ones first.
    pub fn changed_points(&self) -> Vec<Point> {
        self.removed_points().chain(self.added.iter().copied()).collect()
    }

    pub fn len(&self) -> usize {
        self.cfg.len() - self.removed.len() + self.added.len()
    }

    /// Visits every point of `γ'` within the closed ball around `q`.
    pub fn for_each_within(&self, q: &Point, r: f64, mut f: impl FnMut(PointId, &Point, f64)) {
        let ids = self.cfg.ids();
        self.cfg.for_each_within(q, r, |i, p, d| {
            if !self.is_removed(i) {
                f(ids[i], p, d);
            }
        });
        let w = self.cfg.window();
        for (i, p) in self.added.iter().enumerate() {
            let d = w.distance(q, p);
            if d <= r {
                f(self.added_id(i), p, d);
            }
        }
    }

    pub fn count_in_ball(&self, q: &Point, r: f64) -> usize {
        let mut n = 0;
        self.for_each_within(q, r, |_, _, _| n += 1);
        n
    }

    /// The `k` nearest points of `γ'` to `q` excluding `q` itself, or `None`
    /// when fewer than `k` exist.
    pub fn k_nearest(&self, q: &Point, k: usize) -> Option<Vec<Neighbor>> {
        let at_q = self.count_in_ball(q, 0.0);
        if self.len() - at_q < k {
            return None;
        }
        if k == 0 {
            return Some(Vec::new());
        }
        let l = self.cfg.window().side();
        let mut r = 1.5 * libm::sqrt(k as f64 * l * l / (self.len() as f64 * core::f64::consts::PI));
        loop {
            let mut found = Vec::new();
            self.for_each_within(q, r, |id, _, d| {
                if d > 0.0 {
                    found.push(Neighbor { id, distance: d });
                }
            });
            if found.len() >= k {
                found.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.id.cmp(&b.id)));
                found.truncate(k);
                return Some(found);
            }
            r *= 2.0;
        }
    }
}

pub(crate) fn zeros(p: usize) -> Vec<f64> {
    vec![0.0; p]
}

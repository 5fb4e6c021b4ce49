//! Birth, death, move and cluster Metropolis–Hastings on the torus, targeting
//! the density `e^{-H}` against a unit-rate Poisson process.

mod cluster;

pub use cluster::disk_intersection_area;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::config::{PointConfiguration, PointId, Region};
use crate::geometry::{Point, TorusWindow};
use crate::models::{dot, Feasible, Model, ModelError, ModelParams, View};

use cluster::{ln_factorial, self_selecting};

/// Steps between from-scratch recomputations of the cached energy.
pub const RECHECK_EVERY: u64 = 10_000;
/// Relative tolerance of the cached-energy check.
pub const RECHECK_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("the kNN model needs cluster birth and death proposals")]
    IrreducibleKnn,
    #[error("no feasible lattice: {0}")]
    NoFeasibleLattice(String),
    #[error("cached energy {cached} disagrees with recomputed {fresh} at step {step}")]
    IncoherentCache { step: u64, cached: f64, fresh: f64 },
    #[error("chain reached an infeasible state at step {0}")]
    InfeasibleState(u64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub p_birth: f64,
    pub p_death: f64,
    pub p_move: f64,
    pub p_cluster_birth: f64,
    pub p_cluster_death: f64,
    pub move_sigma: f64,
    pub cluster_radius: f64,
    pub burn_in: u64,
    pub keep: usize,
    pub thin: u64,
    pub seed: u64,
    /// Independent random stream for the same seed.
    pub stream: u64,
    /// Mutation switch for testing the diagnostics: accept every feasible
    /// proposal regardless of the Hastings ratio.
    pub skip_rejection: bool,
    /// Recompute the window statistics after every accepted step.
    pub check_every_step: bool,
}

impl SamplerConfig {
    pub fn defaults_for(model: &Model, alpha: f64) -> Self {
        let range = model.interaction_range(alpha);
        let (pb, pc) = match model {
            Model::Knn(_) => (0.1, 0.2),
            _ => (0.3, 0.0),
        };
        SamplerConfig {
            p_birth: pb,
            p_death: pb,
            p_move: 0.4,
            p_cluster_birth: pc,
            p_cluster_death: pc,
            move_sigma: if range > 0.0 { range / 10.0 } else { 0.1 },
            cluster_radius: if alpha > 0.0 { alpha / 2.0 } else { 0.5 },
            burn_in: 10_000,
            keep: 100,
            thin: 100,
            seed: 0,
            stream: 0,
            skip_rejection: false,
            check_every_step: false,
        }
    }

    pub fn validate(&self, model: &Model, window: &TorusWindow) -> Result<(), SamplerError> {
        let ps = self.probabilities();
        if ps.iter().any(|p| !(*p >= 0.0)) {
            return Err(SamplerError::InvalidConfig("negative proposal probability".into()));
        }
        let total: f64 = ps.iter().sum();
        if libm::fabs(total - 1.0) > 1e-12 {
            return Err(SamplerError::InvalidConfig(format!("proposal probabilities sum to {total}")));
        }
        if (self.p_birth > 0.0) != (self.p_death > 0.0) {
            return Err(SamplerError::InvalidConfig("birth and death must be enabled together".into()));
        }
        if (self.p_cluster_birth > 0.0) != (self.p_cluster_death > 0.0) {
            return Err(SamplerError::InvalidConfig("cluster birth and death must be enabled together".into()));
        }
        if !(self.move_sigma > 0.0 && self.move_sigma.is_finite()) {
            return Err(SamplerError::InvalidConfig(format!("move jitter {} must be positive", self.move_sigma)));
        }
        if !(self.cluster_radius > 0.0 && self.cluster_radius.is_finite()) {
            return Err(SamplerError::InvalidConfig(format!(
                "cluster radius {} must be positive",
                self.cluster_radius
            )));
        }
        if self.p_cluster_birth > 0.0 && self.cluster_radius >= window.side() / 4.0 {
            return Err(SamplerError::InvalidConfig("cluster radius must be below a quarter of the side".into()));
        }
        if self.thin == 0 {
            return Err(SamplerError::InvalidConfig("thin must be at least 1".into()));
        }
        if !window.is_torus() {
            return Err(SamplerError::InvalidConfig("simulation runs on the torus only".into()));
        }
        if matches!(model, Model::Knn(_)) && !(self.p_cluster_birth > 0.0) {
            return Err(SamplerError::IrreducibleKnn);
        }
        Ok(())
    }

    fn probabilities(&self) -> [f64; 5] {
        [self.p_birth, self.p_death, self.p_move, self.p_cluster_birth, self.p_cluster_death]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProposalKind {
    Birth,
    Death,
    Move,
    ClusterBirth,
    ClusterDeath,
}

impl ProposalKind {
    pub const ALL: [ProposalKind; 5] = [
        ProposalKind::Birth,
        ProposalKind::Death,
        ProposalKind::Move,
        ProposalKind::ClusterBirth,
        ProposalKind::ClusterDeath,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProposalKind::Birth => "birth",
            ProposalKind::Death => "death",
            ProposalKind::Move => "move",
            ProposalKind::ClusterBirth => "cluster_birth",
            ProposalKind::ClusterDeath => "cluster_death",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub proposed: u64,
    pub accepted: u64,
}

impl Tally {
    pub fn rate(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }
}

#[derive(Debug, Clone)]
pub struct ChainState {
    cfg: PointConfiguration,
    stats: Vec<f64>,
    energy: f64,
    step: u64,
    tallies: [Tally; 5],
    rng: ChaCha8Rng,
}

impl ChainState {
    /// Starts a chain at a feasible configuration.
    pub fn new(
        model: &Model,
        params: &ModelParams,
        cfg: PointConfiguration,
        seed: u64,
        stream: u64,
    ) -> Result<Self, SamplerError> {
        model.check_params(params)?;
        let stats = model
            .window_statistics(params.alpha, &cfg, &Region::Whole)?
            .ok_or(ModelError::InfeasibleBase)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Ok(ChainState {
            energy: dot(&params.theta, &stats),
            cfg,
            stats,
            step: 0,
            tallies: [Tally::default(); 5],
            rng,
        })
    }

    pub fn config(&self) -> &PointConfiguration {
        &self.cfg
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn statistics(&self) -> &[f64] {
        &self.stats
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn tally(&self, kind: ProposalKind) -> Tally {
        self.tallies[kind as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub tallies: Vec<(ProposalKind, Tally)>,
    /// Window energy at every kept sample.
    pub energy_trace: Vec<f64>,
    pub steps: u64,
}

impl Diagnostics {
    pub fn acceptance_rate(&self, kind: ProposalKind) -> Option<f64> {
        self.tallies.iter().find(|(k, _)| *k == kind).and_then(|(_, t)| t.rate())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub samples: Vec<PointConfiguration>,
    pub params: ModelParams,
    pub config: SamplerConfig,
    pub diagnostics: Diagnostics,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// A finite-energy starting configuration: empty, or a near-equilateral
/// triangular lattice for the Delaunay model whose empty configuration has
/// no triangles to anchor births.
pub fn feasible_initial(
    model: &Model,
    params: &ModelParams,
    window: &TorusWindow,
    _seed: u64,
) -> Result<PointConfiguration, SamplerError> {
    model.check_params(params)?;
    let Model::Delaunay(spec) = model else {
        return Ok(PointConfiguration::empty(*window));
    };
    let l = window.side();
    let (r, a) = (spec.min_edge, params.alpha);
    let sqrt3 = libm::sqrt(3.0);
    let s0 = 0.5 * (r + a * sqrt3);
    let nc = (libm::round(l / s0) as usize).max(1);
    let sx = l / nc as f64;
    if !(sx > r && sx < a * sqrt3) {
        return Err(SamplerError::NoFeasibleLattice(format!("spacing {sx} outside ({r}, {})", a * sqrt3)));
    }
    // even row count keeps the staggered rows periodic
    let rows = l / (s0 * sqrt3 / 2.0);
    let nr = (2 * libm::round(rows / 2.0) as usize).max(2);
    let sy = l / nr as f64;
    let e = libm::sqrt(0.25 * sx * sx + sy * sy);
    let radius = (e * e / (2.0 * sy)).max(sx / sqrt3);
    if e <= r || radius >= a || radius >= l / 4.0 {
        return Err(SamplerError::NoFeasibleLattice(format!(
            "lattice edges ({sx}, {e}) and circumradius {radius} violate the hardcore or the torus size"
        )));
    }
    let mut pts = Vec::with_capacity(nc * nr);
    for j in 0..nr {
        for i in 0..nc {
            let shift = if j % 2 == 1 { 0.5 } else { 0.0 };
            pts.push(window.wrap(Point::new((i as f64 + shift + 0.25) * sx, (j as f64 + 0.5) * sy)));
        }
    }
    let cfg = PointConfiguration::from_points(*window, pts).map_err(ModelError::from)?;
    if model.window_statistics(a, &cfg, &Region::Whole)?.is_none() {
        return Err(SamplerError::NoFeasibleLattice("lattice has infinite energy".into()));
    }
    Ok(cfg)
}

fn cluster_size(model: &Model) -> usize {
    match model {
        Model::Knn(s) => s.k + 1,
        _ => 2,
    }
}

fn uniform_point(rng: &mut ChaCha8Rng, w: &TorusWindow) -> Point {
    let l = w.side();
    w.wrap(Point::new(rng.random::<f64>() * l, rng.random::<f64>() * l))
}

/// Area of the set of centres from which a cluster proposal could have
/// produced `pts`.
fn centre_area(pts: &[Point], rho: f64, w: &TorusWindow) -> f64 {
    let base = pts[0];
    let local: Vec<Point> = pts.iter().map(|p| w.nearest_image(&base, p)).collect();
    disk_intersection_area(&local, rho)
}

fn ln_cluster_density(m: usize, area: f64, rho: f64, w: &TorusWindow) -> f64 {
    ln_factorial(m) + libm::log(area) - libm::log(w.area()) - m as f64 * libm::log(PI * rho * rho)
}

/// Advances the chain by one proposal.
pub fn mcmc_step(
    state: &mut ChainState,
    model: &Model,
    params: &ModelParams,
    sc: &SamplerConfig,
) -> Result<(), SamplerError> {
    let w = *state.cfg.window();
    let u: f64 = state.rng.random();
    let ps = sc.probabilities();
    let mut acc = 0.0;
    let mut kind = ProposalKind::Move;
    for (k, p) in ProposalKind::ALL.iter().zip(ps) {
        acc += p;
        if u < acc {
            kind = *k;
            break;
        }
    }
    if u >= acc {
        // rounding in the cumulative sum: fall back to the last enabled kind
        kind = *ProposalKind::ALL.iter().zip(ps).rev().find(|(_, p)| *p > 0.0).map(|(k, _)| k).unwrap_or(&kind);
    }
    state.tallies[kind as usize].proposed += 1;
    state.step += 1;

    let n = state.cfg.len();
    let feas = Feasible::assume(model, params.alpha, &state.cfg);
    let ln_area = libm::log(w.area());
    let (removed, added, ln_q): (Vec<PointId>, Vec<Point>, Option<f64>) = match kind {
        ProposalKind::Birth => {
            let x = uniform_point(&mut state.rng, &w);
            let q = ln_area - libm::log((n + 1) as f64) + libm::log(sc.p_death / sc.p_birth);
            (Vec::new(), alloc::vec![x], Some(q))
        }
        ProposalKind::Death => {
            if n == 0 {
                (Vec::new(), Vec::new(), None)
            } else {
                let i = state.rng.random_range(0..n);
                let q = libm::log(n as f64) - ln_area + libm::log(sc.p_birth / sc.p_death);
                (alloc::vec![state.cfg.ids()[i]], Vec::new(), Some(q))
            }
        }
        ProposalKind::Move => {
            if n == 0 {
                (Vec::new(), Vec::new(), None)
            } else {
                let i = state.rng.random_range(0..n);
                let old = state.cfg.points()[i];
                let dx: f64 = StandardNormal.sample(&mut state.rng);
                let dy: f64 = StandardNormal.sample(&mut state.rng);
                let new = w.wrap(Point::new(old.x + sc.move_sigma * dx, old.y + sc.move_sigma * dy));
                (alloc::vec![state.cfg.ids()[i]], alloc::vec![new], Some(0.0))
            }
        }
        ProposalKind::ClusterBirth => {
            let m = cluster_size(model);
            let rho = sc.cluster_radius;
            let c = uniform_point(&mut state.rng, &w);
            let mut pts = Vec::with_capacity(m);
            for _ in 0..m {
                let rr = rho * libm::sqrt(state.rng.random::<f64>());
                let phi = 2.0 * PI * state.rng.random::<f64>();
                pts.push(w.wrap(Point::new(c.x + rr * libm::cos(phi), c.y + rr * libm::sin(phi))));
            }
            let area = centre_area(&pts, rho, &w);
            let view = View::new(&state.cfg, &[], &pts)?;
            let ids: Vec<PointId> = (0..m).map(|i| view.added_id(i)).collect();
            let count = self_selecting(&ids, |id| {
                let p = pts[(id.0 - ids[0].0) as usize];
                view.k_nearest(&p, m - 1).map(|nn| nn.into_iter().map(|nb| nb.id).collect())
            });
            if count == 0 || !(area > 0.0) {
                (Vec::new(), Vec::new(), None)
            } else {
                let q = libm::log(sc.p_cluster_death * count as f64 / (n + m) as f64)
                    - libm::log(sc.p_cluster_birth)
                    - ln_cluster_density(m, area, rho, &w);
                (Vec::new(), pts, Some(q))
            }
        }
        ProposalKind::ClusterDeath => {
            let m = cluster_size(model);
            if n < m {
                (Vec::new(), Vec::new(), None)
            } else {
                let i = state.rng.random_range(0..n);
                let y = state.cfg.points()[i];
                let mut set = alloc::vec![state.cfg.ids()[i]];
                let nn = state.cfg.k_nearest(&y, m - 1).map_err(ModelError::from)?;
                set.extend(nn.iter().map(|nb| nb.id));
                let cfg = &state.cfg;
                let count = self_selecting(&set, |id| {
                    let p = cfg.get(id)?;
                    cfg.k_nearest(&p, m - 1).ok().map(|nn| nn.into_iter().map(|nb| nb.id).collect())
                });
                let pts: Vec<Point> = set.iter().filter_map(|id| cfg.get(*id)).collect();
                let area = centre_area(&pts, sc.cluster_radius, &w);
                if count == 0 || !(area > 0.0) {
                    (Vec::new(), Vec::new(), None)
                } else {
                    let q = libm::log(sc.p_cluster_birth) + ln_cluster_density(m, area, sc.cluster_radius, &w)
                        - libm::log(sc.p_cluster_death * count as f64 / n as f64);
                    (set, Vec::new(), Some(q))
                }
            }
        }
    };
    let Some(ln_q) = ln_q else {
        return Ok(());
    };
    let Some(delta) = feas.delta(&removed, &added)? else {
        return Ok(());
    };
    let d_energy = dot(&params.theta, &delta);
    let log_ratio = ln_q - d_energy;
    let accept = sc.skip_rejection || log_ratio >= 0.0 || state.rng.random::<f64>() < libm::exp(log_ratio);
    if !accept {
        return Ok(());
    }
    let (next, _) = state.cfg.apply(&removed, &added).map_err(ModelError::from)?;
    state.cfg = next;
    for (s, d) in state.stats.iter_mut().zip(&delta) {
        *s += d;
    }
    state.energy = dot(&params.theta, &state.stats);
    state.tallies[kind as usize].accepted += 1;
    if sc.check_every_step {
        recheck(state, model, params)?;
    }
    Ok(())
}

/// Recomputes the window statistics from scratch, checks them against the
/// cache and resets the cache to the fresh values.
fn recheck(state: &mut ChainState, model: &Model, params: &ModelParams) -> Result<(), SamplerError> {
    let fresh = model
        .window_statistics(params.alpha, &state.cfg, &Region::Whole)?
        .ok_or(SamplerError::InfeasibleState(state.step))?;
    let e = dot(&params.theta, &fresh);
    let scale = e.abs().max(state.energy.abs()).max(1.0);
    if libm::fabs(e - state.energy) > RECHECK_TOLERANCE * scale {
        return Err(SamplerError::IncoherentCache {
            step: state.step,
            cached: state.energy,
            fresh: e,
        });
    }
    state.stats = fresh;
    state.energy = e;
    Ok(())
}

/// Runs `burn_in` steps from `initial`, then keeps `keep` samples spaced
/// `thin` steps apart.
pub fn run_chain_from(
    model: &Model,
    params: &ModelParams,
    initial: PointConfiguration,
    sc: &SamplerConfig,
) -> Result<SampleSet, SamplerError> {
    sc.validate(model, initial.window())?;
    let mut state = ChainState::new(model, params, initial, sc.seed, sc.stream)?;
    let mut samples = Vec::with_capacity(sc.keep);
    let mut trace = Vec::with_capacity(sc.keep);
    let total = sc.burn_in + sc.keep as u64 * sc.thin;
    while state.step < total {
        mcmc_step(&mut state, model, params, sc)?;
        if state.step % RECHECK_EVERY == 0 {
            recheck(&mut state, model, params)?;
        }
        if state.step > sc.burn_in && (state.step - sc.burn_in) % sc.thin == 0 {
            samples.push(state.cfg.clone());
            trace.push(state.energy);
        }
    }
    Ok(SampleSet {
        samples,
        params: params.clone(),
        config: sc.clone(),
        diagnostics: Diagnostics {
            tallies: ProposalKind::ALL.iter().map(|k| (*k, state.tally(*k))).collect(),
            energy_trace: trace,
            steps: state.step,
        },
    })
}

pub fn run_chain(
    model: &Model,
    params: &ModelParams,
    window: &TorusWindow,
    sc: &SamplerConfig,
) -> Result<SampleSet, SamplerError> {
    sc.validate(model, window)?;
    let initial = feasible_initial(model, params, window, sc.seed)?;
    run_chain_from(model, params, initial, sc)
}

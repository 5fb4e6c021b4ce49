//! Brute-force reference implementations: exhaustive loops, no spatial
//! index. They share only the exact predicates (and their tie-break rule)
//! and circumcircle arithmetic with the fast paths.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::config::{PointConfiguration, PointId, Region};
use crate::geometry::predicates::{incircle_perturbed, orient2d};
use crate::geometry::{Point, Triangle, Triangulation, TorusWindow};
use crate::models::{dot, ExtendedEnergy, Model, ModelError, ModelParams};

/// Size guard for the energy oracles.
pub const MAX_POINTS: usize = 200;
/// Size guard for the O(n^4) triangulation.
pub const MAX_DELAUNAY_POINTS: usize = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("{n} points exceed the oracle limit of {max}")]
    TooLarge { n: usize, max: usize },
    #[error("unknown point {0}")]
    UnknownId(PointId),
    #[error("the brute-force triangulation supports plane windows only")]
    PlaneOnly,
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn guard(n: usize, max: usize) -> Result<(), OracleError> {
    if n > max {
        Err(OracleError::TooLarge { n, max })
    } else {
        Ok(())
    }
}

fn dist(w: &TorusWindow, a: &Point, b: &Point) -> f64 {
    if !w.is_torus() {
        return libm::hypot(a.x - b.x, a.y - b.y);
    }
    let l = w.side();
    let mut best = f64::INFINITY;
    for ox in -1..=1 {
        for oy in -1..=1 {
            let dx = a.x - b.x + ox as f64 * l;
            let dy = a.y - b.y + oy as f64 * l;
            best = best.min(libm::hypot(dx, dy));
        }
    }
    best
}

fn region_distance(w: &TorusWindow, region: &Region, p: &Point) -> f64 {
    match *region {
        Region::Whole => 0.0,
        Region::Ball { center, radius } => (dist(w, &center, p) - radius).max(0.0),
        Region::Rect { min, max } => {
            let images: &[i32] = if w.is_torus() { &[-1, 0, 1] } else { &[0] };
            let mut best = f64::INFINITY;
            for &ox in images {
                for &oy in images {
                    let x = p.x + ox as f64 * w.side();
                    let y = p.y + oy as f64 * w.side();
                    let dx = if x < min.x { min.x - x } else if x > max.x { x - max.x } else { 0.0 };
                    let dy = if y < min.y { min.y - y } else if y > max.y { y - max.y } else { 0.0 };
                    best = best.min(libm::hypot(dx, dy));
                }
            }
            best
        }
    }
}

/// Every non-collinear triple whose open circumball (perturbed) is empty.
pub fn brute_delaunay(cfg: &PointConfiguration) -> Result<Triangulation, OracleError> {
    if cfg.window().is_torus() {
        return Err(OracleError::PlaneOnly);
    }
    guard(cfg.len(), MAX_DELAUNAY_POINTS)?;
    let pts = cfg.points();
    let ids = cfg.ids();
    let n = pts.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let o = orient2d(&pts[i], &pts[j], &pts[k]);
                if o == 0 {
                    continue;
                }
                let (a, b, c) = if o > 0 { (i, j, k) } else { (i, k, j) };
                let empty = (0..n).all(|l| {
                    l == a || l == b || l == c || !incircle_perturbed(&pts[a], &pts[b], &pts[c], &pts[l])
                });
                if empty {
                    let t = Triangle::from_points([ids[a], ids[b], ids[c]], [&pts[a], &pts[b], &pts[c]])
                        .map_err(ModelError::from)?;
                    out.push(t);
                }
            }
        }
    }
    Ok(Triangulation::from_triangles(out, cfg.fingerprint()))
}

/// `T_Λ(γ)` by exhaustive loops; `None` means infinite energy.
pub fn brute_window_statistics(
    model: &Model,
    alpha: f64,
    cfg: &PointConfiguration,
    region: &Region,
) -> Result<Option<Vec<f64>>, OracleError> {
    guard(cfg.len(), MAX_POINTS)?;
    model.check_alpha(alpha)?;
    let w = cfg.window();
    let pts = cfg.points();
    let n = pts.len();
    match model {
        Model::Poisson => Ok(Some(Vec::new())),
        Model::HardSphere(s) => {
            let mut t = vec![0.0; s.steps.len()];
            for i in 0..n {
                for j in i + 1..n {
                    if region_distance(w, region, &pts[i]) > 0.0 && region_distance(w, region, &pts[j]) > 0.0 {
                        continue;
                    }
                    let d = dist(w, &pts[i], &pts[j]);
                    if d <= 1.0 / alpha {
                        return Ok(None);
                    }
                    for (a, r) in s.steps.iter().enumerate() {
                        let lo = if a == 0 { 0.0 } else { s.steps[a - 1] };
                        if d > 1.0 / alpha + lo && d <= 1.0 / alpha + r {
                            t[a] += 1.0;
                        }
                    }
                }
            }
            Ok(Some(t))
        }
        Model::Knn(s) => {
            let mut total = 0.0;
            for i in 0..n {
                if region_distance(w, region, &pts[i]) >= alpha {
                    continue;
                }
                let mut others: Vec<(f64, PointId)> = Vec::new();
                let mut in_ball = 0;
                for j in 0..n {
                    let d = dist(w, &pts[i], &pts[j]);
                    if d <= alpha {
                        in_ball += 1;
                    }
                    if j != i {
                        others.push((d, cfg.ids()[j]));
                    }
                }
                if in_ball <= s.k {
                    return Ok(None);
                }
                others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                total += others[..s.k].iter().map(|(d, _)| s.phi.eval(*d)).sum::<f64>();
            }
            Ok(Some(vec![total]))
        }
        Model::Delaunay(s) => {
            let tri = brute_delaunay(cfg)?;
            let mut sum = 0.0;
            for t in tri.triangles() {
                let meets = match region {
                    Region::Whole => true,
                    _ => region_distance(w, region, &t.circumcenter) < t.radius,
                };
                if !meets {
                    continue;
                }
                if t.radius >= alpha || t.min_edge <= s.min_edge {
                    return Ok(None);
                }
                sum += t.perimeter;
            }
            Ok(Some(vec![sum]))
        }
    }
}

pub fn brute_window_energy(
    model: &Model,
    params: &ModelParams,
    cfg: &PointConfiguration,
    region: &Region,
) -> Result<ExtendedEnergy, OracleError> {
    model.check_params(params)?;
    let t = brute_window_statistics(model, params.alpha, cfg, region)?;
    Ok(match t {
        Some(t) => ExtendedEnergy::Finite(dot(&params.theta, &t)),
        None => ExtendedEnergy::Infinite,
    })
}

/// Whether deleting `id` leaves a finite-energy configuration.
pub fn brute_removable(model: &Model, alpha: f64, id: PointId, cfg: &PointConfiguration) -> Result<bool, OracleError> {
    guard(cfg.len(), MAX_POINTS)?;
    if cfg.get(id).is_none() {
        return Err(OracleError::UnknownId(id));
    }
    let rest = cfg.delete(id).map_err(ModelError::from)?;
    Ok(brute_window_statistics(model, alpha, &rest, &Region::Whole)?.is_some())
}

/// `H(γ + x) - H(γ)` over the whole window.
pub fn brute_local_energy(
    model: &Model,
    params: &ModelParams,
    x: &Point,
    cfg: &PointConfiguration,
) -> Result<ExtendedEnergy, OracleError> {
    guard(cfg.len() + 1, MAX_POINTS + 1)?;
    let base = brute_window_energy(model, params, cfg, &Region::Whole)?;
    let Some(h0) = base.value() else {
        return Err(ModelError::InfeasibleBase.into());
    };
    let (with_x, _) = cfg.insert(*x).map_err(ModelError::from)?;
    Ok(match brute_window_energy(model, params, &with_x, &Region::Whole)? {
        ExtendedEnergy::Finite(h1) => ExtendedEnergy::Finite(h1 - h0),
        ExtendedEnergy::Infinite => ExtendedEnergy::Infinite,
    })
}

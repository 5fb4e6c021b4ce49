use alloc::vec;
use alloc::vec::Vec;

use super::{DelaunaySpec, HardcoreThreshold, ModelError, View};
use crate::config::{PointConfiguration, PointId, Region};
use crate::geometry::predicates::incircle_perturbed;
use crate::geometry::{triangulate_points, GeometryError, Point, Triangle, Triangulation, TorusWindow};

/// Radius (in units of α) of the neighbourhood retriangulated around a
/// change. Triangles touching the change have circumradius below α when
/// both states are feasible, so their vertices lie within 2α.
const LOCAL_REACH: f64 = 2.5;

fn admissible(s: &DelaunaySpec, alpha: f64, t: &Triangle) -> bool {
    t.radius < alpha && t.min_edge > s.min_edge
}

fn meets(region: &Region, w: &TorusWindow, t: &Triangle) -> bool {
    match region {
        Region::Whole => true,
        _ => region.distance_to(&t.circumcenter, w) < t.radius,
    }
}

/// Triangulates, mapping a too-sparse torus to "infinite energy" whenever a
/// circumradius of L/4 already violates `R < α`.
fn triangulate(alpha: f64, cfg: &PointConfiguration) -> Result<Option<Triangulation>, ModelError> {
    match cfg.triangulate() {
        Ok(t) => Ok(Some(t)),
        Err(GeometryError::TorusTooSparse) if alpha <= 0.25 * cfg.window().side() => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub(super) fn window_statistics(
    s: &DelaunaySpec,
    alpha: f64,
    cfg: &PointConfiguration,
    region: &Region,
) -> Result<Option<Vec<f64>>, ModelError> {
    let Some(tri) = triangulate(alpha, cfg)? else {
        return Ok(None);
    };
    let w = cfg.window();
    let mut sum = 0.0;
    for t in tri.triangles().iter().filter(|t| meets(region, w, t)) {
        if !admissible(s, alpha, t) {
            return Ok(None);
        }
        sum += t.perimeter;
    }
    Ok(Some(vec![sum]))
}

pub(super) fn delta(s: &DelaunaySpec, alpha: f64, view: &View<'_>) -> Result<Option<Vec<f64>>, ModelError> {
    if view.cfg.window().is_torus() {
        if let Some(r) = local_delta(s, alpha, view)? {
            return Ok(r);
        }
    }
    let cfg = view.cfg;
    let base = window_statistics(s, alpha, cfg, &Region::Whole)?.ok_or(ModelError::InfeasibleBase)?;
    let ids: Vec<PointId> = view.removed.iter().map(|&i| cfg.ids()[i]).collect();
    let (next, _) = cfg.apply(&ids, view.added)?;
    Ok(window_statistics(s, alpha, &next, &Region::Whole)?.map(|t| vec![t[0] - base[0]]))
}

/// Perimeter change from triangulating only the neighbourhood of the
/// change, in unwrapped coordinates around the first changed point.
/// Returns `None` when the neighbourhood does not fit in half the torus.
fn local_delta(s: &DelaunaySpec, alpha: f64, view: &View<'_>) -> Result<Option<Option<Vec<f64>>>, ModelError> {
    let cfg = view.cfg;
    let w = cfg.window();
    let changed = view.changed_points();
    let Some(&c0) = changed.first() else {
        return Ok(Some(Some(vec![0.0])));
    };
    let rho = LOCAL_REACH * alpha;
    if changed.iter().any(|c| w.distance(&c0, c) + rho >= 0.5 * w.side()) {
        return Ok(None);
    }
    let mut idx = Vec::new();
    for c in &changed {
        cfg.for_each_within(c, rho, |i, _, _| idx.push(i));
    }
    idx.sort_unstable();
    idx.dedup();
    let local = |p: &Point| w.nearest_image(&c0, p);
    let before: Vec<Point> = idx.iter().map(|&i| local(&cfg.points()[i])).collect();
    let gone: Vec<bool> = idx.iter().map(|&i| view.is_removed(i)).collect();
    let added: Vec<Point> = view.added.iter().map(local).collect();
    let removed: Vec<Point> = view.removed_points().map(|p| local(&p)).collect();
    let mut after: Vec<Point> = before
        .iter()
        .zip(&gone)
        .filter(|(_, g)| !**g)
        .map(|(p, _)| *p)
        .collect();
    let kept = after.len();
    after.extend(added.iter().copied());

    let dummy = [PointId(0); 3];
    let mut old = 0.0;
    for [a, b, c] in triangulate_points(&before) {
        let (pa, pb, pc) = (&before[a], &before[b], &before[c]);
        let hit = gone[a] || gone[b] || gone[c] || added.iter().any(|q| incircle_perturbed(pa, pb, pc, q));
        if hit {
            let t = Triangle::from_points(dummy, [pa, pb, pc])?;
            if !admissible(s, alpha, &t) {
                return Err(ModelError::InfeasibleBase);
            }
            old += t.perimeter;
        }
    }
    let mut new = 0.0;
    for [a, b, c] in triangulate_points(&after) {
        let (pa, pb, pc) = (&after[a], &after[b], &after[c]);
        let hit = a >= kept || b >= kept || c >= kept || removed.iter().any(|q| incircle_perturbed(pa, pb, pc, q));
        if hit {
            let t = Triangle::from_points(dummy, [pa, pb, pc])?;
            if !admissible(s, alpha, &t) {
                return Ok(Some(None));
            }
            new += t.perimeter;
        }
    }
    Ok(Some(Some(vec![new - old])))
}

pub(super) fn hardcore_statistic(
    s: &DelaunaySpec,
    cfg: &PointConfiguration,
    region: &Region,
) -> Result<HardcoreThreshold, ModelError> {
    if cfg.len() < 3 {
        return Err(ModelError::Undefined("fewer than three points"));
    }
    let tri = cfg.triangulate()?;
    let w = cfg.window();
    let mut best = f64::NAN;
    for t in tri.triangles().iter().filter(|t| meets(region, w, t)) {
        if t.min_edge <= s.min_edge {
            return Err(ModelError::Undefined("an edge is not longer than min_edge"));
        }
        best = best.max(t.radius);
    }
    if best.is_nan() {
        return Err(ModelError::Undefined("no triangle meets the region"));
    }
    Ok(HardcoreThreshold {
        value: best,
        attained: false,
    })
}

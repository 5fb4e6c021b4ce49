use alloc::vec;
use alloc::vec::Vec;

use super::{HardcoreThreshold, KnnSpec, ModelError, View};
use crate::config::{PointConfiguration, Region};
use crate::geometry::Point;

/// Contribution of a point `x` of the (virtual) configuration: infinite
/// unless its closed α-ball holds at least `k + 1` points, itself included.
fn term(s: &KnnSpec, alpha: f64, view: &View<'_>, x: &Point) -> Option<f64> {
    if view.count_in_ball(x, alpha) <= s.k {
        return None;
    }
    let nn = view.k_nearest(x, s.k)?;
    Some(nn.iter().map(|n| s.phi.eval(n.distance)).sum())
}

pub(super) fn window_statistics(
    s: &KnnSpec,
    alpha: f64,
    cfg: &PointConfiguration,
    region: &Region,
) -> Option<Vec<f64>> {
    let view = View {
        cfg,
        removed: Vec::new(),
        added: &[],
    };
    let w = cfg.window();
    let mut total = 0.0;
    for p in cfg.points() {
        if region.distance_to(p, w) < alpha {
            total += term(s, alpha, &view, p)?;
        }
    }
    Some(vec![total])
}

pub(super) fn delta(s: &KnnSpec, alpha: f64, view: &View<'_>) -> Result<Option<Vec<f64>>, ModelError> {
    let cfg = view.cfg;
    let base = View {
        cfg,
        removed: Vec::new(),
        added: &[],
    };
    let mut affected = Vec::new();
    for c in view.changed_points() {
        cfg.for_each_within(&c, alpha, |i, _, _| affected.push(i));
    }
    affected.sort_unstable();
    affected.dedup();
    let mut old = 0.0;
    let mut new = 0.0;
    for &i in &affected {
        let p = &cfg.points()[i];
        old += term(s, alpha, &base, p).ok_or(ModelError::InfeasibleBase)?;
        if !view.is_removed(i) {
            match term(s, alpha, view, p) {
                Some(v) => new += v,
                None => return Ok(None),
            }
        }
    }
    for a in view.added {
        match term(s, alpha, view, a) {
            Some(v) => new += v,
            None => return Ok(None),
        }
    }
    Ok(Some(vec![new - old]))
}

/// Smallest α making every point within α of the region see `k`
/// neighbours inside its closed α-ball. Raising α can pull more points into
/// the dilated region, so the candidate is raised until it is stable.
pub(super) fn hardcore_statistic(
    s: &KnnSpec,
    cfg: &PointConfiguration,
    region: &Region,
) -> Result<HardcoreThreshold, ModelError> {
    if cfg.len() <= s.k {
        return Err(ModelError::Undefined("at most k points"));
    }
    let w = cfg.window();
    let mut reach = Vec::with_capacity(cfg.len());
    for p in cfg.points() {
        let kth = cfg.k_nearest(p, s.k)?[s.k - 1].distance;
        reach.push((region.distance_to(p, w), kth));
    }
    let mut a = reach
        .iter()
        .filter(|(d, _)| *d == 0.0)
        .map(|&(_, k)| k)
        .fold(f64::NAN, f64::max);
    if a.is_nan() {
        return Err(ModelError::Undefined("no point in the region"));
    }
    loop {
        let mut raised = false;
        for &(d, k) in &reach {
            if d < a && k > a {
                a = k;
                raised = true;
            }
        }
        if !raised {
            break;
        }
    }
    Ok(HardcoreThreshold {
        value: a,
        attained: true,
    })
}

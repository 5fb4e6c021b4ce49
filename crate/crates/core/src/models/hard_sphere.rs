use alloc::vec::Vec;

use super::{zeros, HardSphereSpec, HardcoreThreshold, ModelError, View};
use crate::config::{PointConfiguration, Region};

enum Pair {
    Hardcore,
    Annulus(usize),
    Outside,
}

fn classify(s: &HardSphereSpec, alpha: f64, d: f64) -> Pair {
    let h = 1.0 / alpha;
    if d <= h {
        return Pair::Hardcore;
    }
    match s.steps.iter().position(|r| d <= h + r) {
        Some(i) => Pair::Annulus(i),
        None => Pair::Outside,
    }
}

fn range(s: &HardSphereSpec, alpha: f64) -> f64 {
    1.0 / alpha + s.steps[s.steps.len() - 1]
}

pub(super) fn window_statistics(
    s: &HardSphereSpec,
    alpha: f64,
    cfg: &PointConfiguration,
    region: &Region,
) -> Option<Vec<f64>> {
    let w = cfg.window();
    let reach = range(s, alpha);
    let inside: Vec<bool> = cfg.points().iter().map(|p| region.contains(p, w)).collect();
    let mut t = zeros(s.steps.len());
    let mut hard = false;
    for (i, p) in cfg.points().iter().enumerate() {
        cfg.for_each_within(p, reach, |j, _, d| {
            if j > i && (inside[i] || inside[j]) {
                match classify(s, alpha, d) {
                    Pair::Hardcore => hard = true,
                    Pair::Annulus(a) => t[a] += 1.0,
                    Pair::Outside => {}
                }
            }
        });
        if hard {
            return None;
        }
    }
    Some(t)
}

pub(super) fn delta(s: &HardSphereSpec, alpha: f64, view: &View<'_>) -> Option<Vec<f64>> {
    let cfg = view.cfg;
    let w = cfg.window();
    let reach = range(s, alpha);
    let mut t = zeros(s.steps.len());
    // pairs of γ touching a deleted point, each counted once
    for &i in &view.removed {
        cfg.for_each_within(&cfg.points()[i], reach, |j, _, d| {
            if j != i && !(view.is_removed(j) && j < i) {
                if let Pair::Annulus(a) = classify(s, alpha, d) {
                    t[a] -= 1.0;
                }
            }
        });
    }
    for (ai, a) in view.added.iter().enumerate() {
        let mut hard = false;
        cfg.for_each_within(a, reach, |j, _, d| {
            if !view.is_removed(j) {
                match classify(s, alpha, d) {
                    Pair::Hardcore => hard = true,
                    Pair::Annulus(k) => t[k] += 1.0,
                    Pair::Outside => {}
                }
            }
        });
        for b in &view.added[..ai] {
            match classify(s, alpha, w.distance(a, b)) {
                Pair::Hardcore => hard = true,
                Pair::Annulus(k) => t[k] += 1.0,
                Pair::Outside => {}
            }
        }
        if hard {
            return None;
        }
    }
    Some(t)
}

pub(super) fn hardcore_statistic(cfg: &PointConfiguration, region: &Region) -> Result<HardcoreThreshold, ModelError> {
    if cfg.len() < 2 {
        return Err(ModelError::Undefined("fewer than two points"));
    }
    let w = cfg.window();
    let mut dmin = f64::INFINITY;
    for p in cfg.points().iter().filter(|p| region.contains(p, w)) {
        dmin = dmin.min(cfg.k_nearest(p, 1)?[0].distance);
    }
    if dmin.is_infinite() {
        return Err(ModelError::Undefined("no point in the region"));
    }
    Ok(HardcoreThreshold {
        value: 1.0 / dmin,
        attained: false,
    })
}

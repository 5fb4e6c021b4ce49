//! Finite point configurations in a window, with a spatial index.

mod grid;

use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::geometry::{GeometryError, Point, TorusWindow, Triangulation};
use grid::Grid;

/// Stable identifier of a point within a configuration and its edits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PointId(pub u32);

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("point {0} lies outside the window")]
    OutsideWindow(Point),
    #[error("point {0} coincides with an existing point")]
    Duplicate(Point),
    #[error("unknown point {0}")]
    UnknownId(PointId),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: PointId,
    pub distance: f64,
}

/// A bounded subset of the window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Whole,
    /// Closed axis-aligned rectangle in window coordinates.
    Rect { min: Point, max: Point },
    /// Closed ball in the window metric.
    Ball { center: Point, radius: f64 },
}

impl Region {
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Region::Rect {
            min: Point::new(x0, y0),
            max: Point::new(x1, y1),
        }
    }

    pub fn contains(&self, p: &Point, window: &TorusWindow) -> bool {
        match self {
            Region::Whole => true,
            Region::Rect { min, max } => min.x <= p.x && p.x <= max.x && min.y <= p.y && p.y <= max.y,
            Region::Ball { center, radius } => window.distance(center, p) <= *radius,
        }
    }

    /// Distance from `p` to the region in the window metric; zero inside.
    pub fn distance_to(&self, p: &Point, window: &TorusWindow) -> f64 {
        match self {
            Region::Whole => 0.0,
            Region::Ball { center, radius } => (window.distance(center, p) - radius).max(0.0),
            Region::Rect { min, max } => {
                let rect_dist = |q: Point| {
                    let dx = (min.x - q.x).max(0.0).max(q.x - max.x);
                    let dy = (min.y - q.y).max(0.0).max(q.y - max.y);
                    libm::hypot(dx, dy)
                };
                if !window.is_torus() {
                    return rect_dist(*p);
                }
                let l = window.side();
                let mut best = f64::INFINITY;
                for ox in -1..=1 {
                    for oy in -1..=1 {
                        let q = Point::new(p.x + ox as f64 * l, p.y + oy as f64 * l);
                        best = best.min(rect_dist(q));
                    }
                }
                best
            }
        }
    }

    pub fn area(&self, window: &TorusWindow) -> f64 {
        match self {
            Region::Whole => window.area(),
            Region::Rect { min, max } => (max.x - min.x).max(0.0) * (max.y - min.y).max(0.0),
            Region::Ball { radius, .. } => core::f64::consts::PI * radius * radius,
        }
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounds(&self, window: &TorusWindow) -> (Point, Point) {
        match self {
            Region::Whole => (Point::new(0.0, 0.0), Point::new(window.side(), window.side())),
            Region::Rect { min, max } => (*min, *max),
            Region::Ball { center, radius } => (
                Point::new(center.x - radius, center.y - radius),
                Point::new(center.x + radius, center.y + radius),
            ),
        }
    }
}

/// A finite simple point configuration. Values are immutable: every edit
/// returns a new configuration, so rejected proposals just drop it.
/// Ids are kept in increasing order.
#[derive(Debug, Clone)]
pub struct PointConfiguration {
    window: TorusWindow,
    ids: Vec<PointId>,
    points: Vec<Point>,
    next_id: u32,
    grid: Grid,
}

impl PartialEq for PointConfiguration {
    fn eq(&self, other: &Self) -> bool {
        self.window == other.window && self.ids == other.ids && self.points == other.points
    }
}

impl PointConfiguration {
    pub fn empty(window: TorusWindow) -> Self {
        Self::assemble(window, Vec::new(), Vec::new(), 0)
    }

    /// Builds a configuration with ids `0..n` in input order.
    pub fn from_points(
        window: TorusWindow,
        points: impl IntoIterator<Item = Point>,
    ) -> Result<Self, ConfigError> {
        let points: Vec<Point> = points.into_iter().collect();
        if let Some(p) = points.iter().find(|p| !window.contains(p)) {
            return Err(ConfigError::OutsideWindow(*p));
        }
        let mut sorted = points.clone();
        sorted.sort_by(|a, b| a.lex_cmp(b));
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(ConfigError::Duplicate(w[0]));
        }
        let n = points.len() as u32;
        let ids = (0..n).map(PointId).collect();
        Ok(Self::assemble(window, ids, points, n))
    }

    fn assemble(window: TorusWindow, ids: Vec<PointId>, points: Vec<Point>, next_id: u32) -> Self {
        let grid = Grid::build(&window, &points);
        PointConfiguration {
            window,
            ids,
            points,
            next_id,
            grid,
        }
    }

    pub fn window(&self) -> &TorusWindow {
        &self.window
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn ids(&self) -> &[PointId] {
        &self.ids
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// The id the next inserted point will receive.
    pub fn next_id(&self) -> PointId {
        PointId(self.next_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (PointId, Point)> + '_ {
        self.ids.iter().copied().zip(self.points.iter().copied())
    }

    pub fn index_of(&self, id: PointId) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    pub fn get(&self, id: PointId) -> Option<Point> {
        self.index_of(id).map(|i| self.points[i])
    }

    pub fn contains_point(&self, p: &Point) -> bool {
        let mut found = false;
        self.for_each_within(p, 0.0, |_, _, _| found = true);
        found
    }

    /// Returns a new configuration with `p` added, and the new point's id.
    pub fn insert(&self, p: Point) -> Result<(Self, PointId), ConfigError> {
        let (cfg, ids) = self.apply(&[], &[p])?;
        Ok((cfg, ids[0]))
    }

    pub fn delete(&self, id: PointId) -> Result<Self, ConfigError> {
        Ok(self.apply(&[id], &[])?.0)
    }

    /// Removes `removed`, then adds `added` in order. New ids are
    /// `next_id, next_id + 1, ...`.
    pub fn apply(&self, removed: &[PointId], added: &[Point]) -> Result<(Self, Vec<PointId>), ConfigError> {
        let mut drop = Vec::with_capacity(removed.len());
        for id in removed {
            drop.push(self.index_of(*id).ok_or(ConfigError::UnknownId(*id))?);
        }
        for (i, p) in added.iter().enumerate() {
            if !self.window.contains(p) {
                return Err(ConfigError::OutsideWindow(*p));
            }
            let clash = self
                .points
                .iter()
                .enumerate()
                .any(|(j, q)| q == p && !drop.contains(&j))
                || added[..i].contains(p);
            if clash {
                return Err(ConfigError::Duplicate(*p));
            }
        }
        let mut ids = Vec::with_capacity(self.len() + added.len());
        let mut points = Vec::with_capacity(self.len() + added.len());
        for (j, (id, p)) in self.iter().enumerate() {
            if !drop.contains(&j) {
                ids.push(id);
                points.push(p);
            }
        }
        let mut new_ids = Vec::with_capacity(added.len());
        let mut next = self.next_id;
        for p in added {
            ids.push(PointId(next));
            points.push(*p);
            new_ids.push(PointId(next));
            next += 1;
        }
        Ok((Self::assemble(self.window, ids, points, next), new_ids))
    }

    /// Points inside `region`, keeping their ids.
    pub fn restrict(&self, region: &Region) -> Self {
        self.partition(region).0
    }

    /// Splits into the points inside and outside `region`.
    pub fn partition(&self, region: &Region) -> (Self, Self) {
        let (mut ii, mut ip, mut oi, mut op) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (id, p) in self.iter() {
            if region.contains(&p, &self.window) {
                ii.push(id);
                ip.push(p);
            } else {
                oi.push(id);
                op.push(p);
            }
        }
        (
            Self::assemble(self.window, ii, ip, self.next_id),
            Self::assemble(self.window, oi, op, self.next_id),
        )
    }

    /// Calls `f(index, point, distance)` for every point within the closed
    /// ball of radius `radius` around `center`.
    pub fn for_each_within(&self, center: &Point, radius: f64, mut f: impl FnMut(usize, &Point, f64)) {
        self.grid.for_each_candidate(&self.window, center, radius, |i| {
            let d = self.window.distance(center, &self.points[i]);
            if d <= radius {
                f(i, &self.points[i], d);
            }
        });
    }

    /// Number of points in the closed ball, including a point at the center.
    pub fn count_in_ball(&self, center: &Point, radius: f64) -> usize {
        let mut n = 0;
        self.for_each_within(center, radius, |_, _, _| n += 1);
        n
    }

    /// The `k` nearest points to `x`, ordered by (distance, id). A point
    /// located exactly at `x` is never its own neighbour.
    pub fn k_nearest(&self, x: &Point, k: usize) -> Result<Vec<Neighbor>, GeometryError> {
        let available = self.len() - usize::from(self.contains_point(x));
        if available < k {
            return Err(GeometryError::NotEnoughPoints {
                requested: k,
                available,
            });
        }
        if k == 0 {
            return Ok(Vec::new());
        }
        let l = self.window.side();
        let mut r = 1.5 * libm::sqrt(k as f64 * l * l / (self.len() as f64 * core::f64::consts::PI));
        loop {
            let mut found = Vec::new();
            self.for_each_within(x, r, |i, _, d| {
                if d > 0.0 {
                    found.push(Neighbor {
                        id: self.ids[i],
                        distance: d,
                    });
                }
            });
            if found.len() >= k {
                found.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.id.cmp(&b.id)));
                found.truncate(k);
                return Ok(found);
            }
            r *= 2.0;
        }
    }

    /// Delaunay triangulation (periodic on the torus).
    pub fn triangulate(&self) -> Result<Triangulation, GeometryError> {
        Triangulation::build(&self.window, &self.ids, &self.points, self.fingerprint())
    }

    /// FNV-1a hash of the window, ids and coordinates.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |v: u64| {
            for b in v.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        eat(self.window.side().to_bits());
        eat(self.window.is_torus() as u64);
        for (id, p) in self.iter() {
            eat(id.0 as u64);
            eat(p.x.to_bits());
            eat(p.y.to_bits());
        }
        h
    }
}

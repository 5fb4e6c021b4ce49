use alloc::vec::Vec;

use crate::config::Region;
use crate::geometry::{Point, TorusWindow};

/// Default dummy-point density per unit area.
pub const DEFAULT_DENSITY: f64 = 400.0;

/// Centred regular grid of dummy points with about `density` points per
/// unit area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub density: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { density: DEFAULT_DENSITY }
    }
}

/// Equally weighted dummy points; the integral of `f` over the region is
/// approximated by the mean of `f` over the points times `area`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub points: Vec<Point>,
    pub area: f64,
}

impl Quadrature {
    /// Weight carried by each dummy point.
    pub fn weight(&self) -> f64 {
        if self.points.is_empty() {
            0.0
        } else {
            self.area / self.points.len() as f64
        }
    }

    /// Turns a sum over the dummy points into an integral. Dividing before
    /// scaling keeps the integral of a constant exact.
    pub fn scale(&self, sum: f64) -> f64 {
        if self.points.is_empty() {
            0.0
        } else {
            sum / self.points.len() as f64 * self.area
        }
    }

    pub fn integrate(&self, f: impl FnMut(&Point) -> f64) -> f64 {
        self.scale(self.points.iter().map(f).sum())
    }
}

impl QuadratureSpec {
    pub fn is_valid(&self) -> bool {
        self.density >= 1.0 && self.density.is_finite()
    }

    pub fn grid(&self, region: &Region, window: &TorusWindow) -> Quadrature {
        let (lo, hi) = region.bounds(window);
        let (w, h) = (hi.x - lo.x, hi.y - lo.y);
        if !(w > 0.0 && h > 0.0) {
            return Quadrature { points: Vec::new(), area: 0.0 };
        }
        let s = libm::sqrt(self.density);
        let nx = (libm::round(w * s) as usize).max(1);
        let ny = (libm::round(h * s) as usize).max(1);
        let (dx, dy) = (w / nx as f64, h / ny as f64);
        let mut points = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let p = window.wrap(Point::new(lo.x + (i as f64 + 0.5) * dx, lo.y + (j as f64 + 0.5) * dy));
                if region.contains(&p, window) {
                    points.push(p);
                }
            }
        }
        let area = match region {
            Region::Whole | Region::Rect { .. } => region.area(window),
            Region::Ball { .. } => points.len() as f64 * dx * dy,
        };
        Quadrature { points, area }
    }
}

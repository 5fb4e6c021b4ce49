//! Planar and periodic geometry: points, the window metric, circumcircles,
//! robust predicates and Delaunay triangulation.

mod delaunay;
pub mod predicates;

pub use delaunay::{triangulate_points, Triangle, Triangulation};

use core::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("points are collinear")]
    Collinear,
    #[error("window side must be positive and finite, got {0}")]
    InvalidWindow(f64),
    #[error("torus too sparse: a circumradius reaches a quarter of the side")]
    TorusTooSparse,
    #[error("requested {requested} neighbours but only {available} are available")]
    NotEnoughPoints { requested: usize, available: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Euclidean distance, ignoring any periodicity.
    pub fn dist(&self, other: &Point) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }

    /// Lexicographic (x, y) order. This is also the symbolic-perturbation priority.
    pub fn lex_cmp(&self, other: &Point) -> core::cmp::Ordering {
        self.x
            .total_cmp(&other.x)
            .then_with(|| self.y.total_cmp(&other.y))
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Torus,
    Plane,
}

/// The square observation window `[0, L)^2`, either periodic or a plain
/// subset of the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusWindow {
    side: f64,
    boundary: Boundary,
}

impl TorusWindow {
    pub fn new(side: f64, boundary: Boundary) -> Result<Self, GeometryError> {
        if !(side.is_finite() && side > 0.0) {
            return Err(GeometryError::InvalidWindow(side));
        }
        Ok(TorusWindow { side, boundary })
    }

    pub fn torus(side: f64) -> Result<Self, GeometryError> {
        Self::new(side, Boundary::Torus)
    }

    pub fn plane(side: f64) -> Result<Self, GeometryError> {
        Self::new(side, Boundary::Plane)
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_torus(&self) -> bool {
        self.boundary == Boundary::Torus
    }

    pub fn area(&self) -> f64 {
        self.side * self.side
    }

    /// Torus windows are half open; plane windows are closed.
    pub fn contains(&self, p: &Point) -> bool {
        let ok = |v: f64| match self.boundary {
            Boundary::Torus => (0.0..self.side).contains(&v),
            Boundary::Plane => (0.0..=self.side).contains(&v),
        };
        ok(p.x) && ok(p.y)
    }

    /// Maps a point back into `[0, L)^2` on the torus; identity on the plane.
    pub fn wrap(&self, p: Point) -> Point {
        if !self.is_torus() {
            return p;
        }
        let w = |v: f64| {
            let r = v - self.side * libm::floor(v / self.side);
            // rounds up to L for tiny negative inputs
            if r >= self.side {
                0.0
            } else {
                r
            }
        };
        Point::new(w(p.x), w(p.y))
    }

    /// Displacement `b - a`, using the minimum image on the torus.
    pub fn displacement(&self, a: &Point, b: &Point) -> (f64, f64) {
        let dx = b.x - a.x;
        let dy = b.y - a.y;
        if self.is_torus() {
            (self.min_image(dx), self.min_image(dy))
        } else {
            (dx, dy)
        }
    }

    fn min_image(&self, d: f64) -> f64 {
        let l = self.side;
        let mut d = d - l * libm::round(d / l);
        if d > 0.5 * l {
            d -= l;
        } else if d < -0.5 * l {
            d += l;
        }
        d
    }

    /// The window metric: Euclidean on the plane, minimum image on the torus.
    pub fn distance(&self, a: &Point, b: &Point) -> f64 {
        let (dx, dy) = self.displacement(a, b);
        libm::hypot(dx, dy)
    }

    /// The copy of `b` nearest to `a`, in unwrapped coordinates.
    pub fn nearest_image(&self, a: &Point, b: &Point) -> Point {
        let (dx, dy) = self.displacement(a, b);
        Point::new(a.x + dx, a.y + dy)
    }
}

/// Periodic distance between two points in `[0, L)^2`.
pub fn torus_distance(a: &Point, b: &Point, side: f64) -> f64 {
    let wx = libm::fabs(a.x - b.x);
    let wy = libm::fabs(a.y - b.y);
    let dx = wx.min(side - wx);
    let dy = wy.min(side - wy);
    libm::hypot(dx, dy)
}

/// Center and radius of the circle through three non-collinear points.
pub fn circumcircle(a: &Point, b: &Point, c: &Point) -> Result<(Point, f64), GeometryError> {
    if predicates::orient2d(a, b, c) == 0 {
        return Err(GeometryError::Collinear);
    }
    let bx = b.x - a.x;
    let by = b.y - a.y;
    let cx = c.x - a.x;
    let cy = c.y - a.y;
    let d = 2.0 * (bx * cy - by * cx);
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    Ok((Point::new(a.x + ux, a.y + uy), libm::hypot(ux, uy)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_distance_wraps() {
        let d = torus_distance(&Point::new(0.5, 0.0), &Point::new(9.5, 0.0), 10.0);
        assert!((d - 1.0).abs() < 1e-12);
        let d = torus_distance(&Point::new(0.0, 0.0), &Point::new(3.0, 4.0), 10.0);
        assert!((d - 5.0).abs() < 1e-12);
    }

    #[test]
    fn window_distance_matches_free_function() {
        let w = TorusWindow::torus(10.0).unwrap();
        let a = Point::new(0.2, 9.9);
        let b = Point::new(9.7, 0.3);
        assert!((w.distance(&a, &b) - torus_distance(&a, &b, 10.0)).abs() < 1e-12);
        let p = TorusWindow::plane(10.0).unwrap();
        assert!((p.distance(&a, &b) - a.dist(&b)).abs() < 1e-12);
    }

    #[test]
    fn wrap_stays_half_open() {
        let w = TorusWindow::torus(10.0).unwrap();
        let p = w.wrap(Point::new(-1e-300, 10.0));
        assert!(w.contains(&p));
        assert_eq!(w.wrap(Point::new(12.5, -0.5)), Point::new(2.5, 9.5));
    }

    #[test]
    fn invalid_window() {
        assert!(TorusWindow::torus(0.0).is_err());
        assert!(TorusWindow::torus(f64::NAN).is_err());
    }

    #[test]
    fn circumcircle_examples() {
        let (c, r) = circumcircle(
            &Point::new(0.0, 0.0),
            &Point::new(1.0, 0.0),
            &Point::new(0.0, 1.0),
        )
        .unwrap();
        assert!((c.x - 0.5).abs() < 1e-12 && (c.y - 0.5).abs() < 1e-12);
        assert!((r - 0.70711).abs() < 1e-5);
        let h = libm::sqrt(3.0) / 2.0;
        let (_, r) = circumcircle(
            &Point::new(0.0, 0.0),
            &Point::new(1.0, 0.0),
            &Point::new(0.5, h),
        )
        .unwrap();
        assert!((r - 0.57735).abs() < 1e-5);
        assert_eq!(
            circumcircle(
                &Point::new(0.0, 0.0),
                &Point::new(1.0, 1.0),
                &Point::new(2.0, 2.0)
            ),
            Err(GeometryError::Collinear)
        );
    }
}

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{Point, TorusWindow};

/// Uniform bucket grid over the window, stored in compressed rows.
#[derive(Debug, Clone)]
pub(crate) struct Grid {
    n: usize,
    cell: f64,
    start: Vec<u32>,
    items: Vec<u32>,
}

impl Grid {
    pub(crate) fn build(window: &TorusWindow, points: &[Point]) -> Self {
        let l = window.side();
        // about two points per cell
        let target = libm::sqrt(2.0 * l * l / points.len().max(1) as f64);
        let n = (libm::floor(l / target) as usize).clamp(1, 256);
        let cell = l / n as f64;
        let mut grid = Grid {
            n,
            cell,
            start: vec![0; n * n + 1],
            items: vec![0; points.len()],
        };
        let cells: Vec<usize> = points.iter().map(|p| grid.cell_of(p)).collect();
        for &c in &cells {
            grid.start[c + 1] += 1;
        }
        for i in 0..n * n {
            grid.start[i + 1] += grid.start[i];
        }
        let mut fill = grid.start.clone();
        for (i, &c) in cells.iter().enumerate() {
            grid.items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        grid
    }

    fn coord(&self, v: f64) -> usize {
        let c = libm::floor(v / self.cell);
        if c < 0.0 {
            0
        } else {
            (c as usize).min(self.n - 1)
        }
    }

    fn cell_of(&self, p: &Point) -> usize {
        self.coord(p.y) * self.n + self.coord(p.x)
    }

    /// Calls `f(index)` for every stored point in cells that may lie within
    /// `radius` of `center`. The caller filters by exact distance.
    pub(crate) fn for_each_candidate(
        &self,
        window: &TorusWindow,
        center: &Point,
        radius: f64,
        mut f: impl FnMut(usize),
    ) {
        let n = self.n as isize;
        let reach = radius / self.cell;
        let all = !reach.is_finite() || reach >= n as f64;
        let mut visit = |cx: isize, cy: isize| {
            let c = cy as usize * self.n + cx as usize;
            for &i in &self.items[self.start[c] as usize..self.start[c + 1] as usize] {
                f(i as usize);
            }
        };
        if all {
            for cy in 0..n {
                for cx in 0..n {
                    visit(cx, cy);
                }
            }
            return;
        }
        let r = libm::ceil(reach) as isize;
        if window.is_torus() {
            let c = window.wrap(*center);
            let (x0, y0) = (self.coord(c.x) as isize, self.coord(c.y) as isize);
            if 2 * r + 1 >= n {
                for cy in 0..n {
                    for cx in 0..n {
                        visit(cx, cy);
                    }
                }
                return;
            }
            for dy in -r..=r {
                for dx in -r..=r {
                    visit((x0 + dx).rem_euclid(n), (y0 + dy).rem_euclid(n));
                }
            }
        } else {
            let lo = |v: f64| libm::floor((v - radius) / self.cell).max(0.0).min((n - 1) as f64) as isize;
            let hi = |v: f64| libm::floor((v + radius) / self.cell).max(0.0).min((n - 1) as f64) as isize;
            for cy in lo(center.y)..=hi(center.y) {
                for cx in lo(center.x)..=hi(center.x) {
                    visit(cx, cy);
                }
            }
        }
    }
}

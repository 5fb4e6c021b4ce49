use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::geometry::Point;

/// Area of the intersection of the closed disks of common radius `r`
/// centred at `centers`, in plane coordinates.
///
/// Each circle contributes the arc of its boundary lying inside all other
/// disks; those arcs bound the intersection, whose area follows from
/// Green's theorem.
pub fn disk_intersection_area(centers: &[Point], r: f64) -> f64 {
    match centers.len() {
        0 => return 0.0,
        1 => return PI * r * r,
        _ => {}
    }
    for (i, a) in centers.iter().enumerate() {
        if centers[i + 1..].iter().any(|b| a.dist(b) >= 2.0 * r) {
            return 0.0;
        }
    }
    let mut twice_area = 0.0;
    for (i, c) in centers.iter().enumerate() {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        let mut anchor = None;
        let mut empty = false;
        for (j, o) in centers.iter().enumerate() {
            if i == j {
                continue;
            }
            let d = c.dist(o);
            if d == 0.0 {
                continue;
            }
            let psi = libm::atan2(o.y - c.y, o.x - c.x);
            let beta = libm::acos((d / (2.0 * r)).min(1.0));
            // angles measured from the first constraining direction
            let a0 = *anchor.get_or_insert(psi);
            let mut delta = psi - a0;
            while delta > PI {
                delta -= 2.0 * PI;
            }
            while delta <= -PI {
                delta += 2.0 * PI;
            }
            lo = lo.max(delta - beta);
            hi = hi.min(delta + beta);
            if lo >= hi {
                empty = true;
                break;
            }
        }
        if empty {
            continue;
        }
        let a0 = anchor.unwrap_or(0.0);
        let (a, b) = if lo.is_finite() { (a0 + lo, a0 + hi) } else { (0.0, 2.0 * PI) };
        twice_area += r * c.x * (libm::sin(b) - libm::sin(a)) - r * c.y * (libm::cos(b) - libm::cos(a)) + r * r * (b - a);
    }
    (0.5 * twice_area).max(0.0)
}

/// `ln(m!)`
pub(crate) fn ln_factorial(m: usize) -> f64 {
    (2..=m).map(|i| libm::log(i as f64)).sum()
}

/// Members `y` of `set` whose `m - 1` nearest neighbours are exactly the
/// rest of the set, given a neighbour oracle returning ids.
pub(crate) fn self_selecting<T: PartialEq + Copy>(set: &[T], mut neighbours: impl FnMut(T) -> Option<Vec<T>>) -> usize {
    set.iter()
        .filter(|&&y| match neighbours(y) {
            Some(nn) => nn.iter().all(|z| *z != y && set.contains(z)),
            None => false,
        })
        .count()
}

//! Orientation and in-circle predicates.
//!
//! Each predicate first tries a floating-point evaluation with a forward
//! error bound and falls back to exact big-integer arithmetic when the sign
//! is uncertain. Exact ties in the in-circle test are broken by symbolic
//! perturbation of the lifted paraboloid: the lexicographically smaller a
//! point, the more it is lifted.

use alloc::vec::Vec;

use num_bigint::BigInt;

use super::Point;

const EPS: f64 = f64::EPSILON * 0.5;
const CCW_BOUND: f64 = (3.0 + 16.0 * EPS) * EPS;
const ICC_BOUND: f64 = (10.0 + 96.0 * EPS) * EPS;

/// Sign of the orientation of `(a, b, c)`: 1 counter-clockwise, -1 clockwise, 0 collinear.
pub fn orient2d(a: &Point, b: &Point, c: &Point) -> i8 {
    let detleft = (a.x - c.x) * (b.y - c.y);
    let detright = (a.y - c.y) * (b.x - c.x);
    let det = detleft - detright;
    let detsum = if detleft > 0.0 {
        if detright <= 0.0 {
            return sign(det);
        }
        detleft + detright
    } else if detleft < 0.0 {
        if detright >= 0.0 {
            return sign(det);
        }
        -detleft - detright
    } else {
        return sign(det);
    };
    if libm::fabs(det) > CCW_BOUND * detsum {
        return sign(det);
    }
    orient2d_exact(a, b, c)
}

/// Sign of the in-circle determinant: 1 when `d` lies strictly inside the
/// circle through the counter-clockwise triangle `(a, b, c)`, -1 outside, 0 on it.
pub fn incircle(a: &Point, b: &Point, c: &Point, d: &Point) -> i8 {
    let adx = a.x - d.x;
    let bdx = b.x - d.x;
    let cdx = c.x - d.x;
    let ady = a.y - d.y;
    let bdy = b.y - d.y;
    let cdy = c.y - d.y;

    let bdxcdy = bdx * cdy;
    let cdxbdy = cdx * bdy;
    let alift = adx * adx + ady * ady;
    let cdxady = cdx * ady;
    let adxcdy = adx * cdy;
    let blift = bdx * bdx + bdy * bdy;
    let adxbdy = adx * bdy;
    let bdxady = bdx * ady;
    let clift = cdx * cdx + cdy * cdy;

    let det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) + clift * (adxbdy - bdxady);
    let permanent = (libm::fabs(bdxcdy) + libm::fabs(cdxbdy)) * alift
        + (libm::fabs(cdxady) + libm::fabs(adxcdy)) * blift
        + (libm::fabs(adxbdy) + libm::fabs(bdxady)) * clift;
    if libm::fabs(det) > ICC_BOUND * permanent {
        return sign(det);
    }
    incircle_exact(a, b, c, d)
}

/// In-circle test with ties broken by symbolic perturbation. `(a, b, c)` must
/// be counter-clockwise. Never reports "on the circle".
pub fn incircle_perturbed(a: &Point, b: &Point, c: &Point, d: &Point) -> bool {
    let s = incircle(a, b, c, d);
    if s != 0 {
        return s > 0;
    }
    // Derivative of the determinant with respect to each lifted coordinate.
    let pts = [a, b, c, d];
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&i, &j| pts[i].lex_cmp(pts[j]));
    for &i in &order {
        let coef = match i {
            0 => orient2d(b, c, d),
            1 => -orient2d(a, c, d),
            2 => orient2d(a, b, d),
            _ => -orient2d(a, b, c),
        };
        if coef != 0 {
            return coef > 0;
        }
    }
    // unreachable for a proper triangle: the coefficient of d is -orient(a, b, c)
    false
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn big_sign(v: &BigInt) -> i8 {
    match v.sign() {
        num_bigint::Sign::Plus => 1,
        num_bigint::Sign::Minus => -1,
        num_bigint::Sign::NoSign => 0,
    }
}

/// Splits a finite double into `(mantissa, exponent)` with `v = m * 2^e`.
fn decompose(v: f64) -> (i64, i32) {
    if v == 0.0 {
        return (0, 0);
    }
    let bits = v.to_bits();
    let neg = bits >> 63 == 1;
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i64;
    let (m, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1i64 << 52), exp - 1075)
    };
    (if neg { -m } else { m }, e)
}

/// Converts coordinates to integers sharing one scale factor.
fn to_integers(vals: &[f64]) -> Vec<BigInt> {
    let parts: Vec<(i64, i32)> = vals.iter().map(|&v| decompose(v)).collect();
    let emin = parts
        .iter()
        .filter(|(m, _)| *m != 0)
        .map(|&(_, e)| e)
        .min()
        .unwrap_or(0);
    parts
        .iter()
        .map(|&(m, e)| {
            if m == 0 {
                BigInt::from(0)
            } else {
                BigInt::from(m) << ((e - emin) as usize)
            }
        })
        .collect()
}

fn orient2d_exact(a: &Point, b: &Point, c: &Point) -> i8 {
    let v = to_integers(&[a.x, a.y, b.x, b.y, c.x, c.y]);
    let acx = &v[0] - &v[4];
    let acy = &v[1] - &v[5];
    let bcx = &v[2] - &v[4];
    let bcy = &v[3] - &v[5];
    big_sign(&(acx * bcy - acy * bcx))
}

fn incircle_exact(a: &Point, b: &Point, c: &Point, d: &Point) -> i8 {
    let v = to_integers(&[a.x, a.y, b.x, b.y, c.x, c.y, d.x, d.y]);
    let adx = &v[0] - &v[6];
    let ady = &v[1] - &v[7];
    let bdx = &v[2] - &v[6];
    let bdy = &v[3] - &v[7];
    let cdx = &v[4] - &v[6];
    let cdy = &v[5] - &v[7];
    let alift = &adx * &adx + &ady * &ady;
    let blift = &bdx * &bdx + &bdy * &bdy;
    let clift = &cdx * &cdx + &cdy * &cdy;
    let det = alift * (&bdx * &cdy - &cdx * &bdy)
        + blift * (&cdx * &ady - &adx * &cdy)
        + clift * (&adx * &bdy - &bdx * &ady);
    big_sign(&det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    #[test]
    fn orientation_signs() {
        assert_eq!(orient2d(&p(0.0, 0.0), &p(1.0, 0.0), &p(0.0, 1.0)), 1);
        assert_eq!(orient2d(&p(0.0, 0.0), &p(0.0, 1.0), &p(1.0, 0.0)), -1);
        assert_eq!(orient2d(&p(0.0, 0.0), &p(1.0, 1.0), &p(2.0, 2.0)), 0);
    }

    #[test]
    fn nearly_collinear_resolved_exactly() {
        // classic failure case for naive evaluation
        let a = p(0.5, 0.5);
        let b = p(12.0, 12.0);
        let c = p(24.0, 24.0);
        assert_eq!(orient2d(&a, &b, &c), 0);
        let c2 = p(24.0, 24.0 + f64::EPSILON * 16.0);
        assert_eq!(orient2d(&a, &b, &c2), 1);
    }

    #[test]
    fn incircle_unit_circle() {
        let a = p(1.0, 0.0);
        let b = p(0.0, 1.0);
        let c = p(-1.0, 0.0);
        assert_eq!(incircle(&a, &b, &c, &p(0.0, 0.0)), 1);
        assert_eq!(incircle(&a, &b, &c, &p(0.0, -1.0)), 0);
        assert_eq!(incircle(&a, &b, &c, &p(0.0, -1.5)), -1);
    }

    #[test]
    fn perturbation_picks_diagonal_avoiding_smallest_point() {
        // unit square: the lexicographically smallest corner is lifted, so the
        // triangle (0,0),(1,0),(1,1) is not Delaunay but (0,0),(1,0),(0,1) is
        assert!(incircle_perturbed(&p(0.0, 0.0), &p(1.0, 0.0), &p(1.0, 1.0), &p(0.0, 1.0)));
        assert!(!incircle_perturbed(&p(0.0, 0.0), &p(1.0, 0.0), &p(0.0, 1.0), &p(1.0, 1.0)));
        assert!(!incircle_perturbed(&p(1.0, 0.0), &p(1.0, 1.0), &p(0.0, 1.0), &p(0.0, 0.0)));
    }

    #[test]
    fn decompose_round_trip() {
        for v in [1.0, -3.5, 1e-310, 123456.789, -0.1] {
            let (m, e) = decompose(v);
            assert_eq!(m as f64 * libm::pow(2.0, e as f64), v);
        }
    }

    proptest! {
        #[test]
        fn orient_matches_exact(ax in -10.0..10.0f64, ay in -10.0..10.0f64,
                                bx in -10.0..10.0f64, by in -10.0..10.0f64,
                                t in -2.0..2.0f64, off in -1e-14..1e-14f64) {
            let a = p(ax, ay);
            let b = p(bx, by);
            let c = p(ax + t * (bx - ax), ay + t * (by - ay) + off);
            prop_assert_eq!(orient2d(&a, &b, &c), orient2d_exact(&a, &b, &c));
        }

        #[test]
        fn incircle_matches_exact(theta in proptest::collection::vec(0.0..6.283f64, 4),
                                  r in 0.1..10.0f64, jitter in -1e-13..1e-13f64) {
            let pts: Vec<Point> = theta.iter().enumerate()
                .map(|(i, t)| {
                    let rr = if i == 3 { r + jitter } else { r };
                    p(rr * libm::cos(*t), rr * libm::sin(*t))
                })
                .collect();
            let s = incircle(&pts[0], &pts[1], &pts[2], &pts[3]);
            prop_assert_eq!(s, incircle_exact(&pts[0], &pts[1], &pts[2], &pts[3]));
        }

        #[test]
        fn perturbed_incircle_is_consistent(xs in proptest::collection::vec(0i32..3, 8)) {
            // integer grid points give many exact ties; the perturbed test must
            // be antisymmetric: of two triangles sharing an edge in a convex
            // quad, exactly one diagonal is chosen
            let q: Vec<Point> = xs.chunks(2).map(|c| p(c[0] as f64, c[1] as f64)).collect();
            let (a, b, c, d) = (q[0], q[1], q[2], q[3]);
            if orient2d(&a, &b, &c) > 0 && orient2d(&a, &c, &d) > 0
                && orient2d(&a, &b, &d) > 0 && orient2d(&b, &c, &d) > 0 {
                let first = incircle_perturbed(&a, &b, &c, &d);
                let second = incircle_perturbed(&a, &c, &d, &b);
                prop_assert_eq!(first, second);
                let third = incircle_perturbed(&a, &b, &d, &c);
                prop_assert_eq!(first, !third);
            }
        }
    }
}

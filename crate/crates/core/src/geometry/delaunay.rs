use alloc::vec;
use alloc::vec::Vec;

use super::predicates::{incircle_perturbed, orient2d};
use super::{circumcircle, GeometryError, Point, TorusWindow};
use crate::config::PointId;

const INF: u32 = u32::MAX;

/// Incremental Bowyer-Watson with an infinite vertex. Infinite triangles
/// always store the infinite vertex last, and `nbr[t][i]` is the triangle
/// across the edge opposite `tri[t][i]`.
struct Mesh<'a> {
    pts: &'a [Point],
    tri: Vec<[u32; 3]>,
    nbr: Vec<[u32; 3]>,
    alive: Vec<bool>,
    mark: Vec<u32>,
    stamp: u32,
    free: Vec<u32>,
    hint: u32,
}

impl<'a> Mesh<'a> {
    fn new(pts: &'a [Point], a: u32, b: u32, c: u32) -> Self {
        let (a, b) = if orient2d(&pts[a as usize], &pts[b as usize], &pts[c as usize]) > 0 {
            (a, b)
        } else {
            (b, a)
        };
        // 0: finite (a,b,c); 1: across a->b; 2: across b->c; 3: across c->a
        let tri = vec![[a, b, c], [b, a, INF], [c, b, INF], [a, c, INF]];
        let nbr = vec![[2, 3, 1], [3, 2, 0], [1, 3, 0], [2, 1, 0]];
        Mesh {
            pts,
            tri,
            nbr,
            alive: vec![true; 4],
            mark: vec![0; 4],
            stamp: 0,
            free: Vec::new(),
            hint: 1,
        }
    }

    fn p(&self, i: u32) -> &Point {
        &self.pts[i as usize]
    }

    fn conflict(&self, t: u32, p: &Point) -> bool {
        let [a, b, c] = self.tri[t as usize];
        if c == INF {
            let (u, v) = (self.p(a), self.p(b));
            match orient2d(u, v, p) {
                1 => true,
                0 => strictly_between(u, v, p),
                _ => false,
            }
        } else {
            incircle_perturbed(self.p(a), self.p(b), self.p(c), p)
        }
    }

    fn find_conflict(&self, p: &Point) -> u32 {
        // walk the hull from the last infinite triangle
        let mut t = self.hint;
        if self.alive[t as usize] && self.tri[t as usize][2] == INF {
            for _ in 0..self.tri.len() {
                if self.conflict(t, p) {
                    return t;
                }
                t = self.nbr[t as usize][0];
            }
        }
        (0..self.tri.len() as u32)
            .find(|&t| self.alive[t as usize] && self.conflict(t, p))
            .expect("point inside the triangulated region")
    }

    fn alloc(&mut self, t: [u32; 3], n: [u32; 3]) -> u32 {
        if let Some(i) = self.free.pop() {
            self.tri[i as usize] = t;
            self.nbr[i as usize] = n;
            self.alive[i as usize] = true;
            i
        } else {
            self.tri.push(t);
            self.nbr.push(n);
            self.alive.push(true);
            self.mark.push(0);
            (self.tri.len() - 1) as u32
        }
    }

    fn insert(&mut self, pi: u32) {
        let p = self.pts[pi as usize];
        let start = self.find_conflict(&p);
        self.stamp += 1;
        let stamp = self.stamp;
        self.mark[start as usize] = stamp;
        let mut cavity = vec![start];
        let mut stack = vec![start];
        while let Some(t) = stack.pop() {
            for i in 0..3 {
                let n = self.nbr[t as usize][i];
                if self.mark[n as usize] != stamp && self.conflict(n, &p) {
                    self.mark[n as usize] = stamp;
                    cavity.push(n);
                    stack.push(n);
                }
            }
        }
        // (e0, e1, outside neighbour, old triangle)
        let mut boundary = Vec::new();
        for &t in &cavity {
            let tr = self.tri[t as usize];
            for i in 0..3 {
                let n = self.nbr[t as usize][i];
                if self.mark[n as usize] != stamp {
                    boundary.push((tr[(i + 1) % 3], tr[(i + 2) % 3], n, t));
                }
            }
        }
        let mut created = Vec::with_capacity(boundary.len());
        for &(e0, e1, n, old) in &boundary {
            let id = self.alloc([e0, e1, pi], [INF, INF, n]);
            let slot = self.nbr[n as usize]
                .iter()
                .position(|&x| x == old)
                .expect("adjacency is symmetric");
            self.nbr[n as usize][slot] = id;
            created.push(id);
        }
        for (j, &(e0, e1, _, _)) in boundary.iter().enumerate() {
            let across0 = boundary.iter().position(|b| b.0 == e1).expect("closed cavity");
            let across1 = boundary.iter().position(|b| b.1 == e0).expect("closed cavity");
            let t = created[j] as usize;
            self.nbr[t][0] = created[across0];
            self.nbr[t][1] = created[across1];
        }
        // only now may the cavity slots be recycled
        for &t in &cavity {
            self.alive[t as usize] = false;
            self.free.push(t);
        }
        for &t in &created {
            let t = t as usize;
            let (v, n) = (self.tri[t], self.nbr[t]);
            if v[0] == INF {
                self.tri[t] = [v[1], v[2], v[0]];
                self.nbr[t] = [n[1], n[2], n[0]];
                self.hint = t as u32;
            } else if v[1] == INF {
                self.tri[t] = [v[2], v[0], v[1]];
                self.nbr[t] = [n[2], n[0], n[1]];
                self.hint = t as u32;
            }
        }
    }

    fn finite(&self) -> Vec<[usize; 3]> {
        self.tri
            .iter()
            .zip(&self.alive)
            .filter(|(t, &a)| a && t[2] != INF)
            .map(|(t, _)| [t[0] as usize, t[1] as usize, t[2] as usize])
            .collect()
    }
}

fn strictly_between(u: &Point, v: &Point, p: &Point) -> bool {
    let dot = (p.x - u.x) * (v.x - u.x) + (p.y - u.y) * (v.y - u.y);
    let len2 = (v.x - u.x) * (v.x - u.x) + (v.y - u.y) * (v.y - u.y);
    dot > 0.0 && dot < len2
}

/// Delaunay triangulation of a point set in the plane, as counter-clockwise
/// index triples. Cocircular ties follow the perturbed in-circle predicate.
/// Fewer than three points, or all points collinear, yield no triangles.
/// Exact duplicates are ignored.
pub fn triangulate_points(points: &[Point]) -> Vec<[usize; 3]> {
    let mut order: Vec<u32> = (0..points.len() as u32).collect();
    order.sort_by(|&i, &j| points[i as usize].lex_cmp(&points[j as usize]));
    order.dedup_by(|a, b| points[*a as usize] == points[*b as usize]);
    if order.len() < 3 {
        return Vec::new();
    }
    let (s0, s1) = (order[0], order[1]);
    let Some(k) = (2..order.len()).find(|&k| {
        orient2d(
            &points[s0 as usize],
            &points[s1 as usize],
            &points[order[k] as usize],
        ) != 0
    }) else {
        return Vec::new();
    };
    let mut mesh = Mesh::new(points, s0, s1, order[k]);
    for &i in order[2..k].iter().chain(&order[k + 1..]) {
        mesh.insert(i);
    }
    mesh.finite()
}

/// A Delaunay triangle with the quantities the models need.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangle {
    pub vertices: [PointId; 3],
    pub circumcenter: Point,
    pub radius: f64,
    pub min_edge: f64,
    pub perimeter: f64,
}

impl Triangle {
    /// Builds a triangle from (possibly unwrapped) vertex positions.
    pub fn from_points(vertices: [PointId; 3], pts: [&Point; 3]) -> Result<Self, GeometryError> {
        let (center, radius) = circumcircle(pts[0], pts[1], pts[2])?;
        let e = [pts[0].dist(pts[1]), pts[1].dist(pts[2]), pts[2].dist(pts[0])];
        Ok(Triangle {
            vertices,
            circumcenter: center,
            radius,
            min_edge: e[0].min(e[1]).min(e[2]),
            perimeter: e[0] + e[1] + e[2],
        })
    }

    pub fn sorted_vertices(&self) -> [PointId; 3] {
        let mut v = self.vertices;
        v.sort();
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation {
    triangles: Vec<Triangle>,
    fingerprint: u64,
}

impl Triangulation {
    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    /// Fingerprint of the configuration this triangulation was built from.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Wraps an already computed triangle list, sorted canonically.
    pub fn from_triangles(mut triangles: Vec<Triangle>, fingerprint: u64) -> Self {
        sort_triangles(&mut triangles);
        Triangulation {
            triangles,
            fingerprint,
        }
    }

    /// Triangulates `points` (with matching `ids`) in `window`. On the torus
    /// only one representative per periodic triangle is kept.
    pub fn build(
        window: &TorusWindow,
        ids: &[PointId],
        points: &[Point],
        fingerprint: u64,
    ) -> Result<Self, GeometryError> {
        let mut triangles = if window.is_torus() {
            periodic(window, ids, points)?
        } else {
            triangulate_points(points)
                .into_iter()
                .map(|[a, b, c]| {
                    Triangle::from_points([ids[a], ids[b], ids[c]], [&points[a], &points[b], &points[c]])
                })
                .collect::<Result<Vec<_>, _>>()?
        };
        sort_triangles(&mut triangles);
        Ok(Triangulation {
            triangles,
            fingerprint,
        })
    }
}

fn sort_triangles(triangles: &mut [Triangle]) {
    triangles.sort_by(|a, b| {
        a.sorted_vertices()
            .cmp(&b.sorted_vertices())
            .then(a.circumcenter.lex_cmp(&b.circumcenter))
    });
}

fn periodic(
    window: &TorusWindow,
    ids: &[PointId],
    points: &[Point],
) -> Result<Vec<Triangle>, GeometryError> {
    let n = points.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let l = window.side();
    let half = 0.5 * l;
    let mut margin = (6.0 * libm::sqrt(l * l / n as f64)).min(half);
    loop {
        let mut ghost_pts = Vec::new();
        let mut ghost_src: Vec<(usize, i8, i8)> = Vec::new();
        for (i, p) in points.iter().enumerate() {
            for ox in -1i8..=1 {
                for oy in -1i8..=1 {
                    let q = Point::new(p.x + ox as f64 * l, p.y + oy as f64 * l);
                    if q.x >= -margin && q.x < l + margin && q.y >= -margin && q.y < l + margin {
                        ghost_pts.push(q);
                        ghost_src.push((i, ox, oy));
                    }
                }
            }
        }
        let mut out = Vec::with_capacity(2 * n);
        let mut certified = true;
        for [a, b, c] in triangulate_points(&ghost_pts) {
            let key = |g: usize| {
                let (i, ox, oy) = ghost_src[g];
                (ox, oy, ids[i])
            };
            let anchor = [a, b, c].into_iter().min_by_key(|&g| key(g)).unwrap();
            let (_, ox, oy) = ghost_src[anchor];
            if ox != 0 || oy != 0 {
                continue;
            }
            let tri = Triangle::from_points(
                [ids[ghost_src[a].0], ids[ghost_src[b].0], ids[ghost_src[c].0]],
                [&ghost_pts[a], &ghost_pts[b], &ghost_pts[c]],
            )?;
            if 2.0 * tri.radius > margin {
                certified = false;
            }
            out.push(tri);
        }
        if certified && out.len() == 2 * n {
            for t in &mut out {
                t.circumcenter = window.wrap(t.circumcenter);
            }
            return Ok(out);
        }
        if margin >= half {
            return Err(GeometryError::TorusTooSparse);
        }
        margin = (2.0 * margin).min(half);
    }
}

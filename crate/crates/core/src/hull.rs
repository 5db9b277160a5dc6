//! Convex hulls of point clouds in the Weyl chamber.
//!
//! Full-dimensional clouds use an incremental hull. Flat clouds (a plane,
//! a segment or a single point) are represented by the same halfspace form,
//! with pairs of opposing halfspaces pinning the missing directions, so
//! containment is always "every halfspace holds within the tolerance".

use crate::error::{Error, Result};
use crate::weyl::WeylPoint;
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

type V3 = Vector3<f64>;

/// Extent below which a cloud is treated as lower dimensional.
const FLAT_TOL: f64 = 1e-9;
/// Points this far outside a face count as visible while building.
const VISIBLE_EPS: f64 = 1e-12;

/// `normal · x ≤ offset` with unit `normal`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: [f64; 3],
    pub offset: f64,
}

impl Halfspace {
    fn new(n: V3, offset: f64) -> Self {
        Self {
            normal: [n.x, n.y, n.z],
            offset,
        }
    }

    pub fn excess(&self, p: &[f64; 3]) -> f64 {
        self.normal[0] * p[0] + self.normal[1] * p[1] + self.normal[2] * p[2] - self.offset
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolytope3 {
    pub vertices: Vec<WeylPoint>,
    pub halfspaces: Vec<Halfspace>,
    /// Affine dimension of the vertex set (0 to 3).
    pub dimension: u8,
}

impl ConvexPolytope3 {
    pub fn from_points(points: &[WeylPoint]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("point cloud"));
        }
        let pts: Vec<V3> = points.iter().map(|p| V3::new(p.c1, p.c2, p.c3)).collect();
        Ok(hull(&pts))
    }

    pub fn contains(&self, p: WeylPoint, tol: f64) -> bool {
        let a = p.to_array();
        self.halfspaces.iter().all(|h| h.excess(&a) <= tol)
    }

    /// Largest halfspace violation (negative when strictly inside).
    pub fn max_excess(&self, p: WeylPoint) -> f64 {
        let a = p.to_array();
        self.halfspaces
            .iter()
            .map(|h| h.excess(&a))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn volume(&self) -> f64 {
        if self.dimension < 3 {
            return 0.0;
        }
        let c = self
            .vertices
            .iter()
            .fold(V3::zeros(), |acc, v| acc + V3::new(v.c1, v.c2, v.c3))
            / self.vertices.len() as f64;
        // Sum of cones from the centroid over faces; faces are rebuilt from
        // the halfspaces by collecting the vertices on each plane.
        let mut vol = 0.0;
        for h in &self.halfspaces {
            let n = V3::new(h.normal[0], h.normal[1], h.normal[2]);
            let on: Vec<V3> = self
                .vertices
                .iter()
                .map(|v| V3::new(v.c1, v.c2, v.c3))
                .filter(|v| (n.dot(v) - h.offset).abs() < 1e-9)
                .collect();
            if on.len() < 3 {
                continue;
            }
            let area = polygon_area(&on, &n);
            vol += area * (h.offset - n.dot(&c)) / 3.0;
        }
        vol
    }

    /// Image under `c1 → π − c1`.
    pub fn mirrored(&self) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| v.mirrored()).collect(),
            halfspaces: self
                .halfspaces
                .iter()
                .map(|h| Halfspace {
                    normal: [-h.normal[0], h.normal[1], h.normal[2]],
                    offset: h.offset - h.normal[0] * std::f64::consts::PI,
                })
                .collect(),
            dimension: self.dimension,
        }
    }
}

fn same_plane(a: &Halfspace, b: &Halfspace) -> bool {
    (0..3).all(|i| (a.normal[i] - b.normal[i]).abs() < 1e-9) && (a.offset - b.offset).abs() < 1e-9
}

fn polygon_area(pts: &[V3], n: &V3) -> f64 {
    let c = pts.iter().fold(V3::zeros(), |a, p| a + p) / pts.len() as f64;
    let u = (pts.iter().map(|p| p - c).max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap()))
        .unwrap()
        .normalize();
    let w = n.cross(&u);
    let mut pol: Vec<(f64, f64)> = pts.iter().map(|p| ((p - c).dot(&u), (p - c).dot(&w))).collect();
    pol.sort_by(|a, b| a.1.atan2(a.0).partial_cmp(&b.1.atan2(b.0)).unwrap());
    let mut a = 0.0;
    for i in 0..pol.len() {
        let (x0, y0) = pol[i];
        let (x1, y1) = pol[(i + 1) % pol.len()];
        a += x0 * y1 - x1 * y0;
    }
    a.abs() / 2.0
}

fn to_point(v: &V3) -> WeylPoint {
    WeylPoint::new(v.x, v.y, v.z)
}

fn hull(pts: &[V3]) -> ConvexPolytope3 {
    let i0 = (0..pts.len())
        .min_by(|&a, &b| {
            (pts[a].x, pts[a].y, pts[a].z)
                .partial_cmp(&(pts[b].x, pts[b].y, pts[b].z))
                .unwrap()
        })
        .unwrap();
    let p0 = pts[i0];
    let (i1, d1) = farthest(pts, |p| (p - p0).norm());
    if d1 < FLAT_TOL {
        return point_polytope(p0);
    }
    let dir = (pts[i1] - p0).normalize();
    let (i2, d2) = farthest(pts, |p| {
        let r = p - p0;
        (r - dir * r.dot(&dir)).norm()
    });
    if d2 < FLAT_TOL {
        return segment_polytope(pts, p0, dir);
    }
    let normal = (pts[i1] - p0).cross(&(pts[i2] - p0)).normalize();
    let (i3, d3) = farthest(pts, |p| (p - p0).dot(&normal).abs());
    if d3 < FLAT_TOL {
        return planar_polytope(pts, p0, normal);
    }
    Incremental::new(pts, [i0, i1, i2, i3]).run()
}

fn farthest<F: Fn(&V3) -> f64>(pts: &[V3], f: F) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, p) in pts.iter().enumerate() {
        let d = f(p);
        if d > best.1 {
            best = (i, d);
        }
    }
    best
}

fn slab(n: V3, at: f64) -> [Halfspace; 2] {
    [Halfspace::new(n, at), Halfspace::new(-n, -at)]
}

fn point_polytope(p: V3) -> ConvexPolytope3 {
    let mut hs = Vec::new();
    for e in [V3::x(), V3::y(), V3::z()] {
        hs.extend(slab(e, e.dot(&p)));
    }
    ConvexPolytope3 {
        vertices: vec![to_point(&p)],
        halfspaces: hs,
        dimension: 0,
    }
}

fn orthonormal_complement(d: V3) -> (V3, V3) {
    let seed = if d.x.abs() < 0.9 { V3::x() } else { V3::y() };
    let a = (seed - d * seed.dot(&d)).normalize();
    (a, d.cross(&a))
}

fn segment_polytope(pts: &[V3], p0: V3, dir: V3) -> ConvexPolytope3 {
    let ts: Vec<f64> = pts.iter().map(|p| (p - p0).dot(&dir)).collect();
    let (lo, hi) = ts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
    let a = p0 + dir * lo;
    let b = p0 + dir * hi;
    let (u, v) = orthonormal_complement(dir);
    let mut hs = vec![
        Halfspace::new(dir, dir.dot(&b)),
        Halfspace::new(-dir, -dir.dot(&a)),
    ];
    hs.extend(slab(u, u.dot(&p0)));
    hs.extend(slab(v, v.dot(&p0)));
    ConvexPolytope3 {
        vertices: vec![to_point(&a), to_point(&b)],
        halfspaces: hs,
        dimension: 1,
    }
}

fn planar_polytope(pts: &[V3], p0: V3, normal: V3) -> ConvexPolytope3 {
    let (u, v) = orthonormal_complement(normal);
    let mut flat: Vec<(f64, f64, usize)> = pts
        .iter()
        .enumerate()
        .map(|(i, p)| ((p - p0).dot(&u), (p - p0).dot(&v), i))
        .collect();
    flat.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).unwrap());
    flat.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-15 && (a.1 - b.1).abs() < 1e-15);
    let cross = |o: &(f64, f64, usize), a: &(f64, f64, usize), b: &(f64, f64, usize)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    // Andrew's monotone chain, counter-clockwise around `normal`.
    let mut lower: Vec<(f64, f64, usize)> = Vec::new();
    for p in &flat {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 1e-14 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<(f64, f64, usize)> = Vec::new();
    for p in flat.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 1e-14 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    let ring = lower;
    let offset = normal.dot(&p0);
    let mut hs: Vec<Halfspace> = slab(normal, offset).to_vec();
    let lift = |q: &(f64, f64, usize)| p0 + u * q.0 + v * q.1;
    for i in 0..ring.len() {
        let a = lift(&ring[i]);
        let b = lift(&ring[(i + 1) % ring.len()]);
        let out = (b - a).cross(&normal);
        if out.norm() < 1e-15 {
            continue;
        }
        let out = out.normalize();
        hs.push(Halfspace::new(out, out.dot(&a)));
    }
    ConvexPolytope3 {
        vertices: ring.iter().map(|q| to_point(&lift(q))).collect(),
        halfspaces: hs,
        dimension: 2,
    }
}

struct Face {
    v: [usize; 3],
    n: V3,
    d: f64,
    alive: bool,
    outside: Vec<usize>,
}

/// Quickhull: repeatedly adds the farthest outside point of some face, so
/// every insertion is far from coplanar with the faces it replaces.
struct Incremental<'a> {
    pts: &'a [V3],
    faces: Vec<Face>,
    edges: HashMap<(usize, usize), usize>,
    interior: V3,
    eps: f64,
}

impl<'a> Incremental<'a> {
    fn new(pts: &'a [V3], seed: [usize; 4]) -> Self {
        let interior = seed.iter().fold(V3::zeros(), |a, &i| a + pts[i]) / 4.0;
        let scale = pts
            .iter()
            .map(|p| p.abs().max())
            .fold(1.0_f64, f64::max);
        let mut s = Self {
            pts,
            faces: Vec::new(),
            edges: HashMap::new(),
            interior,
            eps: VISIBLE_EPS * scale,
        };
        let [a, b, c, d] = seed;
        let mut ids = Vec::new();
        for tri in [[a, b, c], [a, b, d], [a, c, d], [b, c, d]] {
            ids.push(s.add_oriented(tri));
        }
        let all: Vec<usize> = (0..pts.len()).filter(|i| !seed.contains(i)).collect();
        s.assign(&all, &ids);
        s
    }

    fn add_oriented(&mut self, tri: [usize; 3]) -> usize {
        let n = (self.pts[tri[1]] - self.pts[tri[0]]).cross(&(self.pts[tri[2]] - self.pts[tri[0]]));
        if n.dot(&(self.interior - self.pts[tri[0]])) > 0.0 {
            self.add_face([tri[0], tri[2], tri[1]])
        } else {
            self.add_face(tri)
        }
    }

    fn add_face(&mut self, v: [usize; 3]) -> usize {
        let p = self.pts;
        let raw = (p[v[1]] - p[v[0]]).cross(&(p[v[2]] - p[v[0]]));
        let norm = raw.norm();
        let mut n = if norm > 0.0 { raw / norm } else { raw };
        // Keep the plane oriented away from the interior even when the
        // triangle is nearly degenerate.
        let mut d = n.dot(&((p[v[0]] + p[v[1]] + p[v[2]]) / 3.0));
        if n.dot(&self.interior) - d > 0.0 {
            n = -n;
            d = -d;
        }
        let id = self.faces.len();
        self.faces.push(Face {
            v,
            n,
            d,
            alive: true,
            outside: Vec::new(),
        });
        for k in 0..3 {
            self.edges.insert((v[k], v[(k + 1) % 3]), id);
        }
        id
    }

    fn remove_face(&mut self, id: usize) {
        let v = self.faces[id].v;
        self.faces[id].alive = false;
        for k in 0..3 {
            let key = (v[k], v[(k + 1) % 3]);
            if self.edges.get(&key) == Some(&id) {
                self.edges.remove(&key);
            }
        }
    }

    fn dist(&self, f: usize, p: &V3) -> f64 {
        self.faces[f].n.dot(p) - self.faces[f].d
    }

    /// Gives each point to the face it lies farthest outside of.
    fn assign(&mut self, points: &[usize], faces: &[usize]) {
        for &pi in points {
            let p = self.pts[pi];
            let mut best = (usize::MAX, self.eps);
            for &f in faces {
                let d = self.dist(f, &p);
                if d > best.1 {
                    best = (f, d);
                }
            }
            if best.0 != usize::MAX {
                self.faces[best.0].outside.push(pi);
            }
        }
    }

    fn expand(&mut self, start: usize) {
        let outside = std::mem::take(&mut self.faces[start].outside);
        let (k_far, _) = outside
            .iter()
            .enumerate()
            .map(|(k, &i)| (k, self.dist(start, &self.pts[i])))
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        let pi = outside[k_far];
        let p = self.pts[pi];
        let mut visible = vec![start];
        let mut mark: HashMap<usize, bool> = HashMap::new();
        mark.insert(start, true);
        let mut i = 0;
        while i < visible.len() {
            let f = visible[i];
            i += 1;
            let v = self.faces[f].v;
            for k in 0..3 {
                if let Some(&g) = self.edges.get(&(v[(k + 1) % 3], v[k])) {
                    if mark.contains_key(&g) {
                        continue;
                    }
                    let vis = self.dist(g, &p) > self.eps;
                    mark.insert(g, vis);
                    if vis {
                        visible.push(g);
                    }
                }
            }
        }
        let mut horizon = Vec::new();
        for &f in &visible {
            let v = self.faces[f].v;
            for k in 0..3 {
                let (a, b) = (v[k], v[(k + 1) % 3]);
                let other = self.edges.get(&(b, a)).copied();
                if other.is_none_or(|g| !mark.get(&g).copied().unwrap_or(false)) {
                    horizon.push((a, b));
                }
            }
        }
        let mut orphans: Vec<usize> = outside
            .into_iter()
            .enumerate()
            .filter(|&(k, _)| k != k_far)
            .map(|(_, i)| i)
            .collect();
        for &f in &visible {
            if f != start {
                orphans.append(&mut self.faces[f].outside);
            }
            self.remove_face(f);
        }
        let new: Vec<usize> = horizon
            .into_iter()
            .map(|(a, b)| self.add_face([a, b, pi]))
            .collect();
        self.assign(&orphans, &new);
    }

    fn run(mut self) -> ConvexPolytope3 {
        let mut cursor = 0;
        while cursor < self.faces.len() {
            if self.faces[cursor].alive && !self.faces[cursor].outside.is_empty() {
                self.expand(cursor);
            }
            cursor += 1;
        }
        let mut used = vec![false; self.pts.len()];
        let mut hs = Vec::new();
        for f in self.faces.iter().filter(|f| f.alive) {
            for &v in &f.v {
                used[v] = true;
            }
            let h = Halfspace::new(f.n, f.d);
            if f.n.norm() > 0.5 && !hs.iter().any(|q| same_plane(q, &h)) {
                hs.push(h);
            }
        }
        let vertices = used
            .iter()
            .enumerate()
            .filter(|(_, &u)| u)
            .map(|(i, _)| to_point(&self.pts[i]))
            .collect();
        ConvexPolytope3 {
            vertices,
            halfspaces: hs,
            dimension: 3,
        }
    }
}

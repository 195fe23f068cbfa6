//! The closed domain as a simple polygon: membership, Euclidean projection
//! and exterior normal cones.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::triangulate::{ear_clip, in_closed_triangle};
use crate::vec2::{closest_on_segment, orient, Point, Vec2};

/// Relative boundary tolerance; the absolute value is this times the
/// domain diameter.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeKind {
    Interior,
    Edge,
    ConvexVertex,
    ReflexVertex,
}

/// Outward normal cone at a point of the closed domain.
///
/// Interior points and reflex vertices carry the trivial cone `{0}`; edge
/// points one generator; convex vertices the two adjacent edge normals.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalCone {
    pub kind: ConeKind,
    pub generators: Vec<Vec2>,
}

impl NormalCone {
    pub fn is_trivial(&self) -> bool {
        self.generators.is_empty()
    }

    /// Whether `v` lies in the cone, with an angular slack of `eps` radians.
    pub fn contains(&self, v: Vec2, eps: f64) -> bool {
        v.norm() == 0.0 || self.angle_to(v) <= eps
    }

    /// Angle between the direction of `v` and the cone; `π` for the trivial
    /// cone and for `v = 0`.
    pub fn angle_to(&self, v: Vec2) -> f64 {
        let Some(u) = v.normalized() else { return PI };
        match self.generators.as_slice() {
            [] => PI,
            [g] => g.signed_angle_to(u).abs(),
            [a, b] => {
                // The cone of a convex vertex spans less than π, from `a` to
                // `b` counterclockwise.
                if a.cross(u) >= 0.0 && u.cross(*b) >= 0.0 {
                    0.0
                } else {
                    a.signed_angle_to(u).abs().min(b.signed_angle_to(u).abs())
                }
            }
            _ => unreachable!("a polygon normal cone has at most two generators"),
        }
    }
}

/// Arc of feasible directions at a point of the closed domain, as the
/// counterclockwise range `[start, start + span]` of polar angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentArc {
    pub start: f64,
    pub span: f64,
}

impl TangentArc {
    pub const FULL: TangentArc = TangentArc { start: 0.0, span: 2.0 * PI };

    pub fn is_full(&self) -> bool {
        self.span >= 2.0 * PI
    }

    /// Coordinate of direction `v` along the arc: the counterclockwise angle
    /// from `start`, in `[0, 2π)`.
    pub fn coordinate(&self, v: Vec2) -> f64 {
        let mut a = (v.angle() - self.start) % (2.0 * PI);
        if a < 0.0 {
            a += 2.0 * PI;
        }
        a
    }

    pub fn direction(&self, coord: f64) -> Vec2 {
        Vec2::new(1.0, 0.0).rotate(self.start + coord)
    }

    /// Intrinsic angle between two feasible directions given by arc
    /// coordinates: measured inside the arc and capped at `π`.
    pub fn intrinsic_angle(&self, a: f64, b: f64) -> f64 {
        let d = (a - b).abs();
        if self.is_full() {
            d.min(2.0 * PI - d)
        } else {
            d.min(PI)
        }
    }
}

/// Nearest boundary point of a query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFoot {
    pub point: Point,
    pub edge: usize,
    pub param: f64,
    pub distance: f64,
}

#[derive(Debug, Clone)]
pub struct Domain {
    name: String,
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    /// `neighbors[t][k]` is the triangle across edge `(t[k], t[k + 1])`.
    neighbors: Vec<[Option<usize>; 3]>,
    reflex: Vec<bool>,
    edge_normals: Vec<Vec2>,
    projection_band: f64,
    diameter: f64,
    tolerance: f64,
    bbox: (Point, Point),
}

impl Domain {
    /// Validates the vertex loop and derives triangulation, reflex flags and
    /// the projection band.
    pub fn new(name: impl Into<String>, vertices: Vec<Point>) -> Result<Domain> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::Geometry("need at least 3 vertices".into()));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::Geometry("non-finite coordinate".into()));
        }
        let mut diameter: f64 = 0.0;
        for (i, a) in vertices.iter().enumerate() {
            for b in &vertices[i + 1..] {
                diameter = diameter.max(a.dist(*b));
            }
        }
        if diameter == 0.0 {
            return Err(Error::Geometry("all vertices coincide".into()));
        }
        let tolerance = BOUNDARY_TOLERANCE * diameter;

        for i in 0..n {
            let (a, b, c) = (vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
            if a.dist(b) <= tolerance {
                return Err(Error::Geometry(alloc::format!("vertices {} and {} coincide", i, (i + 1) % n)));
            }
            if orient(a, b, c).abs() <= 1e-12 * a.dist(b) * b.dist(c) {
                return Err(Error::Geometry(alloc::format!("vertices {}..{} are collinear", i, i + 2)));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                if segments_touch(a, b, c, d, tolerance) {
                    return Err(Error::Geometry(alloc::format!("edges {} and {} intersect", i, j)));
                }
            }
        }
        let area2: f64 = (0..n).map(|i| vertices[i].cross(vertices[(i + 1) % n])).sum();
        if area2 <= 0.0 {
            return Err(Error::Geometry("vertex loop is not counterclockwise".into()));
        }

        let reflex: Vec<bool> = (0..n)
            .map(|i| orient(vertices[(i + n - 1) % n], vertices[i], vertices[(i + 1) % n]) < 0.0)
            .collect();
        let edge_normals: Vec<Vec2> = (0..n)
            .map(|i| {
                let e = vertices[(i + 1) % n] - vertices[i];
                Vec2::new(e.y, -e.x).normalized().expect("edges have positive length")
            })
            .collect();

        let mut clearance = f64::INFINITY;
        for (v, _) in reflex.iter().enumerate().filter(|(_, &r)| r) {
            for e in 0..n {
                if e == v || (e + 1) % n == v {
                    continue;
                }
                let (q, _) = closest_on_segment(vertices[e], vertices[(e + 1) % n], vertices[v]);
                clearance = clearance.min(q.dist(vertices[v]));
            }
        }
        let projection_band = if clearance.is_finite() { 0.5 * clearance } else { diameter };

        let triangles = ear_clip(&vertices, diameter)?;
        let neighbors = triangle_neighbors(&triangles);

        let mut lo = vertices[0];
        let mut hi = vertices[0];
        for v in &vertices {
            lo = Vec2::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Vec2::new(hi.x.max(v.x), hi.y.max(v.y));
        }

        Ok(Domain {
            name: name.into(),
            vertices,
            triangles,
            neighbors,
            reflex,
            edge_normals,
            projection_band,
            diameter,
            tolerance,
            bbox: (lo, hi),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub(crate) fn triangle_neighbors(&self) -> &[[Option<usize>; 3]] {
        &self.neighbors
    }

    pub fn reflex_flags(&self) -> &[bool] {
        &self.reflex
    }

    pub fn is_reflex(&self, v: usize) -> bool {
        self.reflex[v]
    }

    pub fn reflex_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.reflex.iter().enumerate().filter(|(_, &r)| r).map(|(i, _)| i)
    }

    pub fn is_convex(&self) -> bool {
        !self.reflex.iter().any(|&r| r)
    }

    /// Radius of the exterior band in which projection is used by the scheme.
    pub fn projection_band(&self) -> f64 {
        self.projection_band
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Absolute boundary tolerance `τ_b`.
    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        self.bbox
    }

    /// Edge `i` runs from vertex `i` to vertex `i + 1`.
    pub fn edge(&self, i: usize) -> (Point, Point) {
        let n = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % n])
    }

    pub fn edge_normal(&self, i: usize) -> Vec2 {
        self.edge_normals[i]
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        0.5 * (0..n).map(|i| self.vertices[i].cross(self.vertices[(i + 1) % n])).sum::<f64>()
    }

    pub fn contains(&self, p: Point) -> Membership {
        if self.nearest_boundary(p).distance <= self.tolerance {
            return Membership::Boundary;
        }
        // Crossing number; boundary cases were handled above.
        let n = self.vertices.len();
        let mut inside = false;
        for i in 0..n {
            let (a, b) = self.edge(i);
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        if inside {
            Membership::Interior
        } else {
            Membership::Exterior
        }
    }

    #[inline]
    pub fn is_inside(&self, p: Point) -> bool {
        self.contains(p) != Membership::Exterior
    }

    pub(crate) fn require_inside(&self, p: Point) -> Result<()> {
        if p.is_finite() && self.is_inside(p) {
            Ok(())
        } else {
            Err(Error::ExteriorPoint(p))
        }
    }

    /// Nearest point of the boundary; ties go to the lowest edge index.
    pub fn nearest_boundary(&self, p: Point) -> BoundaryFoot {
        let mut best = BoundaryFoot { point: self.vertices[0], edge: 0, param: 0.0, distance: f64::INFINITY };
        for i in 0..self.vertices.len() {
            let (a, b) = self.edge(i);
            let (q, t) = closest_on_segment(a, b, p);
            let d = q.dist(p);
            if d < best.distance {
                best = BoundaryFoot { point: q, edge: i, param: t, distance: d };
            }
        }
        best
    }

    /// A nearest point of the closed domain. Points of the domain are returned
    /// unchanged; ties go to the lowest edge index, then lowest parameter.
    pub fn project(&self, p: Point) -> Point {
        if self.is_inside(p) {
            p
        } else {
            self.nearest_boundary(p).point
        }
    }

    /// Index of the vertex within `τ_b` of `p`, if any.
    pub fn vertex_at(&self, p: Point) -> Option<usize> {
        self.vertices.iter().position(|v| v.dist(p) <= self.tolerance)
    }

    pub fn normal_cone(&self, x: Point) -> Result<NormalCone> {
        match self.contains(x) {
            Membership::Exterior => Err(Error::ExteriorPoint(x)),
            Membership::Interior => Ok(NormalCone { kind: ConeKind::Interior, generators: Vec::new() }),
            Membership::Boundary => {
                let n = self.vertices.len();
                if let Some(v) = self.vertex_at(x) {
                    if self.reflex[v] {
                        Ok(NormalCone { kind: ConeKind::ReflexVertex, generators: Vec::new() })
                    } else {
                        let prev = self.edge_normals[(v + n - 1) % n];
                        let next = self.edge_normals[v];
                        Ok(NormalCone { kind: ConeKind::ConvexVertex, generators: alloc::vec![prev, next] })
                    }
                } else {
                    let foot = self.nearest_boundary(x);
                    Ok(NormalCone { kind: ConeKind::Edge, generators: alloc::vec![self.edge_normals[foot.edge]] })
                }
            }
        }
    }

    /// Feasible directions at `x` as an arc of polar angles.
    pub fn tangent_arc(&self, x: Point) -> Result<TangentArc> {
        match self.contains(x) {
            Membership::Exterior => Err(Error::ExteriorPoint(x)),
            Membership::Interior => Ok(TangentArc::FULL),
            Membership::Boundary => {
                let n = self.vertices.len();
                if let Some(v) = self.vertex_at(x) {
                    let e_prev = self.vertices[v] - self.vertices[(v + n - 1) % n];
                    let e_next = self.vertices[(v + 1) % n] - self.vertices[v];
                    let start = e_next.angle();
                    let mut span = ((-e_prev).angle() - start) % (2.0 * PI);
                    if span <= 0.0 {
                        span += 2.0 * PI;
                    }
                    Ok(TangentArc { start, span })
                } else {
                    let foot = self.nearest_boundary(x);
                    let (a, b) = self.edge(foot.edge);
                    Ok(TangentArc { start: (b - a).angle(), span: PI })
                }
            }
        }
    }

    /// Triangles whose closed hull contains `p`.
    pub(crate) fn locate(&self, p: Point) -> Vec<usize> {
        let eps = 1e-12 * self.diameter * self.diameter;
        self.triangles
            .iter()
            .enumerate()
            .filter(|(_, t)| in_closed_triangle(p, self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]], eps))
            .map(|(i, _)| i)
            .collect()
    }

    /// Whether the closed segment `[p, q]` lies in the closed domain. Grazing
    /// contact with the boundary counts as inside.
    pub fn segment_inside(&self, p: Point, q: Point) -> bool {
        if !self.is_inside(p) || !self.is_inside(q) {
            return false;
        }
        let r = q - p;
        let rr = r.norm_sq();
        if rr == 0.0 {
            return true;
        }
        let mut ts: Vec<f64> = alloc::vec![0.0, 1.0];
        let eps = 1e-12;
        for i in 0..self.vertices.len() {
            let (a, b) = self.edge(i);
            let s = b - a;
            let denom = r.cross(s);
            let ap = a - p;
            if denom.abs() > eps * r.norm() * s.norm() {
                let t = ap.cross(s) / denom;
                let u = ap.cross(r) / denom;
                if (-eps..=1.0 + eps).contains(&t) && (-eps..=1.0 + eps).contains(&u) {
                    ts.push(t.clamp(0.0, 1.0));
                }
            } else if ap.cross(r).abs() <= eps * r.norm() * (ap.norm() + s.norm()) {
                for t in [ap.dot(r) / rr, (b - p).dot(r) / rr] {
                    if (0.0..=1.0).contains(&t) {
                        ts.push(t);
                    }
                }
            }
        }
        ts.sort_by(|a, b| a.total_cmp(b));
        ts.windows(2)
            .filter(|w| w[1] - w[0] > 1e-14)
            .all(|w| self.is_inside(p + r * (0.5 * (w[0] + w[1]))))
    }

    /// Uniform sample of the closed domain by rejection from the bounding box.
    pub fn sample_point<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let (lo, hi) = self.bbox;
        loop {
            let q = Point::new(rng.gen_range(lo.x..=hi.x), rng.gen_range(lo.y..=hi.y));
            if self.is_inside(q) {
                return q;
            }
        }
    }

    pub fn summary(&self) -> String {
        alloc::format!(
            "{}: {} vertices, {} reflex, {} triangles, band {}",
            self.name,
            self.vertices.len(),
            self.reflex.iter().filter(|&&r| r).count(),
            self.triangles.len(),
            self.projection_band
        )
    }
}

fn segments_touch(a: Point, b: Point, c: Point, d: Point, tol: f64) -> bool {
    let d1 = orient(a, b, c);
    let d2 = orient(a, b, d);
    let d3 = orient(c, d, a);
    let d4 = orient(c, d, b);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let near = |p: Point, s: Point, t: Point| closest_on_segment(s, t, p).0.dist(p) <= tol;
    near(c, a, b) || near(d, a, b) || near(a, c, d) || near(b, c, d)
}

fn triangle_neighbors(tris: &[[usize; 3]]) -> Vec<[Option<usize>; 3]> {
    let mut edges: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
    let mut out = alloc::vec![[None; 3]; tris.len()];
    for (ti, t) in tris.iter().enumerate() {
        for k in 0..3 {
            let (u, v) = (t[k], t[(k + 1) % 3]);
            let key = (u.min(v), u.max(v));
            if let Some(&(tj, kj)) = edges.get(&key) {
                out[ti][k] = Some(tj);
                out[tj][kj] = Some(ti);
            } else {
                edges.insert(key, (ti, k));
            }
        }
    }
    out
}

impl core::fmt::Display for Membership {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Membership::Interior => "interior",
            Membership::Boundary => "boundary",
            Membership::Exterior => "exterior",
        })
    }
}

impl core::fmt::Display for ConeKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            ConeKind::Interior => "interior",
            ConeKind::Edge => "edge",
            ConeKind::ConvexVertex => "convex-vertex",
            ConeKind::ReflexVertex => "reflex-vertex",
        })
    }
}

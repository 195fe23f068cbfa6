//! Shortest paths in the closed polygon and the quantities derived from them:
//! `Ψ` (squared geodesic distance), log maps and rotation angles.
//!
//! [`geodesic`] runs the funnel algorithm over the sleeve of triangles joining
//! the endpoints; [`geodesic_oracle`] is an independent visibility-graph
//! Dijkstra used to cross-check it.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::math;
use crate::vec2::{orient, Point, Vec2};

/// Constant-speed polyline geodesic. Interior waypoints are reflex vertices
/// of the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicPath {
    pub waypoints: Vec<Point>,
    pub length: f64,
}

impl GeodesicPath {
    fn from_waypoints(raw: Vec<Point>) -> GeodesicPath {
        let waypoints = simplify(raw);
        let length = waypoints.windows(2).map(|w| w[0].dist(w[1])).sum();
        GeodesicPath { waypoints, length }
    }

    pub fn start(&self) -> Point {
        self.waypoints[0]
    }

    pub fn end(&self) -> Point {
        *self.waypoints.last().unwrap()
    }

    /// Unit direction of the first leg; `None` when the endpoints coincide.
    pub fn start_direction(&self) -> Option<Vec2> {
        match self.waypoints.as_slice() {
            [a, b, ..] => (*b - *a).normalized(),
            _ => None,
        }
    }

    /// Unit direction of travel on arrival at the end point.
    pub fn end_direction(&self) -> Option<Vec2> {
        let n = self.waypoints.len();
        if n < 2 {
            return None;
        }
        (self.waypoints[n - 1] - self.waypoints[n - 2]).normalized()
    }

    /// Reflex vertices the path bends around, in order.
    pub fn bends(&self) -> &[Point] {
        let n = self.waypoints.len();
        if n <= 2 {
            &[]
        } else {
            &self.waypoints[1..n - 1]
        }
    }

    /// Signed turning angle at each bend (positive = counterclockwise).
    pub fn turn_angles(&self) -> Vec<f64> {
        self.waypoints
            .windows(3)
            .map(|w| (w[1] - w[0]).signed_angle_to(w[2] - w[1]))
            .collect()
    }

    /// Total signed turning, wrapped into `(-π, π]`.
    pub fn rotation_angle(&self) -> f64 {
        math::wrap_angle(self.turn_angles().iter().sum())
    }

    /// Velocity of the unit-time parametrization at the start.
    pub fn initial_velocity(&self) -> Vec2 {
        self.start_direction().map_or(Vec2::ZERO, |d| d * self.length)
    }

    /// Velocity of the unit-time parametrization at parameter `t`
    /// (right-continuous at bends).
    pub fn velocity_at(&self, t: f64) -> Vec2 {
        if self.length == 0.0 {
            return Vec2::ZERO;
        }
        let target = t.clamp(0.0, 1.0) * self.length;
        let mut acc = 0.0;
        for w in self.waypoints.windows(2) {
            let seg = w[0].dist(w[1]);
            if acc + seg > target || core::ptr::eq(w, self.waypoints.windows(2).last().unwrap()) {
                return (w[1] - w[0]) * (self.length / seg);
            }
            acc += seg;
        }
        Vec2::ZERO
    }

    /// Point at arc length `t × length`.
    pub fn point_at(&self, t: f64) -> Result<Point> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::ParameterRange(t));
        }
        if t == 1.0 {
            return Ok(self.end());
        }
        let target = t * self.length;
        let mut acc = 0.0;
        for w in self.waypoints.windows(2) {
            let seg = w[0].dist(w[1]);
            if acc + seg >= target {
                let s = if seg > 0.0 { (target - acc) / seg } else { 0.0 };
                return Ok(w[0].lerp(w[1], s));
            }
            acc += seg;
        }
        Ok(self.end())
    }

    pub fn reversed(&self) -> GeodesicPath {
        let mut waypoints = self.waypoints.clone();
        waypoints.reverse();
        GeodesicPath { waypoints, length: self.length }
    }
}

/// Point at parameter `t ∈ [0, 1]` of the constant-speed path.
pub fn geodesic_point(path: &GeodesicPath, t: f64) -> Result<Point> {
    path.point_at(t)
}

/// Drops repeated points and bends with no turn.
fn simplify(raw: Vec<Point>) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(raw.len());
    let last = *raw.last().unwrap();
    for p in raw {
        if out.last().is_some_and(|q| q.dist(p) <= 1e-15 * (1.0 + q.norm())) {
            continue;
        }
        while out.len() >= 2 {
            let (a, b) = (out[out.len() - 2], out[out.len() - 1]);
            let (u, v) = (b - a, p - b);
            if orient(a, b, p).abs() <= 1e-12 * u.norm() * v.norm() && u.dot(v) > 0.0 {
                out.pop();
            } else {
                break;
            }
        }
        out.push(p);
    }
    if out.is_empty() {
        out.push(last);
    }
    out
}

/// The shortest path from `x` to `y` in the closed domain.
pub fn geodesic(d: &Domain, x: Point, y: Point) -> Result<GeodesicPath> {
    d.require_inside(x)?;
    d.require_inside(y)?;
    if x == y {
        return Ok(GeodesicPath { waypoints: alloc::vec![x], length: 0.0 });
    }
    let cx = d.locate(x);
    let cy = d.locate(y);
    let sleeve = match shortest_sleeve(d, &cx, &cy) {
        Some(s) => s,
        // Points within τ_b of the boundary can miss every closed triangle by
        // rounding; fall back to the nearest triangle.
        None => {
            let cx = if cx.is_empty() { alloc::vec![nearest_triangle(d, x)] } else { cx };
            let cy = if cy.is_empty() { alloc::vec![nearest_triangle(d, y)] } else { cy };
            shortest_sleeve(d, &cx, &cy).expect("triangulation is connected")
        }
    };
    if sleeve.len() == 1 {
        return Ok(GeodesicPath::from_waypoints(alloc::vec![x, y]));
    }
    let portals = portals(d, x, y, &sleeve);
    Ok(GeodesicPath::from_waypoints(funnel(&portals)))
}

fn nearest_triangle(d: &Domain, p: Point) -> usize {
    let vs = d.vertices();
    let mut best = (f64::INFINITY, 0);
    for (i, t) in d.triangles().iter().enumerate() {
        let c = (vs[t[0]] + vs[t[1]] + vs[t[2]]) * (1.0 / 3.0);
        let dist = c.dist(p);
        if dist < best.0 {
            best = (dist, i);
        }
    }
    best.1
}

/// Shortest dual-tree path between any candidate start and end triangle.
fn shortest_sleeve(d: &Domain, from: &[usize], to: &[usize]) -> Option<Vec<usize>> {
    if from.is_empty() || to.is_empty() {
        return None;
    }
    let nbrs = d.triangle_neighbors();
    let nt = nbrs.len();
    let mut best: Option<Vec<usize>> = None;
    for &s in from {
        let mut prev = alloc::vec![usize::MAX; nt];
        let mut queue = VecDeque::new();
        prev[s] = s;
        queue.push_back(s);
        let mut hit = None;
        while let Some(t) = queue.pop_front() {
            if to.contains(&t) {
                hit = Some(t);
                break;
            }
            for nb in nbrs[t].iter().flatten() {
                if prev[*nb] == usize::MAX {
                    prev[*nb] = t;
                    queue.push_back(*nb);
                }
            }
        }
        let Some(mut t) = hit else { continue };
        let mut path = alloc::vec![t];
        while t != s {
            t = prev[t];
            path.push(t);
        }
        path.reverse();
        if best.as_ref().map_or(true, |b| path.len() < b.len()) {
            best = Some(path);
        }
    }
    best
}

/// Portals `(left, right)` seen when walking the sleeve, framed by the
/// degenerate portals at `x` and `y`.
fn portals(d: &Domain, x: Point, y: Point, sleeve: &[usize]) -> Vec<(Point, Point)> {
    let tris = d.triangles();
    let nbrs = d.triangle_neighbors();
    let vs = d.vertices();
    let mut out = Vec::with_capacity(sleeve.len() + 1);
    out.push((x, x));
    for w in sleeve.windows(2) {
        let (a, b) = (w[0], w[1]);
        let k = (0..3).find(|&k| nbrs[a][k] == Some(b)).expect("consecutive sleeve triangles share an edge");
        let (u, v) = (tris[a][k], tris[a][(k + 1) % 3]);
        // Leaving a counterclockwise triangle through `u → v`, `v` is on the left.
        out.push((vs[v], vs[u]));
    }
    out.push((y, y));
    out
}

/// Simple stupid funnel over the portal sequence.
fn funnel(portals: &[(Point, Point)]) -> Vec<Point> {
    let start = portals[0].0;
    let end = portals[portals.len() - 1].0;
    let mut path = alloc::vec![start];
    let (mut apex, mut left, mut right) = (start, start, start);
    let (mut left_i, mut right_i) = (0usize, 0usize);
    let mut i = 1;
    let mut guard = 0usize;
    while i < portals.len() {
        guard += 1;
        assert!(guard < 16 * portals.len() * portals.len() + 64, "funnel failed to progress");
        let (pl, pr) = portals[i];

        if orient(apex, right, pr) >= 0.0 {
            if apex == right || orient(apex, left, pr) < 0.0 {
                right = pr;
                right_i = i;
            } else {
                path.push(left);
                apex = left;
                right = apex;
                right_i = left_i;
                i = left_i + 1;
                continue;
            }
        }

        if orient(apex, left, pl) <= 0.0 {
            if apex == left || orient(apex, right, pl) > 0.0 {
                left = pl;
                left_i = i;
            } else {
                path.push(right);
                apex = right;
                left = apex;
                left_i = right_i;
                i = right_i + 1;
                continue;
            }
        }
        i += 1;
    }
    if *path.last().unwrap() != end {
        path.push(end);
    }
    path
}

/// Shortest path by Dijkstra over the visibility graph of `{x, y}` and the
/// polygon vertices.
pub fn geodesic_oracle(d: &Domain, x: Point, y: Point) -> Result<GeodesicPath> {
    VisibilityOracle::new(d).geodesic(x, y)
}

/// Visibility graph between polygon vertices, reusable across queries.
#[derive(Debug, Clone)]
pub struct VisibilityOracle<'a> {
    domain: &'a Domain,
    /// Symmetric matrix of vertex–vertex visibility.
    visible: Vec<bool>,
}

impl<'a> VisibilityOracle<'a> {
    pub fn new(domain: &'a Domain) -> Self {
        let n = domain.vertex_count();
        let vs = domain.vertices();
        let mut visible = alloc::vec![false; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = j == i + 1 || (i == 0 && j == n - 1) || domain.segment_inside(vs[i], vs[j]);
                visible[i * n + j] = v;
                visible[j * n + i] = v;
            }
        }
        VisibilityOracle { domain, visible }
    }

    pub fn geodesic(&self, x: Point, y: Point) -> Result<GeodesicPath> {
        let d = self.domain;
        d.require_inside(x)?;
        d.require_inside(y)?;
        if x == y {
            return Ok(GeodesicPath { waypoints: alloc::vec![x], length: 0.0 });
        }
        if d.segment_inside(x, y) {
            return Ok(GeodesicPath::from_waypoints(alloc::vec![x, y]));
        }
        let n = d.vertex_count();
        let vs = d.vertices();
        // Nodes: 0..n polygon vertices, n = x, n + 1 = y.
        let pos = |k: usize| match k {
            k if k < n => vs[k],
            k if k == n => x,
            _ => y,
        };
        let from_x: Vec<bool> = (0..n).map(|k| d.segment_inside(x, vs[k])).collect();
        let to_y: Vec<bool> = (0..n).map(|k| d.segment_inside(vs[k], y)).collect();
        let edge = |a: usize, b: usize| -> bool {
            match (a.min(b), a.max(b)) {
                (i, j) if j < n => self.visible[i * n + j],
                (i, j) if j == n => i < n && from_x[i],
                (i, _) if i < n => to_y[i],
                _ => false,
            }
        };
        let total = n + 2;
        let mut dist = alloc::vec![f64::INFINITY; total];
        let mut prev = alloc::vec![usize::MAX; total];
        let mut done = alloc::vec![false; total];
        dist[n] = 0.0;
        loop {
            let mut u = usize::MAX;
            for k in 0..total {
                if !done[k] && dist[k].is_finite() && (u == usize::MAX || dist[k] < dist[u]) {
                    u = k;
                }
            }
            if u == usize::MAX || u == n + 1 {
                break;
            }
            done[u] = true;
            for v in 0..total {
                if v == u || done[v] || !edge(u, v) {
                    continue;
                }
                let alt = dist[u] + pos(u).dist(pos(v));
                if alt < dist[v] {
                    dist[v] = alt;
                    prev[v] = u;
                }
            }
        }
        if !dist[n + 1].is_finite() {
            return Err(Error::Geometry("visibility graph is disconnected".into()));
        }
        let mut chain = alloc::vec![y];
        let mut k = n + 1;
        while prev[k] != usize::MAX {
            k = prev[k];
            chain.push(pos(k));
        }
        chain.reverse();
        Ok(GeodesicPath::from_waypoints(chain))
    }
}

/// Squared geodesic distance `Ψ(x, y)`.
pub fn psi(d: &Domain, x: Point, y: Point) -> Result<f64> {
    let g = geodesic(d, x, y)?;
    Ok(g.length * g.length)
}

/// Geodesic distance.
pub fn distance(d: &Domain, x: Point, y: Point) -> Result<f64> {
    Ok(geodesic(d, x, y)?.length)
}

/// Initial velocity of the unit-time geodesic from `x` to `y`.
pub fn log_map(d: &Domain, x: Point, y: Point) -> Result<Vec2> {
    Ok(geodesic(d, x, y)?.initial_velocity())
}

/// The angle `θ` with `-direction(→yx) = R(θ) direction(→xy)`; zero when
/// `x = y`.
pub fn rotation_angle(d: &Domain, x: Point, y: Point) -> Result<f64> {
    Ok(geodesic(d, x, y)?.rotation_angle())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, lshape, p, square};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample(d: &Domain, rng: &mut ChaCha8Rng) -> Point {
        let (lo, hi) = d.bounding_box();
        loop {
            let q = p(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
            if d.is_inside(q) {
                return q;
            }
        }
    }

    #[test]
    fn straight_in_square() {
        let g = geodesic(&square(), p(0.1, 0.1), p(0.9, 0.9)).unwrap();
        assert_eq!(g.waypoints, [p(0.1, 0.1), p(0.9, 0.9)]);
        assert_abs_diff_eq!(g.length, 0.8 * 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn lshape_bends_at_reflex_corner() {
        let l = lshape();
        let g = geodesic(&l, p(1.9, 0.5), p(0.5, 1.9)).unwrap();
        assert_eq!(g.waypoints, [p(1.9, 0.5), p(1.0, 1.0), p(0.5, 1.9)]);
        assert_abs_diff_eq!(g.length, 2.0 * 1.06f64.sqrt(), epsilon = 1e-14);
        let o = geodesic_oracle(&l, p(1.9, 0.5), p(0.5, 1.9)).unwrap();
        assert_abs_diff_eq!(o.length, g.length, epsilon = 1e-14);
        assert_eq!(o.waypoints, g.waypoints);
    }

    #[test]
    fn grazing_chord_is_straight() {
        let l = lshape();
        for g in [geodesic(&l, p(1.5, 0.5), p(0.5, 1.5)).unwrap(), geodesic_oracle(&l, p(1.5, 0.5), p(0.5, 1.5)).unwrap()] {
            assert_eq!(g.waypoints.len(), 2);
            assert_abs_diff_eq!(g.length, 2f64.sqrt(), epsilon = 1e-14);
        }
    }

    #[test]
    fn identical_endpoints() {
        let g = geodesic(&lshape(), p(0.3, 0.3), p(0.3, 0.3)).unwrap();
        assert_eq!(g.waypoints, [p(0.3, 0.3)]);
        assert_eq!(g.length, 0.0);
        assert!(g.start_direction().is_none());
        assert_eq!(rotation_angle(&lshape(), p(0.3, 0.3), p(0.3, 0.3)).unwrap(), 0.0);
        assert_eq!(log_map(&lshape(), p(0.3, 0.3), p(0.3, 0.3)).unwrap(), Vec2::ZERO);
    }

    #[test]
    fn psi_examples() {
        assert_abs_diff_eq!(psi(&square(), p(0.0, 0.0), p(1.0, 1.0)).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(psi(&lshape(), p(1.9, 0.5), p(0.5, 1.9)).unwrap(), 4.24, epsilon = 1e-14);
        assert_abs_diff_eq!(
            geodesic_oracle(&square(), p(0.0, 0.0), p(1.0, 1.0)).unwrap().length,
            2f64.sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn log_map_examples() {
        let v = log_map(&square(), p(0.2, 0.2), p(0.8, 0.8)).unwrap();
        assert_abs_diff_eq!(v.x, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(v.y, 0.6, epsilon = 1e-15);
        let v = log_map(&lshape(), p(1.9, 0.5), p(0.5, 1.9)).unwrap();
        let expected = p(-0.9, 0.5) * 2.0;
        assert_abs_diff_eq!(v.x, expected.x, epsilon = 1e-14);
        assert_abs_diff_eq!(v.y, expected.y, epsilon = 1e-14);
    }

    #[test]
    fn rotation_angle_examples() {
        assert_eq!(rotation_angle(&square(), p(0.1, 0.7), p(0.9, 0.2)).unwrap(), 0.0);
        let th = rotation_angle(&lshape(), p(1.9, 0.5), p(0.5, 1.9)).unwrap();
        let oracle = p(0.9, 0.5).angle() - p(0.5, 0.9).angle();
        assert_abs_diff_eq!(th, p(-0.5, 0.9).angle() - p(-0.9, 0.5).angle(), epsilon = 1e-15);
        assert_abs_diff_eq!(th, oracle, epsilon = 1e-15);
        assert_abs_diff_eq!(th, -0.556_599_318_010_222_9, epsilon = 1e-12);
    }

    #[test]
    fn geodesic_point_examples() {
        let g = geodesic(&square(), p(0.0, 0.0), p(1.0, 0.0)).unwrap();
        assert_eq!(g.point_at(0.25).unwrap(), p(0.25, 0.0));
        assert_eq!(g.point_at(1.0).unwrap(), p(1.0, 0.0));
        let g = geodesic(&lshape(), p(1.9, 0.5), p(0.5, 1.9)).unwrap();
        let m = g.point_at(0.5).unwrap();
        assert_abs_diff_eq!(m.x, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.y, 1.0, epsilon = 1e-14);
        assert!(matches!(g.point_at(1.5), Err(Error::ParameterRange(_))));
        assert!(matches!(g.point_at(f64::NAN), Err(Error::ParameterRange(_))));
    }

    #[test]
    fn exterior_endpoints_are_rejected() {
        assert!(matches!(geodesic(&lshape(), p(1.5, 1.5), p(0.5, 0.5)), Err(Error::ExteriorPoint(_))));
        assert!(matches!(geodesic_oracle(&lshape(), p(0.5, 0.5), p(3.0, 0.5)), Err(Error::ExteriorPoint(_))));
    }

    #[test]
    fn funnel_matches_oracle_on_fixtures() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in fixtures::all() {
            let oracle = VisibilityOracle::new(&d);
            for _ in 0..100 {
                let (x, y) = (sample(&d, &mut rng), sample(&d, &mut rng));
                let g = geodesic(&d, x, y).unwrap();
                let o = oracle.geodesic(x, y).unwrap();
                assert!((g.length - o.length).abs() <= 1e-9 * (1.0 + o.length), "{}: {:?} vs {:?}", d.name(), g, o);
            }
        }
    }

    #[test]
    fn waypoints_and_endpoints_on_vertices() {
        let d = fixtures::spiral();
        let vs = d.vertices();
        let g = geodesic(&d, vs[6], vs[11]).unwrap();
        let o = geodesic_oracle(&d, vs[6], vs[11]).unwrap();
        assert_abs_diff_eq!(g.length, o.length, epsilon = 1e-12);
        assert_eq!(g.waypoints, o.waypoints);
    }

    #[test]
    fn spiral_rotation_wraps() {
        let d = fixtures::spiral();
        let g = geodesic(&d, p(2.5, 2.5), p(0.5, 0.5)).unwrap();
        let total: f64 = g.turn_angles().iter().sum();
        assert!(total.abs() > core::f64::consts::PI);
        let th = g.rotation_angle();
        assert!(th > -core::f64::consts::PI && th <= core::f64::consts::PI);
        let end = g.start_direction().unwrap().rotate(th);
        assert_abs_diff_eq!(end.x, g.end_direction().unwrap().x, epsilon = 1e-12);
        assert_abs_diff_eq!(end.y, g.end_direction().unwrap().y, epsilon = 1e-12);
    }
}

//! Ear-clipping triangulation of a simple counterclockwise polygon.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::vec2::{orient, Point};

/// Closed containment of `p` in the counterclockwise triangle `abc`, with a
/// slack `eps` on the orientation tests.
pub(crate) fn in_closed_triangle(p: Point, a: Point, b: Point, c: Point, eps: f64) -> bool {
    orient(a, b, p) >= -eps && orient(b, c, p) >= -eps && orient(c, a, p) >= -eps
}

fn min_angle_cos(a: Point, b: Point, c: Point) -> f64 {
    // Largest cosine among the three corners, i.e. the sharpest corner.
    let corner = |p: Point, q: Point, r: Point| {
        let u = (q - p).normalized().unwrap_or_default();
        let v = (r - p).normalized().unwrap_or_default();
        u.dot(v)
    };
    corner(a, b, c).max(corner(b, c, a)).max(corner(c, a, b))
}

/// Triangulates the polygon `vs` (counterclockwise, simple). Among the
/// available ears the one with the widest sharpest corner is clipped first,
/// which keeps slivers out of the point-location step.
pub(crate) fn ear_clip(vs: &[Point], scale: f64) -> Result<Vec<[usize; 3]>> {
    let n = vs.len();
    let eps = 1e-12 * scale * scale;
    let mut ring: Vec<usize> = (0..n).collect();
    let mut tris = Vec::with_capacity(n.saturating_sub(2));
    while ring.len() > 3 {
        let m = ring.len();
        let mut best: Option<(usize, f64)> = None;
        for k in 0..m {
            let (a, b, c) = (ring[(k + m - 1) % m], ring[k], ring[(k + 1) % m]);
            if orient(vs[a], vs[b], vs[c]) <= eps {
                continue;
            }
            let blocked = ring
                .iter()
                .any(|&j| j != a && j != b && j != c && in_closed_triangle(vs[j], vs[a], vs[b], vs[c], eps));
            if blocked {
                continue;
            }
            let q = min_angle_cos(vs[a], vs[b], vs[c]);
            if best.map_or(true, |(_, bq)| q < bq) {
                best = Some((k, q));
            }
        }
        let (k, _) = best.ok_or_else(|| Error::Geometry("no ear found; polygon is not simple".into()))?;
        let (a, b, c) = (ring[(k + m - 1) % m], ring[k], ring[(k + 1) % m]);
        tris.push([a, b, c]);
        ring.remove(k);
    }
    let (a, b, c) = (ring[0], ring[1], ring[2]);
    if orient(vs[a], vs[b], vs[c]) <= eps {
        return Err(Error::Geometry("degenerate final triangle".into()));
    }
    tris.push([a, b, c]);
    Ok(tris)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn area(vs: &[Point], t: &[usize; 3]) -> f64 {
        0.5 * orient(vs[t[0]], vs[t[1]], vs[t[2]])
    }

    #[test]
    fn triangulation_area_matches_polygon_area() {
        let vs: Vec<Point> = [(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)]
            .iter()
            .map(|&(x, y)| Point::new(x, y))
            .collect();
        let tris = ear_clip(&vs, 2.0).unwrap();
        assert_eq!(tris.len(), 4);
        let total: f64 = tris.iter().map(|t| area(&vs, t)).sum();
        assert!((total - 3.0).abs() < 1e-14);
        assert!(tris.iter().all(|t| area(&vs, t) > 0.0));
    }
}

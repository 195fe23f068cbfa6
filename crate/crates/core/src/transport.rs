//! Drift transport with reflection at the boundary.
//!
//! Starting from `y`, the point moves with constant velocity `drift` for a
//! duration `h` and is pushed back into the domain along the normal cone.
//! In the scheme this traverses one time step backwards, from `tᵢ₊₁` to `tᵢ`.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::geodesic::psi;
use crate::math;
use crate::vec2::{Point, Vec2};

/// Default substep length as a fraction of the projection band.
pub const SUBSTEP_BAND_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct TransportResult {
    pub endpoint: Point,
    /// `endpoint - start - drift·h`: the accumulated reflection.
    pub k_increment: Vec2,
    pub substeps: usize,
    /// Substep points including both ends, when requested.
    pub path: Option<Vec<Point>>,
}

/// Substep count keeping `|drift|·δ ≤ 10⁻³ × projection band`.
pub fn default_substeps(d: &Domain, drift: Vec2, h: f64) -> usize {
    let travel = drift.norm() * h;
    let cap = SUBSTEP_BAND_FRACTION * d.projection_band();
    if travel <= cap {
        1
    } else {
        math::ceil(travel / cap) as usize
    }
}

/// Projected Euler solution of the reflected ODE over `substeps` steps.
pub fn reflect_transport(d: &Domain, y: Point, drift: Vec2, h: f64, substeps: usize, record_path: bool) -> Result<TransportResult> {
    d.require_inside(y)?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument(alloc::format!("duration must be positive, got {h}")));
    }
    if substeps == 0 {
        return Err(Error::InvalidArgument("need at least one substep".into()));
    }
    if !drift.is_finite() {
        return Err(Error::InvalidArgument("drift is not finite".into()));
    }
    let delta = h / substeps as f64;
    let step = drift * delta;
    let band = d.projection_band();
    if step.norm() >= 0.5 * band {
        return Err(Error::StepTooLarge { substep_length: step.norm(), band });
    }

    let free_end = y + drift * h;
    if d.segment_inside(y, free_end) {
        let path = record_path.then(|| (0..=substeps).map(|k| y + drift * (delta * k as f64)).collect());
        return Ok(TransportResult { endpoint: free_end, k_increment: Vec2::ZERO, substeps, path });
    }

    let mut r = y;
    let mut path = record_path.then(|| {
        let mut v = Vec::with_capacity(substeps + 1);
        v.push(y);
        v
    });
    for _ in 0..substeps {
        r = d.project(r + step);
        if let Some(p) = path.as_mut() {
            p.push(r);
        }
    }
    Ok(TransportResult { endpoint: r, k_increment: r - y - drift * h, substeps, path })
}

/// [`reflect_transport`] with [`default_substeps`].
pub fn transport(d: &Domain, y: Point, drift: Vec2, h: f64) -> Result<TransportResult> {
    reflect_transport(d, y, drift, h, default_substeps(d, drift, h), false)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzReport {
    pub samples: usize,
    /// Smallest `C₁` with `Ψ(R(y), R(y')) ≤ (1 + C₁h) Ψ(y, y')` on all samples.
    pub fitted_c1: f64,
    /// Largest `|R(y) - y| / (|drift| h)` observed.
    pub speed_ratio: f64,
    /// Allowed excess of `speed_ratio` over 1.
    pub slack: f64,
    /// Pair attaining `fitted_c1`.
    pub worst_pair: (Point, Point),
    pub pass: bool,
}

/// Samples `(y, y', drift)` triples with `|drift| ≤ drift_bound` and fits the
/// constants of the transport Lipschitz estimates.
pub fn skorokhod_lipschitz_check(
    d: &Domain,
    samples: usize,
    h: f64,
    substeps: usize,
    drift_bound: f64,
    seed: u64,
) -> Result<LipschitzReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slack = 1e-9;
    let mut c1: f64 = 0.0;
    let mut speed: f64 = 0.0;
    let mut worst = (Point::ZERO, Point::ZERO);
    for _ in 0..samples {
        let y = d.sample_point(&mut rng);
        let y2 = d.sample_point(&mut rng);
        let ang = rng.gen_range(0.0..2.0 * core::f64::consts::PI);
        let mag = rng.gen_range(0.0..=drift_bound);
        let drift = Vec2::new(mag * math::cos(ang), mag * math::sin(ang));
        let a = reflect_transport(d, y, drift, h, substeps, false)?;
        let b = reflect_transport(d, y2, drift, h, substeps, false)?;
        let before = psi(d, y, y2)?;
        let after = psi(d, a.endpoint, b.endpoint)?;
        if before > 0.0 {
            let c = (after / before - 1.0) / h;
            if c > c1 {
                c1 = c;
                worst = (y, y2);
            }
        }
        if mag > 0.0 {
            speed = speed.max(a.endpoint.dist(y) / (mag * h)).max(b.endpoint.dist(y2) / (mag * h));
        }
    }
    Ok(LipschitzReport {
        samples,
        fitted_c1: c1,
        speed_ratio: speed,
        slack,
        worst_pair: worst,
        pass: c1.is_finite() && speed <= 1.0 + slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{lshape, p, square};
    use approx::assert_abs_diff_eq;

    #[test]
    fn free_flight() {
        for substeps in [1, 7, 100] {
            let r = reflect_transport(&square(), p(0.5, 0.5), p(0.1, 0.0), 1.0, substeps, false).unwrap();
            assert_eq!(r.endpoint, p(0.6, 0.5));
            assert_eq!(r.k_increment, Vec2::ZERO);
        }
    }

    #[test]
    fn wall_hit_matches_exact_reflected_ode() {
        let r = reflect_transport(&square(), p(0.95, 0.5), p(1.0, 0.0), 0.2, 1000, false).unwrap();
        assert_abs_diff_eq!(r.endpoint.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.endpoint.y, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.k_increment.x, -0.15, epsilon = 1e-12);
        assert_abs_diff_eq!(r.k_increment.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_drift_is_identity() {
        let r = reflect_transport(&lshape(), p(1.0, 1.0), Vec2::ZERO, 0.3, 3, false).unwrap();
        assert_eq!(r.endpoint, p(1.0, 1.0));
        assert_eq!(r.k_increment, Vec2::ZERO);
    }

    #[test]
    fn oversized_substep_is_rejected() {
        let r = reflect_transport(&lshape(), p(0.5, 0.5), p(10.0, 0.0), 1.0, 2, false);
        assert!(matches!(r, Err(Error::StepTooLarge { .. })));
        assert!(matches!(reflect_transport(&lshape(), p(0.5, 0.5), p(1.0, 0.0), 0.1, 0, false), Err(Error::InvalidArgument(_))));
        assert!(matches!(reflect_transport(&lshape(), p(1.5, 1.5), p(1.0, 0.0), 0.1, 1, false), Err(Error::ExteriorPoint(_))));
    }

    #[test]
    fn reflection_directions_lie_in_normal_cones() {
        let l = lshape();
        let drifts = [p(1.0, 1.0), p(2.0, 0.3), p(-1.0, -2.0), p(0.4, 2.0)];
        let starts = [p(1.8, 0.9), p(0.9, 1.8), p(0.05, 0.05), p(0.6, 0.95)];
        for (y, f) in starts.iter().zip(drifts) {
            let h = 0.5;
            let n = default_substeps(&l, f, h);
            let r = reflect_transport(&l, *y, f, h, n, true).unwrap();
            let path = r.path.unwrap();
            let delta = h / n as f64;
            for w in path.windows(2) {
                let disp = w[1] - (w[0] + f * delta);
                if disp.norm() > 1e-13 {
                    let cone = l.normal_cone(w[1]).unwrap();
                    assert!(cone.angle_to(-disp) <= 1e-3, "{:?} {:?} {:?}", w[1], disp, cone);
                }
            }
            assert!(l.is_inside(r.endpoint));
        }
    }

    #[test]
    fn first_order_substep_convergence() {
        let l = lshape();
        let (y, f, h) = (p(1.5, 0.8), p(-1.0, 1.5), 0.4);
        let mut prev: Option<Point> = None;
        for s in [50usize, 100, 200, 400, 800] {
            let e = reflect_transport(&l, y, f, h, s, false).unwrap().endpoint;
            if let Some(q) = prev {
                assert!(q.dist(e) <= 1.0 / s as f64, "{s}: {}", q.dist(e));
            }
            prev = Some(e);
        }
    }

    #[test]
    fn lipschitz_check_examples() {
        let r = skorokhod_lipschitz_check(&square(), 200, 0.05, 50, 0.0, 1).unwrap();
        assert_eq!(r.fitted_c1, 0.0);
        assert!(r.pass);
        let r = skorokhod_lipschitz_check(&lshape(), 300, 0.05, 100, 1.0, 2).unwrap();
        assert!(r.fitted_c1.is_finite());
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn interior_translation_is_isometry() {
        let sq = square();
        let (y, y2, f) = (p(0.2, 0.3), p(0.4, 0.6), p(1.0, 0.0));
        let a = transport(&sq, y, f, 0.1).unwrap();
        let b = transport(&sq, y2, f, 0.1).unwrap();
        assert_abs_diff_eq!(psi(&sq, a.endpoint, b.endpoint).unwrap(), psi(&sq, y, y2).unwrap(), epsilon = 1e-15);
    }
}

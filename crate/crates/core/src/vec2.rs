//! Planar points and vectors.

use core::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::math;

/// A planar vector. Points of the domain use the same representation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

/// A point of the plane.
pub type Point = Vec2;

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        math::sqrt(self.norm_sq())
    }

    #[inline]
    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }

    /// Counterclockwise quarter turn.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    /// Rotation by `theta` radians counterclockwise.
    pub fn rotate(self, theta: f64) -> Vec2 {
        let (s, c) = (math::sin(theta), math::cos(theta));
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Polar angle in `(-π, π]`.
    #[inline]
    pub fn angle(self) -> f64 {
        math::atan2(self.y, self.x)
    }

    /// Signed angle in `(-π, π]` turning `self` onto `o`.
    pub fn signed_angle_to(self, o: Vec2) -> f64 {
        math::atan2(self.cross(o), self.dot(o))
    }

    #[inline]
    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        self + (o - self) * t
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Vec2 {
    #[inline]
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

/// Orientation of `c` relative to the directed line `a → b`: positive when
/// `c` lies to the left.
#[inline]
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

/// Closest point to `p` on the segment `[a, b]` and its parameter in `[0, 1]`.
pub fn closest_on_segment(a: Point, b: Point, p: Point) -> (Point, f64) {
    let d = b - a;
    let len2 = d.norm_sq();
    if len2 == 0.0 {
        return (a, 0.0);
    }
    let t = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    (a + d * t, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn signed_angle_matches_turn_direction() {
        let a = Vec2::new(1.0, 0.0);
        assert_abs_diff_eq!(a.signed_angle_to(Vec2::new(0.0, 1.0)), core::f64::consts::FRAC_PI_2);
        assert_abs_diff_eq!(a.signed_angle_to(Vec2::new(0.0, -1.0)), -core::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn rotate_is_inverse_of_signed_angle() {
        let a = Vec2::new(-0.9, 0.5);
        let b = Vec2::new(-0.5, 0.9);
        let th = a.signed_angle_to(b);
        let r = a.normalized().unwrap().rotate(th);
        let bn = b.normalized().unwrap();
        assert_abs_diff_eq!(r.x, bn.x, epsilon = 1e-15);
        assert_abs_diff_eq!(r.y, bn.y, epsilon = 1e-15);
    }

    #[test]
    fn closest_point_clamps() {
        let (q, t) = closest_on_segment(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(2.0, 1.0));
        assert_eq!(q, Vec2::new(1.0, 0.0));
        assert_eq!(t, 1.0);
    }
}

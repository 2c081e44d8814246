use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Point or vector in the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x1: f64,
    pub x2: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x1: 0.0, x2: 0.0 };

    pub const fn new(x1: f64, x2: f64) -> Self {
        Vec2 { x1, x2 }
    }

    /// Unit vector at angle `theta`.
    pub fn polar(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Vec2::new(c, s)
    }

    /// `(u2, -u1)`: clockwise quarter turn.
    pub fn perp(self) -> Self {
        Vec2::new(self.x2, -self.x1)
    }

    /// Counterclockwise quarter turn, the inverse of [`Vec2::perp`].
    pub fn rot90(self) -> Self {
        Vec2::new(-self.x2, self.x1)
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x1 * o.x1 + self.x2 * o.x2
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x1 * o.x2 - self.x2 * o.x1
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }

    pub fn angle(self) -> f64 {
        self.x2.atan2(self.x1)
    }

    pub fn normalized(self) -> Self {
        self * (1.0 / self.norm())
    }

    pub fn max_abs(self) -> f64 {
        self.x1.abs().max(self.x2.abs())
    }

    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x1, v.x2]
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x1 + o.x1, self.x2 + o.x2)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x1 - o.x1, self.x2 - o.x2)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x1, -self.x2)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x1 * s, self.x2 * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x1 += o.x1;
        self.x2 += o.x2;
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, o: Vec2) {
        self.x1 -= o.x1;
        self.x2 -= o.x2;
    }
}

/// Orthonormal frame `(t, n)` with `n = rot90(t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub origin: Vec2,
    pub t: Vec2,
    pub n: Vec2,
}

impl Frame {
    pub fn new(origin: Vec2, tangent: Vec2) -> Self {
        let t = tangent.normalized();
        Frame {
            origin,
            t,
            n: t.rot90(),
        }
    }

    /// Components of a plane vector in the frame.
    pub fn vec_to_local(&self, v: Vec2) -> Vec2 {
        Vec2::new(v.dot(self.t), v.dot(self.n))
    }

    pub fn vec_to_plane(&self, v: Vec2) -> Vec2 {
        self.t * v.x1 + self.n * v.x2
    }

    pub fn point_to_local(&self, x: Vec2) -> Vec2 {
        self.vec_to_local(x - self.origin)
    }

    pub fn point_to_plane(&self, z: Vec2) -> Vec2 {
        self.origin + self.vec_to_plane(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn perp_is_an_isometric_quarter_turn(a in -1e3..1e3f64, b in -1e3..1e3f64) {
            let v = Vec2::new(a, b);
            prop_assert_eq!(v.perp().perp(), -v);
            prop_assert_eq!(v.perp().norm(), v.norm());
            prop_assert_eq!(v.perp().rot90(), v);
        }

        #[test]
        fn frame_round_trip(a in -3.0..3.0f64, x in -5.0..5.0f64, y in -5.0..5.0f64) {
            let f = Frame::new(Vec2::new(0.3, -1.0), Vec2::polar(a));
            let p = Vec2::new(x, y);
            let back = f.point_to_plane(f.point_to_local(p));
            prop_assert!((back - p).norm() < 1e-12);
        }
    }
}

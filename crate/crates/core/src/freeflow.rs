//! Closed-form dipole flow without background potential.

use std::f64::consts::PI;

use nalgebra::Matrix4;

use crate::dynamics::{interaction_velocity, DipoleState};
use crate::error::{Error, Result};
use crate::vec2::Vec2;

/// Initial positions `(x, y)` of `(a+, a-)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasePoint {
    pub x: Vec2,
    pub y: Vec2,
}

impl PhasePoint {
    pub fn new(x: Vec2, y: Vec2) -> Self {
        PhasePoint { x, y }
    }
}

impl From<DipoleState> for PhasePoint {
    fn from(s: DipoleState) -> Self {
        PhasePoint::new(s.a_plus, s.a_minus)
    }
}

/// Rows `(a+1, a+2, a-1, a-2)`, columns `(x1, x2, y1, y2)`.
pub type Jacobian4 = Matrix4<f64>;

fn check(phi: &PhasePoint) -> Result<Vec2> {
    let d = phi.x - phi.y;
    if d.norm2() == 0.0 || !d.is_finite() {
        return Err(Error::Collision {
            separation: d.norm(),
            d_min: 0.0,
        });
    }
    Ok(d)
}

/// Both vortices translate rigidly with the interaction velocity.
pub fn free_flow(s: f64, phi: &PhasePoint) -> Result<DipoleState> {
    let d = check(phi)?;
    let w = interaction_velocity(d);
    Ok(DipoleState::new(phi.x + w * s, phi.y + w * s))
}

/// Derivative of the interaction velocity with respect to the separation.
fn interaction_jacobian(d: Vec2) -> [[f64; 2]; 2] {
    let r2 = d.norm2();
    let c = 1.0 / (PI * r2 * r2);
    let (a, b) = (d.x1, d.x2);
    [
        [-2.0 * a * b * c, (a * a - b * b) * c],
        [(a * a - b * b) * c, 2.0 * a * b * c],
    ]
}

pub fn free_flow_jacobian(s: f64, phi: &PhasePoint) -> Result<Jacobian4> {
    let d = check(phi)?;
    let dw = interaction_jacobian(d);
    let mut j = Jacobian4::identity();
    for r in 0..2 {
        for c in 0..2 {
            let v = s * dw[r][c];
            j[(r, c)] += v;
            j[(r, c + 2)] -= v;
            j[(r + 2, c)] += v;
            j[(r + 2, c + 2)] -= v;
        }
    }
    Ok(j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let phi = PhasePoint::new(Vec2::ZERO, Vec2::new(0.0, -1.0));
        let s = free_flow(PI, &phi).unwrap();
        assert!((s.a_plus - Vec2::new(1.0, 0.0)).norm() < 1e-15);
        assert!((s.a_minus - Vec2::new(1.0, -1.0)).norm() < 1e-15);
        let s0 = free_flow(0.0, &phi).unwrap();
        assert_eq!((s0.a_plus, s0.a_minus), (phi.x, phi.y));
        assert_eq!(
            free_flow_jacobian(0.0, &phi).unwrap(),
            Jacobian4::identity()
        );
        assert!(free_flow(1.0, &PhasePoint::new(Vec2::ZERO, Vec2::ZERO)).is_err());
    }

    fn fd_jacobian(s: f64, phi: &PhasePoint, h: f64) -> Jacobian4 {
        let mut j = Jacobian4::zeros();
        for c in 0..4 {
            let mut p = [phi.x.x1, phi.x.x2, phi.y.x1, phi.y.x2];
            let mut m = p;
            p[c] += h;
            m[c] -= h;
            let f = |a: [f64; 4]| {
                free_flow(
                    s,
                    &PhasePoint::new(Vec2::new(a[0], a[1]), Vec2::new(a[2], a[3])),
                )
                .unwrap()
                .to_array()
            };
            let (fp, fm) = (f(p), f(m));
            for r in 0..4 {
                j[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        j
    }

    #[test]
    fn jacobian_matches_differences_at_unit_separation() {
        let phi = PhasePoint::new(Vec2::ZERO, Vec2::new(0.0, -1.0));
        let e = (free_flow_jacobian(1.0, &phi).unwrap() - fd_jacobian(1.0, &phi, 1e-6)).amax();
        assert!(e < 1e-8, "{e}");
    }

    proptest! {
        #[test]
        fn jacobian_matches_differences(a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64,
                                        d in -2.0..2.0f64, s in 0.0..5.0f64) {
            let phi = PhasePoint::new(Vec2::new(a, b), Vec2::new(c, d));
            prop_assume!((phi.x - phi.y).norm() > 0.3);
            let e = (free_flow_jacobian(s, &phi).unwrap() - fd_jacobian(s, &phi, 1e-6)).amax();
            prop_assert!(e < 1e-7, "{}", e);
        }

        #[test]
        fn rigid_semigroup(a in -2.0..2.0f64, b in -2.0..2.0f64, s in 0.0..3.0f64, u in 0.0..3.0f64) {
            let phi = PhasePoint::new(Vec2::new(a, b), Vec2::new(0.5, -0.5));
            prop_assume!((phi.x - phi.y).norm() > 0.1);
            let one = free_flow(s + u, &phi).unwrap();
            let two = free_flow(u, &free_flow(s, &phi).unwrap().into()).unwrap();
            prop_assert!((one.a_plus - two.a_plus).norm() < 1e-13 * (1.0 + s + u));
            let sep = one.separation();
            prop_assert!((sep - (phi.x - phi.y).norm()).abs() < 1e-14 * (1.0 + s + u));
        }
    }
}

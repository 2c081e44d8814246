//! Launch families: positions of `a-` that steer `a+` through a boundary point.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{ConvexDomain, NormalChart, TildeOmega};
use crate::series::Series1;
use crate::vec2::{Frame, Vec2};

/// One-parameter family of launches `(p, xi(t))`, `t >= 0`.
pub trait LaunchFamily: Sync {
    fn base(&self) -> Vec2;
    fn xi(&self, t: f64) -> Result<Vec2>;
    /// Taylor series of `xi(t + tau)` in `tau`.
    fn xi_series(&self, t: f64, order: usize) -> Result<[Series1; 2]>;
}

/// Position of `a-` giving `a+` at `p` the velocity `v`.
pub fn xi_for_velocity(p: Vec2, v: Vec2, grad_q_p: Vec2) -> Result<Vec2> {
    let w = v - grad_q_p.perp();
    let w2 = w.norm2();
    if w2 == 0.0 || !w2.is_finite() {
        return Err(Error::DegenerateVelocity);
    }
    Ok(p + w.perp() * (1.0 / (PI * w2)))
}

/// Series form of [`xi_for_velocity`] for a velocity series `(v1, v2)` in plane coordinates.
fn xi_series_from_velocity(p: Vec2, v: [Series1; 2], grad_q_p: Vec2) -> Result<[Series1; 2]> {
    let gp = grad_q_p.perp();
    let mut w1 = v[0].clone();
    let mut w2 = v[1].clone();
    w1.c[0] -= gp.x1;
    w2.c[0] -= gp.x2;
    let n2 = &(&w1 * &w1) + &(&w2 * &w2);
    if n2.c[0] == 0.0 {
        return Err(Error::DegenerateVelocity);
    }
    let inv = n2.recip().scale(1.0 / PI);
    let mut x = &w2 * &inv;
    let mut y = &(-&w1) * &inv;
    x.c[0] += p.x1;
    y.c[0] += p.x2;
    Ok([x, y])
}

/// Tangent launch family: `a+` starts at `p` with chart velocity `eps (alpha(t), beta t)`.
#[derive(Clone, Debug)]
pub struct TangentFamily {
    pub p: Vec2,
    pub chart: NormalChart,
    pub frame: Frame,
    pub epsilon: f64,
    pub beta: f64,
    pub delta: f64,
    pub alpha_sign: f64,
    pub grad_q_p: Vec2,
}

impl TangentFamily {
    pub fn alpha(&self, t: f64) -> f64 {
        self.alpha_sign * (1.0 - (self.beta * t).powi(2)).sqrt()
    }

    /// Launch velocity of `a+` in plane coordinates.
    pub fn velocity(&self, t: f64) -> Vec2 {
        self.frame
            .vec_to_plane(Vec2::new(self.alpha(t), self.beta * t) * self.epsilon)
    }
}

impl LaunchFamily for TangentFamily {
    fn base(&self) -> Vec2 {
        self.p
    }

    fn xi(&self, t: f64) -> Result<Vec2> {
        xi_for_velocity(self.p, self.velocity(t), self.grad_q_p)
    }

    fn xi_series(&self, t: f64, order: usize) -> Result<[Series1; 2]> {
        let tt = Series1::variable(t, order);
        let bt = tt.scale(self.beta);
        let mut one_minus = (&bt * &bt).scale(-1.0);
        one_minus.c[0] += 1.0;
        let alpha = one_minus.sqrt().scale(self.alpha_sign * self.epsilon);
        let normal = bt.scale(self.epsilon);
        let (tv, nv) = (self.frame.t, self.frame.n);
        let v1 = &alpha.scale(tv.x1) + &normal.scale(nv.x1);
        let v2 = &alpha.scale(tv.x2) + &normal.scale(nv.x2);
        xi_series_from_velocity(self.p, [v1, v2], self.grad_q_p)
    }
}

/// Builds the tangent family at `gamma(theta_p)` and checks that every launch
/// point stays outside the enlarged domain.
pub fn build_family(
    tilde: &TildeOmega,
    theta_p: f64,
    grad_q_p: Vec2,
    epsilon: f64,
    beta: f64,
    delta: f64,
    alpha_sign: f64,
) -> Result<TangentFamily> {
    if !(epsilon > 0.0 && beta > 0.0 && delta > 0.0 && beta * delta < 1.0) {
        return Err(Error::InvalidInput(
            "family needs eps > 0, beta > 0, 0 < beta delta < 1".into(),
        ));
    }
    if alpha_sign.abs() != 1.0 {
        return Err(Error::InvalidInput("alpha_sign must be +1 or -1".into()));
    }
    let domain: &ConvexDomain = &tilde.domain;
    let chart = NormalChart::new(domain.clone(), theta_p)?;
    let frame = chart.frame()?;
    let fam = TangentFamily {
        p: chart.p,
        chart,
        frame,
        epsilon,
        beta,
        delta,
        alpha_sign,
        grad_q_p,
    };
    let n = 32;
    for i in 0..=n {
        let t = delta * i as f64 / n as f64 * (1.0 - 1e-9);
        if tilde.contains(fam.xi(t)?)? {
            return Err(Error::XiInsideTildeOmega { t });
        }
    }
    Ok(fam)
}

/// Launch points on a circle of radius `radius` about `p`, swept at angular rate `rate`.
#[derive(Clone, Debug)]
pub struct ArcFamily {
    pub p: Vec2,
    pub radius: f64,
    pub phi0: f64,
    pub rate: f64,
}

impl ArcFamily {
    pub fn angle(&self, t: f64) -> f64 {
        self.phi0 + self.rate * t
    }
}

impl LaunchFamily for ArcFamily {
    fn base(&self) -> Vec2 {
        self.p
    }

    fn xi(&self, t: f64) -> Result<Vec2> {
        Ok(self.p + Vec2::polar(self.angle(t)) * self.radius)
    }

    fn xi_series(&self, t: f64, order: usize) -> Result<[Series1; 2]> {
        let (c, s) = Series1::cos_sin(self.angle(t), order);
        // chain rule for the rate: coefficient k scales by rate^k
        let scale = |a: Series1| -> Series1 {
            Series1::from_coeffs(
                a.c.iter()
                    .enumerate()
                    .map(|(k, v)| v * self.rate.powi(k as i32))
                    .collect(),
            )
        };
        let mut x = scale(c).scale(self.radius);
        let mut y = scale(s).scale(self.radius);
        x.c[0] += self.p.x1;
        y.c[0] += self.p.x2;
        Ok([x, y])
    }
}

/// Reverses the parameter direction of a tangent family (`beta -> -beta`).
#[derive(Clone, Debug)]
pub struct Reversed<F>(pub F);

impl LaunchFamily for Reversed<TangentFamily> {
    fn base(&self) -> Vec2 {
        self.0.p
    }

    fn xi(&self, t: f64) -> Result<Vec2> {
        let f = &self.0;
        let v = f
            .frame
            .vec_to_plane(Vec2::new(f.alpha(t), -f.beta * t) * f.epsilon);
        xi_for_velocity(f.p, v, f.grad_q_p)
    }

    fn xi_series(&self, t: f64, order: usize) -> Result<[Series1; 2]> {
        let mut g = self.0.clone();
        g.beta = -g.beta;
        g.xi_series(t, order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{dipole_rhs, DipoleState};
    use crate::potential::PotentialModel;
    use proptest::prelude::*;

    fn tilde() -> TildeOmega {
        TildeOmega::new(
            ConvexDomain::circle(Vec2::new(0.0, 1.0), 1.0).unwrap(),
            0.05,
        )
    }

    #[test]
    fn case_one_example() {
        let xi = xi_for_velocity(Vec2::ZERO, Vec2::new(1.0 / PI, 0.0), Vec2::ZERO).unwrap();
        assert!((xi - Vec2::new(0.0, -1.0)).norm() < 1e-15);
        assert_eq!(xi.x1, 0.0);
    }

    #[test]
    fn case_two_circle_relation() {
        for c in [0.05, 0.1, 0.3] {
            for eps in [0.5, 1.0, 2.0] {
                let xi =
                    xi_for_velocity(Vec2::ZERO, Vec2::new(eps, 0.0), Vec2::new(c, 0.0)).unwrap();
                let want = Vec2::new(c, -eps) * (1.0 / (PI * (eps * eps + c * c)));
                assert!((xi - want).norm() < 1e-15);
                assert!((xi.x1 - PI * c * xi.norm2()).abs() < 1e-12);
                assert!((xi.x2 * xi.x2 - xi.x1 * (1.0 / (PI * c) - xi.x1)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_velocity() {
        let g = Vec2::new(0.3, -0.2);
        assert_eq!(
            xi_for_velocity(Vec2::ZERO, g.perp(), g),
            Err(Error::DegenerateVelocity)
        );
    }

    #[test]
    fn disk_family_closed_form() {
        let fam = build_family(&tilde(), -PI / 2.0, Vec2::ZERO, 1.0, 1.0, 0.5, 1.0).unwrap();
        for t in [0.0, 0.1, 0.4] {
            let want = Vec2::new(t, -(1.0 - t * t).sqrt()) * (1.0 / PI);
            assert!((fam.xi(t).unwrap() - want).norm() < 1e-15);
        }
    }

    #[test]
    fn family_inside_tilde_omega_is_rejected() {
        // slow launches put xi far away; fast ones put it close to p
        let r = build_family(&tilde(), -PI / 2.0, Vec2::ZERO, 20.0, 1.0, 0.5, 1.0);
        assert!(matches!(r, Err(Error::XiInsideTildeOmega { .. })));
    }

    #[test]
    fn xi_series_matches_differences() {
        let fam = build_family(&tilde(), -1.2, Vec2::new(0.1, 0.2), 1.0, 1.0, 0.5, 1.0).unwrap();
        let t = 0.2;
        let [x, y] = fam.xi_series(t, 4).unwrap();
        let h = 1e-4;
        let d1 = (fam.xi(t + h).unwrap() - fam.xi(t - h).unwrap()) * (0.5 / h);
        assert!((x.derivative(1) - d1.x1).abs() < 1e-7 && (y.derivative(1) - d1.x2).abs() < 1e-7);
        let d2 = (fam.xi(t + h).unwrap() - fam.xi(t).unwrap() * 2.0 + fam.xi(t - h).unwrap())
            * (1.0 / (h * h));
        assert!((x.derivative(2) - d2.x1).abs() < 1e-5 && (y.derivative(2) - d2.x2).abs() < 1e-5);
        let arc = ArcFamily {
            p: Vec2::ZERO,
            radius: 0.3,
            phi0: -1.0,
            rate: 2.0,
        };
        let [x, _] = arc.xi_series(0.1, 3).unwrap();
        let d1 = (arc.xi(0.1 + h).unwrap() - arc.xi(0.1 - h).unwrap()) * (0.5 / h);
        assert!((x.derivative(1) - d1.x1).abs() < 1e-7);
    }

    proptest! {
        #[test]
        fn velocity_round_trip(a in -3.0..3.0f64, b in -3.0..3.0f64, g1 in -0.5..0.5f64, g2 in -0.5..0.5f64) {
            let v = Vec2::new(a, b);
            let g = Vec2::new(g1, g2);
            prop_assume!((v - g.perp()).norm() > 0.05);
            let q = PotentialModel::polynomial(&[((1, 0), g1), ((0, 1), g2)]);
            let p = Vec2::new(0.3, -0.2);
            let xi = xi_for_velocity(p, v, g).unwrap();
            let (vp, _) = dipole_rhs(&DipoleState::new(p, xi), &q).unwrap();
            prop_assert!((vp - v).norm() < 1e-12 * v.norm().max(1.0));
        }
    }
}

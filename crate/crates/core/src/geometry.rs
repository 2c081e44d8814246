//! Convex planar domains, boundary projection and the boundary-normal chart.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};
use crate::series::{factorial, Series1};
use crate::vec2::{Frame, Vec2};

const SCAN: usize = 96;
const NEWTON_TOL: f64 = 1e-12;

/// Level set `F(x) = sum c_jk x1^j x2^k = 0`, interior where `F < 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSet {
    pub coeffs: BTreeMap<(u32, u32), f64>,
    /// A point with `F < 0`; boundary rays are cast from here.
    pub interior: Vec2,
}

impl LevelSet {
    pub fn value(&self, x: Vec2) -> f64 {
        self.coeffs
            .iter()
            .map(|(&(j, k), &c)| c * x.x1.powi(j as i32) * x.x2.powi(k as i32))
            .sum()
    }

    pub fn gradient(&self, x: Vec2) -> Vec2 {
        let mut g = Vec2::ZERO;
        for (&(j, k), &c) in &self.coeffs {
            if j > 0 {
                g.x1 += c * j as f64 * x.x1.powi(j as i32 - 1) * x.x2.powi(k as i32);
            }
            if k > 0 {
                g.x2 += c * k as f64 * x.x1.powi(j as i32) * x.x2.powi(k as i32 - 1);
            }
        }
        g
    }

    fn eval_series(&self, x1: &Series1, x2: &Series1) -> Series1 {
        let n = x1.order();
        let max_j = self.coeffs.keys().map(|k| k.0).max().unwrap_or(0) as usize;
        let max_k = self.coeffs.keys().map(|k| k.1).max().unwrap_or(0) as usize;
        let mut p1 = vec![Series1::constant(1.0, n)];
        for i in 1..=max_j {
            p1.push(&p1[i - 1] * x1);
        }
        let mut p2 = vec![Series1::constant(1.0, n)];
        for i in 1..=max_k {
            p2.push(&p2[i - 1] * x2);
        }
        let mut out = Series1::zero(n);
        for (&(j, k), &c) in &self.coeffs {
            out = &out + &(&p1[j as usize] * &p2[k as usize]).scale(c);
        }
        out
    }

    fn ray_radius(&self, dir: Vec2) -> Result<f64> {
        let f = |r: f64| self.value(self.interior + dir * r);
        let mut lo = 0.0;
        let mut step = 1e-2;
        let mut hi = step;
        while f(hi) < 0.0 {
            lo = hi;
            step *= 1.5;
            hi += step;
            if hi > 1e4 {
                return Err(Error::InvalidInput(
                    "level set is unbounded along a ray".into(),
                ));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 * hi.max(1.0) {
                break;
            }
        }
        // Newton polish along the ray.
        let mut r = 0.5 * (lo + hi);
        for _ in 0..3 {
            let x = self.interior + dir * r;
            let d = self.gradient(x).dot(dir);
            if d <= 0.0 {
                break;
            }
            let nr = r - self.value(x) / d;
            if nr < lo || nr > hi {
                break;
            }
            r = nr;
        }
        Ok(r)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DomainKind {
    Circle { center: Vec2, radius: f64 },
    Ellipse { center: Vec2, semi_axes: [f64; 2] },
    Implicit(LevelSet),
}

/// Smooth strictly convex open domain, boundary oriented counterclockwise.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexDomain {
    kind: DomainKind,
    min_curvature_radius: f64,
    diameter: f64,
}

impl ConvexDomain {
    pub fn circle(center: Vec2, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !center.is_finite() {
            return Err(Error::InvalidInput(
                "circle needs a finite center and positive radius".into(),
            ));
        }
        Self::build(DomainKind::Circle { center, radius })
    }

    pub fn ellipse(center: Vec2, semi_axes: [f64; 2]) -> Result<Self> {
        if !(semi_axes[0] > 0.0 && semi_axes[1] > 0.0) || !center.is_finite() {
            return Err(Error::InvalidInput(
                "ellipse needs positive semi-axes".into(),
            ));
        }
        Self::build(DomainKind::Ellipse { center, semi_axes })
    }

    pub fn implicit(level_set: LevelSet) -> Result<Self> {
        if !(level_set.value(level_set.interior) < 0.0) {
            return Err(Error::InvalidInput(
                "implicit domain interior point has F >= 0".into(),
            ));
        }
        Self::build(DomainKind::Implicit(level_set))
    }

    fn build(kind: DomainKind) -> Result<Self> {
        let mut d = ConvexDomain {
            kind,
            min_curvature_radius: 0.0,
            diameter: 0.0,
        };
        match &d.kind {
            DomainKind::Circle { radius, .. } => {
                d.min_curvature_radius = *radius;
                d.diameter = 2.0 * radius;
            }
            DomainKind::Ellipse {
                semi_axes: [a, b], ..
            } => {
                d.min_curvature_radius = (a * a / b).min(b * b / a);
                d.diameter = 2.0 * a.max(*b);
            }
            DomainKind::Implicit(_) => {
                let n = 720;
                let mut kmax = 0.0f64;
                let mut pts = Vec::with_capacity(n);
                for i in 0..n {
                    let th = TAU * i as f64 / n as f64;
                    let k = d.curvature(th)?;
                    if !(k > 0.0) {
                        return Err(Error::InvalidInput(format!(
                            "implicit boundary is not strictly convex near angle {th:.4}"
                        )));
                    }
                    kmax = kmax.max(k);
                    pts.push(d.point(th)?);
                }
                d.min_curvature_radius = 1.0 / kmax;
                let mut diam = 0.0f64;
                for i in 0..n {
                    for j in i + 1..n {
                        diam = diam.max((pts[i] - pts[j]).norm());
                    }
                }
                d.diameter = diam;
            }
        }
        Ok(d)
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn min_curvature_radius(&self) -> f64 {
        self.min_curvature_radius
    }

    /// Radius of the tube around the boundary where projection is unique.
    pub fn tube_radius(&self) -> f64 {
        0.5 * self.min_curvature_radius
    }

    /// A point well inside the domain.
    pub fn interior_witness(&self) -> Vec2 {
        match &self.kind {
            DomainKind::Circle { center, .. } | DomainKind::Ellipse { center, .. } => *center,
            DomainKind::Implicit(ls) => ls.interior,
        }
    }

    pub fn inside(&self, x: Vec2) -> bool {
        match &self.kind {
            DomainKind::Circle { center, radius } => (x - *center).norm() < *radius,
            DomainKind::Ellipse {
                center,
                semi_axes: [a, b],
            } => {
                let d = x - *center;
                (d.x1 / a).powi(2) + (d.x2 / b).powi(2) < 1.0
            }
            DomainKind::Implicit(ls) => ls.value(x) < 0.0,
        }
    }

    /// Taylor series of `gamma(theta + tau)` up to `order`.
    pub fn boundary_series(&self, theta: f64, order: usize) -> Result<(Series1, Series1)> {
        match &self.kind {
            DomainKind::Circle { center, radius } => {
                let (c, s) = Series1::cos_sin(theta, order);
                let mut x = c.scale(*radius);
                let mut y = s.scale(*radius);
                x.c[0] += center.x1;
                y.c[0] += center.x2;
                Ok((x, y))
            }
            DomainKind::Ellipse {
                center,
                semi_axes: [a, b],
            } => {
                let (c, s) = Series1::cos_sin(theta, order);
                let mut x = c.scale(*a);
                let mut y = s.scale(*b);
                x.c[0] += center.x1;
                y.c[0] += center.x2;
                Ok((x, y))
            }
            DomainKind::Implicit(ls) => {
                let (c, s) = Series1::cos_sin(theta, order);
                let e0 = Vec2::new(c.c[0], s.c[0]);
                let r0 = ls.ray_radius(e0)?;
                let x0 = ls.interior + e0 * r0;
                let denom = ls.gradient(x0).dot(e0);
                // Solve F(interior + r(tau) e(tau)) = 0 order by order.
                let mut r = Series1::constant(r0, order);
                for m in 1..=order {
                    let mut x1 = &r * &c;
                    let mut x2 = &r * &s;
                    x1.c[0] += ls.interior.x1;
                    x2.c[0] += ls.interior.x2;
                    let f = ls.eval_series(&x1, &x2);
                    r.c[m] = -f.c[m] / denom;
                }
                let mut x1 = &r * &c;
                let mut x2 = &r * &s;
                x1.c[0] += ls.interior.x1;
                x2.c[0] += ls.interior.x2;
                Ok((x1, x2))
            }
        }
    }

    /// `gamma^(k)(theta)` for `k = 0..=order`.
    pub fn boundary_derivatives(&self, theta: f64, order: usize) -> Result<Vec<Vec2>> {
        let (x, y) = self.boundary_series(theta, order)?;
        Ok((0..=order)
            .map(|k| Vec2::new(x.c[k], y.c[k]) * factorial(k))
            .collect())
    }

    pub fn point(&self, theta: f64) -> Result<Vec2> {
        match &self.kind {
            DomainKind::Circle { center, radius } => Ok(*center + Vec2::polar(theta) * *radius),
            DomainKind::Ellipse {
                center,
                semi_axes: [a, b],
            } => Ok(*center + Vec2::new(a * theta.cos(), b * theta.sin())),
            DomainKind::Implicit(ls) => {
                let e = Vec2::polar(theta);
                Ok(ls.interior + e * ls.ray_radius(e)?)
            }
        }
    }

    pub fn curvature(&self, theta: f64) -> Result<f64> {
        let d = self.boundary_derivatives(theta, 2)?;
        Ok(d[1].cross(d[2]) / d[1].norm().powi(3))
    }

    /// Unit tangent (counterclockwise) at `gamma(theta)`.
    pub fn tangent(&self, theta: f64) -> Result<Vec2> {
        Ok(self.boundary_derivatives(theta, 1)?[1].normalized())
    }

    /// Unit inward normal at `gamma(theta)`.
    pub fn inward_normal(&self, theta: f64) -> Result<Vec2> {
        Ok(self.tangent(theta)?.rot90())
    }

    /// Orthonormal frame at `gamma(theta)`: tangent first, inward normal second.
    pub fn frame(&self, theta: f64) -> Result<Frame> {
        let d = self.boundary_derivatives(theta, 1)?;
        Ok(Frame::new(d[0], d[1]))
    }

    /// Boundary arclength from `theta0` to `theta1` (signed).
    pub fn arclength(&self, theta0: f64, theta1: f64) -> Result<f64> {
        match &self.kind {
            DomainKind::Circle { radius, .. } => Ok(radius * (theta1 - theta0)),
            _ => {
                let opts = QuadOptions {
                    abs_tol: 1e-13,
                    rel_tol: 1e-14,
                    ..Default::default()
                };
                let mut err = None;
                let v = integrate(
                    |th| match self.boundary_derivatives(th, 1) {
                        Ok(d) => d[1].norm(),
                        Err(e) => {
                            err = Some(e);
                            0.0
                        }
                    },
                    theta0,
                    theta1,
                    &opts,
                )?;
                match err {
                    Some(e) => Err(e),
                    None => Ok(v),
                }
            }
        }
    }

    /// Parameter whose boundary point has polar angle close to that of `x` about the witness.
    fn param_guess(&self, x: Vec2) -> f64 {
        match &self.kind {
            DomainKind::Circle { center, .. } => (x - *center).angle(),
            DomainKind::Ellipse {
                center,
                semi_axes: [a, b],
            } => {
                let d = x - *center;
                (d.x2 / b).atan2(d.x1 / a)
            }
            DomainKind::Implicit(ls) => (x - ls.interior).angle(),
        }
    }

    /// Damped Newton on `(gamma(theta) - x) . gamma'(theta) = 0`.
    fn foot_newton(&self, x: Vec2, mut th: f64) -> Result<Option<f64>> {
        let dist2 = |th: f64| -> Result<f64> { Ok((self.point(th)? - x).norm2()) };
        let mut f0 = dist2(th)?;
        for _ in 0..60 {
            let d = self.boundary_derivatives(th, 2)?;
            let r = d[0] - x;
            let g = r.dot(d[1]);
            let h = d[1].norm2() + r.dot(d[2]);
            let mut step = if h > 0.0 { -g / h } else { -g.signum() * 0.05 };
            step = step.clamp(-0.5, 0.5);
            let mut accepted = false;
            for _ in 0..40 {
                let cand = th + step;
                let f1 = dist2(cand)?;
                if f1 <= f0 * (1.0 + 1e-15) + 1e-300 {
                    th = cand;
                    f0 = f1;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted || step.abs() < NEWTON_TOL * 1e-2 {
                return Ok(if h > 0.0 { Some(th) } else { None });
            }
            if step.abs() < NEWTON_TOL {
                return Ok(Some(th));
            }
        }
        Ok(Some(th))
    }

    /// Closest boundary parameter to `x` by coarse scan and Newton polish.
    fn global_foot(&self, x: Vec2) -> Result<f64> {
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..SCAN {
            let th = TAU * i as f64 / SCAN as f64;
            let d = (self.point(th)? - x).norm2();
            if d < best.0 {
                best = (d, th);
            }
        }
        Ok(self.foot_newton(x, best.1)?.unwrap_or(best.1))
    }

    fn foot_param(&self, x: Vec2) -> Result<f64> {
        if let DomainKind::Circle { center, .. } = &self.kind {
            return Ok((x - *center).angle());
        }
        let guess = self.param_guess(x);
        if let Some(th) = self.foot_newton(x, guess)? {
            let dist = (self.point(th)? - x).norm();
            if !self.inside(x) || dist <= self.tube_radius() {
                return Ok(th);
            }
        }
        self.global_foot(x)
    }

    /// Signed distance to the boundary, positive inside. Defined everywhere.
    pub fn signed_distance(&self, x: Vec2) -> Result<f64> {
        if let DomainKind::Circle { center, radius } = &self.kind {
            return Ok(radius - (x - *center).norm());
        }
        let th = self.foot_param(x)?;
        let d = (self.point(th)? - x).norm();
        Ok(if self.inside(x) { d } else { -d })
    }

    /// Closest boundary point, its parameter and the signed distance of `x`,
    /// without the uniqueness restriction.
    pub fn closest_boundary_point(&self, x: Vec2) -> Result<(Vec2, f64, f64)> {
        let th = match &self.kind {
            DomainKind::Circle { center, .. } => {
                if x == *center {
                    0.0
                } else {
                    (x - *center).angle()
                }
            }
            _ => self.foot_param(x)?,
        };
        let foot = self.point(th)?;
        let d = (foot - x).norm();
        Ok((foot, th, if self.inside(x) { d } else { -d }))
    }

    /// Unique closest boundary point and signed distance; errors outside the validity tube.
    pub fn project_to_boundary(&self, x: Vec2) -> Result<Projection> {
        let (foot, theta, sd) = self.closest_boundary_point(x)?;
        if sd.abs() > self.tube_radius() || !sd.is_finite() {
            return Err(Error::NoUniqueProjection { x1: x.x1, x2: x.x2 });
        }
        Ok(Projection {
            foot,
            theta,
            signed_distance: sd,
        })
    }

    /// Parameter of the boundary point `p` (assumed on the boundary).
    pub fn param_of(&self, p: Vec2) -> Result<f64> {
        Ok(self.closest_boundary_point(p)?.1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    pub foot: Vec2,
    pub theta: f64,
    pub signed_distance: f64,
}

/// `min{(4 pi M)^-1, sigma}`.
pub fn tilde_omega_margin(m: f64, sigma: f64) -> f64 {
    if m <= 0.0 {
        sigma
    } else {
        (1.0 / (4.0 * PI * m)).min(sigma)
    }
}

/// Enlarged domain: points within `margin` of the closure of the domain.
#[derive(Clone, Debug, PartialEq)]
pub struct TildeOmega {
    pub domain: ConvexDomain,
    pub margin: f64,
}

impl TildeOmega {
    pub fn new(domain: ConvexDomain, margin: f64) -> Self {
        TildeOmega { domain, margin }
    }

    pub fn contains(&self, x: Vec2) -> Result<bool> {
        Ok(self.domain.signed_distance(x)? > -self.margin)
    }

    /// Nearest point of the outer boundary `{dist = margin}`.
    pub fn nearest_outer_point(&self, x: Vec2) -> Result<Vec2> {
        let (foot, th, _) = self.domain.closest_boundary_point(x)?;
        Ok(foot - self.domain.inward_normal(th)? * self.margin)
    }
}

fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Boundary-normal coordinates based at a boundary point.
#[derive(Clone, Debug)]
pub struct NormalChart {
    pub domain: ConvexDomain,
    pub theta_p: f64,
    pub p: Vec2,
}

impl NormalChart {
    pub fn new(domain: ConvexDomain, theta_p: f64) -> Result<Self> {
        let p = domain.point(theta_p)?;
        Ok(NormalChart { domain, theta_p, p })
    }

    pub fn at_point(domain: ConvexDomain, p: Vec2) -> Result<Self> {
        let th = domain.param_of(p)?;
        Self::new(domain, th)
    }

    pub fn frame(&self) -> Result<Frame> {
        self.domain.frame(self.theta_p)
    }

    pub fn to_normal_coords(&self, x: Vec2) -> Result<(f64, f64)> {
        let pr = self.domain.project_to_boundary(x)?;
        let dth = wrap_angle(pr.theta - self.theta_p);
        let z1 = self.domain.arclength(self.theta_p, self.theta_p + dth)?;
        Ok((z1, pr.signed_distance))
    }

    fn theta_at_arclength(&self, z1: f64) -> Result<f64> {
        if let DomainKind::Circle { radius, .. } = self.domain.kind() {
            return Ok(self.theta_p + z1 / radius);
        }
        let mut th = self.theta_p;
        for _ in 0..50 {
            let s = self.domain.arclength(self.theta_p, th)?;
            let speed = self.domain.boundary_derivatives(th, 1)?[1].norm();
            let step = (z1 - s) / speed;
            th += step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        Ok(th)
    }

    pub fn from_normal_coords(&self, z1: f64, z2: f64) -> Result<Vec2> {
        let th = self.theta_at_arclength(z1)?;
        let foot = self.domain.point(th)?;
        Ok(foot + self.domain.inward_normal(th)? * z2)
    }

    /// `|dx/dz1|^2`, the metric coefficient of `(dz1)^2`.
    pub fn metric_factor(&self, z1: f64, z2: f64) -> Result<f64> {
        let h = 1e-6;
        let a = self.from_normal_coords(z1 + h, z2)?;
        let b = self.from_normal_coords(z1 - h, z2)?;
        Ok(((a - b) * (0.5 / h)).norm2())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn disk() -> ConvexDomain {
        ConvexDomain::circle(Vec2::new(0.0, 1.0), 1.0).unwrap()
    }

    fn ellipse() -> ConvexDomain {
        ConvexDomain::ellipse(Vec2::new(0.2, -0.1), [2.0, 1.0]).unwrap()
    }

    fn superellipse() -> ConvexDomain {
        // x^4 + x^2 + 2 y^2 - 1 = 0
        let mut c = BTreeMap::new();
        c.insert((4, 0), 1.0);
        c.insert((2, 0), 1.0);
        c.insert((0, 2), 2.0);
        c.insert((0, 0), -1.0);
        ConvexDomain::implicit(LevelSet {
            coeffs: c,
            interior: Vec2::ZERO,
        })
        .unwrap()
    }

    #[test]
    fn membership() {
        let d = disk();
        assert!(d.inside(Vec2::new(0.0, 1.0)));
        assert!(!d.inside(Vec2::new(0.0, 2.5)));
        assert!(!d.inside(Vec2::new(0.0, 0.0)));
        assert!(
            !d.inside(d.point(0.3).unwrap())
                || d.signed_distance(d.point(0.3).unwrap()).unwrap().abs() < 1e-15
        );
    }

    #[test]
    fn disk_projection_examples() {
        let d = disk();
        let p = d.project_to_boundary(Vec2::new(0.0, 0.5)).unwrap();
        assert!((p.foot - Vec2::ZERO).norm() < 1e-15);
        assert!((p.signed_distance - 0.5).abs() < 1e-15);
        let p = d.project_to_boundary(Vec2::new(0.0, -0.25)).unwrap();
        assert!((p.foot - Vec2::ZERO).norm() < 1e-15);
        assert!((p.signed_distance + 0.25).abs() < 1e-15);
        assert!(matches!(
            d.project_to_boundary(Vec2::new(0.0, 1.0)),
            Err(Error::NoUniqueProjection { .. })
        ));
    }

    #[test]
    fn curvature_examples() {
        let e = ConvexDomain::ellipse(Vec2::ZERO, [2.0, 1.0]).unwrap();
        assert!((e.curvature(0.0).unwrap() - 2.0).abs() < 1e-14);
        for r in [0.5, 1.0, 3.0] {
            let c = ConvexDomain::circle(Vec2::ZERO, r).unwrap();
            for th in [0.0, 1.0, 4.0] {
                assert!((c.curvature(th).unwrap() - 1.0 / r).abs() < 1e-14);
            }
        }
    }

    fn fd_curvature(d: &ConvexDomain, th: f64) -> f64 {
        let h = 1e-4;
        let p = |t: f64| d.point(t).unwrap();
        let d1 = (p(th + h) - p(th - h)) * (0.5 / h);
        let d2 = (p(th + h) - p(th) * 2.0 + p(th - h)) * (1.0 / (h * h));
        d1.cross(d2) / d1.norm().powi(3)
    }

    #[test]
    fn curvature_matches_finite_differences() {
        for d in [disk(), ellipse(), superellipse()] {
            for th in [0.0, 0.4, 2.0, 5.5] {
                let k = d.curvature(th).unwrap();
                assert!((k - fd_curvature(&d, th)).abs() < 1e-6 * k.max(1.0), "{th}");
            }
        }
        let c = ConvexDomain::circle(Vec2::ZERO, 2.5).unwrap();
        assert!((fd_curvature(&c, 0.9) - 0.4).abs() < 1e-8);
    }

    #[test]
    fn implicit_boundary_series_matches_points() {
        let d = superellipse();
        let (x, y) = d.boundary_series(0.8, 10).unwrap();
        for tau in [-0.05, 0.02, 0.05] {
            let p = d.point(0.8 + tau).unwrap();
            assert!((x.eval(tau) - p.x1).abs() < 1e-11);
            assert!((y.eval(tau) - p.x2).abs() < 1e-11);
        }
    }

    #[test]
    fn margin_examples() {
        assert_eq!(tilde_omega_margin(1.0, 0.05), 0.05);
        assert_eq!(tilde_omega_margin(0.0, 0.1), 0.1);
        assert!((tilde_omega_margin(10.0, 0.05) - 1.0 / (40.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn chart_examples() {
        let chart = NormalChart::new(disk(), -PI / 2.0).unwrap();
        let (z1, z2) = chart.to_normal_coords(Vec2::new(0.0, 0.5)).unwrap();
        assert!(z1.abs() < 1e-15 && (z2 - 0.5).abs() < 1e-15);
        let s = 0.3;
        let b = disk().point(-PI / 2.0 + s).unwrap();
        let (z1, z2) = chart.to_normal_coords(b).unwrap();
        assert!((z1 - s).abs() < 1e-14 && z2.abs() < 1e-14);
        assert!((chart.metric_factor(0.0, 0.0).unwrap() - 1.0).abs() < 1e-8);
        let ec = NormalChart::new(ellipse(), 1.0).unwrap();
        assert!((ec.metric_factor(0.0, 0.0).unwrap() - 1.0).abs() < 1e-8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn chart_round_trip(th in 0.0..TAU, frac in -0.99..0.99f64, base in 0.0..TAU, which in 0usize..2) {
            let d = if which == 0 { disk() } else { ellipse() };
            let chart = NormalChart::new(d.clone(), base).unwrap();
            let foot = d.point(th).unwrap();
            let x = foot + d.inward_normal(th).unwrap() * (frac * d.tube_radius());
            let (z1, z2) = chart.to_normal_coords(x).unwrap();
            let back = chart.from_normal_coords(z1, z2).unwrap();
            prop_assert!((back - x).norm() < 1e-10);
            if z2.abs() > 1e-12 {
                prop_assert_eq!(d.inside(x), z2 > 0.0);
            }
        }

        #[test]
        fn projection_is_closest(th in 0.0..TAU, frac in -0.99..0.99f64) {
            let d = superellipse();
            let foot = d.point(th).unwrap();
            let x = foot + d.inward_normal(th).unwrap() * (frac * d.tube_radius());
            let p = d.project_to_boundary(x).unwrap();
            prop_assert!((p.foot - foot).norm() < 1e-8);
            prop_assert!(((x - p.foot).norm() - p.signed_distance.abs()).abs() < 1e-12);
        }
    }
}

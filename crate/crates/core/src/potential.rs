//! Background potentials with exact partial derivatives.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::ConvexDomain;
use crate::series::{binomial, factorial};
use crate::vec2::Vec2;

/// Gaussian bump `amplitude * exp(-|x - center|^2 / (2 width^2))`.
#[derive(Clone, Debug, PartialEq)]
pub struct Bump {
    pub center: Vec2,
    pub amplitude: f64,
    pub width: f64,
}

/// Highest derivative order served for Gaussian bumps.
pub const GAUSSIAN_MAX_ORDER: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialModel {
    Zero,
    /// `(j, k) -> c` for the monomial `c x1^j x2^k`.
    Polynomial(BTreeMap<(u32, u32), f64>),
    GaussianBumps(Vec<Bump>),
    Sum(Vec<PotentialModel>),
}

/// Table of `d1^j d2^k Q` for `j + k <= order`.
#[derive(Clone, Debug, PartialEq)]
pub struct Partials {
    order: usize,
    values: Vec<f64>,
}

impl Partials {
    pub fn zeros(order: usize) -> Self {
        Partials {
            order,
            values: vec![0.0; (order + 1) * (order + 2) / 2],
        }
    }

    fn idx(j: usize, k: usize) -> usize {
        let d = j + k;
        d * (d + 1) / 2 + k
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        assert!(
            j + k <= self.order,
            "partial ({j},{k}) beyond order {}",
            self.order
        );
        self.values[Self::idx(j, k)]
    }

    pub fn set(&mut self, j: usize, k: usize, v: f64) {
        self.values[Self::idx(j, k)] = v;
    }

    fn add_assign(&mut self, o: &Partials) {
        for (a, b) in self.values.iter_mut().zip(&o.values) {
            *a += b;
        }
    }

    pub fn gradient(&self) -> Vec2 {
        Vec2::new(self.get(1, 0), self.get(0, 1))
    }

    /// `(d2 Q, -d1 Q)`.
    pub fn perp_gradient(&self) -> Vec2 {
        self.gradient().perp()
    }

    /// Same table expressed in a rotated frame with unit tangent `t` and normal `n = rot90(t)`.
    pub fn rotated(&self, t: Vec2) -> Partials {
        let n = t.rot90();
        let mut out = Partials::zeros(self.order);
        // d_t = t1 d1 + t2 d2, d_n = n1 d1 + n2 d2; expand d_t^a d_n^b.
        for deg in 0..=self.order {
            for b in 0..=deg {
                let a = deg - b;
                let mut acc = 0.0;
                for i in 0..=a {
                    for l in 0..=b {
                        let c = binomial(a, i)
                            * binomial(b, l)
                            * t.x1.powi(i as i32)
                            * t.x2.powi((a - i) as i32)
                            * n.x1.powi(l as i32)
                            * n.x2.powi((b - l) as i32);
                        acc += c * self.get(i + l, deg - i - l);
                    }
                }
                out.set(a, b, acc);
            }
        }
        out
    }
}

impl PotentialModel {
    pub fn polynomial(coeffs: &[((u32, u32), f64)]) -> Self {
        PotentialModel::Polynomial(coeffs.iter().copied().collect())
    }

    pub fn max_exact_order(&self) -> usize {
        match self {
            PotentialModel::Zero | PotentialModel::Polynomial(_) => usize::MAX,
            PotentialModel::GaussianBumps(b) if b.is_empty() => usize::MAX,
            PotentialModel::GaussianBumps(_) => GAUSSIAN_MAX_ORDER,
            PotentialModel::Sum(terms) => terms
                .iter()
                .map(|t| t.max_exact_order())
                .min()
                .unwrap_or(usize::MAX),
        }
    }

    pub fn eval_partials(&self, x: Vec2, order: usize) -> Result<Partials> {
        if order > self.max_exact_order() {
            return Err(Error::OrderUnavailable {
                requested: order,
                max: self.max_exact_order(),
            });
        }
        let mut out = Partials::zeros(order);
        match self {
            PotentialModel::Zero => {}
            PotentialModel::Polynomial(coeffs) => {
                for (&(a, b), &c) in coeffs {
                    let (a, b) = (a as usize, b as usize);
                    for j in 0..=order.min(a) {
                        for k in 0..=(order - j).min(b) {
                            let fa = factorial(a) / factorial(a - j);
                            let fb = factorial(b) / factorial(b - k);
                            let v =
                                c * fa * fb * x.x1.powi((a - j) as i32) * x.x2.powi((b - k) as i32);
                            out.values[Partials::idx(j, k)] += v;
                        }
                    }
                }
            }
            PotentialModel::GaussianBumps(bumps) => {
                for b in bumps {
                    let u = (x - b.center) * (1.0 / b.width);
                    let g = b.amplitude * (-0.5 * u.norm2()).exp();
                    let h1 = hermite_e(u.x1, order);
                    let h2 = hermite_e(u.x2, order);
                    for j in 0..=order {
                        for k in 0..=order - j {
                            let s = (-1.0 / b.width).powi((j + k) as i32);
                            out.values[Partials::idx(j, k)] += g * s * h1[j] * h2[k];
                        }
                    }
                }
            }
            PotentialModel::Sum(terms) => {
                for t in terms {
                    out.add_assign(&t.eval_partials(x, order)?);
                }
            }
        }
        Ok(out)
    }

    pub fn eval(&self, x: Vec2) -> f64 {
        self.eval_partials(x, 0)
            .map(|p| p.get(0, 0))
            .unwrap_or(f64::NAN)
    }

    pub fn gradient(&self, x: Vec2) -> Vec2 {
        self.eval_partials(x, 1)
            .expect("order 1 always available")
            .gradient()
    }

    pub fn perp_grad(&self, x: Vec2) -> Vec2 {
        self.gradient(x).perp()
    }

    /// Upper bound for `|grad Q|` on the boundary: sampled maximum inflated by 10%.
    pub fn gradient_bound(&self, domain: &ConvexDomain, n_samples: usize) -> Result<f64> {
        if n_samples < 64 {
            return Err(Error::InvalidInput(
                "gradient_bound needs at least 64 samples".into(),
            ));
        }
        let mut m = 0.0f64;
        for i in 0..n_samples {
            let th = std::f64::consts::TAU * i as f64 / n_samples as f64;
            m = m.max(self.gradient(domain.point(th)?).norm());
        }
        Ok(1.1 * m)
    }
}

/// Probabilists' Hermite polynomials `He_0..He_n` at `x`.
fn hermite_e(x: f64, n: usize) -> Vec<f64> {
    let mut h = vec![1.0; n + 1];
    if n >= 1 {
        h[1] = x;
    }
    for k in 2..=n {
        h[k] = x * h[k - 1] - (k - 1) as f64 * h[k - 2];
    }
    h
}

/// Source of the gradient field that advects a vortex.
pub trait GradientField: Sync {
    fn gradient_at(&self, x: Vec2) -> Result<Vec2>;

    fn perp_gradient_at(&self, x: Vec2) -> Result<Vec2> {
        Ok(self.gradient_at(x)?.perp())
    }
}

impl GradientField for PotentialModel {
    fn gradient_at(&self, x: Vec2) -> Result<Vec2> {
        Ok(self.gradient(x))
    }
}

/// A potential that may only be queried outside the enlarged domain.
#[derive(Clone, Debug)]
pub struct ExteriorPotential {
    q: PotentialModel,
    region: crate::geometry::TildeOmega,
}

impl ExteriorPotential {
    pub fn new(q: PotentialModel, region: crate::geometry::TildeOmega) -> Self {
        ExteriorPotential { q, region }
    }

    pub fn region(&self) -> &crate::geometry::TildeOmega {
        &self.region
    }

    fn check(&self, x: Vec2) -> Result<()> {
        let sd = self.region.domain.signed_distance(x)?;
        if sd > -self.region.margin * (1.0 - 1e-9) {
            return Err(Error::HiddenPotentialQuery { x1: x.x1, x2: x.x2 });
        }
        Ok(())
    }

    pub fn eval(&self, x: Vec2) -> Result<f64> {
        self.check(x)?;
        Ok(self.q.eval(x))
    }

    pub fn eval_partials(&self, x: Vec2, order: usize) -> Result<Partials> {
        self.check(x)?;
        self.q.eval_partials(x, order)
    }
}

impl GradientField for ExteriorPotential {
    fn gradient_at(&self, x: Vec2) -> Result<Vec2> {
        self.check(x)?;
        Ok(self.q.gradient(x))
    }
}

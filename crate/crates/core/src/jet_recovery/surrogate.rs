use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::ConvexDomain;
use crate::numerics::local_poly;
use crate::potential::GradientField;
use crate::vec2::Vec2;

fn wrap(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

fn horner(c: &[f64], u: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * u + v)
}

fn deriv(c: &[f64]) -> Vec<f64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(k, v)| k as f64 * v)
        .collect()
}

/// Polynomial fit of one boundary function against `u = theta - theta_c`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FittedPoly {
    pub coeffs: Vec<f64>,
    pub rms_residual: f64,
}

impl FittedPoly {
    pub fn fit(us: &[f64], fs: &[f64], degree: usize) -> Result<Self> {
        let coeffs = local_poly(us, fs, degree)?;
        let ss: f64 = us
            .iter()
            .zip(fs)
            .map(|(u, f)| (horner(&coeffs, *u) - f).powi(2))
            .sum();
        Ok(FittedPoly {
            coeffs,
            rms_residual: (ss / us.len() as f64).sqrt(),
        })
    }

    pub fn value(&self, u: f64) -> f64 {
        horner(&self.coeffs, u)
    }

    pub fn derivative(&self) -> FittedPoly {
        FittedPoly {
            coeffs: deriv(&self.coeffs),
            rms_residual: f64::NAN,
        }
    }
}

/// Normal derivatives of the potential along a boundary arc, fitted in the curve parameter.
///
/// `theta_derivative` is `d/dtheta Q(gamma(theta))`; `normal[a - 1]` is the
/// `a`-th inward normal derivative `F_a`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryField {
    pub theta_c: f64,
    pub theta_derivative: FittedPoly,
    pub normal: Vec<FittedPoly>,
}

impl BoundaryField {
    /// Fits `F_0'` and `F_1` from gradients at boundary parameters.
    pub fn from_gradients(
        domain: &ConvexDomain,
        theta_c: f64,
        thetas: &[f64],
        gradients: &[Vec2],
        degree: usize,
    ) -> Result<Self> {
        let mut us = Vec::new();
        let mut f0 = Vec::new();
        let mut f1 = Vec::new();
        for (&th, g) in thetas.iter().zip(gradients) {
            let d = domain.boundary_derivatives(th, 1)?;
            us.push(wrap(th - theta_c));
            f0.push(g.dot(d[1]));
            f1.push(g.dot(domain.inward_normal(th)?));
        }
        Ok(BoundaryField {
            theta_c,
            theta_derivative: FittedPoly::fit(&us, &f0, degree)?,
            normal: vec![FittedPoly::fit(&us, &f1, degree)?],
        })
    }

    /// Appends the next normal derivative level from values at boundary parameters.
    pub fn push_normal(&mut self, thetas: &[f64], values: &[f64], degree: usize) -> Result<()> {
        let us: Vec<f64> = thetas.iter().map(|th| wrap(th - self.theta_c)).collect();
        self.normal.push(FittedPoly::fit(&us, values, degree)?);
        Ok(())
    }

    pub fn levels(&self) -> usize {
        self.normal.len()
    }

    pub fn u_of(&self, theta: f64) -> f64 {
        wrap(theta - self.theta_c)
    }
}

/// `F_0 + sum_a n^a/a! F_a(u) + top n^(L+1)/(L+1)!` in boundary-normal coordinates.
#[derive(Clone, Debug)]
pub struct SurrogatePotential {
    pub domain: ConvexDomain,
    pub field: BoundaryField,
    pub top: f64,
    /// `d/du` of every fitted level, cached.
    normal_u: Vec<FittedPoly>,
}

impl SurrogatePotential {
    pub fn new(domain: ConvexDomain, field: BoundaryField, top: f64) -> Self {
        let normal_u = field.normal.iter().map(|f| f.derivative()).collect();
        SurrogatePotential {
            domain,
            field,
            top,
            normal_u,
        }
    }

    pub fn with_top(&self, top: f64) -> Self {
        SurrogatePotential {
            top,
            ..self.clone()
        }
    }

    /// `(d/dtheta, d/dn)` of the surrogate at parameter `theta` and depth `n`.
    pub fn coordinate_gradient(&self, theta: f64, n: f64) -> (f64, f64) {
        let u = self.field.u_of(theta);
        let mut dth = self.field.theta_derivative.value(u);
        let mut dn = 0.0;
        let mut pow = 1.0;
        for (a, (f, fu)) in self.field.normal.iter().zip(&self.normal_u).enumerate() {
            // pow = n^a / a! here
            dn += pow * f.value(u);
            pow *= n / (a + 1) as f64;
            dth += pow * fu.value(u);
        }
        dn += pow * self.top;
        (dth, dn)
    }
}

impl GradientField for SurrogatePotential {
    fn gradient_at(&self, x: Vec2) -> Result<Vec2> {
        let (_, th, n) = self.domain.closest_boundary_point(x)?;
        let d = self.domain.boundary_derivatives(th, 2)?;
        let speed = d[1].norm();
        let kappa = d[1].cross(d[2]) / speed.powi(3);
        let metric = speed * (1.0 - kappa * n);
        if metric <= 0.0 {
            return Err(Error::InvalidInput(
                "surrogate queried beyond the focal distance".into(),
            ));
        }
        let t = d[1] * (1.0 / speed);
        let (dth, dn) = self.coordinate_gradient(th, n);
        Ok(t * (dth / metric) + t.rot90() * dn)
    }
}

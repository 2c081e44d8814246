use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::gradient::{recover_gradient, recover_gradient_field, GradientEstimate};
use super::normal::{recover_normal_derivative, NormalEstimate};
use super::surrogate::{BoundaryField, FittedPoly};
use super::Observer;
use crate::error::{Error, Result};
use crate::geometry::ConvexDomain;
use crate::potential::Partials;
use crate::series::{factorial, Series1, Series2};
use crate::vec2::Vec2;

/// Boundary jet `d1^j d2^k Q(p)` in boundary-normal coordinates (arclength, inward distance).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JetEstimate {
    pub p: Vec2,
    pub theta: f64,
    /// Highest order fully populated.
    pub order: usize,
    pub values: BTreeMap<String, f64>,
    pub uncertainties: BTreeMap<String, f64>,
    pub ell_prime: f64,
    /// Why the requested order was not reached.
    pub failure: Option<String>,
}

impl JetEstimate {
    pub fn key(j: usize, k: usize) -> String {
        format!("{j},{k}")
    }

    pub fn get(&self, j: usize, k: usize) -> Option<f64> {
        self.values.get(&Self::key(j, k)).copied()
    }

    pub fn uncertainty(&self, j: usize, k: usize) -> Option<f64> {
        self.uncertainties.get(&Self::key(j, k)).copied()
    }

    fn insert(&mut self, j: usize, k: usize, v: f64, u: f64) {
        self.values.insert(Self::key(j, k), v);
        self.uncertainties.insert(Self::key(j, k), u);
    }

    /// Chart partials as a table (the constant term is left at zero).
    pub fn partials(&self) -> Partials {
        let mut out = Partials::zeros(self.order);
        for d in 1..=self.order {
            for k in 0..=d {
                out.set(d - k, k, self.get(d - k, k).unwrap_or(0.0));
            }
        }
        out
    }
}

/// Second-order boundary jet with the independent mixed-derivative estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HessianEstimate {
    pub theta: f64,
    pub p: Vec2,
    pub gradient: GradientEstimate,
    /// Symmetrized chart Hessian.
    pub matrix: [[f64; 2]; 2],
    /// `matrix[0][1]` from tangential differentiation, `matrix[1][0]` from normal data, before symmetrizing.
    pub raw: [[f64; 2]; 2],
    pub uncertainty: [[f64; 2]; 2],
    pub asymmetry: f64,
    pub normal: NormalEstimate,
}

fn chebyshev(center: f64, half: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| center + half * (PI * (2 * i + 1) as f64 / (2 * n) as f64).cos())
        .rev()
        .collect()
}

/// `|gamma'(theta + u)|` as a series in `u`.
fn speed_series(domain: &ConvexDomain, theta: f64, order: usize) -> Result<Series1> {
    let (x, y) = domain.boundary_series(theta, order + 1)?;
    let (dx, dy) = (x.differentiate(), y.differentiate());
    Ok((&(&dx * &dx) + &(&dy * &dy)).sqrt())
}

/// Taylor series at `u0` of a polynomial.
fn poly_at(p: &FittedPoly, u0: f64, order: usize) -> Series1 {
    let mut c = p.coeffs.clone();
    let mut out = Vec::with_capacity(order + 1);
    for _ in 0..=order {
        out.push(c.iter().rev().fold(0.0, |a, v| a * u0 + v));
        c = c
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, v)| k as f64 * v)
            .collect();
        if c.is_empty() {
            c.push(0.0);
        }
    }
    // out[j] holds the j-th derivative
    Series1::from_coeffs(
        out.into_iter()
            .enumerate()
            .map(|(j, v)| v / factorial(j))
            .collect(),
    )
}

/// `d^j/ds^j` at `u = 0` of a series in the curve parameter, `j = 0..=count`.
fn arclength_derivatives(mut g: Series1, speed: &Series1, count: usize) -> Vec<f64> {
    let inv = speed.recip();
    let mut out = vec![g.c[0]];
    for _ in 0..count {
        g = &g.differentiate() * &inv;
        out.push(g.c[0]);
    }
    out
}

/// Chart jet entries `(j, k)` obtainable from the fitted field by tangential differentiation.
fn tangential_entries(
    domain: &ConvexDomain,
    field: &BoundaryField,
    theta: f64,
    order: usize,
) -> Result<BTreeMap<(usize, usize), f64>> {
    let speed = speed_series(domain, theta, order + 1)?;
    let u = field.u_of(theta);
    let mut out = BTreeMap::new();
    let q_s = &poly_at(&field.theta_derivative, u, order) * &speed.recip();
    for (j, v) in arclength_derivatives(q_s, &speed, order - 1)
        .into_iter()
        .enumerate()
    {
        out.insert((j + 1, 0), v);
    }
    for (a, f) in field.normal.iter().enumerate().take(order) {
        let k = a + 1;
        for (j, v) in arclength_derivatives(poly_at(f, u, order), &speed, order - k)
            .into_iter()
            .enumerate()
        {
            out.insert((j, k), v);
        }
    }
    Ok(out)
}

fn gradient_field(
    obs: &Observer,
    theta_p: f64,
    half: f64,
    points: usize,
    degree: usize,
) -> Result<(BoundaryField, BoundaryField, f64)> {
    let domain = obs.oracle.domain();
    let thetas = chebyshev(theta_p, half, points);
    let est = recover_gradient_field(obs, &thetas)?;
    let grads: Vec<Vec2> = est.iter().map(|e| e.gradient).collect();
    let worst = est.iter().map(|e| e.uncertainty).fold(0.0, f64::max);
    let hi = BoundaryField::from_gradients(domain, theta_p, &thetas, &grads, degree)?;
    let lo = BoundaryField::from_gradients(domain, theta_p, &thetas, &grads, degree - 1)?;
    Ok((hi, lo, worst))
}

fn assemble_hessian(
    obs: &Observer,
    theta_p: f64,
    gradient: GradientEstimate,
    hi: &BoundaryField,
    lo: &BoundaryField,
    grad_unc: f64,
) -> Result<HessianEstimate> {
    let domain = obs.oracle.domain();
    let normal = recover_normal_derivative(obs, theta_p, gradient.gradient, hi)?;
    let a = tangential_entries(domain, hi, theta_p, 2)?;
    let b = tangential_entries(domain, lo, theta_p, 2)?;
    let unc = |key| (a[&key] - b[&key]).abs() + grad_unc;
    let h11 = a[&(2, 0)];
    let h12 = a[&(1, 1)];
    let mixed = normal
        .mixed_correction
        .unwrap_or(crate::numerics::Extrapolated {
            value: 0.0,
            spread: 0.0,
        });
    let h21 = h12 + mixed.value;
    let h22 = normal.value;
    let off = 0.5 * (h12 + h21);
    let off_unc = unc((1, 1)) + mixed.spread + 0.5 * mixed.value.abs();
    Ok(HessianEstimate {
        theta: theta_p,
        p: gradient.p,
        gradient,
        matrix: [[h11, off], [off, h22]],
        raw: [[h11, h12], [h21, h22]],
        uncertainty: [[unc((2, 0)), off_unc], [off_unc, normal.uncertainty]],
        asymmetry: (h12 - h21).abs(),
        normal,
    })
}

/// Chart Hessian at `gamma(theta_p)`.
pub fn recover_hessian(obs: &Observer, theta_p: f64) -> Result<HessianEstimate> {
    obs.opts.validate()?;
    let gradient = recover_gradient(obs, theta_p)?;
    let o = obs.opts;
    let (hi, lo, worst) =
        gradient_field(obs, theta_p, o.field_span, o.field_points, o.field_degree)?;
    assemble_hessian(obs, theta_p, gradient, &hi, &lo, worst)
}

/// Boundary jet through `order` (1, 2 or 3) at `gamma(theta_p)`.
pub fn recover_jet(obs: &Observer, theta_p: f64, order: usize) -> Result<JetEstimate> {
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidInput(format!(
            "jet order {order} not in 1..=3"
        )));
    }
    obs.opts.validate()?;
    let o = obs.opts;
    let domain = obs.oracle.domain();
    let gradient = recover_gradient(obs, theta_p)?;
    let frame = domain.frame(theta_p)?;
    let mut jet = JetEstimate {
        p: gradient.p,
        theta: theta_p,
        order: 1,
        values: BTreeMap::new(),
        uncertainties: BTreeMap::new(),
        ell_prime: gradient.ell_prime,
        failure: None,
    };
    jet.insert(1, 0, gradient.gradient.dot(frame.t), gradient.uncertainty);
    jet.insert(0, 1, gradient.gradient.dot(frame.n), gradient.uncertainty);
    if order == 1 {
        return Ok(jet);
    }
    let (half, points, degree) = if order == 3 {
        (
            2.0 * o.field_span,
            2 * o.field_points - 1,
            o.field_degree + 4,
        )
    } else {
        (o.field_span, o.field_points, o.field_degree)
    };
    let (mut hi, mut lo, worst) = gradient_field(obs, theta_p, half, points, degree)?;
    let hess = match assemble_hessian(obs, theta_p, gradient, &hi, &lo, worst) {
        Ok(h) => h,
        Err(e @ Error::IllConditioned { .. }) => {
            jet.failure = Some(e.to_string());
            return Ok(jet);
        }
        Err(e) => return Err(e),
    };
    jet.insert(2, 0, hess.matrix[0][0], hess.uncertainty[0][0]);
    jet.insert(1, 1, hess.matrix[0][1], hess.uncertainty[0][1]);
    jet.insert(0, 2, hess.matrix[1][1], hess.uncertainty[1][1]);
    jet.order = 2;
    if order == 2 {
        return Ok(jet);
    }
    // second normal derivative along the arc, then the third at p
    let thetas = chebyshev(theta_p, o.field_span, o.field_points);
    let normals: Vec<NormalEstimate> = thetas
        .par_iter()
        .map(|&th| {
            let f = domain.frame(th)?;
            let (dth, dn) = hi_gradient(&hi, domain, th)?;
            let g = f.t * dth + f.n * dn;
            recover_normal_derivative(obs, th, g, &hi)
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = normals.iter().map(|n| n.value).collect();
    let f2_unc = normals.iter().map(|n| n.uncertainty).fold(0.0, f64::max);
    let f2_degree = o.field_degree.saturating_sub(2).max(2);
    hi.push_normal(&thetas, &values, f2_degree)?;
    lo.push_normal(&thetas, &values, f2_degree - 1)?;
    let third = recover_normal_derivative(obs, theta_p, hess.gradient.gradient, &hi);
    let a = tangential_entries(domain, &hi, theta_p, 3)?;
    let b = tangential_entries(domain, &lo, theta_p, 3)?;
    for (j, k) in [(3, 0), (2, 1), (1, 2)] {
        let unc = (a[&(j, k)] - b[&(j, k)]).abs() + if k == 2 { f2_unc } else { worst };
        jet.insert(j, k, a[&(j, k)], unc);
    }
    match third {
        Ok(t) => {
            jet.insert(0, 3, t.value, t.uncertainty);
            jet.order = 3;
        }
        Err(e @ Error::IllConditioned { .. }) => {
            for (j, k) in [(3, 0), (2, 1), (1, 2)] {
                jet.values.remove(&JetEstimate::key(j, k));
                jet.uncertainties.remove(&JetEstimate::key(j, k));
            }
            jet.failure = Some(e.to_string());
        }
        Err(e) => return Err(e),
    }
    Ok(jet)
}

/// Unit-tangent and normal components of the fitted gradient at `theta`.
fn hi_gradient(field: &BoundaryField, domain: &ConvexDomain, theta: f64) -> Result<(f64, f64)> {
    let speed = domain.boundary_derivatives(theta, 1)?[1].norm();
    let u = field.u_of(theta);
    Ok((
        field.theta_derivative.value(u) / speed,
        field.normal[0].value(u),
    ))
}

/// Linear map from Cartesian partials in the frame at `theta` to chart partials, both of `order`.
fn chart_map(
    domain: &ConvexDomain,
    theta: f64,
    order: usize,
) -> Result<(Vec<(usize, usize)>, DMatrix<f64>)> {
    let frame = domain.frame(theta)?;
    let m = order;
    let (x, y) = domain.boundary_series(theta, m + 1)?;
    let (dx, dy) = (x.differentiate(), y.differentiate());
    let speed = (&(&dx * &dx) + &(&dy * &dy)).sqrt();
    let mut s_of_u = Series1::zero(m);
    for k in 0..m {
        s_of_u.c[k + 1] = speed.c[k] / (k + 1) as f64;
    }
    let u_of_s = s_of_u.revert();
    let inv = speed.recip();
    let (tx, ty) = (&dx * &inv, &dy * &inv);
    // inward normal rot90(t) = (-ty, tx)
    let loc = |a: &Series1, b: &Series1| -> (Series1, Series1) {
        let l1 = &a.scale(frame.t.x1) + &b.scale(frame.t.x2);
        let l2 = &a.scale(frame.n.x1) + &b.scale(frame.n.x2);
        (l1, l2)
    };
    let mut xs = x.clone();
    let mut ys = y.clone();
    xs.c[0] -= frame.origin.x1;
    ys.c[0] -= frame.origin.x2;
    let (g1, g2) = loc(&xs, &ys);
    let (n1, n2) = loc(&ty.scale(-1.0), &tx);
    let comp = |s: &Series1| s.compose(&u_of_s);
    let (g1, g2, n1, n2) = (comp(&g1), comp(&g2), comp(&n1), comp(&n2));
    let big1 = &Series2::from_u(&g1, m) + &Series2::v_times_u(&n1, m);
    let big2 = &Series2::from_u(&g2, m) + &Series2::v_times_u(&n2, m);
    let idx: Vec<(usize, usize)> = (1..=m)
        .flat_map(|d| (0..=d).map(move |k| (d - k, k)))
        .collect();
    let mut mat = DMatrix::zeros(idx.len(), idx.len());
    for (col, &(a, b)) in idx.iter().enumerate() {
        let term = (&big1.powi(a) * &big2.powi(b)).scale(1.0 / (factorial(a) * factorial(b)));
        for (row, &(j, k)) in idx.iter().enumerate() {
            mat[(row, col)] = term.get(j, k) * factorial(j) * factorial(k);
        }
    }
    Ok((idx, mat))
}

/// Chart partials from Cartesian partials in the tangent/normal frame at `theta`.
pub fn cartesian_to_chart(local: &Partials, domain: &ConvexDomain, theta: f64) -> Result<Partials> {
    let (idx, mat) = chart_map(domain, theta, local.order())?;
    let v = DVector::from_iterator(idx.len(), idx.iter().map(|&(a, b)| local.get(a, b)));
    let c = mat * v;
    let mut out = Partials::zeros(local.order());
    out.set(0, 0, local.get(0, 0));
    for (i, &(j, k)) in idx.iter().enumerate() {
        out.set(j, k, c[i]);
    }
    Ok(out)
}

/// Cartesian partials in the tangent/normal frame at `theta` from chart partials.
pub fn chart_to_cartesian(chart: &Partials, domain: &ConvexDomain, theta: f64) -> Result<Partials> {
    let (idx, mat) = chart_map(domain, theta, chart.order())?;
    let v = DVector::from_iterator(idx.len(), idx.iter().map(|&(j, k)| chart.get(j, k)));
    let c = mat
        .lu()
        .solve(&v)
        .ok_or_else(|| Error::InvalidInput("singular chart map".into()))?;
    let mut out = Partials::zeros(chart.order());
    out.set(0, 0, chart.get(0, 0));
    for (i, &(a, b)) in idx.iter().enumerate() {
        out.set(a, b, c[i]);
    }
    Ok(out)
}

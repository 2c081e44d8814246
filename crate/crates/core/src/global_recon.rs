//! Global reconstruction: Taylor continuation of the recovered boundary jet
//! and path integration from the enlarged boundary, where Q is known.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ConvexDomain, TildeOmega};
use crate::jet_recovery::{chart_to_cartesian, recover_jet, JetEstimate, Observer};
use crate::potential::{ExteriorPotential, Partials, PotentialModel};
use crate::quadrature::{integrate, QuadOptions};
use crate::series::factorial;
use crate::vec2::Vec2;

/// Truncated Taylor expansion of `grad Q` about a boundary point.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientModel {
    pub p: Vec2,
    /// Jet order; the gradient is a polynomial of degree `order - 1`.
    pub order: usize,
    /// Cartesian partials of Q at `p`; the constant term is unused.
    pub partials: Partials,
    pub validity_radius: f64,
}

impl GradientModel {
    pub fn gradient(&self, x: Vec2) -> Vec2 {
        let d = x - self.p;
        let mut g = Vec2::ZERO;
        for deg in 0..self.order {
            for k in 0..=deg {
                let j = deg - k;
                let w = d.x1.powi(j as i32) * d.x2.powi(k as i32) / (factorial(j) * factorial(k));
                g.x1 += w * self.partials.get(j + 1, k);
                g.x2 += w * self.partials.get(j, k + 1);
            }
        }
        g
    }

    pub fn with_validity_radius(mut self, r: f64) -> Self {
        self.validity_radius = r;
        self
    }

    fn covers(&self, x: Vec2) -> bool {
        (x - self.p).norm() <= self.validity_radius
    }
}

/// Gradient model from a recovered jet, converted from the boundary chart to
/// Cartesian coordinates. The validity radius defaults to unbounded.
pub fn taylor_gradient_model(jet: &JetEstimate, domain: &ConvexDomain) -> Result<GradientModel> {
    if jet.order == 0 {
        return Err(Error::InvalidInput("jet order must be at least 1".into()));
    }
    let local = chart_to_cartesian(&jet.partials(), domain, jet.theta)?;
    let frame = domain.frame(jet.theta)?;
    let partials = local.rotated(frame.vec_to_local(Vec2::new(1.0, 0.0)));
    Ok(GradientModel {
        p: jet.p,
        order: jet.order,
        partials,
        validity_radius: f64::INFINITY,
    })
}

fn segment_integral(model: &GradientModel, a: Vec2, b: Vec2, quad: &QuadOptions) -> Result<f64> {
    if !model.covers(a) || !model.covers(b) {
        return Err(Error::SegmentLeavesValidity);
    }
    let d = b - a;
    if d.norm() == 0.0 {
        return Ok(0.0);
    }
    integrate(|s| model.gradient(a + d * s).dot(d), 0.0, 1.0, quad)
}

/// `Q(x) = Q(z) + int_z^x grad Q . dl` along the straight segment.
pub fn path_integrate_q(
    model: &GradientModel,
    outside: &ExteriorPotential,
    x: Vec2,
    z: Vec2,
    quad: &QuadOptions,
) -> Result<f64> {
    Ok(outside.eval(z)? + segment_integral(model, z, x, quad)?)
}

/// Same as [`path_integrate_q`] along the broken path `z -> w -> x`.
pub fn path_integrate_q_via(
    model: &GradientModel,
    outside: &ExteriorPotential,
    x: Vec2,
    w: Vec2,
    z: Vec2,
    quad: &QuadOptions,
) -> Result<f64> {
    Ok(outside.eval(z)?
        + segment_integral(model, z, w, quad)?
        + segment_integral(model, w, x, quad)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridPoint {
    pub x: Vec2,
    pub q_est: f64,
    pub q_true: f64,
    pub abs_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReconReport {
    pub jet: JetEstimate,
    pub points: Vec<GridPoint>,
    /// `(x1, x2, message)` for grid points that could not be evaluated.
    pub failures: Vec<(f64, f64, String)>,
    pub sup_err: f64,
    pub rms_err: f64,
    /// `sup |err| / sup |Q|` over the evaluated points.
    pub sup_rel_err: f64,
    /// Largest gap between the straight and broken-path integrals.
    pub path_discrepancy: f64,
    pub bbox: [f64; 4],
}

/// Settings for [`reconstruct_global`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReconSettings {
    pub theta_p: f64,
    pub jet_order: usize,
    /// Points per axis of the grid over the bounding box of the enlarged domain.
    pub grid: usize,
    pub quad: QuadOptions,
}

fn bounding_box(tilde: &TildeOmega) -> Result<[f64; 4]> {
    let mut b = [
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    ];
    let n = 720;
    for i in 0..n {
        let x = tilde
            .domain
            .point(std::f64::consts::TAU * i as f64 / n as f64)?;
        b[0] = b[0].min(x.x1);
        b[1] = b[1].min(x.x2);
        b[2] = b[2].max(x.x1);
        b[3] = b[3].max(x.x2);
    }
    let m = tilde.margin * 1.01;
    Ok([b[0] - m, b[1] - m, b[2] + m, b[3] + m])
}

/// Recovers the jet at one boundary point and reconstructs Q on a grid
/// covering the enlarged domain. `truth` is used only for scoring.
pub fn reconstruct_global(
    obs: &Observer,
    truth: &PotentialModel,
    settings: &ReconSettings,
) -> Result<ReconReport> {
    if settings.grid < 2 {
        return Err(Error::InvalidInput(
            "grid needs at least 2 points per axis".into(),
        ));
    }
    let tilde = obs.exterior.region();
    let domain = &tilde.domain;
    let jet = recover_jet(obs, settings.theta_p, settings.jet_order)?;
    let model = taylor_gradient_model(&jet, domain)?;
    let bbox = bounding_box(tilde)?;
    let n = settings.grid;
    let xs: Vec<Vec2> = (0..n * n)
        .map(|i| {
            let (a, b) = (
                (i % n) as f64 / (n - 1) as f64,
                (i / n) as f64 / (n - 1) as f64,
            );
            Vec2::new(
                bbox[0] + a * (bbox[2] - bbox[0]),
                bbox[1] + b * (bbox[3] - bbox[1]),
            )
        })
        .collect();
    let evaluated: Vec<Option<std::result::Result<(GridPoint, f64), String>>> = xs
        .par_iter()
        .map(|&x| {
            match tilde.contains(x) {
                Ok(true) => {}
                Ok(false) => return None,
                Err(e) => return Some(Err(e.to_string())),
            }
            let run = || -> Result<(GridPoint, f64)> {
                let z = tilde.nearest_outer_point(x)?;
                let q_est = path_integrate_q(&model, obs.exterior, x, z, &settings.quad)?;
                // second path: a right-angle detour off the straight segment
                let w = (x + z) * 0.5 + (x - z).rot90() * 0.5;
                let q_alt = path_integrate_q_via(&model, obs.exterior, x, w, z, &settings.quad)?;
                let q_true = truth.eval(x);
                Ok((
                    GridPoint {
                        x,
                        q_est,
                        q_true,
                        abs_err: (q_est - q_true).abs(),
                    },
                    (q_est - q_alt).abs(),
                ))
            };
            Some(run().map_err(|e| e.to_string()))
        })
        .collect();
    let mut points = Vec::new();
    let mut failures = Vec::new();
    let mut path_discrepancy: f64 = 0.0;
    for (x, r) in xs.iter().zip(evaluated) {
        match r {
            None => {}
            Some(Ok((g, d))) => {
                path_discrepancy = path_discrepancy.max(d);
                points.push(g);
            }
            Some(Err(m)) => failures.push((x.x1, x.x2, m)),
        }
    }
    if points.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no grid point could be reconstructed ({} failures)",
            failures.len()
        )));
    }
    let sup_err = points.iter().map(|g| g.abs_err).fold(0.0, f64::max);
    let sup_q = points.iter().map(|g| g.q_true.abs()).fold(0.0, f64::max);
    let rms_err =
        (points.iter().map(|g| g.abs_err * g.abs_err).sum::<f64>() / points.len() as f64).sqrt();
    let sup_rel_err = if sup_q > 0.0 {
        sup_err / sup_q
    } else {
        sup_err
    };
    Ok(ReconReport {
        jet,
        points,
        failures,
        sup_err,
        rms_err,
        sup_rel_err,
        path_discrepancy,
        bbox,
    })
}

use std::f64::consts::PI;

use serde::Serialize;

use super::Observer;
use crate::dynamics::{integrate_dipole, DipoleState};
use crate::error::{Error, Result};
use crate::family::{xi_for_velocity, ArcFamily};
use crate::geometry::{ConvexDomain, TildeOmega};
use crate::numerics::{geometric_grid, local_poly};
use crate::potential::PotentialModel;
use crate::vec2::Vec2;

/// A grazing launch found from measurements alone.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TangencyResult {
    pub p: Vec2,
    pub xi0: Vec2,
    /// Radius and polar angle of `xi0 - p`.
    pub radius: f64,
    pub angle: f64,
    /// `+1` or `-1`: turning the angle this way makes `a+` enter.
    pub entering_direction: f64,
    /// Slope of the measured exit time against the angle on the entering side.
    pub tau_slope: f64,
}

impl TangencyResult {
    /// Stage-1 family sweeping the candidate arc into the entering side.
    pub fn family(&self, rate: f64) -> ArcFamily {
        ArcFamily {
            p: self.p,
            radius: self.radius,
            phi0: self.angle,
            rate: self.entering_direction * rate,
        }
    }
}

/// Locates the enter/graze transition on the arc of radius `1/(pi eps)` around `p`.
pub fn find_tangent_xi_from_data(obs: &Observer, theta_p: f64) -> Result<TangencyResult> {
    let opts = obs.opts;
    let domain = obs.oracle.domain();
    let tilde = obs.exterior.region();
    let p = domain.point(theta_p)?;
    let n = domain.inward_normal(theta_p)?;
    let radius = 1.0 / (PI * opts.epsilon);
    let center = (-n).angle();
    let half = opts.arc_window_deg.to_radians();
    scan_arc(
        obs,
        p,
        radius,
        center - half,
        center + half,
        opts.arc_samples,
        tilde,
    )
}

fn tau_at(obs: &Observer, p: Vec2, radius: f64, phi: f64) -> Result<f64> {
    Ok(obs
        .oracle
        .measure(p, p + Vec2::polar(phi) * radius)?
        .tau_plus)
}

fn scan_arc(
    obs: &Observer,
    p: Vec2,
    radius: f64,
    lo: f64,
    hi: f64,
    samples: usize,
    tilde: &TildeOmega,
) -> Result<TangencyResult> {
    let mut status: Vec<(f64, Option<bool>)> = Vec::new();
    for i in 0..samples {
        let phi = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
        let entering = if tilde.contains(p + Vec2::polar(phi) * radius)? {
            None
        } else {
            Some(tau_at(obs, p, radius, phi)? > 0.0)
        };
        status.push((phi, entering));
    }
    let pair = status
        .windows(2)
        .find(|w| matches!((w[0].1, w[1].1), (Some(x), Some(y)) if x != y))
        .ok_or(Error::NoTransitionFound)?;
    let (mut a, mut b) = if pair[0].1 == Some(true) {
        (pair[1].0, pair[0].0)
    } else {
        (pair[0].0, pair[1].0)
    };
    // a grazes, b enters
    while (b - a).abs() > 1e-7 {
        let m = 0.5 * (a + b);
        if tau_at(obs, p, radius, m)? > 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    let dir = (b - a).signum();
    let (phi0, slope) = extrapolate_root(obs, p, radius, b, dir)?;
    Ok(TangencyResult {
        p,
        xi0: p + Vec2::polar(phi0) * radius,
        radius,
        angle: phi0,
        entering_direction: dir,
        tau_slope: slope,
    })
}

/// Root of the measured `tau(phi)` continued from the entering side.
fn extrapolate_root(
    obs: &Observer,
    p: Vec2,
    radius: f64,
    start: f64,
    dir: f64,
) -> Result<(f64, f64)> {
    let mut phi0 = start;
    let mut slope = 0.0;
    for _ in 0..2 {
        let hs = geometric_grid(1e-5, 3e-3, 10);
        let mut xs = Vec::with_capacity(hs.len());
        let mut fs = Vec::with_capacity(hs.len());
        for h in &hs {
            let tau = tau_at(obs, p, radius, phi0 + dir * h)?;
            if tau > 0.0 {
                xs.push(dir * h);
                fs.push(tau);
            }
        }
        if xs.len() < 6 {
            return Err(Error::NoTransitionFound);
        }
        let c = local_poly(&xs, &fs, 3)?;
        // Newton on the cubic from the linear root
        let mut x = -c[0] / c[1];
        for _ in 0..20 {
            let f = c[0] + x * (c[1] + x * (c[2] + x * c[3]));
            let df = c[1] + x * (2.0 * c[2] + 3.0 * x * c[3]);
            let dx = f / df;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        phi0 += x;
        slope = (c[1] + x * (2.0 * c[2] + 3.0 * x * c[3])) * dir;
    }
    if !(slope > 0.0) {
        return Err(Error::NonpositiveSlope { slope });
    }
    Ok((phi0, slope))
}

/// Second derivative at `s = 0` of the signed distance of `a+` along the tangent launch of speed `eps`.
///
/// Negative values certify strict convexity with respect to `q` at the point.
pub fn check_convexity(
    q: &PotentialModel,
    domain: &ConvexDomain,
    theta_p: f64,
    epsilon: f64,
) -> Result<f64> {
    let f = domain.frame(theta_p)?;
    let xi = xi_for_velocity(f.origin, f.t * epsilon, q.gradient(f.origin))?;
    let scale = (f.origin - xi).norm() / epsilon;
    let s_end = 0.05 * scale.min(domain.min_curvature_radius() / epsilon);
    let traj = integrate_dipole(DipoleState::new(f.origin, xi), q, s_end, 1e-13)?;
    let ss: Vec<f64> = (1..=16).map(|i| s_end * i as f64 / 16.0).collect();
    let mut zs = Vec::with_capacity(ss.len());
    for &s in &ss {
        zs.push(domain.signed_distance(traj.state_at(s).a_plus)?);
    }
    let c = crate::numerics::power_fit(&ss, &zs, &[1, 2, 3, 4, 5])?;
    Ok(2.0 * c[1])
}

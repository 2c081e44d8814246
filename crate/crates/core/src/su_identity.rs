//! The flow discrepancy identity: measured `X - X0` against the integral of the
//! free-flow Jacobian applied to the velocity gap.

use nalgebra::Vector4;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{exit_record, integrate_dipole, DipoleState, ExitOptions, MeasurementOracle};
use crate::error::{Error, Result};
use crate::family::LaunchFamily;
use crate::freeflow::{free_flow, free_flow_jacobian, PhasePoint};
use crate::geometry::ConvexDomain;
use crate::potential::PotentialModel;
use crate::quadrature::{integrate_vec, QuadOptions};
use crate::vec2::Vec2;

/// `(perp grad Q(a+), -perp grad Q(a-))`.
pub type VelocityGap = Vector4<f64>;

pub fn velocity_gap(state: &DipoleState, q: &PotentialModel) -> VelocityGap {
    let p = q.perp_grad(state.a_plus);
    let m = q.perp_grad(state.a_minus);
    Vector4::new(p.x1, p.x2, -m.x1, -m.x2)
}

fn state_vec(s: &DipoleState) -> Vector4<f64> {
    Vector4::new(s.a_plus.x1, s.a_plus.x2, s.a_minus.x1, s.a_minus.x2)
}

/// Both sides of the identity for one launch.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuReport {
    pub ell: f64,
    pub lhs: [f64; 4],
    pub rhs: [f64; 4],
    pub residual: f64,
}

/// Right-hand side `int_0^ell dX0/dphi(ell - s, X(s)) (V - V0)(X(s)) ds`.
pub fn su_rhs(
    phi: &PhasePoint,
    q: &PotentialModel,
    ell: f64,
    ode_tol: f64,
    quad_tol: f64,
) -> Result<[f64; 4]> {
    if ell == 0.0 {
        return Ok([0.0; 4]);
    }
    let traj = integrate_dipole(DipoleState::new(phi.x, phi.y), q, ell, ode_tol)?;
    let steps = &traj.solution().steps;
    let opts = QuadOptions {
        abs_tol: quad_tol / steps.len().max(1) as f64,
        ..Default::default()
    };
    let mut total = [0.0; 4];
    let mut buf = [0.0; 4];
    for step in steps {
        let r = integrate_vec(
            |s, out| {
                step.eval(s, &mut buf);
                let st = DipoleState::from_slice(&buf);
                let v = free_flow_jacobian(ell - s, &PhasePoint::from(st))? * velocity_gap(&st, q);
                out.copy_from_slice(v.as_slice());
                Ok(())
            },
            step.t0,
            step.t1(),
            4,
            &opts,
        )?;
        for (t, v) in total.iter_mut().zip(&r.value) {
            *t += v;
        }
    }
    Ok(total)
}

/// Max-norm of `LHS - RHS` for the launch `phi`.
pub fn su_residual(
    phi: &PhasePoint,
    q: &PotentialModel,
    domain: &ConvexDomain,
    ode_tol: f64,
    quad_tol: f64,
) -> Result<SuReport> {
    let rec = exit_record(phi.x, phi.y, q, q, domain, &ExitOptions::with_tol(ode_tol))?;
    let ell = rec.measurement.tau_plus;
    if ell == 0.0 {
        return Ok(SuReport {
            ell,
            lhs: [0.0; 4],
            rhs: [0.0; 4],
            residual: 0.0,
        });
    }
    let traj = integrate_dipole(DipoleState::new(phi.x, phi.y), q, ell, ode_tol)?;
    let lhs_v = state_vec(&traj.end_state()) - state_vec(&free_flow(ell, phi)?);
    let rhs = su_rhs(phi, q, ell, ode_tol, quad_tol)?;
    let lhs = [lhs_v[0], lhs_v[1], lhs_v[2], lhs_v[3]];
    let residual = (0..4).map(|i| (lhs[i] - rhs[i]).abs()).fold(0.0, f64::max);
    Ok(SuReport {
        ell,
        lhs,
        rhs,
        residual,
    })
}

/// Measured discrepancy `R(t)` at one family parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RSample {
    pub t: f64,
    pub r: [f64; 4],
    pub ell: f64,
    pub exit: Vec2,
    pub companion: Vec2,
}

/// `R(t) = X(ell(t), phi(t)) - X0(ell(t), phi(t))` from one measurement.
pub fn r_sample<F: LaunchFamily + ?Sized>(
    family: &F,
    oracle: &dyn MeasurementOracle,
    t: f64,
) -> Result<RSample> {
    let p = family.base();
    let xi = family.xi(t)?;
    let m = oracle.measure(p, xi)?;
    let ell = m.tau_plus;
    if ell == 0.0 {
        return Ok(RSample {
            t,
            r: [0.0; 4],
            ell,
            exit: p,
            companion: xi,
        });
    }
    let companion = m.companion.ok_or(Error::CompanionHidden { t })?;
    let free = free_flow(ell, &PhasePoint::new(p, xi))?;
    let dp = m.exit_point - free.a_plus;
    let dm = companion - free.a_minus;
    Ok(RSample {
        t,
        r: [dp.x1, dp.x2, dm.x1, dm.x2],
        ell,
        exit: m.exit_point,
        companion,
    })
}

/// [`r_sample`] over a grid, evaluated in parallel, results in grid order.
pub fn sample_r<F: LaunchFamily + ?Sized>(
    family: &F,
    oracle: &dyn MeasurementOracle,
    ts: &[f64],
) -> Result<Vec<RSample>> {
    ts.par_iter()
        .map(|&t| r_sample(family, oracle, t))
        .collect()
}

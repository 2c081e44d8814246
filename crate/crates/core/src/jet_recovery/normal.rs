use rayon::prelude::*;
use serde::Serialize;

use super::surrogate::SurrogatePotential;
use super::Observer;
use crate::dynamics::{integrate_fields, DipoleState};
use crate::error::Result;
use crate::family::{build_family, LaunchFamily};
use crate::numerics::{geometric_grid, taylor_coefficient, Extrapolated};
use crate::series::factorial;
use crate::su_identity::{sample_r, RSample};
use crate::vec2::Vec2;

pub use super::surrogate::BoundaryField;

/// Normal derivative `d_n^(K+1) Q` at a boundary point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalEstimate {
    pub theta: f64,
    pub order: usize,
    pub value: f64,
    pub uncertainty: f64,
    pub ell_prime: f64,
    /// For `K = 1`: correction to the mixed derivative seen by the tangential
    /// component, i.e. `d_n d_s Q - d_s d_n Q` as measured.
    pub mixed_correction: Option<Extrapolated>,
    /// Last surrogate update, a measure of residual nonlinearity.
    pub last_update: f64,
}

/// Recovers `d_n^(K+1) Q(p)` with `K = field.levels()`.
///
/// The data discrepancy `R(t)` of the exact tangent family is matched against
/// a surrogate that reproduces every lower-order boundary field; the
/// mismatch at order `t^(2K+1)` isolates the unknown coefficient.
pub fn recover_normal_derivative(
    obs: &Observer,
    theta_p: f64,
    grad_p: Vec2,
    field: &BoundaryField,
) -> Result<NormalEstimate> {
    let opts = obs.opts;
    let k = field.levels();
    let domain = obs.oracle.domain().clone();
    let family = build_family(
        obs.exterior.region(),
        theta_p,
        grad_p,
        opts.epsilon,
        opts.beta,
        opts.delta,
        opts.alpha_sign,
    )?;
    let lp = super::gradient::estimate_ell_prime(&family, obs.oracle, opts)?;
    let (range, nodes, degree) = if k == 1 {
        (opts.hessian_t, opts.hessian_nodes, opts.hessian_degree)
    } else {
        (opts.order3_t, opts.order3_nodes, opts.order3_degree)
    };
    let ts = geometric_grid(range[0], range[1], nodes);
    let data = sample_r(&family, obs.oracle, &ts)?;
    let frame = family.frame;
    let target = 2 * k + 1;
    let eb = opts.epsilon * opts.beta;
    let coef = factorial(k) * lp.value.powi(k as i32 + 1) * eb.powi(k as i32) / factorial(target);
    let base = SurrogatePotential::new(domain, field.clone(), 0.0);
    let d_min = 1e-4 * obs.oracle.domain().diameter();
    let tol = 1e-12;

    let mismatch = |top: f64| -> Result<Vec<Vec2>> {
        let s = base.with_top(top);
        data.par_iter()
            .map(|d: &RSample| {
                let xi = family.xi(d.t)?;
                let traj = integrate_fields(
                    DipoleState::new(family.p, xi),
                    &s,
                    obs.exterior,
                    d.ell,
                    tol,
                    d_min,
                )?;
                let dp = d.exit - traj.end_state().a_plus;
                Ok(frame.vec_to_local(dp))
            })
            .collect()
    };

    // above the Hessian the surrogate removes every lower power of `t`
    let min_power = if k == 1 { 1 } else { target };
    let mut top = 0.0;
    let mut last_update = f64::INFINITY;
    let mut fit = Extrapolated {
        value: 0.0,
        spread: 0.0,
    };
    let mut mixed = None;
    for _ in 0..opts.surrogate_iterations.max(1) {
        let dr = mismatch(top)?;
        let r1: Vec<f64> = dr.iter().map(|v| v.x1).collect();
        fit = taylor_coefficient(&ts, &r1, min_power, target, degree - 1, degree)?;
        let update = fit.value / coef;
        top += update;
        last_update = update;
        if k == 1 {
            let r2: Vec<f64> = dr.iter().map(|v| v.x2).collect();
            let m = taylor_coefficient(&ts, &r2, 1, target, degree - 1, degree)?;
            mixed = Some(Extrapolated {
                value: -m.value / coef,
                spread: m.spread / coef,
            });
        }
    }
    let spread = fit.spread / coef;
    opts.ill(
        if k == 1 {
            "second normal derivative"
        } else {
            "third normal derivative"
        },
        Extrapolated { value: top, spread },
    )?;
    Ok(NormalEstimate {
        theta: theta_p,
        order: k + 1,
        value: top,
        uncertainty: spread,
        ell_prime: lp.value,
        mixed_correction: mixed,
        last_update,
    })
}

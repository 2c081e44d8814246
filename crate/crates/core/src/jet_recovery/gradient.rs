use rayon::prelude::*;
use serde::Serialize;

use super::tangency::find_tangent_xi_from_data;
use super::{Observer, RecoveryOptions};
use crate::dynamics::MeasurementOracle;
use crate::error::{Error, Result};
use crate::family::LaunchFamily;
use crate::numerics::{geometric_grid, richardson, Extrapolated};
use crate::potential::GradientField;
use crate::su_identity::{sample_r, RSample};
use crate::vec2::Vec2;

/// Recovered gradient at one boundary point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradientEstimate {
    pub theta: f64,
    pub p: Vec2,
    pub gradient: Vec2,
    pub uncertainty: f64,
    pub ell_prime: f64,
    pub xi0: Vec2,
    /// Mismatch of the `a-` block against the known exterior potential at `xi0`.
    pub companion_residual: f64,
}

fn ell_prime_from(ts: &[f64], samples: &[RSample], opts: &RecoveryOptions) -> Result<Extrapolated> {
    let ratios: Vec<f64> = samples.iter().zip(ts).map(|(s, t)| s.ell / t).collect();
    let e = richardson(ts, &ratios, opts.richardson_levels)?;
    if !(e.value > 0.0) || samples.iter().any(|s| s.ell <= 0.0) {
        return Err(Error::NonpositiveSlope { slope: e.value });
    }
    Ok(e)
}

/// One-sided extrapolation of `ell(t)/t` to `t = 0`.
pub fn estimate_ell_prime<F: LaunchFamily + ?Sized>(
    family: &F,
    oracle: &dyn MeasurementOracle,
    opts: &RecoveryOptions,
) -> Result<Extrapolated> {
    let ts = geometric_grid(opts.t_min, opts.t_max, opts.t_nodes);
    let ells: Vec<f64> = ts
        .par_iter()
        .map(|&t| Ok(oracle.measure(family.base(), family.xi(t)?)?.tau_plus))
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = ells.iter().zip(&ts).map(|(l, t)| l / t).collect();
    let e = richardson(&ts, &ratios, opts.richardson_levels)?;
    if !(e.value > 0.0) || ells.iter().any(|&l| l <= 0.0) {
        return Err(Error::NonpositiveSlope { slope: e.value });
    }
    Ok(e)
}

/// Limit of `R(t) / ell(t)` as `t -> 0`: the velocity gap at the grazing launch.
pub(crate) fn gap_limit<F: LaunchFamily + ?Sized>(
    family: &F,
    oracle: &dyn MeasurementOracle,
    opts: &RecoveryOptions,
) -> Result<([Extrapolated; 4], Extrapolated)> {
    let ts = geometric_grid(opts.t_min, opts.t_max, opts.t_nodes);
    let samples = sample_r(family, oracle, &ts)?;
    let lp = ell_prime_from(&ts, &samples, opts)?;
    let mut out = [Extrapolated {
        value: 0.0,
        spread: 0.0,
    }; 4];
    for (i, o) in out.iter_mut().enumerate() {
        let ratios: Vec<f64> = samples.iter().zip(&ts).map(|(s, t)| s.r[i] / t).collect();
        let r = richardson(&ts, &ratios, opts.richardson_levels)?;
        *o = Extrapolated {
            value: r.value / lp.value,
            spread: r.spread / lp.value + r.value.abs() * lp.spread / (lp.value * lp.value),
        };
    }
    Ok((out, lp))
}

/// Gradient of the hidden potential at `gamma(theta_p)` from a data-driven grazing family.
pub fn recover_gradient(obs: &Observer, theta_p: f64) -> Result<GradientEstimate> {
    let opts = obs.opts;
    let tang = find_tangent_xi_from_data(obs, theta_p)?;
    let family = tang.family(opts.beta);
    let (gap, lp) = gap_limit(&family, obs.oracle, opts)?;
    // un-perp: perp grad = (d2 Q, -d1 Q)
    let gradient = Vec2::new(-gap[1].value, gap[0].value);
    let spread = gap[0].spread.max(gap[1].spread);
    opts.ill(
        "gradient",
        Extrapolated {
            value: gradient.norm(),
            spread,
        },
    )?;
    let known = -obs.exterior.perp_gradient_at(tang.xi0)?;
    let companion_residual = (Vec2::new(gap[2].value, gap[3].value) - known).max_abs();
    Ok(GradientEstimate {
        theta: theta_p,
        p: tang.p,
        gradient,
        uncertainty: spread.max(companion_residual),
        ell_prime: lp.value,
        xi0: tang.xi0,
        companion_residual,
    })
}

/// [`recover_gradient`] at each parameter, in order.
pub fn recover_gradient_field(obs: &Observer, thetas: &[f64]) -> Result<Vec<GradientEstimate>> {
    thetas
        .par_iter()
        .map(|&th| recover_gradient(obs, th))
        .collect()
}

//! Boundary-jet recovery from measurement data.
//!
//! Stage 1 finds a grazing launch from data alone and recovers the gradient
//! along the boundary. Stage 2 launches the exact tangent family and recovers
//! normal derivatives by matching a surrogate potential against the data.

mod gradient;
mod jet;
mod lemmas;
mod normal;
mod surrogate;
mod tangency;

pub use gradient::{
    estimate_ell_prime, recover_gradient, recover_gradient_field, GradientEstimate,
};
pub use jet::{
    cartesian_to_chart, chart_to_cartesian, recover_hessian, recover_jet, HessianEstimate,
    JetEstimate,
};
pub use lemmas::{lemma_limits_check, lemma_lower_order_check, plus_block_check, LemmaCheck};
pub use normal::{recover_normal_derivative, BoundaryField, NormalEstimate};
pub use surrogate::SurrogatePotential;
pub use tangency::{check_convexity, find_tangent_xi_from_data, TangencyResult};

use serde::{Deserialize, Serialize};

use crate::dynamics::MeasurementOracle;
use crate::error::{Error, Result};
use crate::numerics::Extrapolated;
use crate::potential::ExteriorPotential;

/// Numerical knobs for every recovery stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoveryOptions {
    /// Launch speed scale.
    pub epsilon: f64,
    pub beta: f64,
    pub delta: f64,
    pub alpha_sign: f64,
    /// Geometric grid for first-order limits.
    pub t_min: f64,
    pub t_max: f64,
    pub t_nodes: usize,
    pub richardson_levels: usize,
    /// Half-width in degrees of the candidate arc scanned for the grazing launch.
    pub arc_window_deg: f64,
    pub arc_samples: usize,
    /// Grids and fit degrees for the second and third normal derivatives.
    pub hessian_t: [f64; 2],
    pub hessian_nodes: usize,
    pub hessian_degree: usize,
    pub order3_t: [f64; 2],
    pub order3_nodes: usize,
    pub order3_degree: usize,
    /// Boundary points and polynomial degree for fitted boundary fields.
    pub field_points: usize,
    pub field_degree: usize,
    /// Parameter half-width of the boundary arc used for fitted fields.
    pub field_span: f64,
    pub surrogate_iterations: usize,
    /// Spread above `ill_ratio * max(|estimate|, ill_floor)` is ill-conditioned.
    pub ill_ratio: f64,
    pub ill_floor: f64,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        RecoveryOptions {
            epsilon: 1.0,
            beta: 1.0,
            delta: 0.5,
            alpha_sign: 1.0,
            t_min: 1e-4,
            t_max: 1e-1,
            t_nodes: 12,
            richardson_levels: 3,
            arc_window_deg: 60.0,
            arc_samples: 25,
            hessian_t: [0.005, 0.15],
            hessian_nodes: 24,
            hessian_degree: 9,
            order3_t: [0.01, 0.2],
            order3_nodes: 24,
            order3_degree: 9,
            field_points: 17,
            field_degree: 10,
            field_span: 0.6,
            surrogate_iterations: 2,
            ill_ratio: 0.5,
            ill_floor: 1e-4,
        }
    }
}

impl RecoveryOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.epsilon > 0.0
            && self.beta > 0.0
            && self.delta > 0.0
            && self.beta * self.delta < 1.0
            && self.alpha_sign.abs() == 1.0
            && 0.0 < self.t_min
            && self.t_min < self.t_max
            && self.t_max < self.delta
            && self.richardson_levels >= 1
            && self.t_nodes >= self.richardson_levels + 2
            && self.arc_samples >= 3
            && self.hessian_t[0] > 0.0
            && self.hessian_t[0] < self.hessian_t[1]
            && self.hessian_t[1] < self.delta
            && self.order3_t[0] > 0.0
            && self.order3_t[0] < self.order3_t[1]
            && self.order3_t[1] < self.delta
            && self.field_points > self.field_degree
            && self.field_span > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput("inconsistent recovery options".into()))
        }
    }

    fn ill(&self, what: &'static str, e: Extrapolated) -> Result<Extrapolated> {
        if !(e.spread <= self.ill_ratio * e.value.abs().max(self.ill_floor)) {
            return Err(Error::IllConditioned {
                what: what.into(),
                value: e.value,
                spread: e.spread,
            });
        }
        Ok(e)
    }
}

/// What a reconstruction may consume: measurements and the potential outside the enlarged domain.
#[derive(Clone, Copy)]
pub struct Observer<'a> {
    pub oracle: &'a dyn MeasurementOracle,
    pub exterior: &'a ExteriorPotential,
    pub opts: &'a RecoveryOptions,
}

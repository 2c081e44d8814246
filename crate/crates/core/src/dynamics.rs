//! Dipole equations of motion, trajectories and the exit measurement map.

use std::f64::consts::PI;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::ConvexDomain;
use crate::numerics::brent;
use crate::ode::{raw_step, Dop853, OdeOptions, OdeSolution, OdeSystem};
use crate::potential::{GradientField, PotentialModel};
use crate::vec2::Vec2;

/// Positions of the positive and negative vortex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DipoleState {
    pub a_plus: Vec2,
    pub a_minus: Vec2,
}

impl DipoleState {
    pub fn new(a_plus: Vec2, a_minus: Vec2) -> Self {
        DipoleState { a_plus, a_minus }
    }

    pub fn to_array(self) -> [f64; 4] {
        [
            self.a_plus.x1,
            self.a_plus.x2,
            self.a_minus.x1,
            self.a_minus.x2,
        ]
    }

    pub fn from_slice(y: &[f64]) -> Self {
        DipoleState::new(Vec2::new(y[0], y[1]), Vec2::new(y[2], y[3]))
    }

    pub fn separation(&self) -> f64 {
        (self.a_plus - self.a_minus).norm()
    }
}

/// Mutual advection velocity `(1/pi) d^perp / |d|^2` for separation `d = a+ - a-`.
pub fn interaction_velocity(d: Vec2) -> Vec2 {
    d.perp() * (1.0 / (PI * d.norm2()))
}

/// Velocities of both vortices; `d_min` is the collision floor.
pub fn dipole_velocity(
    state: &DipoleState,
    plus: &dyn GradientField,
    minus: &dyn GradientField,
    d_min: f64,
) -> Result<(Vec2, Vec2)> {
    let d = state.a_plus - state.a_minus;
    let sep = d.norm();
    if !(sep > d_min) || !sep.is_finite() {
        return Err(Error::Collision {
            separation: sep,
            d_min,
        });
    }
    let w = interaction_velocity(d);
    Ok((
        w + plus.perp_gradient_at(state.a_plus)?,
        w - minus.perp_gradient_at(state.a_minus)?,
    ))
}

/// Right-hand side of the dipole system under a single potential.
pub fn dipole_rhs(state: &DipoleState, q: &PotentialModel) -> Result<(Vec2, Vec2)> {
    dipole_velocity(state, q, q, 0.0)
}

/// Dipole system as an ODE; each vortex may see its own field.
pub struct DipoleSystem<'a> {
    pub plus: &'a dyn GradientField,
    pub minus: &'a dyn GradientField,
    pub d_min: f64,
}

impl OdeSystem for DipoleSystem<'_> {
    fn dim(&self) -> usize {
        4
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let (vp, vm) = dipole_velocity(
            &DipoleState::from_slice(y),
            self.plus,
            self.minus,
            self.d_min,
        )?;
        dy[0] = vp.x1;
        dy[1] = vp.x2;
        dy[2] = vm.x1;
        dy[3] = vm.x2;
        Ok(())
    }
}

/// Integrated trajectory with dense output.
#[derive(Clone, Debug)]
pub struct Trajectory {
    solution: OdeSolution,
}

impl Trajectory {
    pub fn samples(&self) -> Vec<(f64, DipoleState)> {
        let mut out = vec![(self.solution.t0, DipoleState::from_slice(&self.solution.y0))];
        for s in &self.solution.steps {
            out.push((s.t1(), DipoleState::from_slice(&s.y1())));
        }
        out
    }

    pub fn state_at(&self, s: f64) -> DipoleState {
        DipoleState::from_slice(&self.solution.eval(s))
    }

    pub fn s_end(&self) -> f64 {
        self.solution.t_end()
    }

    pub fn end_state(&self) -> DipoleState {
        DipoleState::from_slice(&self.solution.y_end())
    }

    pub fn solution(&self) -> &OdeSolution {
        &self.solution
    }
}

pub fn check_tol(tol: f64) -> Result<()> {
    if !(1e-13..=1e-6).contains(&tol) {
        return Err(Error::InvalidInput(format!(
            "tolerance {tol:e} outside [1e-13, 1e-6]"
        )));
    }
    Ok(())
}

/// Integrates the dipole system from `state0` for time `s_end` (negative runs backward).
pub fn integrate_fields(
    state0: DipoleState,
    plus: &dyn GradientField,
    minus: &dyn GradientField,
    s_end: f64,
    tol: f64,
    d_min: f64,
) -> Result<Trajectory> {
    check_tol(tol)?;
    let sys = DipoleSystem { plus, minus, d_min };
    let y0 = state0.to_array();
    let mut dy = [0.0; 4];
    sys.rhs(0.0, &y0, &mut dy)?;
    let solution = crate::ode::solve(&sys, 0.0, &y0, s_end, OdeOptions::with_tol(tol))?;
    Ok(Trajectory { solution })
}

pub fn integrate_dipole(
    state0: DipoleState,
    q: &PotentialModel,
    s_end: f64,
    tol: f64,
) -> Result<Trajectory> {
    integrate_fields(state0, q, q, s_end, tol, 0.0)
}

/// One record of the measurement map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measurement {
    pub tau_plus: f64,
    pub exit_point: Vec2,
    /// `a-` at the exit time when it is not inside the domain.
    pub companion: Option<Vec2>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExitOptions {
    pub tol: f64,
    /// Collision floor; default `1e-4 * diameter`.
    pub d_min: Option<f64>,
    /// Horizon; default ten free-flight crossing times at the launch separation.
    pub s_max: Option<f64>,
    /// Inward excursions never exceeding this count as immediate exits.
    pub entry_threshold: f64,
    pub time_tol: f64,
}

impl Default for ExitOptions {
    fn default() -> Self {
        ExitOptions {
            tol: 1e-11,
            d_min: None,
            s_max: None,
            entry_threshold: 1e-12,
            time_tol: 1e-13,
        }
    }
}

impl ExitOptions {
    pub fn with_tol(tol: f64) -> Self {
        ExitOptions {
            tol,
            ..Default::default()
        }
    }
}

/// Measurement together with the full state at the exit time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExitRecord {
    pub measurement: Measurement,
    pub state: DipoleState,
}

const BOUNDARY_TOL: f64 = 1e-9;

/// Exit time and position of `a+` launched at `x` with `a-` at `y`.
pub fn exit_record(
    x: Vec2,
    y: Vec2,
    plus: &dyn GradientField,
    minus: &dyn GradientField,
    domain: &ConvexDomain,
    opts: &ExitOptions,
) -> Result<ExitRecord> {
    check_tol(opts.tol)?;
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::InvalidInput(
            "launch positions must be finite".into(),
        ));
    }
    if x == y {
        return Err(Error::Collision {
            separation: 0.0,
            d_min: 0.0,
        });
    }
    if domain.signed_distance(y)? >= 0.0 {
        return Err(Error::InvalidInput(
            "a- must start outside the closed domain".into(),
        ));
    }
    let g0 = domain.signed_distance(x)?;
    if g0 > BOUNDARY_TOL {
        return Err(Error::InvalidInput(
            "a+ must start on the boundary or outside".into(),
        ));
    }
    let d_min = opts.d_min.unwrap_or(1e-4 * domain.diameter());
    let sys = DipoleSystem { plus, minus, d_min };
    let state0 = DipoleState::new(x, y);
    let immediate = |domain: &ConvexDomain| -> Result<ExitRecord> {
        let companion = if domain.inside(y) { None } else { Some(y) };
        Ok(ExitRecord {
            measurement: Measurement {
                tau_plus: 0.0,
                exit_point: x,
                companion,
            },
            state: state0,
        })
    };
    let (vp, _) = dipole_velocity(&state0, plus, minus, d_min)?;
    if g0 < -BOUNDARY_TOL {
        return immediate(domain);
    }
    let (_, theta, _) = domain.closest_boundary_point(x)?;
    let vn = vp.dot(domain.inward_normal(theta)?);
    if vn <= 0.0 {
        return immediate(domain);
    }
    let s_max = opts
        .s_max
        .unwrap_or(10.0 * domain.diameter() * PI * (x - y).norm());
    let g = |y: &[f64]| domain.signed_distance(Vec2::new(y[0], y[1]));
    let mut st = Dop853::new(
        &sys,
        0.0,
        &state0.to_array(),
        s_max,
        OdeOptions::with_tol(opts.tol),
    )?;
    let mut peak = g0;
    let mut prev = (0.0, g0);
    let mut first = true;
    let mut buf = [0.0; 4];
    while st.t() < s_max {
        let step = st.step(s_max)?;
        let mut nodes: Vec<f64> = Vec::with_capacity(64);
        if first {
            for m in (1..=40).rev() {
                nodes.push(step.t0 + step.h * 0.5f64.powi(m));
            }
            first = false;
        }
        for j in 1..=16 {
            nodes.push(step.t0 + step.h * j as f64 / 16.0);
        }
        for s in nodes {
            step.eval(s, &mut buf);
            let gs = g(&buf)?;
            if gs < -opts.entry_threshold && peak <= opts.entry_threshold {
                return immediate(domain);
            }
            if gs <= 0.0 && peak > opts.entry_threshold {
                let tau = brent(
                    |t| {
                        let mut b = [0.0; 4];
                        step.eval(t, &mut b);
                        g(&b)
                    },
                    prev.0,
                    s,
                    opts.time_tol,
                )?;
                return polish(&sys, &step, tau, domain);
            }
            peak = peak.max(gs);
            prev = (s, gs);
        }
    }
    Err(Error::Trapped { s_max })
}

/// Refines the exit time with full-order single steps from the step start.
fn polish(
    sys: &DipoleSystem,
    step: &crate::ode::DenseStep,
    tau0: f64,
    domain: &ConvexDomain,
) -> Result<ExitRecord> {
    let y0 = step.y0().to_vec();
    let at = |tau: f64| -> Result<(Vec<f64>, f64)> {
        let y = raw_step(sys, step.t0, &y0, tau - step.t0)?;
        let g = domain.signed_distance(Vec2::new(y[0], y[1]))?;
        Ok((y, g))
    };
    let (mut y, mut gv) = at(tau0)?;
    let mut tau = tau0;
    for _ in 0..4 {
        let (vp, _) =
            dipole_velocity(&DipoleState::from_slice(&y), sys.plus, sys.minus, sys.d_min)?;
        let (_, th, _) = domain.closest_boundary_point(Vec2::new(y[0], y[1]))?;
        let rate = vp.dot(domain.inward_normal(th)?);
        if rate >= 0.0 {
            break;
        }
        let dt = -gv / rate;
        if dt.abs() < 1e-16 * tau.max(1.0) {
            break;
        }
        let cand = tau + dt;
        if cand <= step.t0 || (cand - step.t0).abs() > 1.5 * step.h.abs() {
            break;
        }
        let (y2, g2) = at(cand)?;
        if g2.abs() >= gv.abs() {
            break;
        }
        tau = cand;
        y = y2;
        gv = g2;
    }
    let state = DipoleState::from_slice(&y);
    let companion = if domain.inside(state.a_minus) {
        None
    } else {
        Some(state.a_minus)
    };
    Ok(ExitRecord {
        measurement: Measurement {
            tau_plus: tau,
            exit_point: state.a_plus,
            companion,
        },
        state,
    })
}

/// The measurement map for a single potential.
pub fn exit_measurement(
    x: Vec2,
    y: Vec2,
    q: &PotentialModel,
    domain: &ConvexDomain,
    opts: &ExitOptions,
) -> Result<Measurement> {
    Ok(exit_record(x, y, q, q, domain, opts)?.measurement)
}

/// Anything that answers measurement queries for launches `(x, y)`.
pub trait MeasurementOracle: Sync {
    fn measure(&self, x: Vec2, y: Vec2) -> Result<Measurement>;
    fn domain(&self) -> &ConvexDomain;
}

/// Oracle backed by forward simulation of a known potential.
#[derive(Clone, Debug)]
pub struct Simulator {
    pub domain: ConvexDomain,
    pub q: PotentialModel,
    pub opts: ExitOptions,
}

impl Simulator {
    pub fn new(domain: ConvexDomain, q: PotentialModel, opts: ExitOptions) -> Self {
        Simulator { domain, q, opts }
    }
}

impl MeasurementOracle for Simulator {
    fn measure(&self, x: Vec2, y: Vec2) -> Result<Measurement> {
        exit_measurement(x, y, &self.q, &self.domain, &self.opts)
    }

    fn domain(&self) -> &ConvexDomain {
        &self.domain
    }
}

/// Adds deterministic uniform noise of the given amplitude to every reported quantity.
pub struct NoisyOracle<O> {
    pub inner: O,
    pub amplitude: f64,
    pub seed: u64,
}

impl<O: MeasurementOracle> MeasurementOracle for NoisyOracle<O> {
    fn measure(&self, x: Vec2, y: Vec2) -> Result<Measurement> {
        let mut m = self.inner.measure(x, y)?;
        let mut h = self.seed ^ 0x9e37_79b9_7f4a_7c15;
        for v in [x.x1, x.x2, y.x1, y.x2] {
            h = (h ^ v.to_bits())
                .wrapping_mul(0x100_0000_01b3)
                .rotate_left(17);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(h);
        let a = self.amplitude;
        let mut noise = || rng.random_range(-a..=a);
        if m.tau_plus > 0.0 {
            m.tau_plus = (m.tau_plus + noise()).max(0.0);
            m.exit_point += Vec2::new(noise(), noise());
            if let Some(c) = m.companion.as_mut() {
                *c += Vec2::new(noise(), noise());
            }
        }
        Ok(m)
    }

    fn domain(&self) -> &ConvexDomain {
        self.inner.domain()
    }
}

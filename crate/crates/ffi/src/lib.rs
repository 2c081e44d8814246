//! C ABI over the dipolejet pipeline.
//!
//! Every entry point returns a [`DjStatus`]; on failure the message is kept
//! per thread and can be copied out with [`dj_last_error`]. Handles are
//! opaque and must be released with [`dj_experiment_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dipolejet::config::ExperimentConfig;
use dipolejet::dynamics::{ExitOptions, MeasurementOracle, Simulator};
use dipolejet::global_recon::{reconstruct_global, ReconSettings};
use dipolejet::jet_recovery::{recover_gradient, recover_jet, Observer};
use dipolejet::potential::{ExteriorPotential, PotentialModel};
use dipolejet::quadrature::QuadOptions;
use dipolejet::{Error, Vec2};

/// Result codes of every `dj_*` call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DjStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    InvalidInput = 4,
    IllConditioned = 5,
    ComputationFailed = 6,
    Panic = 7,
}

/// Configured experiment: domain, hidden potential and solver settings.
pub struct DjExperiment {
    cfg: ExperimentConfig,
    q: PotentialModel,
    sim: Simulator,
    ext: ExteriorPotential,
}

impl DjExperiment {
    fn obs(&self) -> Observer<'_> {
        Observer {
            oracle: &self.sim,
            exterior: &self.ext,
            opts: &self.cfg.recovery,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DjMeasurement {
    pub tau_plus: f64,
    pub exit_point: [f64; 2],
    /// 1 when `a-` is outside the domain at the exit time.
    pub companion_visible: i32,
    pub companion: [f64; 2],
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DjGradient {
    pub p: [f64; 2],
    pub gradient: [f64; 2],
    pub uncertainty: f64,
    pub ell_prime: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DjReconSummary {
    pub points: usize,
    pub failures: usize,
    pub sup_err: f64,
    pub rms_err: f64,
    pub sup_rel_err: f64,
    pub path_discrepancy: f64,
    /// Order actually reached by the boundary jet.
    pub jet_order: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> DjStatus {
    match e {
        Error::InvalidInput(_) => DjStatus::InvalidInput,
        Error::IllConditioned { .. } => DjStatus::IllConditioned,
        _ => DjStatus::ComputationFailed,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (DjStatus, String)>) -> DjStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            DjStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            DjStatus::Panic
        }
    }
}

fn fail(e: Error) -> (DjStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (DjStatus, String) {
    (DjStatus::NullPointer, format!("{what} is null"))
}

/// Parses a JSON experiment configuration and builds a handle.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dj_experiment_from_json(
    json: *const c_char,
    out: *mut *mut DjExperiment,
) -> DjStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (DjStatus::InvalidUtf8, e.to_string()))?;
        let cfg = ExperimentConfig::from_json(text)
            .map_err(|e| (DjStatus::InvalidConfig, e.to_string()))?;
        let q = cfg.potential_model();
        let tilde = cfg
            .tilde_omega()
            .map_err(|e| (DjStatus::InvalidConfig, e.to_string()))?;
        let sim = Simulator::new(
            tilde.domain.clone(),
            q.clone(),
            ExitOptions::with_tol(cfg.solver.ode_tol),
        );
        let ext = ExteriorPotential::new(q.clone(), tilde);
        *out = Box::into_raw(Box::new(DjExperiment { cfg, q, sim, ext }));
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `exp` must come from [`dj_experiment_from_json`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dj_experiment_free(exp: *mut DjExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// One measurement for `a+` launched at `(x1, x2)` with `a-` at `(y1, y2)`.
///
/// # Safety
/// `exp` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn dj_measure(
    exp: *const DjExperiment,
    x1: f64,
    x2: f64,
    y1: f64,
    y2: f64,
    out: *mut DjMeasurement,
) -> DjStatus {
    guard(|| {
        let exp = exp.as_ref().ok_or_else(|| null("experiment"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let m = exp
            .sim
            .measure(Vec2::new(x1, x2), Vec2::new(y1, y2))
            .map_err(fail)?;
        let c = m.companion.unwrap_or(Vec2::ZERO);
        *out = DjMeasurement {
            tau_plus: m.tau_plus,
            exit_point: [m.exit_point.x1, m.exit_point.x2],
            companion_visible: m.companion.is_some() as i32,
            companion: [c.x1, c.x2],
        };
        Ok(())
    })
}

/// Recovers the gradient of the hidden potential at boundary parameter `theta`.
///
/// # Safety
/// `exp` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn dj_recover_gradient(
    exp: *const DjExperiment,
    theta: f64,
    out: *mut DjGradient,
) -> DjStatus {
    guard(|| {
        let exp = exp.as_ref().ok_or_else(|| null("experiment"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let g = recover_gradient(&exp.obs(), theta).map_err(fail)?;
        *out = DjGradient {
            p: [g.p.x1, g.p.x2],
            gradient: [g.gradient.x1, g.gradient.x2],
            uncertainty: g.uncertainty,
            ell_prime: g.ell_prime,
        };
        Ok(())
    })
}

/// Chart-coordinate jet entry `d_s^j d_n^k Q` at `theta`, recovered through `order`.
///
/// Returns `IllConditioned` when the jet stopped below the requested entry.
///
/// # Safety
/// `exp`, `value` and `uncertainty` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn dj_recover_jet_entry(
    exp: *const DjExperiment,
    theta: f64,
    order: usize,
    j: usize,
    k: usize,
    value: *mut f64,
    uncertainty: *mut f64,
) -> DjStatus {
    guard(|| {
        let exp = exp.as_ref().ok_or_else(|| null("experiment"))?;
        if value.is_null() || uncertainty.is_null() {
            return Err(null("value or uncertainty"));
        }
        if j + k == 0 || j + k > order {
            return Err((
                DjStatus::InvalidInput,
                format!("entry ({j},{k}) outside orders 1..={order}"),
            ));
        }
        let jet = recover_jet(&exp.obs(), theta, order).map_err(fail)?;
        match (jet.get(j, k), jet.uncertainty(j, k)) {
            (Some(v), Some(u)) => {
                *value = v;
                *uncertainty = u;
                Ok(())
            }
            _ => Err((
                DjStatus::IllConditioned,
                jet.failure
                    .unwrap_or_else(|| format!("entry ({j},{k}) not recovered")),
            )),
        }
    })
}

/// Runs the global reconstruction described by the configuration.
///
/// # Safety
/// `exp` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn dj_reconstruct(
    exp: *const DjExperiment,
    out: *mut DjReconSummary,
) -> DjStatus {
    guard(|| {
        let exp = exp.as_ref().ok_or_else(|| null("experiment"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let settings = ReconSettings {
            theta_p: exp.cfg.boundary_thetas[0],
            jet_order: exp.cfg.jet_order,
            grid: exp.cfg.grid,
            quad: QuadOptions {
                abs_tol: exp.cfg.solver.quad_tol,
                ..Default::default()
            },
        };
        let rep = reconstruct_global(&exp.obs(), &exp.q, &settings).map_err(fail)?;
        *out = DjReconSummary {
            points: rep.points.len(),
            failures: rep.failures.len(),
            sup_err: rep.sup_err,
            rms_err: rep.rms_err,
            sup_rel_err: rep.sup_rel_err,
            path_discrepancy: rep.path_discrepancy,
            jet_order: rep.jet.order,
        };
        Ok(())
    })
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dj_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

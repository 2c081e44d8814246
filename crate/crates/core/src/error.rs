use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no unique boundary projection for ({x1}, {x2})")]
    NoUniqueProjection { x1: f64, x2: f64 },
    #[error("partials of order {requested} unavailable (max exact order {max})")]
    OrderUnavailable { requested: usize, max: usize },
    #[error("vortex collision: separation {separation:e} below {d_min:e}")]
    Collision { separation: f64, d_min: f64 },
    #[error("integrator step failure at s = {s}: {reason}")]
    StepFailure { s: f64, reason: String },
    #[error("a+ still inside the domain at s_max = {s_max}")]
    Trapped { s_max: f64 },
    #[error("companion vortex inside the domain at exit (t = {t})")]
    CompanionHidden { t: f64 },
    #[error("requested velocity equals the potential drift")]
    DegenerateVelocity,
    #[error("no enter/leave transition on the scan arc")]
    NoTransitionFound,
    #[error("launch point inside the enlarged domain at t = {t}")]
    XiInsideTildeOmega { t: f64 },
    #[error("nonpositive exit-time slope {slope:e}")]
    NonpositiveSlope { slope: f64 },
    #[error("ill-conditioned estimate of {what}: value {value:e}, spread {spread:e}")]
    IllConditioned {
        what: String,
        value: f64,
        spread: f64,
    },
    #[error("integration segment leaves the model validity region")]
    SegmentLeavesValidity,
    #[error("potential queried inside the enlarged domain at ({x1}, {x2})")]
    HiddenPotentialQuery { x1: f64, x2: f64 },
}

//! JSON experiment configuration with a strict schema.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::dynamics::DipoleState;
use crate::error::{Error, Result};
use crate::geometry::{tilde_omega_margin, ConvexDomain, TildeOmega};
use crate::jet_recovery::RecoveryOptions;
use crate::potential::{Bump, PotentialModel};
use crate::vec2::Vec2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    Ellipse {
        center: [f64; 2],
        semi_axes: [f64; 2],
    },
}

impl DomainSpec {
    pub fn build(&self) -> Result<ConvexDomain> {
        match self {
            DomainSpec::Circle { center, radius } => ConvexDomain::circle(v(*center), *radius),
            DomainSpec::Ellipse { center, semi_axes } => {
                ConvexDomain::ellipse(v(*center), *semi_axes)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    /// Exponents of `x1` and `x2`.
    pub powers: [u32; 2],
    pub coeff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub center: [f64; 2],
    pub amplitude: f64,
    pub width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero,
    Polynomial { terms: Vec<Term> },
    Bumps { bumps: Vec<BumpSpec> },
    Sum { parts: Vec<PotentialSpec> },
}

impl PotentialSpec {
    pub fn build(&self) -> PotentialModel {
        match self {
            PotentialSpec::Zero => PotentialModel::Zero,
            PotentialSpec::Polynomial { terms } => {
                let mut map = std::collections::BTreeMap::new();
                for t in terms {
                    *map.entry((t.powers[0], t.powers[1])).or_insert(0.0) += t.coeff;
                }
                PotentialModel::Polynomial(map)
            }
            PotentialSpec::Bumps { bumps } => PotentialModel::GaussianBumps(
                bumps
                    .iter()
                    .map(|b| Bump {
                        center: v(b.center),
                        amplitude: b.amplitude,
                        width: b.width,
                    })
                    .collect(),
            ),
            PotentialSpec::Sum { parts } => {
                PotentialModel::Sum(parts.iter().map(|p| p.build()).collect())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub ode_tol: f64,
    pub quad_tol: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            ode_tol: 1e-11,
            quad_tol: 1e-10,
        }
    }
}

/// A single launch for `simulate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaunchSpec {
    pub a_plus: [f64; 2],
    pub a_minus: [f64; 2],
    pub s_end: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    200
}

/// Parameter grid for `measure` and `sample-r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub nodes: usize,
}

impl Default for FamilyGrid {
    fn default() -> Self {
        FamilyGrid {
            t_min: 1e-4,
            t_max: 0.1,
            nodes: 12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuSuiteSpec {
    pub cases: usize,
}

impl Default for SuSuiteSpec {
    fn default() -> Self {
        SuSuiteSpec { cases: 96 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub potential: PotentialSpec,
    /// Cap on the margin of the enlarged domain.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub recovery: RecoveryOptions,
    #[serde(default = "default_jet_order")]
    pub jet_order: usize,
    /// Boundary parameters of the points used by the recovery subcommands.
    #[serde(default = "default_thetas")]
    pub boundary_thetas: Vec<f64>,
    #[serde(default)]
    pub launch: Option<LaunchSpec>,
    #[serde(default)]
    pub family: FamilyGrid,
    #[serde(default)]
    pub su_suite: SuSuiteSpec,
    /// Points per axis of the reconstruction grid.
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Output directory, overridden by `--out`.
    #[serde(default)]
    pub out_dir: Option<String>,
    #[serde(default)]
    pub seed: u64,
}

fn default_sigma() -> f64 {
    0.05
}

fn default_jet_order() -> usize {
    2
}

fn default_thetas() -> Vec<f64> {
    vec![-FRAC_PI_2]
}

fn default_grid() -> usize {
    50
}

fn v(a: [f64; 2]) -> Vec2 {
    Vec2::new(a[0], a[1])
}

/// 1-based line of the first occurrence of `"key"` in the source text.
fn line_of(text: &str, key: &str) -> usize {
    let needle = format!("\"{key}\"");
    text.lines()
        .position(|l| l.contains(&needle))
        .map_or(1, |i| i + 1)
}

impl ExperimentConfig {
    /// Parses and validates; messages carry the offending line.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))?;
        cfg.validate().map_err(|(key, msg)| {
            Error::InvalidInput(format!(
                "config: {msg} at line {} (\"{key}\")",
                line_of(text, key)
            ))
        })?;
        Ok(cfg)
    }

    fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        if !(self.sigma > 0.0) {
            return Err((
                "sigma",
                format!("sigma must be positive, got {}", self.sigma),
            ));
        }
        if !(1e-13..=1e-6).contains(&self.solver.ode_tol) {
            return Err((
                "ode_tol",
                format!(
                    "ode_tol must lie in [1e-13, 1e-6], got {:e}",
                    self.solver.ode_tol
                ),
            ));
        }
        if !(self.solver.quad_tol > 0.0) {
            return Err(("quad_tol", "quad_tol must be positive".into()));
        }
        if !(1..=3).contains(&self.jet_order) {
            return Err((
                "jet_order",
                format!("jet_order must be 1, 2 or 3, got {}", self.jet_order),
            ));
        }
        self.recovery
            .validate()
            .map_err(|e| ("recovery", e.to_string()))?;
        self.domain.build().map_err(|e| ("domain", e.to_string()))?;
        if self.boundary_thetas.is_empty() || self.boundary_thetas.iter().any(|t| !t.is_finite()) {
            return Err((
                "boundary_thetas",
                "boundary_thetas must be a nonempty list of finite numbers".into(),
            ));
        }
        let f = &self.family;
        if !(0.0 < f.t_min && f.t_min < f.t_max && f.t_max < self.recovery.delta && f.nodes >= 2) {
            return Err((
                "family",
                "family grid needs 0 < t_min < t_max < recovery.delta and nodes >= 2".into(),
            ));
        }
        if self.grid < 2 {
            return Err(("grid", "grid must be at least 2".into()));
        }
        if let Some(l) = &self.launch {
            if !(l.s_end > 0.0) || l.samples < 2 {
                return Err(("launch", "launch needs s_end > 0 and samples >= 2".into()));
            }
        }
        Ok(())
    }

    pub fn potential_model(&self) -> PotentialModel {
        self.potential.build()
    }

    /// Enlarged domain with margin `min{(4 pi M)^-1, sigma}`, `M` a gradient bound over the domain.
    pub fn tilde_omega(&self) -> Result<TildeOmega> {
        let domain = self.domain.build()?;
        let m = self.potential_model().gradient_bound(&domain, 64)?;
        Ok(TildeOmega::new(domain, tilde_omega_margin(m, self.sigma)))
    }

    pub fn launch_state(&self) -> Result<(DipoleState, &LaunchSpec)> {
        let l = self
            .launch
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("config has no \"launch\" section".into()))?;
        Ok((DipoleState::new(v(l.a_plus), v(l.a_minus)), l))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = r#"{
  "domain": {"kind": "circle", "center": [0, 1], "radius": 1},
  "potential": {"kind": "polynomial", "terms": [{"powers": [1, 0], "coeff": 0.1}]}
}"#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_json(MIN).unwrap();
        assert_eq!(c.jet_order, 2);
        assert_eq!(c.grid, 50);
        assert_eq!(c.recovery, RecoveryOptions::default());
        assert_eq!(
            c.potential_model().gradient(Vec2::ZERO),
            Vec2::new(0.1, 0.0)
        );
    }

    #[test]
    fn rejects_unknown_and_missing_keys() {
        let e = ExperimentConfig::from_json(r#"{"potential": {"kind": "zero"}}"#).unwrap_err();
        assert!(e.to_string().contains("domain"), "{e}");
        let bad = MIN.replace("\"radius\": 1", "\"radius\": 1, \"colour\": 2");
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }

    #[test]
    fn semantic_errors_name_the_line() {
        let bad = MIN.replace("\n}", ",\n  \"jet_order\": 7\n}");
        let e = ExperimentConfig::from_json(&bad).unwrap_err().to_string();
        assert!(e.contains("line 4"), "{e}");
        let bad = MIN.replace("\n}", ",\n  \"solver\": {\"ode_tol\": 1e-3}\n}");
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }
}

//! Command-line driver: every subcommand reads one JSON config and writes
//! CSV/JSON/SVG artifacts into the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::dynamics::{integrate_dipole, ExitOptions, MeasurementOracle, Simulator};
use crate::error::Error;
use crate::family::{build_family, LaunchFamily, TangentFamily};
use crate::geometry::TildeOmega;
use crate::global_recon::{reconstruct_global, ReconReport, ReconSettings};
use crate::jet_recovery::{
    cartesian_to_chart, check_convexity, lemma_limits_check, lemma_lower_order_check,
    plus_block_check, recover_gradient, recover_jet, Observer,
};
use crate::numerics::geometric_grid;
use crate::potential::{ExteriorPotential, PotentialModel};
use crate::quadrature::QuadOptions;
use crate::su_identity::{r_sample, su_residual};
use crate::suite::su_cases;
use crate::vec2::Vec2;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_COMPUTATION: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "dipolejet",
    version,
    about = "Vortex-dipole boundary measurements and potential reconstruction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; defaults to `out_dir` in the config, then `out`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Trajectory of the configured launch.
    Simulate,
    /// Measurements along the tangent family at each boundary point.
    Measure,
    /// Residual of the flow-discrepancy identity over a seeded random suite.
    VerifySu,
    /// Measured discrepancy R(t) along the tangent family.
    SampleR,
    /// Gradient of Q at each configured boundary point.
    RecoverGradient,
    /// Boundary jet through `jet_order` at each configured boundary point.
    RecoverJet,
    /// Global reconstruction on a grid (CSV, SVG and a JSON summary).
    Reconstruct,
    /// Limit checks along the exact tangent family.
    VerifyLemmas,
}

#[derive(Debug)]
enum Failure {
    Validation(String),
    Computation(String),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Computation(format!("i/o: {e}"))
    }
}

type Run = std::result::Result<(), Failure>;

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            EXIT_VALIDATION
        }
        Err(Failure::Computation(m)) => {
            eprintln!("error: {m}");
            EXIT_COMPUTATION
        }
    }
}

fn run(cli: &Cli) -> Run {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Validation("--config <path> is required".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    let mut cfg =
        ExperimentConfig::from_json(&text).map_err(|e| Failure::Validation(e.to_string()))?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out)?;
    let ctx = Ctx::new(cfg, out).map_err(|e| Failure::Validation(e.to_string()))?;
    let job = || match cli.command {
        Command::Simulate => ctx.simulate(),
        Command::Measure => ctx.measure(),
        Command::VerifySu => ctx.verify_su(),
        Command::SampleR => ctx.sample_r(),
        Command::RecoverGradient => ctx.recover_gradient(),
        Command::RecoverJet => ctx.recover_jet(),
        Command::Reconstruct => ctx.reconstruct(),
        Command::VerifyLemmas => ctx.verify_lemmas(),
    };
    match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Validation(format!("--threads: {e}")))?
            .install(job),
        None => job(),
    }
}

struct Ctx {
    cfg: ExperimentConfig,
    out: PathBuf,
    q: PotentialModel,
    tilde: TildeOmega,
    sim: Simulator,
    ext: ExteriorPotential,
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn csv_row(fields: &[f64]) -> String {
    fields.iter().map(|&x| num(x)).collect::<Vec<_>>().join(",")
}

fn comp(e: Error) -> Failure {
    Failure::Computation(e.to_string())
}

/// Nonzero exit only when nothing succeeded.
fn total(ok: usize, n: usize, what: &str) -> Run {
    if ok == 0 && n > 0 {
        Err(Failure::Computation(format!("all {n} {what} failed")))
    } else {
        Ok(())
    }
}

impl Ctx {
    fn new(cfg: ExperimentConfig, out: PathBuf) -> crate::Result<Self> {
        let q = cfg.potential_model();
        let tilde = cfg.tilde_omega()?;
        let sim = Simulator::new(
            tilde.domain.clone(),
            q.clone(),
            ExitOptions::with_tol(cfg.solver.ode_tol),
        );
        let ext = ExteriorPotential::new(q.clone(), tilde.clone());
        Ok(Ctx {
            cfg,
            out,
            q,
            tilde,
            sim,
            ext,
        })
    }

    fn obs(&self) -> Observer<'_> {
        Observer {
            oracle: &self.sim,
            exterior: &self.ext,
            opts: &self.cfg.recovery,
        }
    }

    fn write(&self, name: &str, body: &str) -> Run {
        fs::write(self.out.join(name), body)?;
        Ok(())
    }

    fn write_json<T: Serialize>(&self, name: &str, v: &T) -> Run {
        let mut s =
            serde_json::to_string_pretty(v).map_err(|e| Failure::Computation(e.to_string()))?;
        s.push('\n');
        self.write(name, &s)
    }

    fn family(&self, theta: f64) -> crate::Result<TangentFamily> {
        let r = &self.cfg.recovery;
        let p = self.tilde.domain.point(theta)?;
        build_family(
            &self.tilde,
            theta,
            self.q.gradient(p),
            r.epsilon,
            r.beta,
            r.delta,
            r.alpha_sign,
        )
    }

    fn family_ts(&self) -> Vec<f64> {
        let f = &self.cfg.family;
        geometric_grid(f.t_min, f.t_max, f.nodes)
    }

    fn simulate(&self) -> Run {
        let (state, l) = self
            .cfg
            .launch_state()
            .map_err(|e| Failure::Validation(e.to_string()))?;
        let traj =
            integrate_dipole(state, &self.q, l.s_end, self.cfg.solver.ode_tol).map_err(comp)?;
        let mut s = String::from("s,a_plus_1,a_plus_2,a_minus_1,a_minus_2,a_plus_inside\n");
        for i in 0..l.samples {
            let t = l.s_end * i as f64 / (l.samples - 1) as f64;
            let st = traj.state_at(t);
            let inside = self.tilde.domain.inside(st.a_plus) as u8;
            writeln!(
                s,
                "{},{inside}",
                csv_row(&[t, st.a_plus.x1, st.a_plus.x2, st.a_minus.x1, st.a_minus.x2])
            )
            .unwrap();
        }
        self.write("trajectory.csv", &s)
    }

    fn measure(&self) -> Run {
        let ts = self.family_ts();
        let mut s = String::from(
            "theta,t,xi_1,xi_2,tau_plus,exit_1,exit_2,companion_1,companion_2,status\n",
        );
        let (mut ok, mut n) = (0, 0);
        for &theta in &self.cfg.boundary_thetas {
            let fam = match self.family(theta) {
                Ok(f) => f,
                Err(e) => {
                    n += 1;
                    writeln!(s, "{},,,,,,,,,\"{e}\"", num(theta)).unwrap();
                    continue;
                }
            };
            let rows: Vec<_> = ts
                .par_iter()
                .map(|&t| -> crate::Result<_> {
                    let xi = fam.xi(t)?;
                    Ok((xi, self.sim.measure(fam.base(), xi)?))
                })
                .collect();
            for (&t, r) in ts.iter().zip(rows) {
                n += 1;
                match r {
                    Ok((xi, m)) => {
                        ok += 1;
                        let c = m
                            .companion
                            .map_or((String::new(), String::new()), |c| (num(c.x1), num(c.x2)));
                        let head = csv_row(&[
                            theta,
                            t,
                            xi.x1,
                            xi.x2,
                            m.tau_plus,
                            m.exit_point.x1,
                            m.exit_point.x2,
                        ]);
                        writeln!(s, "{head},{},{},ok", c.0, c.1).unwrap();
                    }
                    Err(e) => writeln!(s, "{},,,,,,,,\"{e}\"", csv_row(&[theta, t])).unwrap(),
                }
            }
        }
        self.write("measurements.csv", &s)?;
        total(ok, n, "measurements")
    }

    fn verify_su(&self) -> Run {
        let cases = su_cases(self.cfg.seed, self.cfg.su_suite.cases).map_err(comp)?;
        let tol = &self.cfg.solver;
        let reports: Vec<_> = cases
            .par_iter()
            .map(|c| su_residual(&c.phi, &c.q, &c.domain, tol.ode_tol, tol.quad_tol))
            .collect();
        let mut s = String::from("case,x_1,x_2,y_1,y_2,ell,residual,status\n");
        let mut max_res: f64 = 0.0;
        let mut ok = 0;
        for (i, (c, r)) in cases.iter().zip(reports).enumerate() {
            let head = csv_row(&[c.phi.x.x1, c.phi.x.x2, c.phi.y.x1, c.phi.y.x2]);
            match r {
                Ok(r) => {
                    ok += 1;
                    max_res = max_res.max(r.residual);
                    writeln!(s, "{i},{head},{},{},ok", num(r.ell), num(r.residual)).unwrap();
                }
                Err(e) => writeln!(s, "{i},{head},,,\"{e}\"").unwrap(),
            }
        }
        self.write("su_residual.csv", &s)?;
        self.write_json(
            "su_summary.json",
            &json!({"cases": cases.len(), "succeeded": ok, "max_residual": max_res, "seed": self.cfg.seed}),
        )?;
        total(ok, cases.len(), "identity cases")
    }

    fn sample_r(&self) -> Run {
        let ts = self.family_ts();
        let mut s = String::from("theta,t,ell,r_1,r_2,r_3,r_4,status\n");
        let (mut ok, mut n) = (0, 0);
        for &theta in &self.cfg.boundary_thetas {
            let rows: Vec<_> = match self.family(theta) {
                Ok(fam) => ts
                    .par_iter()
                    .map(|&t| r_sample(&fam, &self.sim, t))
                    .collect(),
                Err(e) => ts.iter().map(|_| Err(e.clone())).collect(),
            };
            for (&t, r) in ts.iter().zip(rows) {
                n += 1;
                match r {
                    Ok(r) => {
                        ok += 1;
                        writeln!(
                            s,
                            "{},ok",
                            csv_row(&[theta, t, r.ell, r.r[0], r.r[1], r.r[2], r.r[3]])
                        )
                        .unwrap();
                    }
                    Err(e) => writeln!(s, "{},,,,,,\"{e}\"", csv_row(&[theta, t])).unwrap(),
                }
            }
        }
        self.write("r_samples.csv", &s)?;
        total(ok, n, "samples")
    }

    fn recover_gradient(&self) -> Run {
        let obs = self.obs();
        let thetas = &self.cfg.boundary_thetas;
        let est: Vec<_> = thetas
            .par_iter()
            .map(|&t| recover_gradient(&obs, t))
            .collect();
        let mut ok = 0;
        let mut points = Vec::new();
        for (&theta, r) in thetas.iter().zip(est) {
            points.push(match r {
                Ok(g) => {
                    ok += 1;
                    let truth = self.q.gradient(g.p);
                    let rel = (g.gradient - truth).norm() / truth.norm().max(f64::MIN_POSITIVE);
                    json!({"theta": theta, "estimate": g, "true_gradient": truth, "relative_error": rel})
                }
                Err(e) => json!({"theta": theta, "error": e.to_string()}),
            });
        }
        self.write_json("gradient.json", &json!({ "points": points }))?;
        total(ok, thetas.len(), "gradient recoveries")
    }

    fn true_chart_jet(&self, theta: f64, order: usize) -> crate::Result<Vec<(String, f64)>> {
        let d = &self.tilde.domain;
        let p = d.point(theta)?;
        let local = self.q.eval_partials(p, order)?.rotated(d.tangent(theta)?);
        let chart = cartesian_to_chart(&local, d, theta)?;
        let mut out = Vec::new();
        for deg in 1..=order {
            for k in 0..=deg {
                out.push((format!("{},{k}", deg - k), chart.get(deg - k, k)));
            }
        }
        Ok(out)
    }

    fn recover_jet(&self) -> Run {
        let obs = self.obs();
        let thetas = &self.cfg.boundary_thetas;
        let order = self.cfg.jet_order;
        let est: Vec<_> = thetas
            .par_iter()
            .map(|&t| recover_jet(&obs, t, order))
            .collect();
        let mut ok = 0;
        let mut points = Vec::new();
        for (&theta, r) in thetas.iter().zip(est) {
            points.push(match r {
                Ok(j) => {
                    ok += 1;
                    let truth = self.true_chart_jet(theta, order).unwrap_or_default();
                    let residuals: serde_json::Map<String, serde_json::Value> = truth
                        .iter()
                        .filter_map(|(k, x)| j.values.get(k).map(|v| (k.clone(), json!(v - x))))
                        .collect();
                    let truth: serde_json::Map<String, serde_json::Value> =
                        truth.into_iter().map(|(k, x)| (k, json!(x))).collect();
                    let convexity = check_convexity(&self.q, &self.tilde.domain, theta, self.cfg.recovery.epsilon).ok();
                    json!({
                        "theta": theta,
                        "point": j.p,
                        "order": j.order,
                        "values": j.values,
                        "uncertainties": j.uncertainties,
                        "failure": j.failure,
                        "diagnostics": {"ell_prime": j.ell_prime, "convexity": convexity, "residuals": residuals},
                        "true_chart_jet": truth,
                    })
                }
                Err(e) => json!({"theta": theta, "error": e.to_string()}),
            });
        }
        self.write_json("jet.json", &json!({ "order": order, "points": points }))?;
        total(ok, thetas.len(), "jet recoveries")
    }

    fn reconstruct(&self) -> Run {
        let settings = ReconSettings {
            theta_p: self.cfg.boundary_thetas[0],
            jet_order: self.cfg.jet_order,
            grid: self.cfg.grid,
            quad: QuadOptions {
                abs_tol: self.cfg.solver.quad_tol,
                ..Default::default()
            },
        };
        let rep = reconstruct_global(&self.obs(), &self.q, &settings).map_err(comp)?;
        let mut s = String::from("x1,x2,q_est,q_true,abs_err\n");
        for g in &rep.points {
            writeln!(
                s,
                "{}",
                csv_row(&[g.x.x1, g.x.x2, g.q_est, g.q_true, g.abs_err])
            )
            .unwrap();
        }
        self.write("grid.csv", &s)?;
        self.write("error.svg", &error_svg(&rep, &self.tilde, self.cfg.grid))?;
        self.write_json(
            "reconstruct.json",
            &json!({
                "theta_p": settings.theta_p,
                "jet": rep.jet,
                "margin": self.tilde.margin,
                "points": rep.points.len(),
                "failures": rep.failures,
                "sup_err": rep.sup_err,
                "rms_err": rep.rms_err,
                "sup_rel_err": rep.sup_rel_err,
                "path_discrepancy": rep.path_discrepancy,
            }),
        )
    }

    fn verify_lemmas(&self) -> Run {
        let theta = self.cfg.boundary_thetas[0];
        let fam = self.family(theta).map_err(comp)?;
        let d = &self.tilde.domain;
        let mut checks = serde_json::Map::new();
        let mut ok = 0;
        let mut put = |name: &str, v: crate::Result<serde_json::Value>| {
            checks.insert(
                name.into(),
                match v {
                    Ok(v) => {
                        ok += 1;
                        v
                    }
                    Err(e) => json!({ "error": e.to_string() }),
                },
            );
        };
        put(
            "k1_eta1",
            lemma_limits_check(1, 1, &fam, &self.q, d).map(|c| json!(c)),
        );
        put(
            "k2_eta2",
            lemma_limits_check(2, 2, &fam, &self.q, d).map(|c| json!(c)),
        );
        put(
            "plus_block_limit",
            plus_block_check(&fam, &self.q, d)
                .map(|(p, m)| json!({"plus_block": p, "minus_block": m, "plus_norm": p.norm()})),
        );
        let q2 = PotentialModel::Sum(vec![self.q.clone(), normal_cubic(fam.p, fam.frame.n, 0.02)]);
        put(
            "k2_eta1_lower_order",
            lemma_lower_order_check(2, 1, &fam, &self.q, &q2, d).map(
                |(a, b)| json!({"q": a, "q_perturbed": b, "gap": (a.numeric - b.numeric).norm()}),
            ),
        );
        self.write_json("lemmas.json", &json!({ "theta": theta, "checks": checks }))?;
        total(ok, 4, "lemma checks")
    }
}

/// `c (n . (x - p))^3`, which leaves the second-order jet at `p` unchanged.
fn normal_cubic(p: Vec2, n: Vec2, c: f64) -> PotentialModel {
    let c0 = -n.dot(p);
    let mut terms = Vec::new();
    for i in 0..=3u32 {
        for j in 0..=(3 - i) {
            let k = 3 - i - j;
            let multi = [1.0, 1.0, 2.0, 6.0];
            let w = 6.0 / (multi[i as usize] * multi[j as usize] * multi[k as usize]);
            terms.push((
                (i, j),
                c * w * n.x1.powi(i as i32) * n.x2.powi(j as i32) * c0.powi(k as i32),
            ));
        }
    }
    PotentialModel::polynomial(&terms)
}

fn heat(v: f64) -> String {
    let v = v.clamp(0.0, 1.0);
    let r = (255.0 * v.sqrt()) as u8;
    let b = (255.0 * (1.0 - v)) as u8;
    format!("#{r:02x}30{b:02x}")
}

/// Heat map of `abs_err` over the grid with the domain outline.
fn error_svg(rep: &ReconReport, tilde: &TildeOmega, n: usize) -> String {
    let [x0, y0, x1, y1] = rep.bbox;
    let size = 500.0;
    let scale = size / (x1 - x0).max(y1 - y0);
    let px = |x: Vec2| ((x.x1 - x0) * scale, size - (x.x2 - y0) * scale);
    let cw = (x1 - x0) / (n - 1) as f64 * scale;
    let ch = (y1 - y0) / (n - 1) as f64 * scale;
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#).unwrap();
    writeln!(s, r#"<rect width="{size}" height="{size}" fill="white"/>"#).unwrap();
    let top = rep.sup_err.max(f64::MIN_POSITIVE);
    for g in &rep.points {
        let (cx, cy) = px(g.x);
        writeln!(
            s,
            r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{}"/>"#,
            cx - cw / 2.0,
            cy - ch / 2.0,
            cw,
            ch,
            heat(g.abs_err / top)
        )
        .unwrap();
    }
    let mut pts = Vec::new();
    for i in 0..=256 {
        if let Ok(x) = tilde.domain.point(std::f64::consts::TAU * i as f64 / 256.0) {
            let (a, b) = px(x);
            pts.push(format!("{a:.3},{b:.3}"));
        }
    }
    writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="black" stroke-width="1.5"/>"#,
        pts.join(" ")
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="8" y="18" font-family="monospace" font-size="13">sup |err| = {:.3e}, rms = {:.3e}</text>"#,
        rep.sup_err, rep.rms_err
    )
    .unwrap();
    s.push_str("</svg>\n");
    s
}

/// Bundled configs shipped under `configs/` in the crate directory.
pub fn bundled_config_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cubic_expands() {
        let p = Vec2::new(0.3, -0.2);
        let n = Vec2::new(0.6, 0.8);
        let q = normal_cubic(p, n, 0.02);
        let x = Vec2::new(1.1, 0.4);
        let want = 0.02 * n.dot(x - p).powi(3);
        assert!((q.eval(x) - want).abs() < 1e-15);
        let j = q.eval_partials(p, 2).unwrap();
        for d in 0..=2 {
            for k in 0..=d {
                assert!(j.get(d - k, k).abs() < 1e-15);
            }
        }
    }
}

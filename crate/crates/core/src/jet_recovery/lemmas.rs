use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{exit_measurement, ExitOptions};
use crate::error::{Error, Result};
use crate::family::{LaunchFamily, TangentFamily};
use crate::geometry::ConvexDomain;
use crate::numerics::{geometric_grid, power_fit, taylor_coefficient};
use crate::ode::{solve, OdeOptions, OdeSystem};
use crate::potential::{Partials, PotentialModel};
use crate::series::{factorial, Series1, Series2};
use crate::vec2::Vec2;

/// `perp grad Q` at a point given as a pair of series.
fn perp_grad_series(q: &PotentialModel, x: &Series1, y: &Series1) -> Result<[Series1; 2]> {
    let order = x.order();
    let p = q.eval_partials(Vec2::new(x.c[0], y.c[0]), order + 1)?;
    let (dx, dy) = (x.shifted_part(), y.shifted_part());
    let xp: Vec<Series1> = (0..=order).map(|i| dx.powi(i)).collect();
    let yp: Vec<Series1> = (0..=order).map(|j| dy.powi(j)).collect();
    let mut f1 = Series1::zero(order);
    let mut f2 = Series1::zero(order);
    for i in 0..=order {
        for j in 0..=order - i {
            let m = &xp[i] * &yp[j];
            let w = 1.0 / (factorial(i) * factorial(j));
            f1 = &f1 + &m.scale(w * p.get(i, j + 1));
            f2 = &f2 + &m.scale(-w * p.get(i + 1, j));
        }
    }
    Ok([f1, f2])
}

/// Dipole flow acting on states that are truncated series in the family parameter.
struct JetTransport<'a> {
    q: &'a PotentialModel,
    order: usize,
}

impl JetTransport<'_> {
    fn unpack(&self, y: &[f64]) -> [Series1; 4] {
        let n = self.order + 1;
        std::array::from_fn(|i| Series1::from_coeffs(y[i * n..(i + 1) * n].to_vec()))
    }
}

impl OdeSystem for JetTransport<'_> {
    fn dim(&self) -> usize {
        4 * (self.order + 1)
    }

    fn rhs(&self, _s: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let [p1, p2, m1, m2] = self.unpack(y);
        let d1 = &p1 - &m1;
        let d2 = &p2 - &m2;
        let r2 = &(&d1 * &d1) + &(&d2 * &d2);
        if r2.c[0] == 0.0 {
            return Err(Error::Collision {
                separation: 0.0,
                d_min: 0.0,
            });
        }
        let inv = r2.recip().scale(1.0 / std::f64::consts::PI);
        let w1 = &d2 * &inv;
        let w2 = &(-&d1) * &inv;
        let [fp1, fp2] = perp_grad_series(self.q, &p1, &p2)?;
        let [fm1, fm2] = perp_grad_series(self.q, &m1, &m2)?;
        let out = [&w1 + &fp1, &w2 + &fp2, &w1 - &fm1, &w2 - &fm2];
        let n = self.order + 1;
        for (i, s) in out.iter().enumerate() {
            dy[i * n..(i + 1) * n].copy_from_slice(&s.c);
        }
        Ok(())
    }
}

/// Series in `tau` of `X(ell(t), phi(t + tau))`, with `ell(t)`.
fn transport(
    family: &TangentFamily,
    q: &PotentialModel,
    domain: &ConvexDomain,
    t: f64,
    order: usize,
) -> Result<(f64, [Series1; 4])> {
    let xi = family.xi(t)?;
    let ell = exit_measurement(family.p, xi, q, domain, &ExitOptions::with_tol(1e-12))?.tau_plus;
    let sys = JetTransport { q, order };
    let [x, y] = family.xi_series(t, order)?;
    let mut y0 = Vec::with_capacity(sys.dim());
    y0.extend(Series1::constant(family.p.x1, order).c);
    y0.extend(Series1::constant(family.p.x2, order).c);
    y0.extend(x.c);
    y0.extend(y.c);
    let end = if ell > 0.0 {
        solve(&sys, 0.0, &y0, ell, OdeOptions::with_tol(1e-12))?.y_end()
    } else {
        y0
    };
    Ok((ell, sys.unpack(&end)))
}

/// Outcome of one limit check, vectors in the tangent/normal frame at the base point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub k: usize,
    pub eta: usize,
    pub numeric: Vec2,
    /// Closed-form leading term plus the remaining terms evaluated from data.
    pub prediction: Option<Vec2>,
    pub leading: Option<Vec2>,
    /// `|numeric - prediction| / |leading|`, or the absolute gap when no prediction applies.
    pub discrepancy: f64,
    pub spread: f64,
    pub ell_prime: f64,
}

struct Samples {
    ts: Vec<f64>,
    ell: Vec<f64>,
    /// `a+` series in frame coordinates relative to `p`.
    plus: Vec<[Series1; 2]>,
    /// `d_t^k perp grad Q(a+(s; t))` and the same for `-perp grad Q(a-)` at `s = ell(t)`, frame coordinates.
    h_plus: Vec<Vec2>,
    h_minus: Vec<Vec2>,
}

fn collect(
    family: &TangentFamily,
    q: &PotentialModel,
    domain: &ConvexDomain,
    k: usize,
) -> Result<Samples> {
    let ts = geometric_grid(2e-3, 8e-2, 16);
    let frame = family.frame;
    let rows: Vec<(f64, [Series1; 2], Vec2, Vec2)> = ts
        .par_iter()
        .map(|&t| {
            let (ell, [p1, p2, m1, m2]) = transport(family, q, domain, t, k)?;
            let [f1, f2] = perp_grad_series(q, &p1, &p2)?;
            let [g1, g2] = perp_grad_series(q, &m1, &m2)?;
            let kf = factorial(k);
            let hp = frame.vec_to_local(Vec2::new(f1.c[k], f2.c[k]) * kf);
            let hm = frame.vec_to_local(Vec2::new(-g1.c[k], -g2.c[k]) * kf);
            let mut l1 = &p1.scale(frame.t.x1) + &p2.scale(frame.t.x2);
            let mut l2 = &p1.scale(frame.n.x1) + &p2.scale(frame.n.x2);
            l1.c[0] -= frame.origin.dot(frame.t);
            l2.c[0] -= frame.origin.dot(frame.n);
            Ok((ell, [l1, l2], hp, hm))
        })
        .collect::<Result<_>>()?;
    let mut s = Samples {
        ts,
        ell: vec![],
        plus: vec![],
        h_plus: vec![],
        h_minus: vec![],
    };
    for (ell, pl, hp, hm) in rows {
        s.ell.push(ell);
        s.plus.push(pl);
        s.h_plus.push(hp);
        s.h_minus.push(hm);
    }
    Ok(s)
}

const FIT_DEGREE: usize = 7;

fn coefficient(ts: &[f64], fs: &[f64], target: usize) -> Result<(f64, f64)> {
    let e = taylor_coefficient(ts, fs, 0, target, FIT_DEGREE - 1, FIT_DEGREE)?;
    Ok((e.value, e.spread))
}

fn vec_coefficient(ts: &[f64], vs: &[Vec2], target: usize) -> Result<(Vec2, f64)> {
    let (a, sa) = coefficient(ts, &vs.iter().map(|v| v.x1).collect::<Vec<_>>(), target)?;
    let (b, sb) = coefficient(ts, &vs.iter().map(|v| v.x2).collect::<Vec<_>>(), target)?;
    Ok((Vec2::new(a, b), sa.max(sb)))
}

/// Limit as `t -> 0` of `d^eta/dt^eta [d_t^k perp grad Q(a+(s; t))]` at `s = ell(t)`.
///
/// For `eta = k` the prediction is `k! (eps beta ell'(0))^k d_n^k perp grad Q(p)`
/// plus every other term of the expansion at `p`, the latter evaluated from
/// the transported trajectory data.
pub fn lemma_limits_check(
    k: usize,
    eta: usize,
    family: &TangentFamily,
    q: &PotentialModel,
    domain: &ConvexDomain,
) -> Result<LemmaCheck> {
    if !(1..=3).contains(&k) || eta > k {
        return Err(Error::InvalidInput(format!(
            "need 1 <= k <= 3 and eta <= k, got k={k} eta={eta}"
        )));
    }
    let s = collect(family, q, domain, k)?;
    let (c, spread) = vec_coefficient(&s.ts, &s.h_plus, eta)?;
    let numeric = c * factorial(eta);
    let ell_prime = taylor_coefficient(&s.ts, &s.ell, 1, 1, FIT_DEGREE - 1, FIT_DEGREE)?.value;
    if eta < k {
        return Ok(LemmaCheck {
            k,
            eta,
            numeric,
            prediction: None,
            leading: None,
            discrepancy: 0.0,
            spread: spread * factorial(eta),
            ell_prime,
        });
    }
    // Q partials in the frame at p, up to order k + 1
    let local = q.eval_partials(family.p, k + 1)?.rotated(family.frame.t);
    let eb = family.epsilon * family.beta * ell_prime;
    let fk = Vec2::new(local.get(0, k + 1), -local.get(1, k));
    let leading = fk * (factorial(k) * eb.powi(k as i32));
    let rest = expansion_rest(&s, &local, k)?;
    let prediction = leading + rest;
    let discrepancy = (numeric - prediction).norm() / leading.norm().max(f64::MIN_POSITIVE);
    Ok(LemmaCheck {
        k,
        eta,
        numeric,
        prediction: Some(prediction),
        leading: Some(leading),
        discrepancy,
        spread: spread * factorial(eta),
        ell_prime,
    })
}

/// Terms of `d^k/dt^k [d_tau^k F(A(ell(t), t + tau))]` at `t = 0` other than the
/// pure normal one, from the Taylor expansion of `F` at `p` and fitted trajectory series.
fn expansion_rest(s: &Samples, local: &Partials, k: usize) -> Result<Vec2> {
    let order = 2 * k;
    // Z_i(t, tau) = sum_m P_{m,i}(t) tau^m, P fitted as polynomials in t
    let mut z = [Series2::zero(order), Series2::zero(order)];
    let mut lead_b = 0.0;
    for m in 0..=k {
        for (i, zi) in z.iter_mut().enumerate() {
            let fs: Vec<f64> = s.plus.iter().map(|p| p[i].c[m]).collect();
            let powers: Vec<usize> = (0..=FIT_DEGREE).collect();
            let c = power_fit(&s.ts, &fs, &powers)?;
            for (r, v) in c.iter().enumerate().take(order - m + 1) {
                // u = t, v = tau
                let prev = zi.get(r, m);
                zi.set(r, m, prev + v);
            }
            if m == 1 && i == 1 {
                lead_b = c[1];
            }
        }
    }
    // exclude tau^0 t^0 of Z (it is zero at p by construction)
    z[0].set(0, 0, 0.0);
    z[1].set(0, 0, 0.0);
    let mut h = [Series2::zero(order), Series2::zero(order)];
    for a in 0..=k {
        for b in 0..=k - a {
            let m = &z[0].powi(a) * &z[1].powi(b);
            let w = 1.0 / (factorial(a) * factorial(b));
            h[0] = &h[0] + &m.scale(w * local.get(a, b + 1));
            h[1] = &h[1] + &m.scale(-w * local.get(a + 1, b));
        }
    }
    let kf = factorial(k);
    let full = Vec2::new(h[0].get(k, k), h[1].get(k, k)) * (kf * kf);
    // the pure normal part built from the fitted b1 alone
    let fk = Vec2::new(local.get(0, k + 1), -local.get(1, k));
    let lead_fit = fk * (kf * lead_b.powi(k as i32));
    Ok(full - lead_fit)
}

/// Limits of the velocity-gap derivative blocks at `t -> 0` for `k = 1`: `(a+ block, a- block)`.
pub fn plus_block_check(
    family: &TangentFamily,
    q: &PotentialModel,
    domain: &ConvexDomain,
) -> Result<(Vec2, Vec2)> {
    let s = collect(family, q, domain, 1)?;
    let (plus, _) = vec_coefficient(&s.ts, &s.h_plus, 0)?;
    let (minus, _) = vec_coefficient(&s.ts, &s.h_minus, 0)?;
    Ok((plus, minus))
}

/// For `eta < k` the limit depends only on lower-order data: two potentials
/// sharing that jet at `p` give the same limit.
pub fn lemma_lower_order_check(
    k: usize,
    eta: usize,
    family: &TangentFamily,
    q1: &PotentialModel,
    q2: &PotentialModel,
    domain: &ConvexDomain,
) -> Result<(LemmaCheck, LemmaCheck)> {
    if eta >= k {
        return Err(Error::InvalidInput(
            "lower-order check needs eta < k".into(),
        ));
    }
    Ok((
        lemma_limits_check(k, eta, family, q1, domain)?,
        lemma_limits_check(k, eta, family, q2, domain)?,
    ))
}

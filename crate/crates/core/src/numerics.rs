//! Root finding, polynomial extrapolation and least-squares fits.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Brent's method on a bracket with `f(a) * f(b) <= 0`.
pub fn brent<F>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(Error::InvalidInput("root not bracketed".into()));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Ok(b)
}

/// `n` nodes geometrically spaced over `[lo, hi]`, ascending.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let r = (hi / lo).ln() / (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo * (r * i as f64).exp()
            }
        })
        .collect()
}

/// Value at zero with an error estimate.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Extrapolated {
    pub value: f64,
    pub spread: f64,
}

/// Neville value at `x = 0` of the interpolant through the given nodes.
fn neville_at_zero(ts: &[f64], fs: &[f64]) -> Vec<f64> {
    // returns the diagonal P_{0,0}, P_{0,1}, ... P_{0,m}
    let m = ts.len();
    let mut p = fs.to_vec();
    let mut diag = vec![p[0]];
    for level in 1..m {
        for i in 0..m - level {
            let (ti, tj) = (ts[i], ts[i + level]);
            p[i] = (tj * p[i] - ti * p[i + 1]) / (tj - ti);
        }
        diag.push(p[0]);
    }
    diag
}

/// Richardson-style polynomial extrapolation to `t = 0` from samples at `t > 0`.
///
/// Every window of `levels + 1` consecutive nodes gives a degree-`levels`
/// extrapolant; the window whose value is most consistent with its lower level
/// and its neighbour window is returned, with that discrepancy as the spread.
pub fn richardson(ts: &[f64], fs: &[f64], levels: usize) -> Result<Extrapolated> {
    let w = levels + 1;
    if ts.len() < w + 1 || ts.len() != fs.len() {
        return Err(Error::InvalidInput(format!(
            "need at least {} samples for {levels} levels",
            w + 1
        )));
    }
    let mut cands = Vec::new();
    for i in 0..=ts.len() - w {
        let d = neville_at_zero(&ts[i..i + w], &fs[i..i + w]);
        cands.push((d[levels], d[levels - 1]));
    }
    let mut best = Extrapolated {
        value: f64::NAN,
        spread: f64::INFINITY,
    };
    for i in 0..cands.len() {
        let (v, lower) = cands[i];
        let mut spread = (v - lower).abs();
        let nb = if i + 1 < cands.len() {
            cands[i + 1].0
        } else {
            cands[i - 1].0
        };
        spread = spread.max((v - nb).abs());
        if spread < best.spread || best.value.is_nan() {
            best = Extrapolated { value: v, spread };
        }
    }
    Ok(best)
}

/// Least-squares fit `f(t) ~ sum_{p in powers} c_p t^p`, columns scaled for conditioning.
pub fn power_fit(ts: &[f64], fs: &[f64], powers: &[usize]) -> Result<Vec<f64>> {
    let m = ts.len();
    let n = powers.len();
    if m < n {
        return Err(Error::InvalidInput("underdetermined power fit".into()));
    }
    let scale = ts
        .iter()
        .fold(0.0f64, |a, t| a.max(t.abs()))
        .max(f64::MIN_POSITIVE);
    let a = DMatrix::from_fn(m, n, |i, j| (ts[i] / scale).powi(powers[j] as i32));
    let b = DVector::from_column_slice(fs);
    let svd = a.svd(true, true);
    let c = svd
        .solve(&b, 1e-14)
        .map_err(|e| Error::InvalidInput(format!("power fit failed: {e}")))?;
    Ok((0..n)
        .map(|j| c[j] / scale.powi(powers[j] as i32))
        .collect())
}

/// Coefficient of `t^target` from power fits of increasing degree.
///
/// Fits use powers `min_power..=d` for `d` in `min_degree..=max_degree`; the
/// estimate comes from the highest degree, the spread from the two highest.
pub fn taylor_coefficient(
    ts: &[f64],
    fs: &[f64],
    min_power: usize,
    target: usize,
    min_degree: usize,
    max_degree: usize,
) -> Result<Extrapolated> {
    let mut vals = Vec::new();
    for d in min_degree.max(target)..=max_degree {
        let powers: Vec<usize> = (min_power..=d).collect();
        if powers.len() > ts.len() {
            break;
        }
        let c = power_fit(ts, fs, &powers)?;
        vals.push(c[target - min_power]);
    }
    if vals.len() < 2 {
        return Err(Error::InvalidInput(
            "not enough samples for two fit levels".into(),
        ));
    }
    let v = vals[vals.len() - 1];
    let spread = (v - vals[vals.len() - 2]).abs();
    Ok(Extrapolated { value: v, spread })
}

/// Taylor coefficients at `0` of the least-squares polynomial of `degree` through `(x, f)`.
pub fn local_poly(xs: &[f64], fs: &[f64], degree: usize) -> Result<Vec<f64>> {
    let powers: Vec<usize> = (0..=degree).collect();
    power_fit(xs, fs, &powers)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cos_root() {
        let r = brent(|x| Ok(x.cos()), 1.0, 2.0, 1e-15).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn richardson_recovers_derivative() {
        let ts = geometric_grid(1e-3, 1e-1, 12);
        let fs: Vec<f64> = ts.iter().map(|t| (t.exp() - 1.0) / t).collect();
        let e = richardson(&ts, &fs, 3).unwrap();
        assert!((e.value - 1.0).abs() < 1e-10, "{e:?}");
        assert!(e.spread < 1e-8);
    }

    #[test]
    fn taylor_coefficient_of_sine() {
        let ts = geometric_grid(0.02, 0.3, 14);
        let fs: Vec<f64> = ts.iter().map(|t| t.sin() + 1e-3 * t).collect();
        let e = taylor_coefficient(&ts, &fs, 1, 3, 5, 9).unwrap();
        assert!((e.value + 1.0 / 6.0).abs() < 1e-8, "{e:?}");
    }

    #[test]
    fn grid_endpoints() {
        let g = geometric_grid(1e-4, 1e-1, 12);
        assert_eq!(g.len(), 12);
        assert_eq!(g[0], 1e-4);
        assert_eq!(g[11], 1e-1);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}

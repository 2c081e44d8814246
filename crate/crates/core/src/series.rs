//! Truncated power series in one and two variables.

use std::ops::{Add, Mul, Neg, Sub};

/// Truncated Taylor series `sum c[k] tau^k`, `k <= order`.
#[derive(Clone, Debug, PartialEq)]
pub struct Series1 {
    pub c: Vec<f64>,
}

impl Series1 {
    pub fn zero(order: usize) -> Self {
        Series1 {
            c: vec![0.0; order + 1],
        }
    }

    pub fn constant(v: f64, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.c[0] = v;
        s
    }

    /// `v + tau`.
    pub fn variable(v: f64, order: usize) -> Self {
        let mut s = Self::constant(v, order);
        if order >= 1 {
            s.c[1] = 1.0;
        }
        s
    }

    pub fn from_coeffs(c: Vec<f64>) -> Self {
        assert!(!c.is_empty());
        Series1 { c }
    }

    /// Taylor coefficients of `cos(theta + tau)` and `sin(theta + tau)`.
    pub fn cos_sin(theta: f64, order: usize) -> (Self, Self) {
        let mut c = Self::zero(order);
        let mut s = Self::zero(order);
        let mut fact = 1.0;
        for k in 0..=order {
            if k > 0 {
                fact *= k as f64;
            }
            let phase = theta + k as f64 * std::f64::consts::FRAC_PI_2;
            c.c[k] = phase.cos() / fact;
            s.c[k] = phase.sin() / fact;
        }
        (c, s)
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// k-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> f64 {
        self.c[k] * factorial(k)
    }

    pub fn eval(&self, tau: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, &a| acc * tau + a)
    }

    pub fn scale(&self, s: f64) -> Self {
        Series1 {
            c: self.c.iter().map(|a| a * s).collect(),
        }
    }

    pub fn recip(&self) -> Self {
        let n = self.c.len();
        let a0 = self.c[0];
        let mut r = vec![0.0; n];
        r[0] = 1.0 / a0;
        for k in 1..n {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += self.c[j] * r[k - j];
            }
            r[k] = -acc / a0;
        }
        Series1 { c: r }
    }

    pub fn sqrt(&self) -> Self {
        let n = self.c.len();
        let mut r = vec![0.0; n];
        r[0] = self.c[0].sqrt();
        for k in 1..n {
            let mut acc = self.c[k];
            for j in 1..k {
                acc -= r[j] * r[k - j];
            }
            r[k] = acc / (2.0 * r[0]);
        }
        Series1 { c: r }
    }

    pub fn powi(&self, p: usize) -> Self {
        let mut out = Self::constant(1.0, self.order());
        for _ in 0..p {
            out = &out * self;
        }
        out
    }

    /// `d/dtau` as a series one order shorter.
    pub fn differentiate(&self) -> Self {
        if self.c.len() == 1 {
            return Self::zero(0);
        }
        Series1 {
            c: self
                .c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, v)| k as f64 * v)
                .collect(),
        }
    }

    /// `self(inner(tau))` for an inner series with zero constant term.
    pub fn compose(&self, inner: &Series1) -> Self {
        assert!(inner.c[0] == 0.0, "inner series must vanish at the origin");
        let order = self.order().min(inner.order());
        let inner = Series1 {
            c: inner.c[..=order].to_vec(),
        };
        let mut out = Self::zero(order);
        for &a in self.c[..=order].iter().rev() {
            out = &out * &inner;
            out.c[0] += a;
        }
        out
    }

    /// Compositional inverse of a series with `c[0] = 0` and `c[1] != 0`.
    pub fn revert(&self) -> Self {
        assert!(self.c[0] == 0.0 && self.c.len() > 1 && self.c[1] != 0.0);
        let n = self.order();
        // fixed point g = (tau - (f(g) - c1 g)) / c1, one new coefficient per sweep
        let mut g = Self::zero(n);
        g.c[1] = 1.0 / self.c[1];
        let mut nonlinear = self.clone();
        nonlinear.c[1] = 0.0;
        for _ in 1..n {
            let f = nonlinear.compose(&g);
            let mut next = f.scale(-1.0 / self.c[1]);
            next.c[1] += 1.0 / self.c[1];
            g = next;
        }
        g
    }

    /// Series with the constant term removed.
    pub fn shifted_part(&self) -> Self {
        let mut s = self.clone();
        s.c[0] = 0.0;
        s
    }
}

impl Add for &Series1 {
    type Output = Series1;
    fn add(self, o: &Series1) -> Series1 {
        Series1 {
            c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Series1 {
    type Output = Series1;
    fn sub(self, o: &Series1) -> Series1 {
        Series1 {
            c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &Series1 {
    type Output = Series1;
    fn neg(self) -> Series1 {
        self.scale(-1.0)
    }
}

impl Mul for &Series1 {
    type Output = Series1;
    fn mul(self, o: &Series1) -> Series1 {
        let n = self.c.len().min(o.c.len());
        let mut r = vec![0.0; n];
        for i in 0..n {
            if self.c[i] == 0.0 {
                continue;
            }
            for j in 0..n - i {
                r[i + j] += self.c[i] * o.c[j];
            }
        }
        Series1 { c: r }
    }
}

/// Truncated bivariate series, total degree at most `order`.
/// Coefficient of `u^i v^j` is stored at `c[idx(i, j)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Series2 {
    order: usize,
    c: Vec<f64>,
}

impl Series2 {
    pub fn zero(order: usize) -> Self {
        Series2 {
            order,
            c: vec![0.0; (order + 1) * (order + 2) / 2],
        }
    }

    pub fn constant(v: f64, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.c[0] = v;
        s
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn idx(i: usize, j: usize) -> usize {
        let d = i + j;
        d * (d + 1) / 2 + j
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i + j > self.order {
            0.0
        } else {
            self.c[Self::idx(i, j)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.c[Self::idx(i, j)] = v;
    }

    /// Lifts a univariate series in `u` to two variables.
    pub fn from_u(s: &Series1, order: usize) -> Self {
        let mut out = Self::zero(order);
        for i in 0..=order.min(s.order()) {
            out.set(i, 0, s.c[i]);
        }
        out
    }

    /// `v * s(u)`.
    pub fn v_times_u(s: &Series1, order: usize) -> Self {
        let mut out = Self::zero(order);
        for i in 0..order.min(s.order() + 1) {
            out.set(i, 1, s.c[i]);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        Series2 {
            order: self.order,
            c: self.c.iter().map(|a| a * s).collect(),
        }
    }

    pub fn powi(&self, p: usize) -> Self {
        let mut out = Self::constant(1.0, self.order);
        for _ in 0..p {
            out = &out * self;
        }
        out
    }
}

impl Add for &Series2 {
    type Output = Series2;
    fn add(self, o: &Series2) -> Series2 {
        Series2 {
            order: self.order,
            c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Series2 {
    type Output = Series2;
    fn sub(self, o: &Series2) -> Series2 {
        Series2 {
            order: self.order,
            c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Series2 {
    type Output = Series2;
    fn mul(self, o: &Series2) -> Series2 {
        let n = self.order.min(o.order);
        let mut r = Series2::zero(n);
        for d1 in 0..=n {
            for j1 in 0..=d1 {
                let a = self.get(d1 - j1, j1);
                if a == 0.0 {
                    continue;
                }
                for d2 in 0..=n - d1 {
                    for j2 in 0..=d2 {
                        let k = Series2::idx(d1 - j1 + d2 - j2, j1 + j2);
                        r.c[k] += a * o.get(d2 - j2, j2);
                    }
                }
            }
        }
        r
    }
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recip_and_sqrt_match_closed_forms() {
        // 1/(1 - tau) = sum tau^k; sqrt(1 + tau) = 1 + tau/2 - tau^2/8 + tau^3/16
        let s = Series1::from_coeffs(vec![1.0, -1.0, 0.0, 0.0, 0.0]);
        assert!(s.recip().c.iter().all(|&a| (a - 1.0).abs() < 1e-15));
        let r = Series1::from_coeffs(vec![1.0, 1.0, 0.0, 0.0]).sqrt();
        let want = [1.0, 0.5, -0.125, 0.0625];
        for (a, b) in r.c.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn cos_sin_series_evaluate() {
        let (c, s) = Series1::cos_sin(0.7, 14);
        assert!((c.eval(0.3) - 1.0f64.cos()).abs() < 1e-13);
        assert!((s.eval(0.3) - 1.0f64.sin()).abs() < 1e-13);
    }

    #[test]
    fn bivariate_product() {
        // (1 + u + v)^2 = 1 + 2u + 2v + u^2 + 2uv + v^2
        let mut a = Series2::constant(1.0, 3);
        a.set(1, 0, 1.0);
        a.set(0, 1, 1.0);
        let b = &a * &a;
        assert_eq!(b.get(1, 1), 2.0);
        assert_eq!(b.get(2, 0), 1.0);
        assert_eq!(b.get(0, 2), 1.0);
        assert_eq!(b.get(1, 0), 2.0);
        assert_eq!(b.get(2, 1), 0.0);
    }

    #[test]
    fn compose_and_revert() {
        // exp(tau) - 1 and log(1 + tau) are mutual inverses
        let e = Series1::from_coeffs(
            (0..8)
                .map(|k| if k == 0 { 0.0 } else { 1.0 / factorial(k) })
                .collect(),
        );
        let l = e.revert();
        for k in 1..8 {
            let want = if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
            assert!((l.c[k] - want).abs() < 1e-13, "{k} {}", l.c[k]);
        }
        let id = e.compose(&l);
        assert!((id.c[1] - 1.0).abs() < 1e-14 && id.c[2..].iter().all(|v| v.abs() < 1e-13));
        let d = e.differentiate();
        assert_eq!(d.order(), 6);
        assert!((d.c[0] - 1.0).abs() < 1e-15 && (d.c[3] - 1.0 / 6.0).abs() < 1e-15);
    }
}

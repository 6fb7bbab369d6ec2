//! Truncated Taylor series ("jets") in one variable.
//!
//! A `Jet<K>` stores the first `K` Taylor coefficients of a function of a
//! single parameter about some base point, `c[k] = f^(k)(t0) / k!`.
//! Arithmetic and the elementary functions propagate the coefficients
//! exactly (up to rounding), which gives derivatives of any composite
//! quantity along a curve without finite differencing.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// Scalars the expression evaluator can run over.
pub trait Real:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn constant(v: f64) -> Self;
    /// Value at the base point.
    fn value(&self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sinh(self) -> Self;
    fn cosh(self) -> Self;
    fn sqrt(self) -> Self;
    fn powf(self, c: f64) -> Self;
    fn powi(self, n: i32) -> Self;
}

impl Real for f64 {
    fn constant(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sinh(self) -> Self {
        f64::sinh(self)
    }
    fn cosh(self) -> Self {
        f64::cosh(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powf(self, c: f64) -> Self {
        f64::powf(self, c)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<const K: usize> {
    pub c: [f64; K],
}

impl<const K: usize> Jet<K> {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; K];
        c[0] = v;
        Self { c }
    }

    /// The identity function `t` expanded about `t0`.
    pub fn variable(t0: f64) -> Self {
        let mut c = [0.0; K];
        c[0] = t0;
        if K > 1 {
            c[1] = 1.0;
        }
        Self { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// `k`-th derivative at the base point.
    pub fn nth_derivative(&self, k: usize) -> f64 {
        let mut f = 1.0;
        for i in 2..=k {
            f *= i as f64;
        }
        self.c[k] * f
    }

    /// d/dt of the series. The top coefficient is lost.
    pub fn derivative(&self) -> Self {
        let mut c = [0.0; K];
        for k in 0..K.saturating_sub(1) {
            c[k] = (k + 1) as f64 * self.c[k + 1];
        }
        Self { c }
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut c = self.c;
        c.iter_mut().for_each(|x| *x *= s);
        Self { c }
    }

    /// Evaluate `sum_k coeffs[k] * h^k` with `h = self - self(t0)`, i.e. compose
    /// a function whose normalised derivatives at the base value are `coeffs`.
    fn compose(&self, coeffs: &[f64; K]) -> Self {
        let mut h = *self;
        h.c[0] = 0.0;
        let mut out = Self::constant(coeffs[0]);
        let mut hp = Self::constant(1.0);
        for &ck in coeffs.iter().skip(1) {
            hp = hp * h;
            for i in 0..K {
                out.c[i] += ck * hp.c[i];
            }
        }
        out
    }

    fn recip(self) -> Self {
        self.powf(-1.0)
    }
}

impl<const K: usize> Add for Jet<K> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for i in 0..K {
            self.c[i] += rhs.c[i];
        }
        self
    }
}

impl<const K: usize> AddAssign for Jet<K> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<const K: usize> Sub for Jet<K> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for i in 0..K {
            self.c[i] -= rhs.c[i];
        }
        self
    }
}

impl<const K: usize> Neg for Jet<K> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const K: usize> Mul for Jet<K> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut c = [0.0; K];
        for i in 0..K {
            if self.c[i] == 0.0 {
                continue;
            }
            for j in 0..K - i {
                c[i + j] += self.c[i] * rhs.c[j];
            }
        }
        Self { c }
    }
}

impl<const K: usize> Mul<f64> for Jet<K> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scale(rhs)
    }
}

impl<const K: usize> Div for Jet<K> {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

fn falling(c: f64, k: usize) -> f64 {
    // c (c-1) ... (c-k+1) / k!
    let mut b = 1.0;
    for i in 0..k {
        b *= (c - i as f64) / (i + 1) as f64;
    }
    b
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

impl<const K: usize> Real for Jet<K> {
    fn constant(v: f64) -> Self {
        Jet::constant(v)
    }
    fn value(&self) -> f64 {
        self.c[0]
    }
    fn exp(self) -> Self {
        let e = self.c[0].exp();
        let coeffs = std::array::from_fn(|k| e / factorial(k));
        self.compose(&coeffs)
    }
    fn ln(self) -> Self {
        let a = self.c[0];
        let coeffs = std::array::from_fn(|k| {
            if k == 0 {
                a.ln()
            } else {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign / (k as f64 * a.powi(k as i32))
            }
        });
        self.compose(&coeffs)
    }
    fn sin(self) -> Self {
        let (s, c) = self.c[0].sin_cos();
        let cyc = [s, c, -s, -c];
        let coeffs = std::array::from_fn(|k| cyc[k % 4] / factorial(k));
        self.compose(&coeffs)
    }
    fn cos(self) -> Self {
        let (s, c) = self.c[0].sin_cos();
        let cyc = [c, -s, -c, s];
        let coeffs = std::array::from_fn(|k| cyc[k % 4] / factorial(k));
        self.compose(&coeffs)
    }
    fn sinh(self) -> Self {
        let (s, c) = (self.c[0].sinh(), self.c[0].cosh());
        let coeffs = std::array::from_fn(|k| if k % 2 == 0 { s } else { c } / factorial(k));
        self.compose(&coeffs)
    }
    fn cosh(self) -> Self {
        let (s, c) = (self.c[0].sinh(), self.c[0].cosh());
        let coeffs = std::array::from_fn(|k| if k % 2 == 0 { c } else { s } / factorial(k));
        self.compose(&coeffs)
    }
    fn sqrt(self) -> Self {
        self.powf(0.5)
    }
    fn powf(self, c: f64) -> Self {
        let a = self.c[0];
        let coeffs = std::array::from_fn(|k| falling(c, k) * a.powf(c - k as f64));
        self.compose(&coeffs)
    }
    fn powi(self, n: i32) -> Self {
        if n >= 0 {
            let mut out = Jet::constant(1.0);
            for _ in 0..n {
                out = out * self;
            }
            out
        } else {
            let a = self.c[0];
            let coeffs = std::array::from_fn(|k| falling(n as f64, k) * a.powi(n - k as i32));
            self.compose(&coeffs)
        }
    }
}

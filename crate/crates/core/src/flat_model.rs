//! The flat model on the complex plane: conformal Killing fields
//! `X = Re((a z² + b z + c) ∂_z)`, their flows, loxodromes from `p` to `q`,
//! the Mercator projection and the classification of homogeneous curves.
//!
//! Since `∂_z = ½(∂_x - i ∂_y)`, the real field `X` moves points by
//! `dz/dt = (a z² + b z + c) / 2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients of `X = u∂x + v∂y + λ(x∂x + y∂y) + F(x∂y - y∂x) + P(..) + Q(..)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KillingCoefficients {
    pub u: f64,
    pub v: f64,
    pub lambda: f64,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "Q")]
    pub q: f64,
}

impl KillingCoefficients {
    /// `a = P + iQ`, `b = 2(λ + iF)`, `c = 2(u + iv)`.
    pub fn abc(&self) -> (Complex64, Complex64, Complex64) {
        (
            Complex64::new(self.p, self.q),
            Complex64::new(2.0 * self.lambda, 2.0 * self.f),
            Complex64::new(2.0 * self.u, 2.0 * self.v),
        )
    }

    pub fn from_abc(a: Complex64, b: Complex64, c: Complex64) -> Self {
        Self { u: 0.5 * c.re, v: 0.5 * c.im, lambda: 0.5 * b.re, f: 0.5 * b.im, p: a.re, q: a.im }
    }

    pub fn is_zero(&self) -> bool {
        [self.u, self.v, self.lambda, self.f, self.p, self.q].iter().all(|c| *c == 0.0)
    }

    /// `b² - 4ac`
    pub fn discriminant(&self) -> Complex64 {
        let (a, b, c) = self.abc();
        b * b - 4.0 * a * c
    }

    /// `a z² + b z + c`
    pub fn quadratic(&self, z: Complex64) -> Complex64 {
        let (a, b, c) = self.abc();
        (a * z + b) * z + c
    }

    /// The real field `X` at `z`, written `X^x + i X^y`.
    pub fn field(&self, z: Complex64) -> Complex64 {
        0.5 * self.quadratic(z)
    }

    /// The field read off term by term from the real components.
    pub fn field_from_components(&self, z: Complex64) -> Complex64 {
        let (x, y) = (z.re, z.im);
        let xx = self.u + self.lambda * x - self.f * y + self.p * 0.5 * (x * x - y * y) - self.q * x * y;
        let yy = self.v + self.lambda * y + self.f * x + self.p * x * y + self.q * 0.5 * (x * x - y * y);
        Complex64::new(xx, yy)
    }

    /// Time-`t` flow of `X` from `z0`, by exponentiating the trace-free
    /// matrix `M = [[b/4, c/2], [-a/2, -b/4]]` and applying the
    /// fractional-linear map.
    pub fn flow(&self, t: f64, z0: Complex64) -> Result<Complex64> {
        let (a, b, c) = self.abc();
        let m = [[b / 4.0, c / 2.0], [-a / 2.0, -b / 4.0]];
        // M² = (D/16) I, so exp(tM) = cosh(tω) I + sinh(tω)/ω M with ω² = D/16
        let w2t2 = self.discriminant() / 16.0 * (t * t);
        let (ch, sh_over) = if w2t2.norm() < 1e-2 {
            let mut ch = Complex64::new(0.0, 0.0);
            let mut sh = Complex64::new(0.0, 0.0);
            let mut term = Complex64::new(1.0, 0.0);
            for k in 0..12 {
                let (k2, k3) = ((2 * k + 1) as f64, (2 * k + 2) as f64);
                ch += term;
                term /= k2;
                sh += term;
                term = term * w2t2 / k3;
            }
            (ch, sh * t)
        } else {
            let tw = w2t2.sqrt();
            (tw.cosh(), tw.sinh() / tw * t)
        };
        let e = |i: usize, j: usize| {
            let id = if i == j { ch } else { Complex64::new(0.0, 0.0) };
            id + sh_over * m[i][j]
        };
        let num = e(0, 0) * z0 + e(0, 1);
        let den = e(1, 0) * z0 + e(1, 1);
        if den.norm() <= 1e-14 * (1.0 + num.norm()) {
            return Err(Error::ChartInfinity { t });
        }
        Ok(num / den)
    }
}

/// A loxodrome from `p` to `q` (or the one-point spiral about `p` when `q`
/// is at infinity) with bearing `β`; `β < 0` is left-handed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoxodromeSpec {
    pub p: Complex64,
    pub q: Option<Complex64>,
    pub beta: f64,
}

const POLE_THRESHOLD: f64 = 1e-14;

impl LoxodromeSpec {
    pub fn new(p: Complex64, q: Complex64, beta: f64) -> Result<Self> {
        if p == q {
            return Err(Error::Invalid("loxodrome endpoints must differ".into()));
        }
        Self::check_beta(beta)?;
        Ok(Self { p, q: Some(q), beta })
    }

    /// `z = p + e^{(β+i)θ}`.
    pub fn spiral(p: Complex64, beta: f64) -> Result<Self> {
        Self::check_beta(beta)?;
        Ok(Self { p, q: None, beta })
    }

    fn check_beta(beta: f64) -> Result<()> {
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::Invalid(format!("bearing must be finite and non-zero, got {beta}")));
        }
        Ok(())
    }

    fn exponent(&self) -> Complex64 {
        Complex64::new(self.beta, 1.0)
    }

    /// `z(θ) = pq (e^{(β+i)θ} - 1) / (p e^{(β+i)θ} - q)`.
    pub fn point(&self, theta: f64) -> Result<Complex64> {
        let e = (self.exponent() * theta).exp();
        match self.q {
            None => Ok(self.p + e),
            Some(q) => {
                let den = self.p * e - q;
                if den.norm() < POLE_THRESHOLD {
                    return Err(Error::Pole { theta, magnitude: den.norm() });
                }
                Ok(self.p * q * (e - 1.0) / den)
            }
        }
    }

    /// `dz/dθ`, from differentiating `z(θ)` directly.
    pub fn tangent(&self, theta: f64) -> Result<Complex64> {
        let w = self.exponent();
        let e = (w * theta).exp();
        match self.q {
            None => Ok(w * e),
            Some(q) => {
                let p = self.p;
                let den = p * e - q;
                if den.norm() < POLE_THRESHOLD {
                    return Err(Error::Pole { theta, magnitude: den.norm() });
                }
                // d/dθ [pq(e-1)/(pe-q)] = pq w e (p - q) / (pe - q)²
                Ok(p * q * w * e * (p - q) / (den * den))
            }
        }
    }

    /// Coefficients of `(β+i)(z - p)(z - q)/(p - q)`, the quadratic equal to `dz/dθ`.
    pub fn generator(&self) -> KillingCoefficients {
        let w = self.exponent();
        match self.q {
            None => KillingCoefficients::from_abc(Complex64::new(0.0, 0.0), w, -w * self.p),
            Some(q) => {
                let d = self.p - q;
                KillingCoefficients::from_abc(w / d, -w * (self.p + q) / d, w * self.p * q / d)
            }
        }
    }

    /// `ζ = (q z - pq) / (p z - qp)`, sending `p` to 0 and `q` to ∞; with
    /// `q` at infinity the translation `ζ = z - p`.
    pub fn normalise(&self, z: Complex64) -> Complex64 {
        match self.q {
            None => z - self.p,
            Some(q) => (q * z - self.p * q) / (self.p * z - q * self.p),
        }
    }

    /// Samples over `[theta0, theta1]`; poles give `None`.
    pub fn trace(&self, theta0: f64, theta1: f64, samples: usize) -> Vec<(f64, Option<Complex64>)> {
        (0..samples)
            .map(|i| {
                let th =
                    if samples == 1 { theta0 } else { theta0 + (theta1 - theta0) * i as f64 / (samples - 1) as f64 };
                (th, self.point(th).ok())
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Degenerate,
    Circular,
    Radial,
    Loxodromic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Handedness {
    RightHanded,
    LeftHanded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Classification {
    pub kind: CurveKind,
    pub beta: Option<f64>,
    pub handedness: Option<Handedness>,
    #[serde(serialize_with = "complex_pair")]
    pub discriminant: Complex64,
}

fn complex_pair<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

/// Relative tolerance for calling a discriminant (or its imaginary part) zero.
pub const CLASSIFY_TOLERANCE: f64 = 1e-12;

/// Classify the orbits of a Killing field by its discriminant `D = b² - 4ac`.
/// For loxodromes `D` is a positive multiple of `(β+i)²`.
pub fn classify(k: &KillingCoefficients) -> Result<Classification> {
    if k.is_zero() {
        return Err(Error::ZeroField);
    }
    let (a, b, c) = k.abc();
    let d = k.discriminant();
    let scale = b.norm_sqr() + 4.0 * a.norm() * c.norm();
    let tol = CLASSIFY_TOLERANCE * scale;
    let (kind, beta) = if d.norm() <= tol {
        (CurveKind::Degenerate, None)
    } else if d.im.abs() <= tol {
        if d.re < 0.0 {
            (CurveKind::Circular, None)
        } else {
            (CurveKind::Radial, None)
        }
    } else {
        let mut w = d.sqrt();
        if w.im < 0.0 {
            w = -w;
        }
        (CurveKind::Loxodromic, Some(w.re / w.im))
    };
    Ok(Classification {
        kind,
        beta,
        handedness: beta.map(|b| if b > 0.0 { Handedness::RightHanded } else { Handedness::LeftHanded }),
        discriminant: d,
    })
}

/// `(β² - 1)/β = 2 Re D / Im D`.
pub fn normalised_discriminant(d: Complex64) -> f64 {
    2.0 * d.re / d.im
}

/// `2πi(u - iv) = log ζ` on the principal branch.
pub fn mercator(zeta: Complex64) -> Result<(f64, f64)> {
    if zeta.norm() == 0.0 {
        return Err(Error::Invalid("Mercator projection is undefined at 0".into()));
    }
    Ok((zeta.arg() / (2.0 * PI), zeta.norm().ln() / (2.0 * PI)))
}

/// Mercator coordinates along a sampled curve, unwinding `arg ζ` continuously
/// from the first sample.
pub fn mercator_unwrapped(zetas: &[Complex64]) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(zetas.len());
    let mut prev: Option<f64> = None;
    for z in zetas {
        let (u, v) = mercator(*z)?;
        let u = match prev {
            None => u,
            Some(p) => u + (p - u).round(),
        };
        prev = Some(u);
        out.push((u, v));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn spec() -> LoxodromeSpec {
        LoxodromeSpec::new(c(-1.0, 0.2), c(0.8, 0.5), 1.3).unwrap()
    }

    #[test]
    fn loxodrome_limits() {
        let s = spec();
        assert_eq!(s.point(0.0).unwrap(), c(0.0, 0.0));
        assert!((s.point(50.0 / s.beta).unwrap() - s.q.unwrap()).norm() < 1e-8);
        assert!((s.point(-50.0 / s.beta).unwrap() - s.p).norm() < 1e-8);
    }

    #[test]
    fn generator_discriminant_and_tangency() {
        let s = spec();
        let k = s.generator();
        assert!((k.discriminant() - c(s.beta, 1.0).powi(2)).norm() < 1e-12);
        for th in [-2.0, -0.3, 0.0, 0.9, 2.5] {
            let z = s.point(th).unwrap();
            assert!((k.quadratic(z) - s.tangent(th).unwrap()).norm() < 1e-10);
            let h = 1e-5;
            let fd = (s.point(th + h).unwrap() - s.point(th - h).unwrap()) / (2.0 * h);
            assert!((fd - s.tangent(th).unwrap()).norm() < 1e-6 * (1.0 + fd.norm()));
        }
    }

    #[test]
    fn one_point_spiral_generator() {
        let s = LoxodromeSpec::spiral(c(0.0, 0.0), 0.5).unwrap();
        let k = s.generator();
        let (a, b, cc) = k.abc();
        assert_eq!(a, c(0.0, 0.0));
        assert_eq!(b, c(0.5, 1.0));
        assert_eq!(cc, c(0.0, 0.0));
        assert!((k.quadratic(s.point(0.7).unwrap()) - s.tangent(0.7).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn field_matches_real_components() {
        let k = KillingCoefficients { u: 0.3, v: -0.2, lambda: 0.7, f: 1.1, p: -0.4, q: 0.9 };
        for z in [c(0.0, 0.0), c(1.2, -0.7), c(-2.0, 0.4)] {
            assert!((k.field(z) - k.field_from_components(z)).norm() < 1e-14);
        }
    }

    #[test]
    fn flows_of_translation_and_rotation() {
        let z0 = c(0.4, -0.9);
        let tr = KillingCoefficients { u: 0.3, v: -1.2, ..Default::default() };
        assert!((tr.flow(2.5, z0).unwrap() - (z0 + 2.5 * c(0.3, -1.2))).norm() < 1e-14);
        let rot = KillingCoefficients { f: 0.8, ..Default::default() };
        let t = 1.7;
        assert!((rot.flow(t, z0).unwrap() - (c(0.0, 0.8 * t)).exp() * z0).norm() < 1e-13);
    }

    #[test]
    fn generator_flow_advances_half_the_time() {
        let s = spec();
        let k = s.generator();
        for (th, t) in [(0.0, 0.5), (-1.0, 2.0), (0.3, -1.4)] {
            let z = k.flow(t, s.point(th).unwrap()).unwrap();
            assert!((z - s.point(th + 0.5 * t).unwrap()).norm() < 1e-8);
        }
    }

    #[test]
    fn flow_matches_numeric_integration() {
        let k = KillingCoefficients { u: 0.3, v: -0.2, lambda: 0.2, f: 0.5, p: 0.1, q: -0.15 };
        let mut z = c(0.2, 0.1);
        let n = 4000;
        let h = 1.0 / n as f64;
        for _ in 0..n {
            let k1 = k.field(z);
            let k2 = k.field(z + 0.5 * h * k1);
            let k3 = k.field(z + 0.5 * h * k2);
            let k4 = k.field(z + h * k3);
            z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        assert!((k.flow(1.0, c(0.2, 0.1)).unwrap() - z).norm() < 1e-12);
    }

    #[test]
    fn flow_to_infinity_is_reported() {
        // dz/dt = z²/2 from z0 = 1 blows up at t = 2
        let k = KillingCoefficients { p: 1.0, ..Default::default() };
        assert!(matches!(k.flow(2.0, c(1.0, 0.0)), Err(Error::ChartInfinity { .. })));
    }

    #[test]
    fn classification_examples() {
        let rot = classify(&KillingCoefficients { f: 1.0, ..Default::default() }).unwrap();
        assert_eq!(rot.kind, CurveKind::Circular);
        let dil = classify(&KillingCoefficients { lambda: 1.0, ..Default::default() }).unwrap();
        assert_eq!(dil.kind, CurveKind::Radial);
        let lox = classify(&KillingCoefficients { lambda: 1.0, f: 1.0, ..Default::default() }).unwrap();
        assert_eq!(lox.kind, CurveKind::Loxodromic);
        assert!((lox.beta.unwrap() - 1.0).abs() < 1e-15);
        let left = classify(&KillingCoefficients { lambda: -0.5, f: 1.0, ..Default::default() }).unwrap();
        assert_eq!(left.handedness, Some(Handedness::LeftHanded));
        let tr = classify(&KillingCoefficients { u: 1.0, ..Default::default() }).unwrap();
        assert_eq!(tr.kind, CurveKind::Degenerate);
        assert!(matches!(classify(&KillingCoefficients::default()), Err(Error::ZeroField)));
        let v = serde_json::to_value(lox).unwrap();
        assert_eq!(v["kind"], "loxodromic");
        assert_eq!(v["beta"], 1.0);
    }

    #[test]
    fn generator_classification_recovers_beta() {
        for beta in [0.1, 0.7, 1.0, 3.0, 10.0, -2.0] {
            let s = LoxodromeSpec::new(c(0.3, -0.1), c(-0.6, 0.9), beta).unwrap();
            let cl = classify(&s.generator()).unwrap();
            assert!((cl.beta.unwrap() - beta).abs() < 1e-9 * beta.abs().max(1.0));
            let nd = normalised_discriminant(cl.discriminant);
            assert!((nd - (beta - 1.0 / beta)).abs() < 1e-9 * (1.0 + nd.abs()));
        }
    }

    #[test]
    fn normalising_map_gives_log_spiral() {
        let s = spec();
        for th in [-3.0, -0.5, 0.0, 1.0, 2.0] {
            let zeta = s.normalise(s.point(th).unwrap());
            assert!((zeta - (c(s.beta, 1.0) * th).exp()).norm() < 1e-10 * (1.0 + zeta.norm()));
        }
    }

    #[test]
    fn mercator_straightens_spirals() {
        assert_eq!(mercator(c(1.0, 0.0)).unwrap(), (0.0, 0.0));
        assert!(mercator(c(0.0, 1.0)).unwrap().1.abs() < 1e-16);
        assert!(mercator(c(0.0, 0.0)).is_err());
        let beta = 0.6;
        let zs: Vec<Complex64> = (0..400).map(|i| (c(beta, 1.0) * (i as f64 * 0.05)).exp()).collect();
        let uv = mercator_unwrapped(&zs).unwrap();
        for (u, v) in uv {
            assert!((v - beta * u).abs() < 1e-12);
        }
    }

    #[test]
    fn pole_is_reported() {
        // p e^{(β+i)θ} = q at θ = 0 when p = q is excluded, so put the pole at θ = ln 2
        let s = LoxodromeSpec::new(c(1.0, 0.0), c(2.0, 0.0), 1.0).unwrap();
        // e^{(1+i)θ} = 2 needs θ real with e^{iθ} = 1 and e^θ = 2: not simultaneously, so no pole
        assert!(s.point(2f64.ln()).is_ok());
        let s = LoxodromeSpec { p: c(1.0, 0.0), q: Some((c(1.0, 1.0) * 0.5).exp()), beta: 1.0 };
        assert!(matches!(s.point(0.5), Err(Error::Pole { .. })));
        assert!(LoxodromeSpec::new(c(1.0, 0.0), c(1.0, 0.0), 1.0).is_err());
        assert!(LoxodromeSpec::new(c(1.0, 0.0), c(2.0, 0.0), 0.0).is_err());
    }
}

//! Small dense tensors on a single coordinate chart.
//!
//! Everything here is plain fixed-size arrays over a [`Real`] scalar so the
//! same formulas run on `f64` and on Taylor jets. Index conventions:
//!
//! * `Matrix[a][b]` is `T_ab` (or `T^ab` for inverse metrics);
//! * `Christoffel[a][b][c]` is `Γ^a_bc`;
//! * metric derivatives are stored derivative-index first, `dg[c][a][b] = ∂_c g_ab`;
//! * Riemann is `R^a_bcd = ∂_c Γ^a_db - ∂_d Γ^a_cb + Γ^a_ce Γ^e_db - Γ^a_de Γ^e_cb`,
//!   Ricci is `R_bd = R^a_bad`. With this convention the round sphere has
//!   positive scalar curvature, which the Möbius module cross-checks through
//!   `P = g/2` on the unit sphere.

use std::fmt;
use std::ops::Add;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::jet::Real;

pub type Vector<const N: usize, R = f64> = [R; N];
pub type Matrix<const N: usize, R = f64> = [[R; N]; N];
pub type Christoffel<const N: usize, R = f64> = [[[R; N]; N]; N];
pub type Rank3<const N: usize, R = f64> = [[[R; N]; N]; N];
pub type Rank4<const N: usize> = [[[[f64; N]; N]; N]; N];

/// Default central-difference step for first derivatives of sampled fields.
pub const FD_STEP: f64 = 1e-5;
/// Step used for second derivatives of sampled fields (roundoff ~ eps/h^2).
pub const FD_STEP_SECOND: f64 = 1e-4;

#[inline]
pub fn zero<R: Real>() -> R {
    R::constant(0.0)
}

pub fn vzero<const N: usize, R: Real>() -> Vector<N, R> {
    [zero(); N]
}

pub fn mzero<const N: usize, R: Real>() -> Matrix<N, R> {
    [[zero(); N]; N]
}

pub fn identity<const N: usize>() -> Matrix<N> {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 }))
}

pub fn lift_vector<const N: usize, R: Real>(v: &Vector<N>) -> Vector<N, R> {
    std::array::from_fn(|i| R::constant(v[i]))
}

pub fn values<const N: usize, R: Real>(v: &Vector<N, R>) -> Vector<N> {
    std::array::from_fn(|i| v[i].value())
}

pub fn matrix_values<const N: usize, R: Real>(m: &Matrix<N, R>) -> Matrix<N> {
    std::array::from_fn(|i| std::array::from_fn(|j| m[i][j].value()))
}

/// `m[a][b] v[b]`
pub fn mat_vec<const N: usize, R: Real>(m: &Matrix<N, R>, v: &Vector<N, R>) -> Vector<N, R> {
    std::array::from_fn(|a| {
        let mut s = zero::<R>();
        for b in 0..N {
            s = s + m[a][b] * v[b];
        }
        s
    })
}

/// Plain component sum `u[a] v[a]` (one index up, one down).
pub fn contract<const N: usize, R: Real>(u: &Vector<N, R>, v: &Vector<N, R>) -> R {
    let mut s = zero::<R>();
    for a in 0..N {
        s = s + u[a] * v[a];
    }
    s
}

/// `m[a][b] u[a] v[b]`
pub fn bilinear<const N: usize, R: Real>(m: &Matrix<N, R>, u: &Vector<N, R>, v: &Vector<N, R>) -> R {
    contract(u, &mat_vec(m, v))
}

pub fn vadd<const N: usize, R: Real>(u: &Vector<N, R>, v: &Vector<N, R>) -> Vector<N, R> {
    std::array::from_fn(|i| u[i] + v[i])
}

pub fn vsub<const N: usize, R: Real>(u: &Vector<N, R>, v: &Vector<N, R>) -> Vector<N, R> {
    std::array::from_fn(|i| u[i] - v[i])
}

pub fn vscale<const N: usize, R: Real>(s: R, v: &Vector<N, R>) -> Vector<N, R> {
    std::array::from_fn(|i| s * v[i])
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn vnorm_inf<const N: usize>(v: &Vector<N>) -> f64 {
    max_abs(v)
}

pub fn mnorm_inf<const N: usize>(m: &Matrix<N>) -> f64 {
    m.iter().map(|r| max_abs(r)).fold(0.0, f64::max)
}

pub fn determinant<const N: usize, R: Real>(m: &Matrix<N, R>) -> R {
    match N {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => panic!("determinant only implemented for N <= 3"),
    }
}

/// Inverse of a 1x1, 2x2 or 3x3 matrix by cofactors. `None` if singular.
pub fn inverse<const N: usize, R: Real>(m: &Matrix<N, R>) -> Option<Matrix<N, R>> {
    let det = determinant(m);
    if det.value() == 0.0 || !det.value().is_finite() {
        return None;
    }
    let mut out = mzero::<N, R>();
    match N {
        1 => out[0][0] = R::constant(1.0) / det,
        2 => {
            out[0][0] = m[1][1] / det;
            out[0][1] = -m[0][1] / det;
            out[1][0] = -m[1][0] / det;
            out[1][1] = m[0][0] / det;
        }
        3 => {
            for i in 0..3 {
                for j in 0..3 {
                    // cofactor C_ji / det
                    let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
                    let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
                    out[i][j] = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
                }
            }
        }
        _ => panic!("inverse only implemented for N <= 3"),
    }
    Some(out)
}

fn check_dimension(n: usize) -> Result<()> {
    if n == 2 || n == 3 {
        Ok(())
    } else {
        Err(Error::Dimension { op: "metric field", expected: "2 or 3", found: n })
    }
}

// ---------------------------------------------------------------------------
// Conformal weights

/// Integer conformal weight `w`: a weight-`w` scalar rescales by `Ω^w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Weight(pub i32);

impl Weight {
    pub fn rescale(self, omega: f64) -> f64 {
        omega.powi(self.0)
    }
}

impl Add for Weight {
    type Output = Weight;
    fn add(self, rhs: Weight) -> Weight {
        Weight(self.0 + rhs.0)
    }
}

/// A reported scalar together with its conformal weight.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Weighted {
    pub value: f64,
    pub weight: Weight,
}

impl Weighted {
    /// The same density expressed in the gauge `Ω² g`.
    pub fn rescaled(self, omega: f64) -> Weighted {
        Weighted { value: self.value * self.weight.rescale(omega), weight: self.weight }
    }
}

// ---------------------------------------------------------------------------
// Conformal factors

/// A positive function `Ω` together with its symbolic first and second
/// derivatives in the chart coordinates.
#[derive(Clone, PartialEq)]
pub struct ConformalFactor<const N: usize> {
    omega: Expr,
    grad: [Expr; N],
    hess: [[Expr; N]; N],
}

impl<const N: usize> fmt::Debug for ConformalFactor<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConformalFactor({})", self.omega)
    }
}

/// Values of `Ω`, `∂_a Ω` and `∂_a ∂_b Ω` at a point.
#[derive(Debug, Clone, Copy)]
pub struct FactorJet<const N: usize, R: Real = f64> {
    pub omega: R,
    pub grad: Vector<N, R>,
    pub hess: Matrix<N, R>,
}

impl<const N: usize, R: Real> FactorJet<N, R> {
    /// `Υ_a = Ω^{-1} ∂_a Ω`
    pub fn upsilon(&self) -> Vector<N, R> {
        std::array::from_fn(|a| self.grad[a] / self.omega)
    }

    /// `∂_a Υ_b = Ω^{-1} ∂_a∂_b Ω - Υ_a Υ_b`
    pub fn upsilon_gradient(&self) -> Matrix<N, R> {
        let u = self.upsilon();
        std::array::from_fn(|a| std::array::from_fn(|b| self.hess[a][b] / self.omega - u[a] * u[b]))
    }
}

impl<const N: usize> ConformalFactor<N> {
    pub fn new(omega: Expr) -> Result<Self> {
        check_dimension(N)?;
        for v in [Var::Z, Var::T] {
            if omega.mentions(v) && v.coord().is_none_or(|i| i >= N) {
                return Err(Error::Invalid(format!(
                    "conformal factor `{omega}` mentions `{}` in dimension {N}",
                    v.name()
                )));
            }
        }
        let grad: [Expr; N] = std::array::from_fn(|a| omega.differentiate(Var::from_coord(a)));
        let hess = std::array::from_fn(|a| std::array::from_fn(|b| grad[b].differentiate(Var::from_coord(a))));
        Ok(Self { omega, grad, hess })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::new(crate::expr::parse(text)?)
    }

    pub fn one() -> Self {
        Self::new(Expr::Num(1.0)).expect("constant factor")
    }

    pub fn expr(&self) -> &Expr {
        &self.omega
    }

    pub fn gradient_exprs(&self) -> &[Expr; N] {
        &self.grad
    }

    /// `Υ_a = ∂_a Ω / Ω` as expressions.
    pub fn upsilon_exprs(&self) -> [Expr; N] {
        std::array::from_fn(|a| self.grad[a].clone().div(self.omega.clone()))
    }

    /// The factor `Ω * other`.
    pub fn product(&self, other: &ConformalFactor<N>) -> ConformalFactor<N> {
        Self::new(self.omega.clone().mul(other.omega.clone())).expect("product of valid factors")
    }

    /// The factor `1 / Ω`.
    pub fn reciprocal(&self) -> ConformalFactor<N> {
        Self::new(Expr::Num(1.0).div(self.omega.clone())).expect("reciprocal of a valid factor")
    }

    pub fn value<R: Real>(&self, x: &Vector<N, R>) -> Result<R> {
        let v = self.omega.evaluate_real(x)?;
        if v.value() <= 0.0 {
            return Err(Error::NonPositiveFactor { value: v.value(), point: values(x).to_vec() });
        }
        Ok(v)
    }

    pub fn jet<R: Real>(&self, x: &Vector<N, R>) -> Result<FactorJet<N, R>> {
        let omega = self.value(x)?;
        let mut grad = vzero::<N, R>();
        let mut hess = mzero::<N, R>();
        for a in 0..N {
            grad[a] = self.grad[a].evaluate_real(x)?;
            for b in 0..N {
                hess[a][b] = self.hess[a][b].evaluate_real(x)?;
            }
        }
        Ok(FactorJet { omega, grad, hess })
    }

    /// Third derivatives `∂_a∂_b∂_c Ω`, differentiated on demand.
    pub fn third_derivatives(&self, x: &Vector<N>) -> Result<Rank3<N>> {
        let mut out = [[[0.0; N]; N]; N];
        for a in 0..N {
            for b in 0..N {
                let e = self.hess[a][b].clone();
                for c in 0..N {
                    out[c][a][b] = e.differentiate(Var::from_coord(c)).evaluate(x)?;
                }
            }
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Metric fields

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    Flat,
    /// Round sphere of curvature `K > 0` in the stereographic chart.
    Sphere {
        curvature: f64,
    },
    /// Hyperbolic space of curvature `-|K|` in the Poincaré ball chart.
    Hyperbolic {
        curvature: f64,
    },
    /// `g = δ / r²`: the flat plane pulled back to the cylinder `log r`.
    CylinderGauge,
    Isothermal,
    Sampled,
}

type SampledFn<const N: usize> = Arc<dyn Fn(&Vector<N>) -> Result<Matrix<N>> + Send + Sync>;

#[derive(Clone)]
enum MetricRepr<const N: usize> {
    Conformal(ConformalFactor<N>),
    Sampled { g: SampledFn<N>, step: f64 },
}

/// A Riemannian metric on one chart of dimension `N` (2 or 3).
#[derive(Clone)]
pub struct MetricField<const N: usize> {
    kind: MetricKind,
    repr: MetricRepr<N>,
}

impl<const N: usize> fmt::Debug for MetricField<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            MetricRepr::Conformal(c) => write!(f, "MetricField({:?}, Ω = {})", self.kind, c.expr()),
            MetricRepr::Sampled { step, .. } => write!(f, "MetricField(sampled, h = {step})"),
        }
    }
}

impl<const N: usize> MetricField<N> {
    fn conformal(kind: MetricKind, omega: Expr) -> Result<Self> {
        Ok(Self { kind, repr: MetricRepr::Conformal(ConformalFactor::new(omega)?) })
    }

    fn radius_squared() -> Expr {
        (0..N).map(|i| Expr::coord(i).sqr()).reduce(Expr::add).expect("N >= 1")
    }

    pub fn flat() -> Self {
        Self::conformal(MetricKind::Flat, Expr::Num(1.0)).expect("flat metric")
    }

    /// Round metric of curvature `k` in stereographic coordinates,
    /// `Ω = 2 / (1 + k r²)`.
    pub fn sphere(k: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::Invalid(format!("sphere curvature must be positive, got {k}")));
        }
        let omega = Expr::Num(2.0).div(Expr::Num(1.0).add(Expr::Num(k).mul(Self::radius_squared())));
        Self::conformal(MetricKind::Sphere { curvature: k }, omega)
    }

    /// Hyperbolic metric of curvature `-|k|` on the ball `r < 1/sqrt|k|`,
    /// `Ω = 2 / (1 - |k| r²)`.
    pub fn hyperbolic(k: f64) -> Result<Self> {
        let k = k.abs();
        if k == 0.0 {
            return Err(Error::Invalid("hyperbolic curvature must be non-zero".into()));
        }
        let omega = Expr::Num(2.0).div(Expr::Num(1.0).sub(Expr::Num(k).mul(Self::radius_squared())));
        Self::conformal(MetricKind::Hyperbolic { curvature: -k }, omega)
    }

    /// `Ω = 1 / r`, singular at the origin.
    pub fn cylinder_gauge() -> Result<Self> {
        let omega = Expr::Num(1.0).div(Expr::call(crate::expr::Func::Sqrt, Self::radius_squared()));
        Self::conformal(MetricKind::CylinderGauge, omega)
    }

    /// `g_ab = Ω² δ_ab`.
    pub fn isothermal(omega: Expr) -> Result<Self> {
        Self::conformal(MetricKind::Isothermal, omega)
    }

    pub fn from_factor(factor: ConformalFactor<N>) -> Self {
        Self { kind: MetricKind::Isothermal, repr: MetricRepr::Conformal(factor) }
    }

    /// A metric known only through point samples; derivatives by central
    /// differences with step `step`.
    pub fn sampled(g: impl Fn(&Vector<N>) -> Result<Matrix<N>> + Send + Sync + 'static, step: f64) -> Result<Self> {
        check_dimension(N)?;
        Ok(Self { kind: MetricKind::Sampled, repr: MetricRepr::Sampled { g: Arc::new(g), step } })
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        N
    }

    pub fn conformal_factor(&self) -> Option<&ConformalFactor<N>> {
        match &self.repr {
            MetricRepr::Conformal(c) => Some(c),
            MetricRepr::Sampled { .. } => None,
        }
    }

    /// `Ω² g` for a conformal metric.
    pub fn rescaled(&self, factor: &ConformalFactor<N>) -> Result<Self> {
        match &self.repr {
            MetricRepr::Conformal(c) => Ok(Self::from_factor(c.product(factor))),
            MetricRepr::Sampled { g, step } => {
                let g = g.clone();
                let factor = factor.clone();
                Self::sampled(
                    move |x| {
                        let w = factor.value(x)?;
                        let m = g(x)?;
                        Ok(std::array::from_fn(|a| std::array::from_fn(|b| w * w * m[a][b])))
                    },
                    *step,
                )
            }
        }
    }

    fn check_positive(&self, g: &Matrix<N>, x: &Vector<N>) -> Result<()> {
        // Sylvester: leading principal minors positive
        let m1 = g[0][0];
        let m2 = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        let full = determinant(g);
        let ok = m1 > 0.0 && (N < 2 || m2 > 0.0) && full > 0.0;
        if !full.is_finite() || full == 0.0 {
            return Err(Error::SingularMetric { point: x.to_vec() });
        }
        if !ok {
            return Err(Error::NotPositiveDefinite { point: x.to_vec() });
        }
        for a in 0..N {
            for b in 0..a {
                if (g[a][b] - g[b][a]).abs() > 1e-12 * (1.0 + g[a][b].abs()) {
                    return Err(Error::Invalid(format!("metric not symmetric at {x:?}")));
                }
            }
        }
        Ok(())
    }

    pub fn metric(&self, x: &Vector<N>) -> Result<Matrix<N>> {
        let g = match &self.repr {
            MetricRepr::Conformal(c) => {
                let w = c.value(x)?;
                let mut g = mzero::<N, f64>();
                for a in 0..N {
                    g[a][a] = w * w;
                }
                g
            }
            MetricRepr::Sampled { g, .. } => g(x)?,
        };
        self.check_positive(&g, x)?;
        Ok(g)
    }

    pub fn inverse_metric(&self, x: &Vector<N>) -> Result<Matrix<N>> {
        let g = self.metric(x)?;
        inverse(&g).ok_or_else(|| Error::SingularMetric { point: x.to_vec() })
    }

    /// `dg[c][a][b] = ∂_c g_ab`.
    pub fn metric_derivatives(&self, x: &Vector<N>) -> Result<Rank3<N>> {
        match &self.repr {
            MetricRepr::Conformal(c) => {
                let j = c.jet(x)?;
                Ok(conformal_metric_derivatives(&j))
            }
            MetricRepr::Sampled { g, step } => central_difference(|p| g(p), x, *step),
        }
    }

    /// `d2g[c][d][a][b] = ∂_c ∂_d g_ab`.
    pub fn metric_second_derivatives(&self, x: &Vector<N>) -> Result<Rank4<N>> {
        match &self.repr {
            MetricRepr::Conformal(c) => {
                let j = c.jet(x)?;
                let mut out = [[[[0.0; N]; N]; N]; N];
                for cc in 0..N {
                    for d in 0..N {
                        let v = 2.0 * (j.grad[cc] * j.grad[d] + j.omega * j.hess[cc][d]);
                        for a in 0..N {
                            out[cc][d][a][a] = v;
                        }
                    }
                }
                Ok(out)
            }
            MetricRepr::Sampled { g, .. } => {
                let h = FD_STEP_SECOND;
                let first = |p: &Vector<N>| central_difference(|q| g(q), p, h);
                let mut out = [[[[0.0; N]; N]; N]; N];
                for d in 0..N {
                    let mut xp = *x;
                    let mut xm = *x;
                    xp[d] += h;
                    xm[d] -= h;
                    let fp = first(&xp)?;
                    let fm = first(&xm)?;
                    for c in 0..N {
                        for a in 0..N {
                            for b in 0..N {
                                out[c][d][a][b] = (fp[c][a][b] - fm[c][a][b]) / (2.0 * h);
                            }
                        }
                    }
                }
                // symmetrise in (c, d)
                for c in 0..N {
                    for d in 0..c {
                        for a in 0..N {
                            for b in 0..N {
                                let m = 0.5 * (out[c][d][a][b] + out[d][c][a][b]);
                                out[c][d][a][b] = m;
                                out[d][c][a][b] = m;
                            }
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// Metric and first derivatives over a generic scalar; only available for
    /// conformal metrics, whose data are expressions.
    pub fn metric_jet<R: Real>(&self, x: &Vector<N, R>) -> Result<(Matrix<N, R>, Rank3<N, R>)> {
        let c = self
            .conformal_factor()
            .ok_or_else(|| Error::Unsupported("sampled metrics cannot be evaluated along jets".into()))?;
        let j = c.jet(x)?;
        let mut g = mzero::<N, R>();
        for a in 0..N {
            g[a][a] = j.omega * j.omega;
        }
        Ok((g, conformal_metric_derivatives(&j)))
    }
}

fn conformal_metric_derivatives<const N: usize, R: Real>(j: &FactorJet<N, R>) -> Rank3<N, R> {
    let mut out = [[[zero::<R>(); N]; N]; N];
    let two = R::constant(2.0);
    for c in 0..N {
        let v = two * j.omega * j.grad[c];
        for a in 0..N {
            out[c][a][a] = v;
        }
    }
    out
}

/// Central differences of a matrix-valued field: `out[c] = ∂_c f`.
pub fn central_difference<const N: usize>(
    f: impl Fn(&Vector<N>) -> Result<Matrix<N>>,
    x: &Vector<N>,
    h: f64,
) -> Result<Rank3<N>> {
    let mut out = [[[0.0; N]; N]; N];
    for c in 0..N {
        let mut xp = *x;
        let mut xm = *x;
        xp[c] += h;
        xm[c] -= h;
        let fp = f(&xp)?;
        let fm = f(&xm)?;
        for a in 0..N {
            for b in 0..N {
                out[c][a][b] = (fp[a][b] - fm[a][b]) / (2.0 * h);
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Levi-Civita connection and curvature

/// `Γ^a_bc = ½ g^ad (∂_b g_dc + ∂_c g_db - ∂_d g_bc)`.
pub fn christoffel_from<const N: usize, R: Real>(g_inv: &Matrix<N, R>, dg: &Rank3<N, R>) -> Christoffel<N, R> {
    let half = R::constant(0.5);
    let mut lowered = [[[zero::<R>(); N]; N]; N]; // Γ_dbc
    for d in 0..N {
        for b in 0..N {
            for c in b..N {
                let v = half * (dg[b][d][c] + dg[c][d][b] - dg[d][b][c]);
                lowered[d][b][c] = v;
                lowered[d][c][b] = v;
            }
        }
    }
    let mut out = [[[zero::<R>(); N]; N]; N];
    for a in 0..N {
        for b in 0..N {
            for c in b..N {
                let mut s = zero::<R>();
                for d in 0..N {
                    s = s + g_inv[a][d] * lowered[d][b][c];
                }
                out[a][b][c] = s;
                out[a][c][b] = s;
            }
        }
    }
    out
}

pub fn christoffel<const N: usize>(metric: &MetricField<N>, x: &Vector<N>) -> Result<Christoffel<N>> {
    let g_inv = metric.inverse_metric(x)?;
    let dg = metric.metric_derivatives(x)?;
    Ok(christoffel_from(&g_inv, &dg))
}

/// `∂_e Γ^a_bc`, indexed `[e][a][b][c]`.
fn christoffel_derivatives<const N: usize>(metric: &MetricField<N>, x: &Vector<N>) -> Result<[Christoffel<N>; N]> {
    let g_inv = metric.inverse_metric(x)?;
    let dg = metric.metric_derivatives(x)?;
    let d2g = metric.metric_second_derivatives(x)?;
    let gamma_low = |dg: &Rank3<N>, d: usize, b: usize, c: usize| 0.5 * (dg[b][d][c] + dg[c][d][b] - dg[d][b][c]);
    let mut out = [[[[0.0; N]; N]; N]; N];
    for e in 0..N {
        // ∂_e g^ad = -g^af ∂_e g_fh g^hd
        let mut dginv = [[0.0; N]; N];
        for a in 0..N {
            for d in 0..N {
                let mut s = 0.0;
                for f in 0..N {
                    for h in 0..N {
                        s -= g_inv[a][f] * dg[e][f][h] * g_inv[h][d];
                    }
                }
                dginv[a][d] = s;
            }
        }
        let d2 = &d2g[e];
        for a in 0..N {
            for b in 0..N {
                for c in 0..N {
                    let mut s = 0.0;
                    for d in 0..N {
                        s += dginv[a][d] * gamma_low(&dg, d, b, c) + g_inv[a][d] * gamma_low(d2, d, b, c);
                    }
                    out[e][a][b][c] = s;
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct CurvatureData<const N: usize> {
    pub christoffel: Christoffel<N>,
    /// `R_abcd` with the first index lowered.
    pub riemann: Rank4<N>,
    pub ricci: Matrix<N>,
    pub scalar: f64,
}

pub fn curvature<const N: usize>(metric: &MetricField<N>, x: &Vector<N>) -> Result<CurvatureData<N>> {
    let g = metric.metric(x)?;
    let g_inv = metric.inverse_metric(x)?;
    let gamma = christoffel(metric, x)?;
    let dgamma = christoffel_derivatives(metric, x)?;
    // R^a_bcd
    let mut up = [[[[0.0; N]; N]; N]; N];
    for a in 0..N {
        for b in 0..N {
            for c in 0..N {
                for d in 0..N {
                    let mut s = dgamma[c][a][d][b] - dgamma[d][a][c][b];
                    for e in 0..N {
                        s += gamma[a][c][e] * gamma[e][d][b] - gamma[a][d][e] * gamma[e][c][b];
                    }
                    up[a][b][c][d] = s;
                }
            }
        }
    }
    let mut riemann = [[[[0.0; N]; N]; N]; N];
    for a in 0..N {
        for b in 0..N {
            for c in 0..N {
                for d in 0..N {
                    riemann[a][b][c][d] = (0..N).map(|e| g[a][e] * up[e][b][c][d]).sum();
                }
            }
        }
    }
    let mut ricci = [[0.0; N]; N];
    for b in 0..N {
        for d in 0..N {
            ricci[b][d] = (0..N).map(|a| up[a][b][a][d]).sum();
        }
    }
    let mut scalar = 0.0;
    for a in 0..N {
        for b in 0..N {
            scalar += g_inv[a][b] * ricci[a][b];
        }
    }
    Ok(CurvatureData { christoffel: gamma, riemann, ricci, scalar })
}

/// `ε^bc` for the coordinate orientation, `ε^12 = 1/sqrt(det g)`.
pub fn epsilon_upper<const N: usize>(metric: &MetricField<N>, x: &Vector<N>) -> Result<Matrix<N>> {
    if N != 2 {
        return Err(Error::Dimension { op: "epsilon_upper", expected: "2", found: N });
    }
    let g = metric.metric(x)?;
    let e = 1.0 / determinant(&g).sqrt();
    let mut out = [[0.0; N]; N];
    out[0][1] = e;
    out[1][0] = -e;
    Ok(out)
}

/// `v_a = g_ab v^b`
pub fn lower<const N: usize, R: Real>(g: &Matrix<N, R>, v: &Vector<N, R>) -> Vector<N, R> {
    mat_vec(g, v)
}

/// `w^a = g^ab w_b`
pub fn raise<const N: usize, R: Real>(g_inv: &Matrix<N, R>, w: &Vector<N, R>) -> Vector<N, R> {
    mat_vec(g_inv, w)
}

/// `g_ab u^a v^b` (or `g^ab u_a v_b` when handed the inverse metric).
pub fn inner<const N: usize, R: Real>(g: &Matrix<N, R>, u: &Vector<N, R>, v: &Vector<N, R>) -> R {
    bilinear(g, u, v)
}

/// Raise both indices of a covariant two-tensor: `T^ab = g^ac g^bd T_cd`.
pub fn raise_both<const N: usize, R: Real>(g_inv: &Matrix<N, R>, t: &Matrix<N, R>) -> Matrix<N, R> {
    std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            let mut s = zero::<R>();
            for c in 0..N {
                for d in 0..N {
                    s = s + g_inv[a][c] * g_inv[b][d] * t[c][d];
                }
            }
            s
        })
    })
}

/// Full contraction `S^ab T_ab` of two covariant two-tensors via `g^{-1}`.
pub fn contract_two<const N: usize, R: Real>(g_inv: &Matrix<N, R>, s: &Matrix<N, R>, t: &Matrix<N, R>) -> R {
    let su = raise_both(g_inv, s);
    let mut out = zero::<R>();
    for a in 0..N {
        for b in 0..N {
            out = out + su[a][b] * t[a][b];
        }
    }
    out
}

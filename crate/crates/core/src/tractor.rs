//! Adjoint tractors `(σ_b, μ_bc, ν, ρ_b)`: transformation law, connection,
//! curve derivative, the velocity lift, the discriminant and the BGG splitting
//! of flat Killing fields.
//!
//! A tractor records the gauge it is expressed in and its weight `w` (a
//! section of `𝒜[w]`). Components are genuine components in that gauge: the
//! transformation law is applied as displayed and then `σ`, `μ` pick up
//! `Ω^{2+w}` and `ν`, `ρ` pick up `Ω^w`.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::flat_model::KillingCoefficients;
use crate::kinematics::{acceleration_derivative, KinematicState};
use crate::mobius::{ConformalRescaling, LocalGeometry, MobiusStructure};
use crate::tensor::{bilinear, contract, epsilon_upper, mat_vec, Matrix, MetricField, Vector, Weight};

#[derive(Debug, Clone, PartialEq)]
pub struct AdjointTractor<const N: usize> {
    pub sigma: Vector<N>,
    pub mu: Matrix<N>,
    pub nu: f64,
    pub rho: Vector<N>,
    pub weight: Weight,
    pub gauge: String,
}

#[derive(Serialize)]
struct TractorRepr<'a> {
    sigma: Vec<f64>,
    mu12: f64,
    mu: Vec<Vec<f64>>,
    nu: f64,
    rho: Vec<f64>,
    weight: i32,
    gauge: &'a str,
}

impl<const N: usize> Serialize for AdjointTractor<N> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TractorRepr {
            sigma: self.sigma.to_vec(),
            mu12: if N >= 2 { self.mu[0][1] } else { 0.0 },
            mu: self.mu.iter().map(|r| r.to_vec()).collect(),
            nu: self.nu,
            rho: self.rho.to_vec(),
            weight: self.weight.0,
            gauge: &self.gauge,
        }
        .serialize(s)
    }
}

fn wedge<const N: usize>(u: &Vector<N>, v: &Vector<N>) -> Matrix<N> {
    std::array::from_fn(|b| std::array::from_fn(|c| u[b] * v[c] - u[c] * v[b]))
}

impl<const N: usize> AdjointTractor<N> {
    pub fn new(sigma: Vector<N>, mu: Matrix<N>, nu: f64, rho: Vector<N>, gauge: impl Into<String>) -> Self {
        Self { sigma, mu, nu, rho, weight: Weight(0), gauge: gauge.into() }
    }

    pub fn zero(gauge: impl Into<String>) -> Self {
        Self::new([0.0; N], [[0.0; N]; N], 0.0, [0.0; N], gauge)
    }

    pub fn with_weight(mut self, w: i32) -> Self {
        self.weight = Weight(w);
        self
    }

    /// `(0, 0, 0, ρ)`
    pub fn bottom(rho: Vector<N>, gauge: impl Into<String>) -> Self {
        Self::new([0.0; N], [[0.0; N]; N], 0.0, rho, gauge)
    }

    pub fn is_antisymmetric(&self) -> bool {
        (0..N).all(|b| (0..N).all(|c| self.mu[b][c] == -self.mu[c][b]))
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        let mut m = self.nu.abs();
        for b in 0..N {
            m = m.max(self.sigma[b].abs()).max(self.rho[b].abs());
            for c in 0..N {
                m = m.max(self.mu[b][c].abs());
            }
        }
        m
    }

    /// Largest absolute componentwise difference.
    pub fn distance(&self, other: &Self) -> f64 {
        (self.clone() - other.clone()).max_abs()
    }
}

impl<const N: usize> Add for AdjointTractor<N> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        for b in 0..N {
            self.sigma[b] += o.sigma[b];
            self.rho[b] += o.rho[b];
            for c in 0..N {
                self.mu[b][c] += o.mu[b][c];
            }
        }
        self.nu += o.nu;
        self
    }
}

impl<const N: usize> Sub for AdjointTractor<N> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + o * -1.0
    }
}

impl<const N: usize> Mul<f64> for AdjointTractor<N> {
    type Output = Self;
    fn mul(mut self, s: f64) -> Self {
        for b in 0..N {
            self.sigma[b] *= s;
            self.rho[b] *= s;
            for c in 0..N {
                self.mu[b][c] *= s;
            }
        }
        self.nu *= s;
        self
    }
}

/// The transformation law at a point, given `Ω`, `Υ_a` and the inverse of
/// the pre-rescaling metric.
pub fn transform_components<const N: usize>(
    t: &AdjointTractor<N>,
    omega: f64,
    ups: &Vector<N>,
    g_inv: &Matrix<N>,
    target_gauge: impl Into<String>,
) -> AdjointTractor<N> {
    let ups_up = mat_vec(g_inv, ups);
    let ups_sigma = contract(&ups_up, &t.sigma);
    let ups_sq = contract(&ups_up, ups);
    let top = omega.powi(2 + t.weight.0);
    let low = omega.powi(t.weight.0);
    let sigma = std::array::from_fn(|b| top * t.sigma[b]);
    let mu = std::array::from_fn(|b| {
        std::array::from_fn(|c| top * (t.mu[b][c] + ups[b] * t.sigma[c] - ups[c] * t.sigma[b]))
    });
    let nu = low * (t.nu + ups_sigma);
    let rho = std::array::from_fn(|b| {
        let ups_mu: f64 = (0..N).map(|a| ups_up[a] * t.mu[a][b]).sum();
        low * (t.rho[b] + ups_mu - ups[b] * t.nu - ups_sigma * ups[b] + 0.5 * ups_sq * t.sigma[b])
    });
    AdjointTractor { sigma, mu, nu, rho, weight: t.weight, gauge: target_gauge.into() }
}

/// Express `t`, given in gauge `from`, in the gauge `Ω² g` at point `x`.
pub fn transform<const N: usize>(
    t: &AdjointTractor<N>,
    from: &MobiusStructure<N>,
    rescaling: &ConformalRescaling<N>,
    x: &Vector<N>,
) -> Result<AdjointTractor<N>> {
    if t.gauge != from.name() {
        return Err(Error::GaugeMismatch { expected: from.name().to_string(), found: t.gauge.clone() });
    }
    let jet = rescaling.jet(x)?;
    let g_inv = from.metric().inverse_metric(x)?;
    Ok(transform_components(t, jet.omega, &jet.upsilon(), &g_inv, format!("{}~{}", from.name(), rescaling.label())))
}

/// Covariant derivatives of the components from coordinate derivatives:
/// `dt` holds `∂_a` of each component, the result `∇_a` of each.
pub fn levi_civita_components<const N: usize>(
    t: &AdjointTractor<N>,
    dt: &[AdjointTractor<N>; N],
    gamma: &crate::tensor::Christoffel<N>,
) -> [AdjointTractor<N>; N] {
    std::array::from_fn(|a| {
        let mut out = dt[a].clone();
        for b in 0..N {
            for c in 0..N {
                out.sigma[b] -= gamma[c][a][b] * t.sigma[c];
                out.rho[b] -= gamma[c][a][b] * t.rho[c];
                for d in 0..N {
                    out.mu[b][c] -= gamma[d][a][b] * t.mu[d][c] + gamma[d][a][c] * t.mu[b][d];
                }
            }
        }
        out
    })
}

/// The tractor connection in direction `a`, given the tractor and the
/// Levi-Civita derivative `nt = ∇_a` of its components.
fn connection_row<const N: usize>(
    a: usize,
    t: &AdjointTractor<N>,
    nt: &AdjointTractor<N>,
    geo: &LocalGeometry<N>,
) -> AdjointTractor<N> {
    let (g, p) = (&geo.g, &geo.p);
    let p_up = mat_vec(&geo.g_inv, &p[a]); // P_a^b
    let mut out = AdjointTractor::zero(t.gauge.clone()).with_weight(t.weight.0);
    for b in 0..N {
        out.sigma[b] = nt.sigma[b] - t.mu[a][b] - t.nu * g[a][b];
        for c in 0..N {
            out.mu[b][c] =
                nt.mu[b][c] - g[a][b] * t.rho[c] + g[a][c] * t.rho[b] + p[a][b] * t.sigma[c] - p[a][c] * t.sigma[b];
        }
        let pmu: f64 = (0..N).map(|c| p_up[c] * t.mu[b][c]).sum();
        out.rho[b] = nt.rho[b] - pmu - p[a][b] * t.nu;
    }
    out.nu = nt.nu + t.rho[a] + contract(&p_up, &t.sigma);
    out
}

/// A tractor field with expression components, so that coordinate
/// derivatives are exact.
#[derive(Debug, Clone, PartialEq)]
pub struct TractorField<const N: usize> {
    pub sigma: [Expr; N],
    pub mu: [[Expr; N]; N],
    pub nu: Expr,
    pub rho: [Expr; N],
    pub gauge: String,
}

impl<const N: usize> TractorField<N> {
    fn map(&self, f: impl Fn(&Expr) -> Result<f64>) -> Result<AdjointTractor<N>> {
        let mut t = AdjointTractor::zero(self.gauge.clone());
        for b in 0..N {
            t.sigma[b] = f(&self.sigma[b])?;
            t.rho[b] = f(&self.rho[b])?;
            for c in 0..N {
                t.mu[b][c] = f(&self.mu[b][c])?;
            }
        }
        t.nu = f(&self.nu)?;
        Ok(t)
    }

    pub fn evaluate(&self, x: &Vector<N>) -> Result<AdjointTractor<N>> {
        self.map(|e| Ok(e.evaluate(x)?))
    }

    /// `∂_a` of every component.
    pub fn partials(&self, x: &Vector<N>) -> Result<[AdjointTractor<N>; N]> {
        let mut out: [AdjointTractor<N>; N] = std::array::from_fn(|_| AdjointTractor::zero(self.gauge.clone()));
        for (a, slot) in out.iter_mut().enumerate() {
            *slot = self.map(|e| Ok(e.differentiate(Var::from_coord(a)).evaluate(x)?))?;
        }
        Ok(out)
    }
}

/// `∇_a T` for every direction `a`.
pub fn connection_apply<const N: usize>(
    field: &TractorField<N>,
    structure: &MobiusStructure<N>,
    x: &Vector<N>,
) -> Result<[AdjointTractor<N>; N]> {
    if field.gauge != structure.name() {
        return Err(Error::GaugeMismatch { expected: structure.name().to_string(), found: field.gauge.clone() });
    }
    let geo = structure.geometry(x)?;
    let t = field.evaluate(x)?;
    let nt = levi_civita_components(&t, &field.partials(x)?, &geo.gamma);
    Ok(std::array::from_fn(|a| connection_row(a, &t, &nt[a], &geo)))
}

/// `∂T = U^a ∇_a T` along a curve, given `dt`, the Levi-Civita derivative
/// `U^a ∇_a` of each component. The result has weight `w - 1`.
pub fn curve_derivative<const N: usize>(
    t: &AdjointTractor<N>,
    dt: &AdjointTractor<N>,
    u: &Vector<N>,
    geo: &LocalGeometry<N>,
) -> AdjointTractor<N> {
    let u_low = mat_vec(&geo.g, u);
    let pu: Vector<N> = std::array::from_fn(|b| (0..N).map(|a| u[a] * geo.p[a][b]).sum()); // U^a P_ab
    let pu_up = mat_vec(&geo.g_inv, &pu); // U^a P_a^c
    let mut out = AdjointTractor::zero(t.gauge.clone()).with_weight(t.weight.0 - 1);
    for b in 0..N {
        let u_mu: f64 = (0..N).map(|a| u[a] * t.mu[a][b]).sum();
        out.sigma[b] = dt.sigma[b] - u_mu - t.nu * u_low[b];
        for c in 0..N {
            out.mu[b][c] =
                dt.mu[b][c] - u_low[b] * t.rho[c] + u_low[c] * t.rho[b] + pu[b] * t.sigma[c] - pu[c] * t.sigma[b];
        }
        let p_mu: f64 = (0..N).map(|c| pu_up[c] * t.mu[b][c]).sum();
        out.rho[b] = dt.rho[b] - p_mu - pu[b] * t.nu;
    }
    out.nu = dt.nu + contract(u, &t.rho) + contract(&pu_up, &t.sigma);
    out
}

/// `(U_b, 2U_[b A_c], κ, J_b + ½(A·A - κ²) U_b + κ A_b)`, weight −1.
pub fn lift_velocity<const N: usize>(
    state: &KinematicState<N>,
    g: &Matrix<N>,
    g_inv: &Matrix<N>,
) -> Result<AdjointTractor<N>> {
    let k = state.kappa_or_err(g_inv)?;
    let u_low = mat_vec(g, &state.u);
    let aa = bilinear(g_inv, &state.a, &state.a);
    Ok(AdjointTractor {
        sigma: u_low,
        mu: wedge(&u_low, &state.a),
        nu: k,
        rho: std::array::from_fn(|b| state.j[b] + 0.5 * (aa - k * k) * u_low[b] + k * state.a[b]),
        weight: Weight(-1),
        gauge: state.gauge.clone(),
    })
}

/// `4σ^b ρ_b - μ^bc μ_bc + 2ν²`.
pub fn null_quantity<const N: usize>(t: &AdjointTractor<N>, g_inv: &Matrix<N>) -> f64 {
    4.0 * bilinear(g_inv, &t.sigma, &t.rho) - crate::tensor::contract_two(g_inv, &t.mu, &t.mu) + 2.0 * t.nu * t.nu
}

/// `D = 2(4σ^b ρ_b - μ^bc μ_bc + 2ν²) + 4i ε^bc (ν μ_bc - 2σ_[b ρ_c])`.
pub fn discriminant<const N: usize>(
    t: &AdjointTractor<N>,
    metric: &MetricField<N>,
    x: &Vector<N>,
) -> Result<Complex64> {
    let eps = epsilon_upper(metric, x)?;
    let g_inv = metric.inverse_metric(x)?;
    let mut im = 0.0;
    for b in 0..N {
        for c in 0..N {
            let skew = 0.5 * (t.sigma[b] * t.rho[c] - t.sigma[c] * t.rho[b]);
            im += eps[b][c] * (t.nu * t.mu[b][c] - 2.0 * skew);
        }
    }
    Ok(Complex64::new(2.0 * null_quantity(t, &g_inv), 4.0 * im))
}

/// The parallel flat-gauge section of the Killing field with coefficients `k`.
pub fn killing_split(k: &KillingCoefficients, x: &Vector<2>) -> AdjointTractor<2> {
    killing_field(k).evaluate(x).expect("polynomial components")
}

/// `killing_split` as a polynomial tractor field.
pub fn killing_field(k: &KillingCoefficients) -> TractorField<2> {
    let n = Expr::Num;
    let (x, y) = (Expr::coord(0), Expr::coord(1));
    let x2_y2 = x.clone().sqr().sub(y.clone().sqr());
    let xy = x.clone().mul(y.clone());
    let s1 = n(k.u)
        .add(n(k.lambda).mul(x.clone()))
        .sub(n(k.f).mul(y.clone()))
        .add(n(0.5 * k.p).mul(x2_y2.clone()))
        .sub(n(k.q).mul(xy.clone()));
    let s2 = n(k.v)
        .add(n(k.lambda).mul(y.clone()))
        .add(n(k.f).mul(x.clone()))
        .add(n(k.p).mul(xy))
        .add(n(0.5 * k.q).mul(x2_y2));
    let m12 = n(k.f).add(n(k.p).mul(y.clone())).add(n(k.q).mul(x.clone()));
    let nu = n(k.lambda).add(n(k.p).mul(x)).sub(n(k.q).mul(y));
    TractorField {
        sigma: [s1, s2],
        mu: [[n(0.0), m12.clone()], [m12.neg(), n(0.0)]],
        nu,
        rho: [n(-k.p), n(k.q)],
        gauge: "flat/flat-model".to_string(),
    }
}

/// The spanning sections `Φ = (0,0,0,U)`, `Ψ = (0,0,1,A)` and
/// `Ξ = (U, 2U_[b A_c], 0, 0)` with weights 1, 0 and −1.
pub fn bundle_b_sections<const N: usize>(state: &KinematicState<N>, g: &Matrix<N>) -> [AdjointTractor<N>; 3] {
    let u_low = mat_vec(g, &state.u);
    let gauge = state.gauge.clone();
    let phi = AdjointTractor::bottom(u_low, gauge.clone()).with_weight(1);
    let mut psi = AdjointTractor::bottom(state.a, gauge.clone());
    psi.nu = 1.0;
    let xi = AdjointTractor::new(u_low, wedge(&u_low, &state.a), 0.0, [0.0; N], gauge).with_weight(-1);
    [phi, psi, xi]
}

/// `∂Φ`, `∂Ψ`, `∂Ξ` computed with the curve-derivative formula, `∂U = A`
/// and `∂A` from the jerk definition.
pub fn bundle_b_derivatives<const N: usize>(
    state: &KinematicState<N>,
    geo: &LocalGeometry<N>,
) -> [AdjointTractor<N>; 3] {
    let [phi, psi, xi] = bundle_b_sections(state, &geo.g);
    let u_low = mat_vec(&geo.g, &state.u);
    let da = acceleration_derivative(&state.u, &state.a, &state.j, &geo.p, &geo.g, &geo.g_inv);
    let gauge = state.gauge.clone();
    let d_phi = AdjointTractor::bottom(state.a, gauge.clone());
    let d_psi = AdjointTractor::bottom(da, gauge.clone());
    let d_xi = AdjointTractor::new(state.a, wedge(&u_low, &da), 0.0, [0.0; N], gauge);
    [
        curve_derivative(&phi, &d_phi, &state.u, geo),
        curve_derivative(&psi, &d_psi, &state.u, geo),
        curve_derivative(&xi, &d_xi, &state.u, geo),
    ]
}

/// Size of the part of `t` lying outside `span(Φ, Ψ, Ξ)`.
///
/// `t` is written as `γ Ξ + β Ψ + α Φ + rest` with `γ = σ_b U^b`, `β = ν` and
/// `α` the `U`-component of `ρ - νA`; the rest is measured by
/// `sqrt(|σ|² + ½ μ^bc μ_bc + |ρ|²)`.
pub fn outside_bundle_b<const N: usize>(
    t: &AdjointTractor<N>,
    state: &KinematicState<N>,
    geo: &LocalGeometry<N>,
) -> f64 {
    let u_low = mat_vec(&geo.g, &state.u);
    let gamma = contract(&t.sigma, &state.u);
    let beta = t.nu;
    let r: Vector<N> = std::array::from_fn(|b| t.rho[b] - beta * state.a[b]);
    let alpha = contract(&r, &state.u);
    let sigma: Vector<N> = std::array::from_fn(|b| t.sigma[b] - gamma * u_low[b]);
    let ua = wedge(&u_low, &state.a);
    let mu: Matrix<N> = std::array::from_fn(|b| std::array::from_fn(|c| t.mu[b][c] - gamma * ua[b][c]));
    let rho: Vector<N> = std::array::from_fn(|b| r[b] - alpha * u_low[b]);
    let sq = bilinear(&geo.g_inv, &sigma, &sigma)
        + 0.5 * crate::tensor::contract_two(&geo.g_inv, &mu, &mu)
        + bilinear(&geo.g_inv, &rho, &rho);
    sq.max(0.0).sqrt()
}

/// How far `∂` moves the rank-3 bundle `ℬ` out of itself: the largest
/// out-of-`ℬ` part of `∂Φ`, `∂Ψ`, `∂Ξ`.
pub fn bundle_b_residual<const N: usize>(state: &KinematicState<N>, geo: &LocalGeometry<N>) -> f64 {
    bundle_b_derivatives(state, geo).iter().map(|d| outside_bundle_b(d, state, geo)).fold(0.0, f64::max)
}

/// `∂` of the velocity lift with `∂A` from the jerk definition, `∂J` from the
/// definition of `κ` and `∂κ` supplied.
pub fn lift_derivative<const N: usize>(
    state: &KinematicState<N>,
    dkappa: f64,
    geo: &LocalGeometry<N>,
) -> Result<AdjointTractor<N>> {
    let lift = lift_velocity(state, &geo.g, &geo.g_inv)?;
    let k = lift.nu;
    let u_low = mat_vec(&geo.g, &state.u);
    let da = acceleration_derivative(&state.u, &state.a, &state.j, &geo.p, &geo.g, &geo.g_inv);
    let aj = bilinear(&geo.g_inv, &state.a, &state.j);
    let dj: Vector<N> = std::array::from_fn(|b| -aj * u_low[b] - 2.0 * k * state.j[b]);
    let aa = bilinear(&geo.g_inv, &state.a, &state.a);
    let a_da = bilinear(&geo.g_inv, &state.a, &da);
    let d = AdjointTractor {
        sigma: state.a,
        mu: wedge(&u_low, &da),
        nu: dkappa,
        rho: std::array::from_fn(|b| {
            dj[b] + (a_da - k * dkappa) * u_low[b] + 0.5 * (aa - k * k) * state.a[b] + dkappa * state.a[b] + k * da[b]
        }),
        weight: Weight(-1),
        gauge: state.gauge.clone(),
    };
    Ok(curve_derivative(&lift, &d, &state.u, geo))
}

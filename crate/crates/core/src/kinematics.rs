//! The kinematic tower of a curve: unit tangent `U^a`, acceleration `A_a`,
//! normalised jerk `J_a`, the density `κ`, normalised snap `S_a` and the
//! two-form `K_ab`, with their behaviour under `ĝ = Ω² g`.
//!
//! `U` is stored with its index up; `A`, `J` and `S` are one-forms lowered
//! with the metric of the state's gauge. All components are the genuine
//! components in that gauge.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::{Jet, Real};
use crate::mobius::{cotton_york, ConformalRescaling, LocalGeometry, MobiusStructure};
use crate::tensor::{bilinear, contract, mat_vec, vzero, Matrix, Vector};

/// Default lower bound on `|J|_g` below which `κ` is undefined.
pub const JERK_THRESHOLD: f64 = 1e-10;

/// Jet data of a curve point in a named gauge.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicState<const N: usize> {
    pub x: Vector<N>,
    pub u: Vector<N>,
    pub a: Vector<N>,
    pub j: Vector<N>,
    pub kappa: Option<f64>,
    pub gauge: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintResiduals {
    /// `|g(U, U) - 1|`
    pub unit: f64,
    /// `|U^a A_a|`
    pub ortho_a: f64,
    /// `|U^a J_a|`
    pub ortho_j: f64,
}

impl ConstraintResiduals {
    pub fn max(&self) -> f64 {
        self.unit.max(self.ortho_a).max(self.ortho_j)
    }
}

#[derive(Serialize, Deserialize)]
struct StateRepr {
    x: Vec<f64>,
    #[serde(rename = "U")]
    u: Vec<f64>,
    #[serde(rename = "A")]
    a: Vec<f64>,
    #[serde(rename = "J", default)]
    j: Option<Vec<f64>>,
    #[serde(default)]
    kappa: Option<f64>,
    #[serde(default)]
    gauge: String,
}

impl<const N: usize> Serialize for KinematicState<N> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StateRepr {
            x: self.x.to_vec(),
            u: self.u.to_vec(),
            a: self.a.to_vec(),
            j: Some(self.j.to_vec()),
            kappa: self.kappa,
            gauge: self.gauge.clone(),
        }
        .serialize(s)
    }
}

impl<'de, const N: usize> Deserialize<'de> for KinematicState<N> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = StateRepr::deserialize(d)?;
        let arr = |v: Vec<f64>, name: &str| -> std::result::Result<Vector<N>, D::Error> {
            v.try_into()
                .map_err(|v: Vec<f64>| D::Error::custom(format!("`{name}` has {} components, expected {N}", v.len())))
        };
        Ok(Self {
            x: arr(r.x, "x")?,
            u: arr(r.u, "U")?,
            a: arr(r.a, "A")?,
            j: match r.j {
                Some(j) => arr(j, "J")?,
                None => [0.0; N],
            },
            kappa: r.kappa,
            gauge: r.gauge,
        })
    }
}

impl<const N: usize> KinematicState<N> {
    pub fn new(x: Vector<N>, u: Vector<N>, a: Vector<N>, gauge: impl Into<String>) -> Self {
        Self { x, u, a, j: [0.0; N], kappa: None, gauge: gauge.into() }
    }

    pub fn with_jerk(mut self, j: Vector<N>, kappa: Option<f64>) -> Self {
        self.j = j;
        self.kappa = kappa;
        self
    }

    pub fn u_lower(&self, g: &Matrix<N>) -> Vector<N> {
        mat_vec(g, &self.u)
    }

    pub fn residuals(&self, g: &Matrix<N>) -> ConstraintResiduals {
        ConstraintResiduals {
            unit: (bilinear(g, &self.u, &self.u) - 1.0).abs(),
            ortho_a: contract(&self.u, &self.a).abs(),
            ortho_j: contract(&self.u, &self.j).abs(),
        }
    }

    /// `|J|_g` computed with the inverse metric.
    pub fn jerk_norm(&self, g_inv: &Matrix<N>) -> f64 {
        bilinear(g_inv, &self.j, &self.j).max(0.0).sqrt()
    }

    pub fn kappa_or_err(&self, g_inv: &Matrix<N>) -> Result<f64> {
        match self.kappa {
            Some(k) => Ok(k),
            None => Err(Error::DegenerateJerk { norm: self.jerk_norm(g_inv), threshold: JERK_THRESHOLD }),
        }
    }
}

/// `J_a = ∂A_a + (A^b A_b + P_bc U^b U^c) U_a - P_ab U^b`.
pub fn normalised_jerk<const N: usize, R: Real>(
    u: &Vector<N, R>,
    a: &Vector<N, R>,
    da: &Vector<N, R>,
    p: &Matrix<N, R>,
    g: &Matrix<N, R>,
    g_inv: &Matrix<N, R>,
) -> Vector<N, R> {
    let u_low = mat_vec(g, u);
    let pu = mat_vec(p, u);
    let c = bilinear(g_inv, a, a) + contract(u, &pu);
    std::array::from_fn(|i| da[i] + c * u_low[i] - pu[i])
}

/// `∂A_a` solved from the jerk definition: `J_a - (A·A + P_UU) U_a + P_ab U^b`.
pub fn acceleration_derivative<const N: usize, R: Real>(
    u: &Vector<N, R>,
    a: &Vector<N, R>,
    j: &Vector<N, R>,
    p: &Matrix<N, R>,
    g: &Matrix<N, R>,
    g_inv: &Matrix<N, R>,
) -> Vector<N, R> {
    let u_low = mat_vec(g, u);
    let pu = mat_vec(p, u);
    let c = bilinear(g_inv, a, a) + contract(u, &pu);
    std::array::from_fn(|i| j[i] - c * u_low[i] + pu[i])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaValue {
    pub kappa: f64,
    /// `|∂J + (A·J) U + 2κ J|_g`: zero in dimension 2, the conformal torsion in dimension 3.
    pub residual: f64,
}

/// `κ = -⟨∂J + (A·J) U, J⟩ / (2 ⟨J, J⟩)`.
pub fn kappa<const N: usize>(
    u: &Vector<N>,
    a: &Vector<N>,
    j: &Vector<N>,
    dj: &Vector<N>,
    g: &Matrix<N>,
    g_inv: &Matrix<N>,
    threshold: f64,
) -> Result<KappaValue> {
    let jj = bilinear(g_inv, j, j);
    let norm = jj.max(0.0).sqrt();
    if !(norm >= threshold) {
        return Err(Error::DegenerateJerk { norm, threshold });
    }
    let w = normalised_snap(u, a, j, dj, g, g_inv);
    let k = -bilinear(g_inv, &w, j) / (2.0 * jj);
    let r: Vector<N> = std::array::from_fn(|i| w[i] + 2.0 * k * j[i]);
    Ok(KappaValue { kappa: k, residual: bilinear(g_inv, &r, &r).max(0.0).sqrt() })
}

/// `S_a = ∂J_a + (A^b J_b) U_a`.
pub fn normalised_snap<const N: usize, R: Real>(
    u: &Vector<N, R>,
    a: &Vector<N, R>,
    j: &Vector<N, R>,
    dj: &Vector<N, R>,
    g: &Matrix<N, R>,
    g_inv: &Matrix<N, R>,
) -> Vector<N, R> {
    let u_low = mat_vec(g, u);
    let aj = bilinear(g_inv, a, j);
    std::array::from_fn(|i| dj[i] + aj * u_low[i])
}

/// `∂κ + ½(A·A + κ²) + P_UU`, the weight −2 density whose vanishing is the
/// ordinal loxodrome equation.
pub fn ordinal_density<const N: usize>(
    u: &Vector<N>,
    a: &Vector<N>,
    kappa: f64,
    dkappa: f64,
    p: &Matrix<N>,
    g_inv: &Matrix<N>,
) -> f64 {
    dkappa + 0.5 * (bilinear(g_inv, a, a) + kappa * kappa) + bilinear(p, u, u)
}

/// `K_ab = -Y_abc U^c` (the Weyl term vanishes in dimensions 2 and 3).
pub fn k_two_form<const N: usize>(structure: &MobiusStructure<N>, x: &Vector<N>, u: &Vector<N>) -> Result<Matrix<N>> {
    if N > 3 {
        return Err(Error::Unsupported("K two-form needs the Weyl tensor above dimension 3".into()));
    }
    let y = cotton_york(structure, x)?;
    Ok(std::array::from_fn(|a| std::array::from_fn(|b| -(0..N).map(|c| y[a][b][c] * u[c]).sum::<f64>())))
}

/// The state in gauge `Ω² g`, from a state in gauge `g` (`metric` is `g`
/// at the state's point):
///
/// * `Û^a = Ω⁻¹ U^a`
/// * `Â_a = A_a - Υ_a + (U^b Υ_b) U_a`
/// * `Ĵ_a = Ω⁻¹ J_a`
/// * `κ̂ = Ω⁻¹ (κ + U^a Υ_a)`
///
/// The factor `Ω⁻¹` on `κ` is its weight: `κ` is a density of weight −1 and
/// `κ + U^a Υ_a` is its value in the new gauge before being expressed there.
pub fn transform_state<const N: usize>(
    state: &KinematicState<N>,
    rescaling: &ConformalRescaling<N>,
    g: &Matrix<N>,
    target_gauge: impl Into<String>,
) -> Result<KinematicState<N>> {
    let jet = rescaling.jet(&state.x)?;
    let omega = jet.omega;
    let ups = jet.upsilon();
    let u_low = mat_vec(g, &state.u);
    let uy = contract(&state.u, &ups);
    Ok(KinematicState {
        x: state.x,
        u: std::array::from_fn(|i| state.u[i] / omega),
        a: std::array::from_fn(|i| state.a[i] - ups[i] + uy * u_low[i]),
        j: std::array::from_fn(|i| state.j[i] / omega),
        kappa: state.kappa.map(|k| (k + uy) / omega),
        gauge: target_gauge.into(),
    })
}

/// Everything `jet_from_curve` can say about a curve point.
#[derive(Debug, Clone)]
pub struct CurveJet<const N: usize> {
    pub state: KinematicState<N>,
    /// `ds/dt`
    pub speed: f64,
    pub da: Vector<N>,
    pub dj: Vector<N>,
    pub snap: Vector<N>,
    pub dkappa: Option<f64>,
    pub kappa_residual: Option<f64>,
    pub jerk_norm: f64,
}

impl<const N: usize> CurveJet<N> {
    pub fn kappa(&self) -> Result<f64> {
        self.state.kappa.ok_or(Error::DegenerateJerk { norm: self.jerk_norm, threshold: JERK_THRESHOLD })
    }

    /// `∂κ + ½(A·A + κ²) + P_UU`.
    pub fn ordinal_density(&self, geometry: &LocalGeometry<N>) -> Result<f64> {
        let k = self.kappa()?;
        let dk = self.dkappa.expect("set together with kappa");
        Ok(ordinal_density(&self.state.u, &self.state.a, k, dk, &geometry.p, &geometry.g_inv))
    }
}

type J7 = Jet<7>;

/// Covariant derivative along the curve of a one-form given as jets in `t`:
/// `D W_a / ds = σ⁻¹ dW_a/dt - Γ^c_ab U^b W_c`.
fn d_ds<const N: usize>(w: &Vector<N, J7>, sigma: J7, u: &Vector<N, J7>, geo: &LocalGeometry<N, J7>) -> Vector<N, J7> {
    std::array::from_fn(|a| {
        let mut out = w[a].derivative() / sigma;
        for b in 0..N {
            for c in 0..N {
                out = out - geo.gamma[c][a][b] * u[b] * w[c];
            }
        }
        out
    })
}

/// The kinematic state of the parametrised curve `x(t)` (expressions in `t`)
/// at parameter `t0`, with `∂A`, `∂J`, `∂κ` and `S`. Derivatives are exact
/// Taylor propagation; nothing is differenced.
pub fn jet_from_curve<const N: usize>(
    curve: &[Expr; N],
    structure: &MobiusStructure<N>,
    t0: f64,
) -> Result<CurveJet<N>> {
    let t = J7::variable(t0);
    let mut x: Vector<N, J7> = vzero();
    for i in 0..N {
        x[i] = curve[i].evaluate_t(t)?;
    }
    let geo = structure.geometry_jet(&x)?;
    let v: Vector<N, J7> = std::array::from_fn(|i| x[i].derivative());
    let speed_sq = bilinear(&geo.g, &v, &v);
    if !(speed_sq.value() > 0.0) {
        return Err(Error::SingularCurve { t: t0 });
    }
    let sigma = speed_sq.sqrt();
    let u: Vector<N, J7> = std::array::from_fn(|i| v[i] / sigma);
    let u_low = mat_vec(&geo.g, &u);
    let a = d_ds(&u_low, sigma, &u, &geo);
    let da = d_ds(&a, sigma, &u, &geo);
    let j = normalised_jerk(&u, &a, &da, &geo.p, &geo.g, &geo.g_inv);
    let dj = d_ds(&j, sigma, &u, &geo);
    let snap = normalised_snap(&u, &a, &j, &dj, &geo.g, &geo.g_inv);
    let jj = bilinear(&geo.g_inv, &j, &j);
    let jerk_norm = jj.value().max(0.0).sqrt();
    let (kappa, dkappa, kappa_residual) = if jerk_norm >= JERK_THRESHOLD {
        let k = -bilinear(&geo.g_inv, &snap, &j) / (J7::constant(2.0) * jj);
        let dk = k.derivative() / sigma;
        let r: Vector<N> = std::array::from_fn(|i| snap[i].value() + 2.0 * k.value() * j[i].value());
        let g_inv = crate::tensor::matrix_values(&geo.g_inv);
        (Some(k.value()), Some(dk.value()), Some(bilinear(&g_inv, &r, &r).max(0.0).sqrt()))
    } else {
        (None, None, None)
    };
    let vals = crate::tensor::values::<N, J7>;
    Ok(CurveJet {
        state: KinematicState {
            x: vals(&x),
            u: vals(&u),
            a: vals(&a),
            j: vals(&j),
            kappa,
            gauge: structure.name().to_string(),
        },
        speed: sigma.value(),
        da: vals(&da),
        dj: vals(&dj),
        snap: vals(&snap),
        dkappa,
        kappa_residual,
        jerk_norm,
    })
}

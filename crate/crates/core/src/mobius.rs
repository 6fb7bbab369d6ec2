//! Möbius structures: a metric paired with a Rho tensor `P_ab`, the Rho
//! transformation law under `ĝ = Ω² g`, the three-dimensional Schouten
//! tensor and the Cotton-York tensor.
//!
//! In two dimensions the Rho tensor is extra data. The canonical choice for an
//! isothermal metric `Ω² δ` transports `P = 0` from the flat reference.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::jet::Real;
use crate::tensor::{
    central_difference, christoffel, christoffel_from, curvature, inverse, mzero, values, Christoffel, ConformalFactor,
    FactorJet, Matrix, MetricField, MetricKind, Rank3, Vector, FD_STEP,
};

/// A positive conformal factor `Ω`, with `Υ_a = Ω⁻¹ ∂_a Ω`.
#[derive(Clone, PartialEq)]
pub struct ConformalRescaling<const N: usize> {
    factor: ConformalFactor<N>,
    label: String,
}

impl<const N: usize> fmt::Debug for ConformalRescaling<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConformalRescaling({})", self.label)
    }
}

impl<const N: usize> ConformalRescaling<N> {
    pub fn new(omega: Expr) -> Result<Self> {
        let label = omega.to_string();
        Ok(Self { factor: ConformalFactor::new(omega)?, label })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::new(crate::expr::parse(text)?)
    }

    pub fn identity() -> Self {
        Self::new(Expr::Num(1.0)).expect("constant rescaling")
    }

    /// `Ω = 2 / (1 + r²)`: flat to the unit round sphere.
    pub fn stereographic() -> Self {
        Self::parse(match N {
            2 => "2/(1+x^2+y^2)",
            _ => "2/(1+x^2+y^2+z^2)",
        })
        .expect("stereographic factor")
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn factor(&self) -> &ConformalFactor<N> {
        &self.factor
    }

    pub fn expr(&self) -> &Expr {
        self.factor.expr()
    }

    pub fn is_identity(&self) -> bool {
        self.factor.expr().constant_value() == Some(1.0)
    }

    pub fn omega(&self, x: &Vector<N>) -> Result<f64> {
        self.factor.value(x)
    }

    pub fn upsilon(&self, x: &Vector<N>) -> Result<Vector<N>> {
        Ok(self.factor.jet(x)?.upsilon())
    }

    pub fn jet<R: Real>(&self, x: &Vector<N, R>) -> Result<FactorJet<N, R>> {
        self.factor.jet(x)
    }

    /// Rescaling by `Ω₁ Ω₂`.
    pub fn then(&self, other: &ConformalRescaling<N>) -> ConformalRescaling<N> {
        ConformalRescaling {
            factor: self.factor.product(&other.factor),
            label: format!("({})*({})", self.label, other.label),
        }
    }

    /// Rescaling by `1/Ω`.
    pub fn inverse(&self) -> ConformalRescaling<N> {
        ConformalRescaling { factor: self.factor.reciprocal(), label: format!("1/({})", self.label) }
    }
}

/// Where a structure's Rho tensor came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoProvenance {
    Schouten,
    FlatModelTransform,
    ConstantCurvature,
    User,
    Transformed,
}

#[derive(Clone)]
enum RhoField<const N: usize> {
    /// Expressions for `P_ab` and `∂_c P_ab` (stored `dp[c][a][b]`).
    Symbolic {
        p: [[Expr; N]; N],
        dp: [[[Expr; N]; N]; N],
    },
    Schouten,
    /// `rho_transform` of another structure's Rho, evaluated pointwise.
    Transformed {
        base: Arc<MobiusStructure<N>>,
        rescaling: ConformalRescaling<N>,
    },
}

/// Metric, connection and Rho at a point, over any scalar type.
#[derive(Debug, Clone, Copy)]
pub struct LocalGeometry<const N: usize, R: Real = f64> {
    pub x: Vector<N, R>,
    pub g: Matrix<N, R>,
    pub g_inv: Matrix<N, R>,
    pub gamma: Christoffel<N, R>,
    pub p: Matrix<N, R>,
}

/// A metric together with a Rho tensor field.
#[derive(Clone)]
pub struct MobiusStructure<const N: usize> {
    name: String,
    metric: MetricField<N>,
    rho: RhoField<N>,
    provenance: RhoProvenance,
}

impl<const N: usize> fmt::Debug for MobiusStructure<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MobiusStructure")
            .field("name", &self.name)
            .field("metric", &self.metric)
            .field("provenance", &self.provenance)
            .finish()
    }
}

fn symbolic_rho<const N: usize>(p: [[Expr; N]; N]) -> RhoField<N> {
    let dp = std::array::from_fn(|c| {
        std::array::from_fn(|a| std::array::from_fn(|b| p[a][b].differentiate(Var::from_coord(c))))
    });
    RhoField::Symbolic { p, dp }
}

fn delta(a: usize, b: usize) -> Expr {
    Expr::Num(if a == b { 1.0 } else { 0.0 })
}

/// Symbolic Rho transformation for a conformally flat background `g = Ω₀² δ`
/// with Rho `p`, rescaled by `Ω₁`. The Christoffel symbols of `Ω₀² δ` and the
/// term `½ g^cd Υ_c Υ_d g_ab = ½ |Υ|²_δ δ_ab` are written out in closed form.
fn transform_symbolic<const N: usize>(
    p: &[[Expr; N]; N],
    background: &ConformalFactor<N>,
    rescaling: &ConformalFactor<N>,
) -> [[Expr; N]; N] {
    let ups = rescaling.upsilon_exprs();
    let bg = background.upsilon_exprs();
    let ups_sq = (0..N).map(|c| ups[c].clone().sqr()).reduce(Expr::add).expect("N >= 1");
    let dot = (0..N).map(|c| bg[c].clone().mul(ups[c].clone())).reduce(Expr::add).expect("N >= 1");
    std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            let d_ups = ups[b].differentiate(Var::from_coord(a));
            // Γ^c_ab Υ_c = υ_b Υ_a + υ_a Υ_b - δ_ab υ·Υ
            let gamma_ups = bg[b]
                .clone()
                .mul(ups[a].clone())
                .add(bg[a].clone().mul(ups[b].clone()))
                .sub(delta(a, b).mul(dot.clone()));
            p[a][b]
                .clone()
                .sub(d_ups)
                .add(gamma_ups)
                .add(ups[a].clone().mul(ups[b].clone()))
                .sub(Expr::Num(0.5).mul(delta(a, b)).mul(ups_sq.clone()))
        })
    })
}

impl<const N: usize> MobiusStructure<N> {
    /// The flat-model structure of a conformally flat metric `Ω² δ`:
    /// `P = 0` for `δ`, transported by the Rho transformation law.
    pub fn flat_model(metric: MetricField<N>) -> Result<Self> {
        let factor = metric
            .conformal_factor()
            .cloned()
            .ok_or_else(|| Error::Unsupported("flat-model transport needs an isothermal or builtin metric".into()))?;
        let zero: [[Expr; N]; N] = std::array::from_fn(|_| std::array::from_fn(|_| Expr::Num(0.0)));
        let p = transform_symbolic(&zero, &ConformalFactor::one(), &factor);
        let name = default_name(&metric, "flat-model");
        Ok(Self { name, metric, rho: symbolic_rho(p), provenance: RhoProvenance::FlatModelTransform })
    }

    /// `P_ab = (K/2) g_ab` for the constant-curvature builtins.
    pub fn constant_curvature(metric: MetricField<N>) -> Result<Self> {
        let k = match metric.kind() {
            MetricKind::Flat => 0.0,
            MetricKind::Sphere { curvature } | MetricKind::Hyperbolic { curvature } => curvature,
            other => {
                return Err(Error::Invalid(format!(
                    "constant-curvature Rho needs a flat, sphere or hyperbolic metric, not {other:?}"
                )))
            }
        };
        let omega = metric.conformal_factor().expect("builtin metrics are conformal").expr().clone();
        let diag = Expr::Num(0.5 * k).mul(omega.sqr());
        let p = std::array::from_fn(|a| std::array::from_fn(|b| if a == b { diag.clone() } else { Expr::Num(0.0) }));
        let name = default_name(&metric, "constant-curvature");
        Ok(Self { name, metric, rho: symbolic_rho(p), provenance: RhoProvenance::ConstantCurvature })
    }

    /// A user-supplied symmetric Rho tensor.
    pub fn user(metric: MetricField<N>, p: [[Expr; N]; N]) -> Result<Self> {
        for a in 0..N {
            for b in 0..a {
                if p[a][b] != p[b][a] {
                    return Err(Error::Invalid(format!(
                        "Rho must be symmetric: P{}{} = {} but P{}{} = {}",
                        b + 1,
                        a + 1,
                        p[b][a],
                        a + 1,
                        b + 1,
                        p[a][b]
                    )));
                }
            }
        }
        let name = default_name(&metric, "user");
        Ok(Self { name, metric, rho: symbolic_rho(p), provenance: RhoProvenance::User })
    }

    /// Rho from the Schouten tensor of the metric (dimension 3 only).
    pub fn schouten(metric: MetricField<N>) -> Result<Self> {
        if N != 3 {
            return Err(Error::Dimension { op: "schouten", expected: "3", found: N });
        }
        let name = default_name(&metric, "schouten");
        Ok(Self { name, metric, rho: RhoField::Schouten, provenance: RhoProvenance::Schouten })
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn metric(&self) -> &MetricField<N> {
        &self.metric
    }

    pub fn provenance(&self) -> RhoProvenance {
        self.provenance
    }

    /// Symbolic Rho components, when the structure has them.
    pub fn rho_exprs(&self) -> Option<&[[Expr; N]; N]> {
        match &self.rho {
            RhoField::Symbolic { p, .. } => Some(p),
            _ => None,
        }
    }

    pub fn rho(&self, x: &Vector<N>) -> Result<Matrix<N>> {
        match &self.rho {
            RhoField::Symbolic { p, .. } => {
                let mut out = [[0.0; N]; N];
                for a in 0..N {
                    for b in 0..N {
                        out[a][b] = p[a][b].evaluate(x)?;
                    }
                }
                Ok(out)
            }
            RhoField::Schouten => schouten(&self.metric, x),
            RhoField::Transformed { base, rescaling } => {
                let p = base.rho(x)?;
                rho_transform(&p, rescaling, &base.metric, x)
            }
        }
    }

    /// `dp[c][a][b] = ∂_c P_ab`.
    pub fn rho_gradient(&self, x: &Vector<N>) -> Result<Rank3<N>> {
        match &self.rho {
            RhoField::Symbolic { dp, .. } => {
                let mut out = [[[0.0; N]; N]; N];
                for c in 0..N {
                    for a in 0..N {
                        for b in 0..N {
                            out[c][a][b] = dp[c][a][b].evaluate(x)?;
                        }
                    }
                }
                Ok(out)
            }
            _ => central_difference(|p| self.rho(p), x, FD_STEP),
        }
    }

    /// Rho over a generic scalar; needs a symbolic Rho.
    pub fn rho_jet<R: Real>(&self, x: &Vector<N, R>) -> Result<Matrix<N, R>> {
        match &self.rho {
            RhoField::Symbolic { p, .. } => {
                let mut out = mzero::<N, R>();
                for a in 0..N {
                    for b in 0..N {
                        out[a][b] = p[a][b].evaluate_real(x)?;
                    }
                }
                Ok(out)
            }
            _ => Err(Error::Unsupported("Rho tensor is only available along jets when given by expressions".into())),
        }
    }

    pub fn geometry(&self, x: &Vector<N>) -> Result<LocalGeometry<N>> {
        let g = self.metric.metric(x)?;
        let g_inv = inverse(&g).ok_or_else(|| Error::SingularMetric { point: x.to_vec() })?;
        let gamma = christoffel(&self.metric, x)?;
        let p = self.rho(x)?;
        Ok(LocalGeometry { x: *x, g, g_inv, gamma, p })
    }

    /// Geometry along a jet of points; needs a conformal metric and symbolic Rho.
    pub fn geometry_jet<R: Real>(&self, x: &Vector<N, R>) -> Result<LocalGeometry<N, R>> {
        let (g, dg) = self.metric.metric_jet(x)?;
        let g_inv = inverse(&g).ok_or_else(|| Error::SingularMetric { point: values(x).to_vec() })?;
        let gamma = christoffel_from(&g_inv, &dg);
        let p = self.rho_jet(x)?;
        Ok(LocalGeometry { x: *x, g, g_inv, gamma, p })
    }
}

fn default_name<const N: usize>(metric: &MetricField<N>, rho: &str) -> String {
    let m = match metric.kind() {
        MetricKind::Flat => "flat".to_string(),
        MetricKind::Sphere { curvature } => format!("sphere({curvature})"),
        MetricKind::Hyperbolic { curvature } => format!("hyperbolic({curvature})"),
        MetricKind::CylinderGauge => "cylinder".to_string(),
        MetricKind::Isothermal => {
            format!("isothermal({})", metric.conformal_factor().map(|c| c.expr().to_string()).unwrap_or_default())
        }
        MetricKind::Sampled => "sampled".to_string(),
    };
    format!("{m}/{rho}")
}

/// `P_ab = R_ab - R g_ab / 4` (dimension 3).
pub fn schouten<const N: usize>(metric: &MetricField<N>, x: &Vector<N>) -> Result<Matrix<N>> {
    if N != 3 {
        return Err(Error::Dimension { op: "schouten", expected: "3", found: N });
    }
    let c = curvature(metric, x)?;
    let g = metric.metric(x)?;
    Ok(std::array::from_fn(|a| std::array::from_fn(|b| c.ricci[a][b] - 0.25 * c.scalar * g[a][b])))
}

/// `P̂_ab = P_ab - ∇_a Υ_b + Υ_a Υ_b - ½ Υ^c Υ_c g_ab`, with `∇` the
/// Levi-Civita connection of `metric` (the pre-rescaling metric).
pub fn rho_transform<const N: usize>(
    p: &Matrix<N>,
    rescaling: &ConformalRescaling<N>,
    metric: &MetricField<N>,
    x: &Vector<N>,
) -> Result<Matrix<N>> {
    let jet = rescaling.jet(x)?;
    let ups = jet.upsilon();
    let d_ups = jet.upsilon_gradient();
    let g = metric.metric(x)?;
    let g_inv = metric.inverse_metric(x)?;
    let gamma = christoffel(metric, x)?;
    let mut ups_sq = 0.0;
    for c in 0..N {
        for d in 0..N {
            ups_sq += g_inv[c][d] * ups[c] * ups[d];
        }
    }
    Ok(std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            let nabla = d_ups[a][b] - (0..N).map(|c| gamma[c][a][b] * ups[c]).sum::<f64>();
            p[a][b] - nabla + ups[a] * ups[b] - 0.5 * ups_sq * g[a][b]
        })
    }))
}

/// The structure `(Ω² g, P̂)`.
pub fn rescale_structure<const N: usize>(
    structure: &MobiusStructure<N>,
    rescaling: &ConformalRescaling<N>,
) -> Result<MobiusStructure<N>> {
    let metric = structure.metric.rescaled(rescaling.factor())?;
    let name = format!("{}~{}", structure.name, rescaling.label());
    let rho = match (&structure.rho, structure.metric.conformal_factor()) {
        (RhoField::Symbolic { p, .. }, Some(background)) => {
            symbolic_rho(transform_symbolic(p, background, rescaling.factor()))
        }
        _ => RhoField::Transformed { base: Arc::new(structure.clone()), rescaling: rescaling.clone() },
    };
    Ok(MobiusStructure {
        name,
        metric,
        rho,
        provenance: match structure.provenance {
            RhoProvenance::FlatModelTransform => RhoProvenance::FlatModelTransform,
            _ => RhoProvenance::Transformed,
        },
    })
}

/// `∇_c P_ab = ∂_c P_ab - Γ^d_ca P_db - Γ^d_cb P_ad`, indexed `[c][a][b]`.
pub fn rho_covariant_derivative<const N: usize>(structure: &MobiusStructure<N>, x: &Vector<N>) -> Result<Rank3<N>> {
    let p = structure.rho(x)?;
    let dp = structure.rho_gradient(x)?;
    let gamma = christoffel(structure.metric(), x)?;
    let mut out = [[[0.0; N]; N]; N];
    for c in 0..N {
        for a in 0..N {
            for b in 0..N {
                let mut s = dp[c][a][b];
                for d in 0..N {
                    s -= gamma[d][c][a] * p[d][b] + gamma[d][c][b] * p[a][d];
                }
                out[c][a][b] = s;
            }
        }
    }
    Ok(out)
}

/// `Y_abc = ∇_a P_bc - ∇_b P_ac`.
pub fn cotton_york<const N: usize>(structure: &MobiusStructure<N>, x: &Vector<N>) -> Result<Rank3<N>> {
    let np = rho_covariant_derivative(structure, x)?;
    Ok(std::array::from_fn(|a| std::array::from_fn(|b| std::array::from_fn(|c| np[a][b][c] - np[b][a][c]))))
}

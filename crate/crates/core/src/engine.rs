//! Integration of the three invariant curve equations.
//!
//! The state vector is `(x^a, U^a, A_a, J_a, κ)` in chart components, with
//! arc length `s` of the current gauge as the independent variable. Covariant
//! derivatives along the curve are turned into ordinary ones with
//! `dW_a/ds = DW_a/ds + Γ^c_ab U^b W_c` and `dU^a/ds = A^a - Γ^a_bc U^b U^c`.
//!
//! Reported residuals are scaled by the size of the quantities involved:
//! `|g(U,U) - 1|`, `|U·A| / (1 + |A|)`, `|U·J| / (1 + |J|)` and, for
//! loxodromes, `|null(lift)| / (1 + |lift|²)`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{k_two_form, transform_state, KinematicState, JERK_THRESHOLD};
use crate::mobius::{rescale_structure, ConformalRescaling, LocalGeometry, MobiusStructure};
use crate::tensor::{bilinear, contract, mat_vec, Vector};
use crate::tractor::{lift_velocity, null_quantity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// `∂A_a = P_ab U^b - (A·A + P_UU) U_a`
    Circle,
    /// Jerk, `κ` and the ordinal equation `∂κ = -½(A·A + κ²) - P_UU`.
    Loxodrome,
    /// `S_a = K_ab U^b`
    Dk4,
}

impl Model {
    pub fn uses_jerk(self) -> bool {
        !matches!(self, Model::Circle)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "rk4-fixed", alias = "rk4")]
    Rk4Fixed,
    #[serde(rename = "rk45-adaptive", alias = "rk45")]
    Rk45Adaptive,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" | "rk4-fixed" => Ok(Scheme::Rk4Fixed),
            "rk45" | "rk45-adaptive" => Ok(Scheme::Rk45Adaptive),
            other => Err(Error::Invalid(format!("unknown scheme `{other}` (expected rk4 or rk45)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    /// Fixed step for rk4; initial and largest step for rk45.
    pub step: f64,
    pub tol: f64,
    pub max_length: f64,
    pub drift_threshold: f64,
    pub renormalise: bool,
    pub chart_bound: f64,
    pub jerk_threshold: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Rk4Fixed,
            step: 1e-3,
            tol: 1e-9,
            max_length: 10.0,
            drift_threshold: 1e-6,
            renormalise: false,
            chart_bound: 1e6,
            jerk_threshold: JERK_THRESHOLD,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) {
            return Err(Error::Invalid(format!("step must be positive, got {}", self.step)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Invalid(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.max_length >= 0.0) || !self.max_length.is_finite() {
            return Err(Error::Invalid(format!("length must be finite and non-negative, got {}", self.max_length)));
        }
        if !(self.drift_threshold > 0.0) || !(self.chart_bound > 0.0) {
            return Err(Error::Invalid("drift threshold and chart bound must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum Termination {
    MaxLength,
    ConstraintDrift { s: f64, residual: f64 },
    DegenerateJerk { s: f64, norm: f64, x: Vec<f64> },
    ChartEscape { s: f64, x: Vec<f64> },
    EvaluationFailure { s: f64, message: String },
    StepUnderflow { s: f64, step: f64 },
}

impl Termination {
    pub fn is_complete(&self) -> bool {
        matches!(self, Termination::MaxLength)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Termination::MaxLength => "max-length",
            Termination::ConstraintDrift { .. } => "constraint-drift",
            Termination::DegenerateJerk { .. } => "degenerate-jerk",
            Termination::ChartEscape { .. } => "chart-escape",
            Termination::EvaluationFailure { .. } => "evaluation-failure",
            Termination::StepUnderflow { .. } => "step-underflow",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SampleResiduals {
    pub unit: f64,
    pub ortho_a: f64,
    pub ortho_j: Option<f64>,
    pub null: Option<f64>,
}

impl SampleResiduals {
    pub fn max(&self) -> f64 {
        self.unit.max(self.ortho_a).max(self.ortho_j.unwrap_or(0.0)).max(self.null.unwrap_or(0.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample<const N: usize> {
    pub s: f64,
    pub state: KinematicState<N>,
    pub residuals: SampleResiduals,
}

#[derive(Debug, Clone)]
pub struct CurveTrace<const N: usize> {
    pub model: Model,
    pub samples: Vec<TraceSample<N>>,
    pub termination: Termination,
}

impl<const N: usize> CurveTrace<N> {
    pub fn points(&self) -> Vec<Vector<N>> {
        self.samples.iter().map(|s| s.state.x).collect()
    }

    pub fn last(&self) -> &TraceSample<N> {
        self.samples.last().expect("a trace always has its initial sample")
    }

    pub fn max_residuals(&self) -> SampleResiduals {
        let mut m = SampleResiduals::default();
        for s in &self.samples {
            let r = s.residuals;
            m.unit = m.unit.max(r.unit);
            m.ortho_a = m.ortho_a.max(r.ortho_a);
            m.ortho_j = max_opt(m.ortho_j, r.ortho_j);
            m.null = max_opt(m.null, r.null);
        }
        m
    }
}

fn max_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// A curve equation on a Möbius structure, as a first-order system.
pub struct CurveSystem<'a, const N: usize> {
    pub model: Model,
    pub structure: &'a MobiusStructure<N>,
    /// When set, an extra component accumulates `∫ Ω ds`.
    pub rescaled_length: Option<&'a ConformalRescaling<N>>,
}

impl<'a, const N: usize> CurveSystem<'a, N> {
    pub fn new(model: Model, structure: &'a MobiusStructure<N>) -> Self {
        Self { model, structure, rescaled_length: None }
    }

    pub fn len(&self) -> usize {
        4 * N + 1 + usize::from(self.rescaled_length.is_some())
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn pack(&self, state: &KinematicState<N>) -> Vec<f64> {
        let mut y = Vec::with_capacity(self.len());
        y.extend_from_slice(&state.x);
        y.extend_from_slice(&state.u);
        y.extend_from_slice(&state.a);
        if self.model.uses_jerk() {
            y.extend_from_slice(&state.j);
        } else {
            y.extend(std::iter::repeat_n(0.0, N));
        }
        y.push(state.kappa.unwrap_or(0.0));
        if self.rescaled_length.is_some() {
            y.push(0.0);
        }
        y
    }

    pub fn unpack(&self, y: &[f64]) -> KinematicState<N> {
        let part = |k: usize| -> Vector<N> { std::array::from_fn(|i| y[k * N + i]) };
        KinematicState {
            x: part(0),
            u: part(1),
            a: part(2),
            j: part(3),
            kappa: (self.model == Model::Loxodrome).then_some(y[4 * N]),
            gauge: self.structure.name().to_string(),
        }
    }

    pub fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let st = self.unpack(y);
        let geo = self.structure.geometry(&st.x)?;
        let (u, a, j) = (&st.u, &st.a, &st.j);
        let a_up = mat_vec(&geo.g_inv, a);
        let u_low = mat_vec(&geo.g, u);
        let pu = mat_vec(&geo.p, u);
        let aa = contract(&a_up, a);
        let puu = contract(u, &pu);
        let gamma = &geo.gamma;
        let da: Vector<N> = match self.model {
            Model::Circle => std::array::from_fn(|i| pu[i] - (aa + puu) * u_low[i]),
            _ => std::array::from_fn(|i| j[i] - (aa + puu) * u_low[i] + pu[i]),
        };
        let aj = contract(&a_up, j);
        let dj: Vector<N> = match self.model {
            Model::Circle => [0.0; N],
            Model::Loxodrome => {
                let k = y[4 * N];
                std::array::from_fn(|i| -aj * u_low[i] - 2.0 * k * j[i])
            }
            Model::Dk4 => {
                let kf = k_two_form(self.structure, &st.x, u)?;
                let ku = mat_vec(&kf, u);
                std::array::from_fn(|i| -aj * u_low[i] + ku[i])
            }
        };
        for i in 0..N {
            dy[i] = u[i];
            let mut du = a_up[i];
            let mut dai = da[i];
            let mut dji = dj[i];
            for b in 0..N {
                for c in 0..N {
                    du -= gamma[i][b][c] * u[b] * u[c];
                    dai += gamma[c][i][b] * u[b] * a[c];
                    if self.model.uses_jerk() {
                        dji += gamma[c][i][b] * u[b] * j[c];
                    }
                }
            }
            dy[N + i] = du;
            dy[2 * N + i] = dai;
            dy[3 * N + i] = dji;
        }
        dy[4 * N] = match self.model {
            Model::Loxodrome => {
                let k = y[4 * N];
                -0.5 * (aa + k * k) - puu
            }
            _ => 0.0,
        };
        if let Some(r) = self.rescaled_length {
            dy[4 * N + 1] = r.omega(&st.x)?;
        }
        if dy.iter().any(|v| !v.is_finite()) {
            return Err(Error::Eval(crate::expr::EvalError::NonFinite));
        }
        Ok(())
    }

    pub fn residuals(&self, state: &KinematicState<N>, geo: &LocalGeometry<N>) -> SampleResiduals {
        let norm = |v: &Vector<N>| bilinear(&geo.g_inv, v, v).max(0.0).sqrt();
        let unit = (bilinear(&geo.g, &state.u, &state.u) - 1.0).abs();
        let ortho_a = contract(&state.u, &state.a).abs() / (1.0 + norm(&state.a));
        let ortho_j = self.model.uses_jerk().then(|| contract(&state.u, &state.j).abs() / (1.0 + norm(&state.j)));
        let null = match self.model {
            Model::Loxodrome => lift_velocity(state, &geo.g, &geo.g_inv).ok().map(|l| {
                let size = l.max_abs();
                null_quantity(&l, &geo.g_inv).abs() / (1.0 + size * size)
            }),
            _ => None,
        };
        SampleResiduals { unit, ortho_a, ortho_j, null }
    }

    /// Normalise `U` and project `A`, `J` orthogonal to it.
    fn renormalise(&self, y: &mut [f64]) -> Result<()> {
        let st = self.unpack(y);
        let g = self.structure.metric().metric(&st.x)?;
        let n = bilinear(&g, &st.u, &st.u).sqrt();
        let u: Vector<N> = std::array::from_fn(|i| st.u[i] / n);
        let u_low = mat_vec(&g, &u);
        let ua = contract(&u, &st.a);
        let uj = contract(&u, &st.j);
        for i in 0..N {
            y[N + i] = u[i];
            y[2 * N + i] = st.a[i] - ua * u_low[i];
            if self.model.uses_jerk() {
                y[3 * N + i] = st.j[i] - uj * u_low[i];
            }
        }
        Ok(())
    }
}

fn axpy(y: &[f64], h: f64, ks: &[(&[f64], f64)]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (k, c) in ks {
        if *c != 0.0 {
            for i in 0..out.len() {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

fn rk4_step<const N: usize>(sys: &CurveSystem<N>, y: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = y.len();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    sys.rhs(y, &mut k1)?;
    sys.rhs(&axpy(y, 0.5 * h, &[(&k1, 1.0)]), &mut k2)?;
    sys.rhs(&axpy(y, 0.5 * h, &[(&k2, 1.0)]), &mut k3)?;
    sys.rhs(&axpy(y, h, &[(&k3, 1.0)]), &mut k4)?;
    Ok(axpy(y, h / 6.0, &[(&k1, 1.0), (&k2, 2.0), (&k3, 2.0), (&k4, 1.0)]))
}

// Dormand–Prince 5(4)
const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// One Dormand–Prince step: the fifth-order solution and the scaled error.
fn dp_step<const N: usize>(sys: &CurveSystem<N>, y: &[f64], h: f64, tol: f64) -> Result<(Vec<f64>, f64)> {
    let n = y.len();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    sys.rhs(y, &mut k[0])?;
    let mut y5 = Vec::new();
    for stage in 0..6 {
        let terms: Vec<(&[f64], f64)> = (0..=stage).map(|i| (k[i].as_slice(), DP_A[stage][i])).collect();
        let yi = axpy(y, h, &terms);
        let mut ks = vec![0.0; n];
        sys.rhs(&yi, &mut ks)?;
        k[stage + 1] = ks;
        if stage == 5 {
            y5 = yi;
        }
    }
    let mut err: f64 = 0.0;
    for i in 0..n {
        let e: f64 = (0..7).map(|s| DP_E[s] * k[s][i]).sum::<f64>() * h;
        let sc = tol * (1.0 + y[i].abs().max(y5[i].abs()));
        err = err.max(e.abs() / sc);
    }
    Ok((y5, err))
}

struct Stepper<'s, 'a, const N: usize> {
    sys: &'s CurveSystem<'a, N>,
    config: IntegratorConfig,
    samples: Vec<TraceSample<N>>,
    raw: Vec<Vec<f64>>,
}

impl<'s, 'a, const N: usize> Stepper<'s, 'a, N> {
    /// Record an accepted state or report why integration must stop.
    fn accept(&mut self, s: f64, mut y: Vec<f64>) -> Option<Termination> {
        if self.config.renormalise {
            if let Err(e) = self.sys.renormalise(&mut y) {
                return Some(Termination::EvaluationFailure { s, message: e.to_string() });
            }
        }
        let state = self.sys.unpack(&y);
        if state.x.iter().any(|v| v.abs() > self.config.chart_bound) {
            return Some(Termination::ChartEscape { s, x: state.x.to_vec() });
        }
        let geo = match self.sys.structure.geometry(&state.x) {
            Ok(g) => g,
            Err(e) => return Some(Termination::EvaluationFailure { s, message: e.to_string() }),
        };
        let residuals = self.sys.residuals(&state, &geo);
        let drift = residuals.unit.max(residuals.ortho_a).max(residuals.ortho_j.unwrap_or(0.0));
        if !(drift <= self.config.drift_threshold) {
            return Some(Termination::ConstraintDrift { s, residual: drift });
        }
        let degenerate = (self.sys.model == Model::Loxodrome)
            .then(|| state.jerk_norm(&geo.g_inv))
            .filter(|norm| !(*norm >= self.config.jerk_threshold));
        let x = state.x;
        self.samples.push(TraceSample { s, state, residuals });
        self.raw.push(y);
        degenerate.map(|norm| Termination::DegenerateJerk { s, norm, x: x.to_vec() })
    }

    fn finish(self, model: Model, termination: Termination) -> (CurveTrace<N>, Vec<Vec<f64>>) {
        (CurveTrace { model, samples: self.samples, termination }, self.raw)
    }
}

/// Tolerance on the initial constraints.
pub const INITIAL_CONSTRAINT_TOL: f64 = 1e-10;

fn check_initial<const N: usize>(
    sys: &CurveSystem<N>,
    init: &KinematicState<N>,
    config: &IntegratorConfig,
) -> Result<()> {
    let g = sys.structure.metric().metric(&init.x)?;
    let r = init.residuals(&g);
    let ortho_j = if sys.model.uses_jerk() { r.ortho_j } else { 0.0 };
    let worst = r.unit.max(r.ortho_a).max(ortho_j);
    if !(worst <= INITIAL_CONSTRAINT_TOL) {
        return Err(Error::Invalid(format!(
            "initial data violates the constraints (|U|²-1 = {:.3e}, U·A = {:.3e}, U·J = {:.3e}; tolerance {INITIAL_CONSTRAINT_TOL:e})",
            r.unit, r.ortho_a, r.ortho_j
        )));
    }
    if sys.model == Model::Loxodrome && init.kappa.is_none() {
        return Err(Error::Invalid("loxodrome initial data needs `kappa`".into()));
    }
    if init.x.iter().any(|v| !(v.abs() <= config.chart_bound)) {
        return Err(Error::Invalid(format!("initial point {:?} lies outside the chart", init.x)));
    }
    Ok(())
}

fn run<const N: usize>(
    sys: &CurveSystem<N>,
    init: &KinematicState<N>,
    config: &IntegratorConfig,
) -> Result<(CurveTrace<N>, Vec<Vec<f64>>)> {
    config.validate()?;
    check_initial(sys, init, config)?;
    let mut stepper = Stepper {
        sys,
        config: IntegratorConfig { renormalise: false, ..*config },
        samples: Vec::new(),
        raw: Vec::new(),
    };
    if let Some(t) = stepper.accept(0.0, sys.pack(init)) {
        return Ok(stepper.finish(sys.model, t));
    }
    stepper.config.renormalise = config.renormalise;
    let total = config.max_length;
    let mut s = 0.0;
    let mut h = config.step;
    let min_step = 1e-13 * total.max(1.0);
    while s < total {
        let y = stepper.raw.last().expect("initial sample").clone();
        let remaining = total - s;
        let (h_used, y_new) = match config.scheme {
            Scheme::Rk4Fixed => {
                let h_used = if remaining < h * (1.0 + 1e-9) { remaining } else { h };
                match rk4_step(sys, &y, h_used) {
                    Ok(v) => (h_used, v),
                    Err(e) => {
                        return Ok(
                            stepper.finish(sys.model, Termination::EvaluationFailure { s, message: e.to_string() })
                        )
                    }
                }
            }
            Scheme::Rk45Adaptive => {
                let mut accepted = None;
                while accepted.is_none() {
                    let h_try = h.min(remaining).min(config.step);
                    if h_try < min_step && h_try < remaining {
                        return Ok(stepper.finish(sys.model, Termination::StepUnderflow { s, step: h_try }));
                    }
                    match dp_step(sys, &y, h_try, config.tol) {
                        Ok((y5, err)) if err <= 1.0 => {
                            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                            h = h_try * grow;
                            accepted = Some((h_try, y5));
                        }
                        Ok((_, err)) => h = h_try * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9),
                        Err(_) => h = h_try * 0.25,
                    }
                }
                accepted.expect("loop exits with a step")
            }
        };
        let s_new = if remaining - h_used <= 1e-12 * total.max(1.0) { total } else { s + h_used };
        if let Some(t) = stepper.accept(s_new, y_new) {
            return Ok(stepper.finish(sys.model, t));
        }
        s = s_new;
    }
    Ok(stepper.finish(sys.model, Termination::MaxLength))
}

/// Integrate `model` on `structure` from `init` for `config.max_length`
/// units of arc length.
pub fn integrate<const N: usize>(
    model: Model,
    structure: &MobiusStructure<N>,
    init: &KinematicState<N>,
    config: &IntegratorConfig,
) -> Result<CurveTrace<N>> {
    let sys = CurveSystem::new(model, structure);
    Ok(run(&sys, init, config)?.0)
}

/// Integrate with rk4 and report the samples at the given arc lengths, taking
/// substeps no longer than `max_step`.
pub fn integrate_on_grid<const N: usize>(
    model: Model,
    structure: &MobiusStructure<N>,
    init: &KinematicState<N>,
    grid: &[f64],
    max_step: f64,
    config: &IntegratorConfig,
) -> Result<CurveTrace<N>> {
    let sys = CurveSystem::new(model, structure);
    check_initial(&sys, init, config)?;
    let mut stepper = Stepper { sys: &sys, config: *config, samples: Vec::new(), raw: Vec::new() };
    let s0 = grid.first().copied().unwrap_or(0.0);
    if let Some(t) = stepper.accept(s0, sys.pack(init)) {
        return Ok(stepper.finish(model, t).0);
    }
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let n = (((b - a) / max_step) - 1e-9).ceil().max(1.0) as usize;
        let h = (b - a) / n as f64;
        let mut y = stepper.raw.last().expect("initial sample").clone();
        for _ in 0..n {
            y = match rk4_step(&sys, &y, h) {
                Ok(v) => v,
                Err(e) => {
                    return Ok(stepper.finish(model, Termination::EvaluationFailure { s: a, message: e.to_string() }).0)
                }
            };
        }
        if let Some(t) = stepper.accept(b, y) {
            return Ok(stepper.finish(model, t).0);
        }
    }
    Ok(stepper.finish(model, Termination::MaxLength).0)
}

// ---------------------------------------------------------------------------
// Trace comparison

/// Uniform grid over the segments of a polyline.
struct SegmentIndex<'p, const N: usize> {
    points: &'p [Vector<N>],
    cell: f64,
    cells: HashMap<[i64; N], Vec<usize>>,
    extent: i64,
}

fn point_segment_distance<const N: usize>(p: &Vector<N>, a: &Vector<N>, b: &Vector<N>) -> f64 {
    let mut ab2 = 0.0;
    let mut ap_ab = 0.0;
    for i in 0..N {
        ab2 += (b[i] - a[i]).powi(2);
        ap_ab += (p[i] - a[i]) * (b[i] - a[i]);
    }
    let t = if ab2 > 0.0 { (ap_ab / ab2).clamp(0.0, 1.0) } else { 0.0 };
    (0..N).map(|i| (p[i] - (a[i] + t * (b[i] - a[i]))).powi(2)).sum::<f64>().sqrt()
}

impl<'p, const N: usize> SegmentIndex<'p, N> {
    fn new(points: &'p [Vector<N>]) -> Self {
        let mut lens: Vec<f64> = points
            .windows(2)
            .map(|w| (0..N).map(|i| (w[1][i] - w[0][i]).powi(2)).sum::<f64>().sqrt())
            .filter(|l| *l > 0.0)
            .collect();
        lens.sort_by(f64::total_cmp);
        let cell = lens.get(lens.len() / 2).copied().unwrap_or(1.0).max(1e-12) * 4.0;
        let key = |p: &Vector<N>| -> [i64; N] { std::array::from_fn(|i| (p[i] / cell).floor() as i64) };
        let mut cells: HashMap<[i64; N], Vec<usize>> = HashMap::new();
        let mut lo = [i64::MAX; N];
        let mut hi = [i64::MIN; N];
        let segs = points.len().saturating_sub(1).max(usize::from(!points.is_empty()));
        for s in 0..segs {
            let (a, b) = (&points[s], &points[(s + 1).min(points.len() - 1)]);
            let (ka, kb) = (key(a), key(b));
            let kmin: [i64; N] = std::array::from_fn(|i| ka[i].min(kb[i]));
            let kmax: [i64; N] = std::array::from_fn(|i| ka[i].max(kb[i]));
            for i in 0..N {
                lo[i] = lo[i].min(kmin[i]);
                hi[i] = hi[i].max(kmax[i]);
            }
            let mut k = kmin;
            loop {
                cells.entry(k).or_default().push(s);
                let mut d = 0;
                while d < N {
                    k[d] += 1;
                    if k[d] <= kmax[d] {
                        break;
                    }
                    k[d] = kmin[d];
                    d += 1;
                }
                if d == N {
                    break;
                }
            }
        }
        let extent = (0..N).map(|i| hi[i] - lo[i]).max().unwrap_or(0) + 2;
        Self { points, cell, cells, extent }
    }

    fn segment(&self, s: usize) -> (&Vector<N>, &Vector<N>) {
        (&self.points[s], &self.points[(s + 1).min(self.points.len() - 1)])
    }

    fn distance(&self, p: &Vector<N>) -> f64 {
        let centre: [i64; N] = std::array::from_fn(|i| (p[i] / self.cell).floor() as i64);
        let mut best = f64::INFINITY;
        let mut r: i64 = 0;
        loop {
            // all cells at Chebyshev distance r from the centre cell
            let mut off = [-r; N];
            loop {
                if off.iter().any(|o| o.abs() == r) {
                    let k: [i64; N] = std::array::from_fn(|i| centre[i] + off[i]);
                    if let Some(list) = self.cells.get(&k) {
                        for &s in list {
                            let (a, b) = self.segment(s);
                            best = best.min(point_segment_distance(p, a, b));
                        }
                    }
                }
                let mut d = 0;
                while d < N {
                    off[d] += 1;
                    if off[d] <= r {
                        break;
                    }
                    off[d] = -r;
                    d += 1;
                }
                if d == N {
                    break;
                }
            }
            if best <= r as f64 * self.cell {
                return best;
            }
            r += 1;
            if r > self.extent + (best / self.cell).ceil().min(1e6) as i64 {
                // the point is far from the whole polyline
                return (0..self.points.len().saturating_sub(1).max(1))
                    .map(|s| {
                        let (a, b) = self.segment(s);
                        point_segment_distance(p, a, b)
                    })
                    .fold(best, f64::min);
            }
        }
    }
}

/// Largest distance from a vertex of `a` to the polyline `b`.
pub fn directed_distance<const N: usize>(a: &[Vector<N>], b: &[Vector<N>]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.is_empty() { 0.0 } else { f64::INFINITY };
    }
    let index = SegmentIndex::new(b);
    a.iter().map(|p| index.distance(p)).fold(0.0, f64::max)
}

/// Symmetric point-to-polyline distance between two traces.
pub fn trace_distance<const N: usize>(a: &[Vector<N>], b: &[Vector<N>]) -> f64 {
    directed_distance(a, b).max(directed_distance(b, a))
}

// ---------------------------------------------------------------------------
// Invariance experiment

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LawResiduals {
    pub u: f64,
    pub a: f64,
    pub j: f64,
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct InvarianceReport<const N: usize> {
    pub trace_distance: f64,
    pub laws: LawResiduals,
    pub original: CurveTrace<N>,
    pub rescaled: CurveTrace<N>,
}

/// Integrate the same curve in gauge `g` and in gauge `Ω² g`, starting from
/// transformed initial data, and compare.
///
/// The `ĝ` run is sampled at the `ĝ`-arc lengths `ŝ_i = ∫ Ω ds` of the `g`
/// samples, accumulated alongside the `g` run, so sample `i` of both traces
/// is the same point of the curve.
pub fn invariance_experiment<const N: usize>(
    model: Model,
    structure: &MobiusStructure<N>,
    rescaling: &ConformalRescaling<N>,
    init: &KinematicState<N>,
    config: &IntegratorConfig,
) -> Result<InvarianceReport<N>> {
    let mut sys = CurveSystem::new(model, structure);
    if !rescaling.is_identity() {
        sys.rescaled_length = Some(rescaling);
    }
    let (original, raw) = run(&sys, init, config)?;
    let grid: Vec<f64> = if rescaling.is_identity() {
        original.samples.iter().map(|s| s.s).collect()
    } else {
        raw.iter().map(|y| y[4 * N + 1]).collect()
    };
    let hat = rescale_structure(structure, rescaling)?;
    let g0 = structure.metric().metric(&init.x)?;
    let init_hat = transform_state(init, rescaling, &g0, hat.name())?;
    let rescaled = integrate_on_grid(model, &hat, &init_hat, &grid, config.step, config)?;
    let mut laws = LawResiduals { kappa: (model == Model::Loxodrome).then_some(0.0), ..Default::default() };
    for (a, b) in original.samples.iter().zip(&rescaled.samples) {
        let g = structure.metric().metric(&a.state.x)?;
        let mapped = transform_state(&a.state, rescaling, &g, hat.name())?;
        let diff = |p: &Vector<N>, q: &Vector<N>| (0..N).map(|i| (p[i] - q[i]).abs()).fold(0.0, f64::max);
        laws.u = laws.u.max(diff(&mapped.u, &b.state.u));
        laws.a = laws.a.max(diff(&mapped.a, &b.state.a));
        if model.uses_jerk() {
            laws.j = laws.j.max(diff(&mapped.j, &b.state.j));
        }
        if let (Some(k), Some(x), Some(y)) = (laws.kappa, mapped.kappa, b.state.kappa) {
            laws.kappa = Some(k.max((x - y).abs()));
        }
    }
    let trace_distance = trace_distance(&original.points(), &rescaled.points());
    Ok(InvarianceReport { trace_distance, laws, original, rescaled })
}

// ---------------------------------------------------------------------------
// Diagnostics on traces

/// Total signed angle swept by the points as seen from `centre` (2D charts).
pub fn winding_angle(points: &[Vector<2>], centre: &Vector<2>) -> f64 {
    let mut total = 0.0;
    for w in points.windows(2) {
        let a = (w[0][1] - centre[1]).atan2(w[0][0] - centre[0]);
        let b = (w[1][1] - centre[1]).atan2(w[1][0] - centre[0]);
        let mut d = b - a;
        while d > std::f64::consts::PI {
            d -= 2.0 * std::f64::consts::PI;
        }
        while d < -std::f64::consts::PI {
            d += 2.0 * std::f64::consts::PI;
        }
        total += d;
    }
    total
}

/// Ratio of successive endpoint differences under step halving with rk4,
/// `|x(h) - x(h/2)| / |x(h/2) - x(h/4)|`; about 16 for a fourth-order method.
pub fn rk4_convergence_ratio<const N: usize>(
    model: Model,
    structure: &MobiusStructure<N>,
    init: &KinematicState<N>,
    length: f64,
    step: f64,
) -> Result<f64> {
    let end = |h: f64| -> Result<Vec<f64>> {
        let config = IntegratorConfig {
            scheme: Scheme::Rk4Fixed,
            step: h,
            max_length: length,
            drift_threshold: 1.0,
            ..Default::default()
        };
        let sys = CurveSystem::new(model, structure);
        let (trace, raw) = run(&sys, init, &config)?;
        if !trace.termination.is_complete() {
            return Err(Error::Invalid(format!("convergence run stopped: {}", trace.termination.name())));
        }
        Ok(raw.last().expect("samples").clone())
    };
    let (a, b, c) = (end(step)?, end(step / 2.0)?, end(step / 4.0)?);
    let dist = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    Ok(dist(&a, &b) / dist(&b, &c))
}

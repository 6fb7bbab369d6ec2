//! Seeded property suites.
//!
//! Each check draws its samples from a ChaCha8 stream derived from the seed
//! and the check name, evaluates them in parallel and keeps the worst
//! residual. Reports are deterministic for a fixed seed.

use std::f64::consts::PI;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{invariance_experiment, IntegratorConfig, Model, Scheme};
use crate::error::{Error, Result};
use crate::expr::{Expr, Func, Var};
use crate::flat_model::{classify, KillingCoefficients, LoxodromeSpec};
use crate::kinematics::{jet_from_curve, transform_state, KinematicState};
use crate::mobius::{cotton_york, rescale_structure, rho_transform, schouten, ConformalRescaling, MobiusStructure};
use crate::tensor::{bilinear, contract, mat_vec, Matrix, MetricField, Vector};
use crate::tractor::{
    bundle_b_derivatives, bundle_b_residual, bundle_b_sections, connection_apply, discriminant, killing_field,
    killing_split, lift_derivative, lift_velocity, transform, AdjointTractor,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Transforms,
    Tractor,
    FlatModel,
    Invariance,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Transforms => "transforms",
            Suite::Tractor => "tractor",
            Suite::FlatModel => "flat-model",
            Suite::Invariance => "invariance",
            Suite::All => "all",
        }
    }

    fn members(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![Suite::Transforms, Suite::Tractor, Suite::FlatModel, Suite::Invariance],
            s => vec![s],
        }
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "transforms" => Suite::Transforms,
            "tractor" => Suite::Tractor,
            "flat-model" => Suite::FlatModel,
            "invariance" => Suite::Invariance,
            "all" => Suite::All,
            other => {
                return Err(Error::Invalid(format!(
                    "unknown suite `{other}` (expected transforms, tractor, flat-model, invariance or all)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    pub anchor: &'static str,
    pub samples: usize,
    pub tolerance: f64,
    pub observed: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub suite: &'static str,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub const DEFAULT_SAMPLES: usize = 200;

pub fn run(suite: Suite, seed: u64) -> Report {
    let mut checks = Vec::new();
    for s in suite.members() {
        checks.extend(match s {
            Suite::Transforms => transforms_suite(seed),
            Suite::Tractor => tractor_suite(seed, DEFAULT_SAMPLES),
            Suite::FlatModel => flat_model_suite(seed, DEFAULT_SAMPLES),
            Suite::Invariance => invariance_suite(),
            Suite::All => unreachable!("expanded above"),
        });
    }
    Report { suite: suite.name(), seed, passed: checks.iter().all(|c| c.passed), checks }
}

fn name_hash(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// Independent generator for sample `index` of the check `name`.
pub fn sample_rng(seed: u64, name: &str, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ name_hash(name));
    rng.set_stream(index as u64);
    rng
}

/// Evaluate `f` on `samples` seeded draws and keep the largest residual.
pub fn check<F>(
    suite: &'static str,
    name: &'static str,
    anchor: &'static str,
    tolerance: f64,
    seed: u64,
    samples: usize,
    f: F,
) -> Check
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    let results: Vec<Result<f64>> = (0..samples).into_par_iter().map(|i| f(&mut sample_rng(seed, name, i))).collect();
    let mut observed: f64 = 0.0;
    let mut error = None;
    for r in results {
        match r {
            Ok(v) if v.is_finite() => observed = observed.max(v),
            Ok(v) => {
                observed = f64::NAN;
                error.get_or_insert_with(|| format!("non-finite residual {v}"));
            }
            Err(e) => {
                observed = f64::NAN;
                error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    Check { suite, name, anchor, samples, tolerance, observed, passed: error.is_none() && observed <= tolerance, error }
}

// ---------------------------------------------------------------------------
// Random objects

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}

/// A point in the disc of radius `r`.
pub fn random_point(rng: &mut ChaCha8Rng, r: f64) -> Vector<2> {
    let rad = r * uniform(rng, 0.0, 1.0).sqrt();
    let th = uniform(rng, 0.0, 2.0 * PI);
    [rad * th.cos(), rad * th.sin()]
}

/// `exp(c₀ + c₁x + c₂y + c₃xy + c₄(x² + y²))`
fn exp_quadratic(c: [f64; 5]) -> Expr {
    let (x, y) = (Expr::var(Var::X), Expr::var(Var::Y));
    let arg = Expr::num(c[0])
        .add(Expr::num(c[1]).mul(x.clone()))
        .add(Expr::num(c[2]).mul(y.clone()))
        .add(Expr::num(c[3]).mul(x.clone().mul(y.clone())))
        .add(Expr::num(c[4]).mul(x.sqr().add(y.sqr())));
    Expr::call(Func::Exp, arg)
}

pub fn random_rescaling(rng: &mut ChaCha8Rng) -> ConformalRescaling<2> {
    let c = [
        uniform(rng, -0.5, 0.5),
        uniform(rng, -0.6, 0.6),
        uniform(rng, -0.6, 0.6),
        uniform(rng, -0.3, 0.3),
        uniform(rng, -0.3, 0.3),
    ];
    ConformalRescaling::new(exp_quadratic(c)).expect("two-variable factor")
}

/// One of: flat, sphere, hyperbolic or a random isothermal metric, each with
/// the flat-model Rho transported into it.
pub fn random_structure(rng: &mut ChaCha8Rng) -> MobiusStructure<2> {
    let metric = match rng.gen_range(0..4) {
        0 => MetricField::flat(),
        1 => MetricField::sphere(uniform(rng, 0.3, 2.0)).expect("positive curvature"),
        2 => MetricField::hyperbolic(-uniform(rng, 0.3, 1.2)).expect("negative curvature"),
        _ => {
            let c = [
                uniform(rng, -0.3, 0.3),
                uniform(rng, -0.4, 0.4),
                uniform(rng, -0.4, 0.4),
                uniform(rng, -0.2, 0.2),
                uniform(rng, -0.2, 0.2),
            ];
            MetricField::isothermal(exp_quadratic(c)).expect("two-variable factor")
        }
    };
    MobiusStructure::flat_model(metric).expect("conformally flat metric")
}

/// A unit vector for `g` and two vectors orthogonal to it.
fn constrained_triple(rng: &mut ChaCha8Rng, g: &Matrix<2>, scale: f64) -> (Vector<2>, Vector<2>, Vector<2>) {
    let th = uniform(rng, 0.0, 2.0 * PI);
    let v = [th.cos(), th.sin()];
    let n = bilinear(g, &v, &v).sqrt();
    let u = [v[0] / n, v[1] / n];
    let u_low = mat_vec(g, &u);
    let project = |rng: &mut ChaCha8Rng| -> Vector<2> {
        let w = [uniform(rng, -scale, scale), uniform(rng, -scale, scale)];
        let c = contract(&u, &w);
        [w[0] - c * u_low[0], w[1] - c * u_low[1]]
    };
    let a = project(rng);
    let j = project(rng);
    (u, a, j)
}

/// A random state in `structure` with `|U| = 1`, `A ⊥ U`, `J ⊥ U` and a
/// random `κ`.
pub fn random_state(rng: &mut ChaCha8Rng, structure: &MobiusStructure<2>) -> Result<KinematicState<2>> {
    let x = random_point(rng, 0.6);
    let g = structure.metric().metric(&x)?;
    let (u, a, j) = constrained_triple(rng, &g, 2.0);
    let kappa = uniform(rng, -2.0, 2.0);
    Ok(KinematicState::new(x, u, a, structure.name()).with_jerk(j, Some(kappa)))
}

pub fn random_tractor(rng: &mut ChaCha8Rng, gauge: &str) -> AdjointTractor<2> {
    let mut r = || uniform(rng, -1.0, 1.0);
    let m = r();
    let t = AdjointTractor::new([r(), r()], [[0.0, m], [-m, 0.0]], r(), [r(), r()], gauge);
    let w = rng.gen_range(-2..=2);
    t.with_weight(w)
}

pub fn random_killing(rng: &mut ChaCha8Rng) -> KillingCoefficients {
    let mut r = || uniform(rng, -1.0, 1.0);
    KillingCoefficients { u: r(), v: r(), lambda: r(), f: r(), p: r(), q: r() }
}

pub fn random_loxodrome(rng: &mut ChaCha8Rng) -> LoxodromeSpec {
    let p = Complex64::new(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
    let q = loop {
        let q = Complex64::new(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
        if (q - p).norm() > 0.2 {
            break q;
        }
    };
    let beta = uniform(rng, 0.2, 4.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    LoxodromeSpec::new(p, q, beta).expect("distinct endpoints and non-zero bearing")
}

// ---------------------------------------------------------------------------
// Tractor identities, shared with the integration tests

fn rescaled_pair(
    rng: &mut ChaCha8Rng,
) -> Result<(MobiusStructure<2>, ConformalRescaling<2>, MobiusStructure<2>, KinematicState<2>, KinematicState<2>)> {
    let s = random_structure(rng);
    let r = random_rescaling(rng);
    let hat = rescale_structure(&s, &r)?;
    let state = random_state(rng, &s)?;
    let g = s.metric().metric(&state.x)?;
    let state_hat = transform_state(&state, &r, &g, hat.name())?;
    Ok((s, r, hat, state, state_hat))
}

/// Transforming twice agrees with transforming once by the product.
pub fn tractor_cocycle_residual(rng: &mut ChaCha8Rng) -> Result<f64> {
    let s = random_structure(rng);
    let (r1, r2) = (random_rescaling(rng), random_rescaling(rng));
    let x = random_point(rng, 0.6);
    let t = random_tractor(rng, s.name());
    let mid = rescale_structure(&s, &r1)?;
    let twice = transform(&transform(&t, &s, &r1, &x)?, &mid, &r2, &x)?;
    let once = transform(&t, &s, &r1.then(&r2), &x)?;
    Ok(twice.distance(&once) / (1.0 + once.max_abs()))
}

/// `Φ` is invariant and `Ψ̂ = Ψ + (Û·Υ) Φ̂`.
pub fn direct_check_residual(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (s, r, hat, st, st_hat) = rescaled_pair(rng)?;
    let x = st.x;
    let g = s.metric().metric(&x)?;
    let g_hat = hat.metric().metric(&x)?;
    let [phi, psi, _] = bundle_b_sections(&st, &g);
    let [phi_h, psi_h, _] = bundle_b_sections(&st_hat, &g_hat);
    let uy = contract(&st_hat.u, &r.upsilon(&x)?);
    let e1 = transform(&phi, &s, &r, &x)?.distance(&phi_h);
    let e2 = transform(&psi, &s, &r, &x)?.distance(&(psi_h - phi_h * uy));
    Ok(e1.max(e2))
}

/// The transformation of `Ξ` stays inside `span(Φ, Ψ, Ξ)` with the stated
/// coefficients.
pub fn bundle_b_transform_residual(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (s, r, hat, st, st_hat) = rescaled_pair(rng)?;
    let x = st.x;
    let g = s.metric().metric(&x)?;
    let g_inv = s.metric().inverse_metric(&x)?;
    let omega = r.omega(&x)?;
    let ups = r.upsilon(&x)?;
    let g_hat = hat.metric().metric(&x)?;
    let [_, _, xi] = bundle_b_sections(&st, &g);
    let [phi_h, psi_h, xi_h] = bundle_b_sections(&st_hat, &g_hat);
    let uy = contract(&st.u, &ups);
    let ay = bilinear(&g_inv, &st.a, &ups);
    let yy = bilinear(&g_inv, &ups, &ups);
    let rhs = xi_h + psi_h * (uy / omega) - phi_h * ((ay + uy * uy - 0.5 * yy) / (omega * omega));
    Ok(transform(&xi, &s, &r, &x)?.distance(&rhs))
}

/// `∂Ψ = (0,0,0,J) - Ξ - (A·A + P_UU) Φ`.
pub fn partial_psi_residual(rng: &mut ChaCha8Rng) -> Result<f64> {
    let s = random_structure(rng);
    let st = random_state(rng, &s)?;
    let geo = s.geometry(&st.x)?;
    let [phi, _, xi] = bundle_b_sections(&st, &geo.g);
    let [_, d_psi, _] = bundle_b_derivatives(&st, &geo);
    let aa = bilinear(&geo.g_inv, &st.a, &st.a);
    let puu = bilinear(&geo.p, &st.u, &st.u);
    let rhs = AdjointTractor::bottom(st.j, st.gauge.clone()) - xi - phi * (aa + puu);
    Ok(d_psi.distance(&rhs))
}

/// `∂Ξ = (0, 2U_[b J_c], 0, 0) + P_UU Ψ - P(U, A) Φ`.
pub fn partial_xi_residual(rng: &mut ChaCha8Rng) -> Result<f64> {
    let s = random_structure(rng);
    let st = random_state(rng, &s)?;
    let geo = s.geometry(&st.x)?;
    let [phi, psi, _] = bundle_b_sections(&st, &geo.g);
    let [_, _, d_xi] = bundle_b_derivatives(&st, &geo);
    let u_low = mat_vec(&geo.g, &st.u);
    let uj: Matrix<2> = std::array::from_fn(|b| std::array::from_fn(|c| u_low[b] * st.j[c] - u_low[c] * st.j[b]));
    let puu = bilinear(&geo.p, &st.u, &st.u);
    let a_up = mat_vec(&geo.g_inv, &st.a);
    let pua = bilinear(&geo.p, &st.u, &a_up);
    let rhs = AdjointTractor::new([0.0; 2], uj, 0.0, [0.0; 2], st.gauge.clone()) + psi * puu - phi * pua;
    Ok(d_xi.distance(&rhs))
}

/// `∂L = (∂κ + ½(A·A + κ²) + P_UU)(0,0,1,A - κU) - κL` for an arbitrary `∂κ`.
pub fn apply_partial_residual(rng: &mut ChaCha8Rng) -> Result<f64> {
    let s = random_structure(rng);
    let st = random_state(rng, &s)?;
    let geo = s.geometry(&st.x)?;
    let k = st.kappa.expect("random states carry kappa");
    let dk = uniform(rng, -3.0, 3.0);
    let lift = lift_velocity(&st, &geo.g, &geo.g_inv)?;
    let d_lift = lift_derivative(&st, dk, &geo)?;
    let aa = bilinear(&geo.g_inv, &st.a, &st.a);
    let puu = bilinear(&geo.p, &st.u, &st.u);
    let u_low = mat_vec(&geo.g, &st.u);
    let bracket = dk + 0.5 * (aa + k * k) + puu;
    let mut line = AdjointTractor::bottom(std::array::from_fn(|b| st.a[b] - k * u_low[b]), st.gauge.clone());
    line.nu = 1.0;
    let rhs = line * bracket - lift.clone() * k;
    Ok(d_lift.distance(&rhs) / (1.0 + rhs.max_abs()))
}

/// The velocity lift is carried to the lift of the transformed state.
pub fn lift_equivariance_residual(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (s, r, hat, st, st_hat) = rescaled_pair(rng)?;
    let x = st.x;
    let geo = s.geometry(&x)?;
    let geo_hat = hat.geometry(&x)?;
    let lift = lift_velocity(&st, &geo.g, &geo.g_inv)?;
    let lift_hat = lift_velocity(&st_hat, &geo_hat.g, &geo_hat.g_inv)?;
    let mapped = transform(&lift, &s, &r, &x)?;
    Ok(mapped.distance(&lift_hat) / (1.0 + lift_hat.max_abs()))
}

/// `bundle_b_residual` against `|J|_g`.
pub fn bundle_b_norm_residual(rng: &mut ChaCha8Rng) -> Result<f64> {
    let s = random_structure(rng);
    let st = random_state(rng, &s)?;
    let geo = s.geometry(&st.x)?;
    Ok((bundle_b_residual(&st, &geo) - st.jerk_norm(&geo.g_inv)).abs())
}

// ---------------------------------------------------------------------------
// Suites

const TRANSFORMS: &str = "transforms";

fn transforms_suite(seed: u64) -> Vec<Check> {
    vec![
        check(TRANSFORMS, "rho-cocycle", "Rho transformation law composes", 1e-9, seed, 50, |rng| {
            let s = random_structure(rng);
            let (r1, r2) = (random_rescaling(rng), random_rescaling(rng));
            let x = random_point(rng, 0.6);
            let twice = rescale_structure(&rescale_structure(&s, &r1)?, &r2)?;
            let once = rescale_structure(&s, &r1.then(&r2))?;
            let (a, b) = (twice.rho(&x)?, once.rho(&x)?);
            Ok(matrix_distance(&a, &b) / (1.0 + max_entry(&b)))
        }),
        check(TRANSFORMS, "state-round-trip", "transformation laws of U, A, J and kappa", 1e-10, seed, 200, |rng| {
            let (s, r, hat, st, st_hat) = rescaled_pair(rng)?;
            let g_hat = hat.metric().metric(&st.x)?;
            let back = transform_state(&st_hat, &r.inverse(), &g_hat, s.name())?;
            Ok(state_distance(&back, &st))
        }),
        check(TRANSFORMS, "sphere-rho", "Rho of the round sphere is half the metric", 1e-9, seed, 50, |rng| {
            let s = MobiusStructure::flat_model(MetricField::flat())?;
            let hat = rescale_structure(&s, &ConformalRescaling::stereographic())?;
            let x = random_point(rng, 2.0);
            let g = hat.metric().metric(&x)?;
            let half: Matrix<2> = std::array::from_fn(|a| std::array::from_fn(|b| 0.5 * g[a][b]));
            Ok(matrix_distance(&hat.rho(&x)?, &half))
        }),
        check(
            TRANSFORMS,
            "schouten-3d",
            "Schouten tensor obeys the Rho law in dimension three",
            1e-7,
            seed,
            8,
            |rng| {
                let c: Vec<f64> = (0..4).map(|_| uniform(rng, -0.2, 0.2)).collect();
                let (x, y, z) = (Expr::var(Var::X), Expr::var(Var::Y), Expr::var(Var::Z));
                let omega = Expr::call(
                    Func::Exp,
                    Expr::num(c[0])
                        .mul(x.clone())
                        .add(Expr::num(c[1]).mul(y.clone().mul(z.clone())))
                        .add(Expr::num(c[2]).mul(z.sqr())),
                );
                let m = MetricField::<3>::isothermal(omega)?;
                let r = ConformalRescaling::<3>::new(Expr::call(
                    Func::Exp,
                    Expr::num(c[3]).mul(x.sqr()).add(Expr::num(0.1).mul(y)),
                ))?;
                let p = [uniform(rng, -0.4, 0.4), uniform(rng, -0.4, 0.4), uniform(rng, -0.4, 0.4)];
                let lhs = rho_transform(&schouten(&m, &p)?, &r, &m, &p)?;
                let rhs = schouten(&m.rescaled(r.factor())?, &p)?;
                Ok(matrix_distance(&lhs, &rhs))
            },
        ),
        check(
            TRANSFORMS,
            "cotton-york-invariance",
            "Cotton-York tensor is invariant in dimension two",
            1e-8,
            seed,
            20,
            |rng| {
                let c: Vec<f64> = (0..4).map(|_| uniform(rng, -1.0, 1.0)).collect();
                let (x, y) = (Expr::var(Var::X), Expr::var(Var::Y));
                let p11 = Expr::num(c[0]).mul(x.clone().sqr()).add(Expr::num(c[1]).mul(y.clone()));
                let p12 = Expr::num(c[2]).mul(x.clone().mul(y.clone())).add(Expr::num(c[3]).mul(x));
                let s = MobiusStructure::user(MetricField::flat(), [[p11.clone(), p12.clone()], [p12, p11.neg()]])?;
                let r = random_rescaling(rng);
                let hat = rescale_structure(&s, &r)?;
                let pt = random_point(rng, 0.6);
                let (a, b) = (cotton_york(&s, &pt)?, cotton_york(&hat, &pt)?);
                Ok(a.iter()
                    .flatten()
                    .flatten()
                    .zip(b.iter().flatten().flatten())
                    .map(|(p, q)| (p - q).abs())
                    .fold(0.0, f64::max))
            },
        ),
        check(
            TRANSFORMS,
            "curve-jet-laws",
            "jets of one curve in two gauges obey the transformation laws",
            1e-8,
            seed,
            40,
            |rng| {
                let t = Expr::var(Var::T);
                let mut coeff = || uniform(rng, -0.5, 0.5);
                let curve = [
                    t.clone()
                        .add(Expr::num(coeff()).mul(t.clone().sqr()))
                        .add(Expr::num(coeff()).mul(t.clone().pow(3.0))),
                    Expr::num(coeff())
                        .mul(t.clone())
                        .add(Expr::num(coeff()).mul(t.clone().sqr()))
                        .add(Expr::num(coeff()).mul(t.clone().pow(4.0))),
                ];
                let s = random_structure(rng);
                let r = random_rescaling(rng);
                let hat = rescale_structure(&s, &r)?;
                let t0 = uniform(rng, -0.3, 0.3);
                let (jet, jet_hat) = (jet_from_curve(&curve, &s, t0)?, jet_from_curve(&curve, &hat, t0)?);
                let g = s.metric().metric(&jet.state.x)?;
                let mapped = transform_state(&jet.state, &r, &g, hat.name())?;
                let kappa = (mapped.kappa_or_err(&g)? - jet_hat.kappa()?).abs();
                Ok(state_distance(&mapped, &jet_hat.state).max(kappa) / (1.0 + jet.jerk_norm))
            },
        ),
    ]
}

const TRACTOR: &str = "tractor";

pub fn tractor_suite(seed: u64, samples: usize) -> Vec<Check> {
    vec![
        check(
            TRACTOR,
            "adjoint-cocycle",
            "adjoint tractor transformation law composes",
            1e-9,
            seed,
            samples,
            tractor_cocycle_residual,
        ),
        check(
            TRACTOR,
            "direct-check",
            "Phi invariant and Psi shifted by Phi",
            1e-9,
            seed,
            samples,
            direct_check_residual,
        ),
        check(
            TRACTOR,
            "bundle-b-transform",
            "rank three bundle is invariant",
            1e-9,
            seed,
            samples,
            bundle_b_transform_residual,
        ),
        check(TRACTOR, "partial-psi", "curve derivative of Psi", 1e-9, seed, samples, partial_psi_residual),
        check(TRACTOR, "partial-xi", "curve derivative of Xi", 1e-9, seed, samples, partial_xi_residual),
        check(
            TRACTOR,
            "apply-partial",
            "curve derivative of the velocity lift",
            1e-9,
            seed,
            samples,
            apply_partial_residual,
        ),
        check(
            TRACTOR,
            "lift-equivariance",
            "velocity lift is invariantly defined",
            1e-9,
            seed,
            samples,
            lift_equivariance_residual,
        ),
        check(
            TRACTOR,
            "bundle-b-residual",
            "bundle preserved iff the jerk vanishes",
            1e-9,
            seed,
            samples,
            bundle_b_norm_residual,
        ),
    ]
}

const FLAT: &str = "flat-model";

pub fn flat_model_suite(seed: u64, samples: usize) -> Vec<Check> {
    vec![
        check(FLAT, "killing-parallel", "splitting of a Killing field is parallel", 1e-12, seed, samples, |rng| {
            let k = random_killing(rng);
            let s = MobiusStructure::flat_model(MetricField::flat())?;
            let x = random_point(rng, 1.0);
            let d = connection_apply(&killing_field(&k), &s, &x)?;
            Ok(d.iter().map(|t| t.max_abs()).fold(0.0, f64::max))
        }),
        check(FLAT, "discriminant", "tractor discriminant equals b^2 - 4ac", 1e-10, seed, samples, |rng| {
            let k = random_killing(rng);
            let x = random_point(rng, 1.0);
            let d = discriminant(&killing_split(&k, &x), &MetricField::flat(), &x)?;
            Ok((d - k.discriminant()).norm())
        }),
        check(
            FLAT,
            "loxodrome-discriminant",
            "discriminant of a loxodrome generator is (beta + i)^2",
            1e-10,
            seed,
            samples,
            |rng| {
                let s = random_loxodrome(rng);
                Ok((s.generator().discriminant() - Complex64::new(s.beta, 1.0).powi(2)).norm())
            },
        ),
        check(FLAT, "classify-beta", "classification recovers the bearing", 1e-9, seed, samples, |rng| {
            let s = random_loxodrome(rng);
            let beta = classify(&s.generator())?
                .beta
                .ok_or_else(|| Error::Invalid("generator not classified as loxodromic".into()))?;
            Ok((beta - s.beta).abs() / s.beta.abs().max(1.0))
        }),
        check(FLAT, "generator-tangent", "dz/dtheta equals the generating quadratic", 1e-9, seed, samples, |rng| {
            let s = random_loxodrome(rng);
            let th = uniform(rng, -2.0, 2.0);
            let z = s.point(th)?;
            let v = s.tangent(th)?;
            Ok((s.generator().quadratic(z) - v).norm() / (1.0 + v.norm()))
        }),
        check(
            FLAT,
            "generator-flow",
            "flow of the real Killing field advances theta by t/2",
            1e-8,
            seed,
            samples,
            |rng| {
                let s = random_loxodrome(rng);
                let th = uniform(rng, -1.0, 1.0);
                let t = uniform(rng, -1.0, 1.0);
                let z = s.generator().flow(t, s.point(th)?)?;
                let w = s.point(th + 0.5 * t)?;
                Ok((z - w).norm() / (1.0 + w.norm()))
            },
        ),
    ]
}

const INVARIANCE: &str = "invariance";

/// Frenet data of the spiral `ζ = e^{(β+i)θ}` at arc length `s` from the
/// origin, at polar angle `θ`, as a flat-gauge state.
pub fn spiral_state(beta: f64, s: f64) -> KinematicState<2> {
    let root = (1.0 + beta * beta).sqrt();
    let r = beta * s / root;
    let th = r.ln();
    // tangent direction (β + i) e^{iθ}, normal i times it
    let (c, sn) = (th.cos(), th.sin());
    let u = [(beta * c - sn) / root, (beta * sn + c) / root];
    let n = [-u[1], u[0]];
    let k = 1.0 / (beta * s);
    let dk = -1.0 / (beta * s * s);
    KinematicState::new([r * c, r * sn], u, [k * n[0], k * n[1]], "flat/flat-model")
        .with_jerk([dk * n[0], dk * n[1]], Some(1.0 / s))
}

pub fn circle_state(a: f64) -> KinematicState<2> {
    KinematicState::new([0.3, -0.2], [0.6, 0.8], [-0.8 * a, 0.6 * a], "flat/flat-model")
}

fn invariance_suite() -> Vec<Check> {
    let config = IntegratorConfig {
        scheme: Scheme::Rk45Adaptive,
        step: 2e-3,
        tol: 1e-12,
        max_length: 20.0,
        ..Default::default()
    };
    let run = |model: Model, init: KinematicState<2>| -> Result<f64> {
        let flat = MobiusStructure::flat_model(MetricField::flat())?;
        let rep = invariance_experiment(model, &flat, &ConformalRescaling::stereographic(), &init, &config)?;
        for t in [&rep.original.termination, &rep.rescaled.termination] {
            if !t.is_complete() {
                return Err(Error::Invalid(format!("integration stopped early: {}", t.name())));
            }
        }
        Ok(rep.trace_distance)
    };
    let scenarios: Vec<(&'static str, Model, KinematicState<2>)> = vec![
        ("loxodrome-flat-vs-sphere", Model::Loxodrome, spiral_state(1.0, 1.0)),
        ("circle-flat-vs-sphere", Model::Circle, circle_state(0.5)),
    ];
    scenarios
        .into_par_iter()
        .map(|(name, model, init)| {
            let r = run(model, init);
            let (observed, error) = match r {
                Ok(v) => (v, None),
                Err(e) => (f64::NAN, Some(e.to_string())),
            };
            Check {
                suite: INVARIANCE,
                name,
                anchor: "curves in gauges g and Omega^2 g coincide",
                samples: 1,
                tolerance: 1e-6,
                observed,
                passed: error.is_none() && observed < 1e-6,
                error,
            }
        })
        .collect()
}

fn matrix_distance<const N: usize>(a: &Matrix<N>, b: &Matrix<N>) -> f64 {
    (0..N).flat_map(|i| (0..N).map(move |j| (a[i][j] - b[i][j]).abs())).fold(0.0, f64::max)
}

fn max_entry<const N: usize>(a: &Matrix<N>) -> f64 {
    a.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)
}

fn state_distance<const N: usize>(a: &KinematicState<N>, b: &KinematicState<N>) -> f64 {
    let d = |p: &Vector<N>, q: &Vector<N>| (0..N).map(|i| (p[i] - q[i]).abs()).fold(0.0, f64::max);
    let k = match (a.kappa, b.kappa) {
        (Some(x), Some(y)) => (x - y).abs(),
        _ => 0.0,
    };
    d(&a.x, &b.x).max(d(&a.u, &b.u)).max(d(&a.a, &b.a)).max(d(&a.j, &b.j)).max(k)
}

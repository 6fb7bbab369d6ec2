use thiserror::Error;

use crate::expr::{EvalError, ParseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("metric is singular at {point:?}")]
    SingularMetric { point: Vec<f64> },
    #[error("metric is not positive definite at {point:?}")]
    NotPositiveDefinite { point: Vec<f64> },
    #[error("conformal factor must be positive, got {value} at {point:?}")]
    NonPositiveFactor { value: f64, point: Vec<f64> },
    #[error("{op} is only defined in dimension {expected}, not {found}")]
    Dimension { op: &'static str, expected: &'static str, found: usize },
    #[error("curve is singular (zero velocity) at t = {t}")]
    SingularCurve { t: f64 },
    #[error("degenerate jerk: |J| = {norm:e} is below threshold {threshold:e}")]
    DegenerateJerk { norm: f64, threshold: f64 },
    #[error("gauge mismatch: tractor is in gauge `{found}`, expected `{expected}`")]
    GaugeMismatch { expected: String, found: String },
    #[error("loxodrome pole: denominator {magnitude:e} at theta = {theta}")]
    Pole { theta: f64, magnitude: f64 },
    #[error("flow leaves the affine chart at t = {t}")]
    ChartInfinity { t: f64 },
    #[error("zero Killing field")]
    ZeroField,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

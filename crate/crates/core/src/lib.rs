//! Conformal circles and conformal loxodromes on surfaces with a Möbius
//! structure, together with the adjoint tractor calculus that detects them.

pub mod engine;
pub mod error;
pub mod expr;
pub mod flat_model;
pub mod io;
pub mod jet;
pub mod kinematics;
pub mod mobius;
pub mod tensor;
pub mod tractor;
pub mod verify;

pub use engine::{integrate, invariance_experiment, CurveTrace, IntegratorConfig, Model, Scheme, Termination};
pub use error::{Error, Result};
pub use expr::{parse, EvalError, Expr, Func, ParseError, Var};
pub use flat_model::{classify, Classification, KillingCoefficients, LoxodromeSpec};
pub use jet::{Jet, Real};
pub use kinematics::KinematicState;
pub use mobius::{ConformalRescaling, MobiusStructure};
pub use tensor::MetricField;
pub use tractor::AdjointTractor;

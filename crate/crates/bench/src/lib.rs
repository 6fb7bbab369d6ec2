//! Shared fixtures for the benchmarks.

use loxo_core::mobius::MobiusStructure;
use loxo_core::tensor::MetricField;
use loxo_core::{IntegratorConfig, KinematicState, Scheme};

/// The round sphere in stereographic gauge with its constant-curvature Rho.
pub fn sphere() -> MobiusStructure<2> {
    MobiusStructure::constant_curvature(MetricField::sphere(1.0).expect("sphere metric")).expect("sphere structure")
}

pub fn flat() -> MobiusStructure<2> {
    MobiusStructure::flat_model(MetricField::flat()).expect("flat structure")
}

/// A unit-speed circle datum for the flat metric.
pub fn flat_circle_init() -> KinematicState<2> {
    KinematicState::new([0.5, 0.0], [0.0, 1.0], [-2.0, 0.0], "flat")
}

/// A loxodrome datum that is unit speed for the sphere metric at `(0.2, 0.1)`.
pub fn sphere_loxodrome_init() -> KinematicState<2> {
    KinematicState::new([0.2, 0.1], [0.315, 0.42], [-0.8, 0.6], "sphere").with_jerk([0.4, -0.3], Some(0.3))
}

pub fn config(scheme: Scheme, length: f64) -> IntegratorConfig {
    IntegratorConfig { scheme, step: 1e-2, tol: 1e-10, max_length: length, ..Default::default() }
}

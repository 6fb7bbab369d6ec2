//! JSON specifications for structures and initial data, and the CSV and SVG
//! writers used by the command-line tool.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{CurveTrace, Model};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::mobius::MobiusStructure;
use crate::tensor::MetricField;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MetricSpec {
    Flat,
    Sphere {
        #[serde(rename = "K", default = "one")]
        curvature: f64,
    },
    Hyperbolic {
        #[serde(rename = "K", default = "minus_one")]
        curvature: f64,
    },
    Cylinder,
    Isothermal {
        omega: Expr,
    },
}

fn one() -> f64 {
    1.0
}

fn minus_one() -> f64 {
    -1.0
}

impl MetricSpec {
    pub fn build(&self) -> Result<MetricField<2>> {
        match self {
            MetricSpec::Flat => Ok(MetricField::flat()),
            MetricSpec::Sphere { curvature } => MetricField::sphere(*curvature),
            MetricSpec::Hyperbolic { curvature } => MetricField::hyperbolic(*curvature),
            MetricSpec::Cylinder => MetricField::cylinder_gauge(),
            MetricSpec::Isothermal { omega } => MetricField::isothermal(omega.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RhoSpec {
    Named(RhoKind),
    Explicit {
        #[serde(rename = "P11")]
        p11: Expr,
        #[serde(rename = "P12")]
        p12: Expr,
        #[serde(rename = "P22")]
        p22: Expr,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoKind {
    FlatModel,
    ConstantCurvature,
}

impl Default for RhoSpec {
    fn default() -> Self {
        RhoSpec::Named(RhoKind::FlatModel)
    }
}

/// The Möbius structure described by a metric and a Rho specification.
pub fn build_structure(metric: &MetricSpec, rho: &RhoSpec) -> Result<MobiusStructure<2>> {
    let m = metric.build()?;
    match rho {
        RhoSpec::Named(RhoKind::FlatModel) => MobiusStructure::flat_model(m),
        RhoSpec::Named(RhoKind::ConstantCurvature) => MobiusStructure::constant_curvature(m),
        RhoSpec::Explicit { p11, p12, p22 } => {
            MobiusStructure::user(m, [[p11.clone(), p12.clone()], [p12.clone(), p22.clone()]])
        }
    }
}

/// Parse `text` as inline JSON when it looks like JSON, otherwise as a bare
/// keyword (a JSON string) or, failing that, as the path of a JSON file.
pub fn read_json_arg<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    let trimmed = text.trim();
    let parse = |s: &str, origin: &str| -> Result<T> {
        serde_json::from_str(s).map_err(|e| Error::Invalid(format!("invalid {what} ({origin}): {e}")))
    };
    if trimmed.starts_with('{') || trimmed.starts_with('[') || trimmed.starts_with('"') {
        return parse(trimmed, "inline JSON");
    }
    if let Ok(v) = serde_json::from_value::<T>(serde_json::Value::String(trimmed.to_string())) {
        return Ok(v);
    }
    if let Ok(v) = serde_json::from_value::<T>(serde_json::json!({ "kind": trimmed })) {
        return Ok(v);
    }
    let path = Path::new(trimmed);
    let body = std::fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read {what} from `{}`: {e}", path.display())))?;
    parse(&body, &path.display().to_string())
}

/// Seventeen significant digits: exact round trip for doubles.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub const TRACE_HEADER: &str = "s,x1,x2,U1,U2,A1,A2,J1,J2,kappa,res_unit,res_orthoA,res_orthoJ,res_null";

/// The trace as CSV. Columns that do not apply to the model are left empty.
pub fn trace_csv(trace: &CurveTrace<2>) -> String {
    let mut out = String::with_capacity(trace.samples.len() * 300);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    let opt = |v: Option<f64>| v.map(format_float).unwrap_or_default();
    let jerk = trace.model.uses_jerk();
    for smp in &trace.samples {
        let st = &smp.state;
        let r = &smp.residuals;
        let mut row: Vec<String> = vec![format_float(smp.s)];
        row.extend(st.x.iter().chain(&st.u).chain(&st.a).map(|v| format_float(*v)));
        row.extend(st.j.iter().map(|v| if jerk { format_float(*v) } else { String::new() }));
        row.push(opt(if trace.model == Model::Loxodrome { st.kappa } else { None }));
        row.push(format_float(r.unit));
        row.push(format_float(r.ortho_a));
        row.push(opt(r.ortho_j));
        row.push(opt(r.null));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// One or more polylines scaled into a `size` × `size` SVG canvas, with the
/// chart's `y` axis pointing up.
pub fn svg_polylines(paths: &[Vec<[f64; 2]>], size: f64) -> String {
    let finite = paths.iter().flatten().filter(|p| p[0].is_finite() && p[1].is_finite());
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in finite {
        for i in 0..2 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    if !lo[0].is_finite() {
        lo = [0.0, 0.0];
        hi = [1.0, 1.0];
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
    let margin = 0.05 * size;
    let scale = (size - 2.0 * margin) / span;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for path in paths {
        let pts: Vec<String> = path
            .iter()
            .filter(|p| p[0].is_finite() && p[1].is_finite())
            .map(|p| {
                let x = margin + (p[0] - lo[0]) * scale;
                let y = size - margin - (p[1] - lo[1]) * scale;
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="black" stroke-width="1" points="{}"/>"#, pts.join(" "));
    }
    svg.push_str("</svg>\n");
    svg
}

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use loxo_core::engine::{integrate, IntegratorConfig, Model, Scheme};
use loxo_core::io::{build_structure, format_float, read_json_arg, svg_polylines, trace_csv, MetricSpec, RhoSpec};
use loxo_core::verify::{self, Suite};
use loxo_core::{classify, KillingCoefficients, KinematicState, LoxodromeSpec};

const EXIT_VERIFY: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_ABORT: u8 = 3;

#[derive(Parser)]
#[command(name = "loxo", version, about = "Conformal circles and loxodromes on Möbius surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a curve equation and write its trace.
    Integrate(IntegrateArgs),
    /// Sample the flat-model loxodrome from p to q.
    LoxFlat(LoxFlatArgs),
    /// Classify the orbits of a flat conformal Killing field.
    Classify(ClassifyArgs),
    /// Run seeded verification suites.
    Verify(VerifyArgs),
    /// Re-run an integration from a saved configuration or summary.
    Replay {
        /// JSON file holding a run configuration, or a summary containing one.
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ModelArg {
    Circle,
    Loxodrome,
    Dk4,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Model {
        match m {
            ModelArg::Circle => Model::Circle,
            ModelArg::Loxodrome => Model::Loxodrome,
            ModelArg::Dk4 => Model::Dk4,
        }
    }
}

#[derive(Args)]
struct IntegrateArgs {
    model: ModelArg,
    /// Metric: inline JSON, a keyword (flat, sphere, hyperbolic, cylinder) or a file.
    #[arg(long)]
    metric: Option<String>,
    /// Rho: flat-model, constant-curvature, inline JSON {"P11","P12","P22"} or a file.
    #[arg(long, default_value = "flat-model")]
    rho: String,
    /// Initial data: inline JSON {x, U, A, J, kappa} or a file.
    #[arg(long)]
    init: Option<String>,
    /// rk4 or rk45.
    #[arg(long, default_value = "rk4")]
    scheme: String,
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 10.0)]
    length: f64,
    #[arg(long, default_value_t = 1e-6)]
    drift: f64,
    #[arg(long)]
    renormalise: bool,
    #[arg(long, default_value_t = 1e6)]
    chart_bound: f64,
    /// CSV trace; written to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct LoxFlatArgs {
    /// Source point `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    p: String,
    /// Sink point `re,im`; the one-point spiral about p when absent.
    #[arg(long, allow_hyphen_values = true)]
    q: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta: f64,
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    theta_min: f64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    theta_max: f64,
    #[arg(long, default_value_t = 2001)]
    samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    u: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    v: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    lambda: f64,
    #[arg(long = "F", default_value_t = 0.0, allow_hyphen_values = true)]
    f: f64,
    #[arg(long = "P", default_value_t = 0.0, allow_hyphen_values = true)]
    p: f64,
    #[arg(long = "Q", default_value_t = 0.0, allow_hyphen_values = true)]
    q: f64,
}

#[derive(Args)]
struct VerifyArgs {
    /// transforms, tractor, flat-model, invariance or all.
    #[arg(default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Everything needed to reproduce an integration.
#[derive(Serialize, Deserialize)]
struct RunConfig {
    command: String,
    model: ModelArg,
    metric: MetricSpec,
    rho: RhoSpec,
    init: KinematicState<2>,
    integrator: IntegratorConfig,
    seed: u64,
}

enum Failure {
    Config(String),
    Abort(String),
    Io(String),
}

impl From<loxo_core::Error> for Failure {
    fn from(e: loxo_core::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Integrate(a) => cmd_integrate(a),
        Command::LoxFlat(a) => cmd_lox_flat(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Replay { file, out, svg } => cmd_replay(&file, out, svg),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Abort(m)) => {
            eprintln!("aborted: {m}");
            ExitCode::from(EXIT_ABORT)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn write_file(path: &Path, body: &str) -> Result<(), Failure> {
    fs::write(path, body).map_err(|e| Failure::Io(format!("cannot write `{}`: {e}", path.display())))
}

fn print_json(value: &serde_json::Value) {
    let text = serde_json::to_string_pretty(value).expect("JSON values serialise");
    println!("{text}");
}

/// Send `body` to `out` or, when absent, to stdout; the summary then goes to
/// stderr so the two never interleave.
fn emit(out: Option<&Path>, body: &str, summary: &serde_json::Value) -> Result<(), Failure> {
    match out {
        Some(p) => {
            write_file(p, body)?;
            print_json(summary);
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes()).map_err(|e| Failure::Io(format!("cannot write to stdout: {e}")))?;
            eprintln!("{}", serde_json::to_string_pretty(summary).expect("JSON values serialise"));
        }
    }
    Ok(())
}

fn cmd_integrate(a: IntegrateArgs) -> Result<u8, Failure> {
    let metric_text =
        a.metric.as_deref().ok_or_else(|| Failure::Config("missing required field `metric` (pass --metric)".into()))?;
    let init_text =
        a.init.as_deref().ok_or_else(|| Failure::Config("missing required field `init` (pass --init)".into()))?;
    let scheme: Scheme = a.scheme.parse()?;
    let config = RunConfig {
        command: "integrate".into(),
        model: a.model,
        metric: read_json_arg(metric_text, "metric")?,
        rho: read_json_arg(&a.rho, "rho")?,
        init: read_json_arg(init_text, "init")?,
        integrator: IntegratorConfig {
            scheme,
            step: a.step,
            tol: a.tol,
            max_length: a.length,
            drift_threshold: a.drift,
            renormalise: a.renormalise,
            chart_bound: a.chart_bound,
            ..Default::default()
        },
        seed: a.seed,
    };
    run_config(config, a.out.as_deref(), a.svg.as_deref())
}

fn run_config(mut config: RunConfig, out: Option<&Path>, svg: Option<&Path>) -> Result<u8, Failure> {
    config.integrator.validate()?;
    let structure = build_structure(&config.metric, &config.rho)?;
    config.init.gauge = structure.name().to_string();
    let trace = integrate(config.model.into(), &structure, &config.init, &config.integrator)?;
    let max = trace.max_residuals();
    let last = trace.last();
    let summary = json!({
        "config": config,
        "structure": structure.name(),
        "termination": trace.termination,
        "samples": trace.samples.len(),
        "final_s": last.s,
        "final_state": last.state,
        "max_residuals": max,
        "max_res": max.max(),
    });
    if let Some(p) = svg {
        write_file(p, &svg_polylines(&[trace.points()], 600.0))?;
    }
    emit(out, &trace_csv(&trace), &summary)?;
    if trace.termination.is_complete() {
        Ok(0)
    } else {
        Err(Failure::Abort(format!("integration stopped: {}", trace.termination.name())))
    }
}

fn cmd_replay(file: &Path, out: Option<PathBuf>, svg: Option<PathBuf>) -> Result<u8, Failure> {
    let body =
        fs::read_to_string(file).map_err(|e| Failure::Config(format!("cannot read `{}`: {e}", file.display())))?;
    let mut value: serde_json::Value = serde_json::from_str(&body)
        .map_err(|e| Failure::Config(format!("invalid JSON in `{}`: {e}", file.display())))?;
    if let Some(inner) = value.get_mut("config") {
        value = inner.take();
    }
    let config: RunConfig =
        serde_json::from_value(value).map_err(|e| Failure::Config(format!("invalid run configuration: {e}")))?;
    run_config(config, out.as_deref(), svg.as_deref())
}

fn parse_complex(text: &str, name: &str) -> Result<Complex64, Failure> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let num =
        |s: &str| s.parse::<f64>().map_err(|_| Failure::Config(format!("`{name}` must be `re,im`, got `{text}`")));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(Failure::Config(format!("`{name}` must be `re,im`, got `{text}`"))),
    }
}

fn cmd_lox_flat(a: LoxFlatArgs) -> Result<u8, Failure> {
    let p = parse_complex(&a.p, "p")?;
    let spec = match &a.q {
        Some(q) => LoxodromeSpec::new(p, parse_complex(q, "q")?, a.beta)?,
        None => LoxodromeSpec::spiral(p, a.beta)?,
    };
    if a.samples == 0 {
        return Err(Failure::Config("`samples` must be at least 1".into()));
    }
    if !(a.theta_min.is_finite() && a.theta_max.is_finite()) {
        return Err(Failure::Config("theta range must be finite".into()));
    }
    let mut csv = String::from("theta,re_z,im_z\n");
    let mut poles = Vec::new();
    let mut points = Vec::new();
    for (theta, z) in spec.trace(a.theta_min, a.theta_max, a.samples) {
        match z {
            Some(z) => {
                csv.push_str(&format!("{},{},{}\n", format_float(theta), format_float(z.re), format_float(z.im)));
                points.push([z.re, z.im]);
            }
            None => poles.push(theta),
        }
    }
    for t in &poles {
        eprintln!("warning: pole at theta = {t}; sample skipped");
    }
    let summary = json!({
        "p": [p.re, p.im],
        "q": spec.q.map(|q| [q.re, q.im]),
        "beta": spec.beta,
        "theta": [a.theta_min, a.theta_max],
        "samples": points.len(),
        "skipped_poles": poles,
    });
    if let Some(path) = &a.svg {
        write_file(path, &svg_polylines(&[points], 600.0))?;
    }
    emit(a.out.as_deref(), &csv, &summary)?;
    Ok(0)
}

fn cmd_classify(a: ClassifyArgs) -> Result<u8, Failure> {
    let k = KillingCoefficients { u: a.u, v: a.v, lambda: a.lambda, f: a.f, p: a.p, q: a.q };
    let c = classify(&k)?;
    let mut value = serde_json::to_value(c).expect("classification serialises");
    if let Some(obj) = value.as_object_mut() {
        obj.retain(|_, v| !v.is_null());
    }
    print_json(&value);
    Ok(0)
}

fn cmd_verify(a: VerifyArgs) -> Result<u8, Failure> {
    let suite: Suite = a.suite.parse()?;
    let report = verify::run(suite, a.seed);
    let value = serde_json::to_value(&report).expect("report serialises");
    match &a.out {
        Some(p) => write_file(p, &(serde_json::to_string_pretty(&value).expect("serialises") + "\n"))?,
        None => print_json(&value),
    }
    for c in report.failures() {
        eprintln!("FAILED {}/{}: observed {:e}, tolerance {:e}", c.suite, c.name, c.observed, c.tolerance);
    }
    Ok(if report.passed { 0 } else { EXIT_VERIFY })
}

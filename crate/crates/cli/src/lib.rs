//! Library side of the `frenet-kit` command: configuration, the sampling
//! pipeline and the CSV/JSON emitters.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use frenet_kit::dsl::{parse_curve, CurveSpec, DslError, EvalError};
use frenet_kit::frenet::{
    canonical_matrix_with, curvatures_degenerate, curvatures_minor, curvatures_qr, detect_order,
    frenet_frame, gram_data, profile_delta, EngineConfig, EngineError, OrderSegmentation,
    DEFAULT_MAX_DIM, DEFAULT_ORDER_TOL,
};
use frenet_kit::linalg::DEFAULT_QR_TOL;
use frenet_kit::oracle::{definitional_curvatures, OracleError};
use rayon::prelude::*;
use serde_json::{json, Map, Value};
use thiserror::Error;

pub const SCHEMA: &str = "frenet-kit/1";
pub const THREADS_ENV: &str = "FRENET_KIT_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodChoice {
    Minor,
    Qr,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Generalized curvatures of a parametric curve, sampled on a uniform grid.
#[derive(Debug, Clone, Parser)]
#[command(name = "frenet-kit", version, about)]
pub struct Cli {
    /// Curve as a bracketed list of expressions in t, e.g. "[cos(t), sin(t), t]"
    #[arg(long)]
    pub curve: String,
    /// Start of the sampling interval
    #[arg(long, allow_negative_numbers = true)]
    pub t_min: f64,
    /// End of the sampling interval
    #[arg(long, allow_negative_numbers = true)]
    pub t_max: f64,
    /// Number of grid points, endpoints included
    #[arg(long, default_value_t = 101)]
    pub samples: usize,
    /// Curvature route; "both" also reports the QR values
    #[arg(long, value_enum, default_value_t = MethodChoice::Minor)]
    pub method: MethodChoice,
    /// Cross-check every sample against the QR path and the definitional oracle
    #[arg(long)]
    pub verify: bool,
    /// Report truncated curvatures where the regularity order drops
    #[arg(long)]
    pub degenerate_ok: bool,
    /// Normalized Gram volume below which a derivative counts as dependent
    #[arg(long, default_value_t = DEFAULT_ORDER_TOL)]
    pub tol_order: f64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub output: OutputFormat,
    /// Write the report here instead of stdout
    #[arg(long)]
    pub out_path: Option<PathBuf>,
    /// Expected ambient dimension; must match the number of components
    #[arg(long)]
    pub dim: Option<usize>,
    /// Include Frenet frame vectors
    #[arg(long)]
    pub frames: bool,
    /// Largest accepted ambient dimension
    #[arg(long, default_value_t = DEFAULT_MAX_DIM)]
    pub max_dim: usize,
    /// Relative threshold for --verify
    #[arg(long, default_value_t = 1e-6)]
    pub verify_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub curve: String,
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
    pub method: MethodChoice,
    pub verify: bool,
    pub degenerate_ok: bool,
    pub tol_order: f64,
    pub output: OutputFormat,
    pub out_path: Option<PathBuf>,
    pub dim: Option<usize>,
    pub frames: bool,
    pub max_dim: usize,
    pub verify_tol: f64,
}

impl RunConfig {
    pub fn new(curve: impl Into<String>, t_min: f64, t_max: f64, samples: usize) -> Self {
        RunConfig {
            curve: curve.into(),
            t_min,
            t_max,
            samples,
            method: MethodChoice::Minor,
            verify: false,
            degenerate_ok: false,
            tol_order: DEFAULT_ORDER_TOL,
            output: OutputFormat::Csv,
            out_path: None,
            dim: None,
            frames: false,
            max_dim: DEFAULT_MAX_DIM,
            verify_tol: 1e-6,
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Usage(m.to_string()));
        if self.samples == 0 {
            return bad("--samples must be at least 1");
        }
        if !(self.t_min.is_finite() && self.t_max.is_finite() && self.t_min < self.t_max) {
            return bad("--t-min must be finite and smaller than --t-max");
        }
        if !(self.tol_order > 0.0) {
            return bad("--tol-order must be positive");
        }
        if !(self.verify_tol > 0.0) {
            return bad("--verify-tol must be positive");
        }
        Ok(())
    }
}

impl From<Cli> for RunConfig {
    fn from(c: Cli) -> Self {
        RunConfig {
            curve: c.curve,
            t_min: c.t_min,
            t_max: c.t_max,
            samples: c.samples,
            method: c.method,
            verify: c.verify,
            degenerate_ok: c.degenerate_ok,
            tol_order: c.tol_order,
            output: c.output,
            out_path: c.out_path,
            dim: c.dim,
            frames: c.frames,
            max_dim: c.max_dim,
            verify_tol: c.verify_tol,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numeric(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}

fn numeric(e: impl std::fmt::Display) -> CliError {
    CliError::Numeric(e.to_string())
}

/// One grid point of the report. Curvature entries are `None` where
/// undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRow {
    pub t: f64,
    pub order: usize,
    pub kappas: Vec<Option<f64>>,
    pub det_a: f64,
    pub minors: Vec<f64>,
    pub qr_kappas: Option<Vec<Option<f64>>>,
    pub cross_delta: Option<f64>,
    pub oracle_delta: Option<f64>,
    pub frame: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub curve: String,
    pub dim: usize,
    pub method: MethodChoice,
    pub verify: bool,
    pub frames: bool,
    pub rows: Vec<SampleRow>,
    pub segmentation: OrderSegmentation,
    /// Samples whose verification delta exceeded the threshold.
    pub verification_failures: Vec<f64>,
    /// Samples where the definitional oracle could not be evaluated.
    pub oracle_unavailable: Vec<f64>,
}

impl Report {
    fn qr_columns(&self) -> bool {
        self.method == MethodChoice::Both || self.verify
    }
}

/// Uniform inclusive grid of `samples` points.
pub fn uniform_grid(t_min: f64, t_max: f64, samples: usize) -> Vec<f64> {
    if samples == 1 {
        return vec![t_min];
    }
    (0..samples)
        .map(|i| {
            if i + 1 == samples {
                t_max
            } else {
                t_min + (t_max - t_min) * i as f64 / (samples - 1) as f64
            }
        })
        .collect()
}

fn thread_pool() -> Option<rayon::ThreadPool> {
    let cap: usize = std::env::var(THREADS_ENV).ok()?.trim().parse().ok()?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cap.max(1))
        .build()
        .ok()
}

struct Computed {
    row: SampleRow,
    failed: bool,
    oracle_missing: bool,
}

/// Parses the curve, samples the grid and computes every row.
pub fn execute(config: &RunConfig) -> Result<Report, CliError> {
    config.validate()?;
    let spec = parse_curve(&config.curve).map_err(|e| match e {
        DslError::Parse(p) => CliError::Parse(p.render(&config.curve)),
        other => CliError::Parse(other.to_string()),
    })?;
    if let Some(d) = config.dim {
        if d != spec.dim() {
            return Err(CliError::Usage(format!(
                "--dim {d} does not match the {} components of the curve",
                spec.dim()
            )));
        }
    }
    if spec.dim() > config.max_dim {
        return Err(CliError::Usage(
            EngineError::DimensionTooLarge {
                dim: spec.dim(),
                max: config.max_dim,
            }
            .to_string(),
        ));
    }
    let spec = spec
        .with_domain(config.t_min, config.t_max)
        .map_err(|e| CliError::Usage(e.to_string()))?
        .with_label(config.curve.clone());
    let engine = EngineConfig {
        tol_order: config.tol_order,
        qr_tol: DEFAULT_QR_TOL,
        max_dim: config.max_dim,
    };
    let grid = uniform_grid(config.t_min, config.t_max, config.samples);

    let work = || -> Result<Vec<Computed>, CliError> {
        grid.par_iter()
            .map(|&t| compute_row(&spec, t, config, &engine))
            .collect()
    };
    let computed = match thread_pool() {
        Some(pool) => pool.install(work)?,
        None => work()?,
    };

    let orders = computed.iter().map(|c| c.row.order).collect();
    let segmentation = OrderSegmentation::from_orders(grid.clone(), orders);
    let mut rows = Vec::with_capacity(computed.len());
    let mut verification_failures = Vec::new();
    let mut oracle_unavailable = Vec::new();
    for (i, c) in computed.into_iter().enumerate() {
        let mut row = c.row;
        if c.failed {
            verification_failures.push(row.t);
        }
        if c.oracle_missing {
            oracle_unavailable.push(row.t);
        }
        if row.order + 1 < spec.dim() && segmentation.is_boundary_point(i) {
            row.kappas.iter_mut().for_each(|k| *k = None);
        }
        rows.push(row);
    }
    Ok(Report {
        curve: spec.to_string(),
        dim: spec.dim(),
        method: config.method,
        verify: config.verify,
        frames: config.frames,
        rows,
        segmentation,
        verification_failures,
        oracle_unavailable,
    })
}

fn compute_row(
    spec: &CurveSpec,
    t: f64,
    config: &RunConfig,
    engine: &EngineConfig,
) -> Result<Computed, CliError> {
    let n = spec.dim();
    let cm = canonical_matrix_with(spec, t, engine).map_err(numeric)?;
    let gd = gram_data(&cm);
    let order = detect_order(&gd, config.tol_order);
    let full = order + 1 >= n;
    let mut row = SampleRow {
        t,
        order,
        kappas: vec![None; n - 1],
        det_a: gd.det_a,
        minors: gd.minors.clone(),
        qr_kappas: None,
        cross_delta: None,
        oracle_delta: None,
        frame: None,
    };
    let mut failed = false;
    let mut oracle_missing = false;

    if !full {
        if !config.degenerate_ok {
            let e = EngineError::OrderDeficient {
                t,
                order,
                required: n - 1,
            };
            return Err(CliError::Numeric(format!(
                "{e} (pass --degenerate-ok to report the defined curvatures)"
            )));
        }
        if order >= 2 {
            let p = curvatures_degenerate(&cm, &gd, order).map_err(numeric)?;
            for (slot, k) in row.kappas.iter_mut().zip(p.kappas) {
                *slot = Some(k);
            }
        }
        return Ok(Computed {
            row,
            failed,
            oracle_missing,
        });
    }

    let minor = curvatures_minor(&cm, &gd, config.tol_order).map_err(numeric)?;
    let need_qr = config.method != MethodChoice::Minor || config.verify;
    let qr = if need_qr {
        Some(curvatures_qr(&cm, config.tol_order, DEFAULT_QR_TOL).map_err(numeric)?)
    } else {
        None
    };
    let primary = match (&qr, config.method) {
        (Some(q), MethodChoice::Qr) => q.kappas.clone(),
        _ => minor.kappas.clone(),
    };
    row.kappas = primary.iter().copied().map(Some).collect();
    if let Some(q) = &qr {
        if config.method == MethodChoice::Both || config.verify {
            row.qr_kappas = Some(q.kappas.iter().copied().map(Some).collect());
            let d = profile_delta(&q.kappas, &minor.kappas);
            row.cross_delta = Some(d);
            failed |= config.verify && !(d <= config.verify_tol);
        }
    }
    if config.verify {
        // the oracle differentiates across t ± h, so it runs without the
        // sampling-window restriction
        let open = CurveSpec::from_exprs(spec.components().iter().map(|c| c.ast.clone()).collect())
            .map_err(|e| CliError::Usage(e.to_string()))?;
        match definitional_curvatures(&open, t) {
            Ok(def) => {
                let d = profile_delta(&def, &primary);
                row.oracle_delta = Some(d);
                failed |= !(d <= config.verify_tol);
            }
            Err(
                OracleError::Eval(EvalError::Component { .. }) | OracleError::StepUnderflow { .. },
            )
            | Err(OracleError::Engine(_)) => oracle_missing = true,
            Err(e) => return Err(numeric(e)),
        }
    }
    if config.frames {
        let f = frenet_frame(&cm, DEFAULT_QR_TOL).map_err(numeric)?;
        row.frame = Some(f.vectors());
    }
    Ok(Computed {
        row,
        failed,
        oracle_missing,
    })
}

/// `%.17g`: 17 significant digits, trailing zeros removed, exponent form
/// outside `[1e-5, 1e17)`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let m = trim_zeros(mantissa.to_string());
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn column_names(report: &Report) -> Vec<String> {
    let n = report.dim;
    let mut cols = vec!["t".to_string(), "order".to_string()];
    cols.extend((1..n).map(|i| format!("kappa{i}")));
    cols.push("detA".into());
    cols.extend((1..=n).map(|i| format!("detM{i}")));
    if report.qr_columns() {
        cols.extend((1..n).map(|i| format!("qr_kappa{i}")));
        cols.push("cross_delta".into());
    }
    if report.verify {
        cols.push("oracle_delta".into());
    }
    cols
}

fn row_values(report: &Report, row: &SampleRow) -> Vec<Option<f64>> {
    let n = report.dim;
    let mut v = vec![Some(row.t), Some(row.order as f64)];
    v.extend(row.kappas.iter().copied());
    v.push(Some(row.det_a));
    v.extend(row.minors.iter().map(|m| Some(*m)));
    if report.qr_columns() {
        match &row.qr_kappas {
            Some(q) => v.extend(q.iter().copied()),
            None => v.extend(std::iter::repeat_n(None, n - 1)),
        }
        v.push(row.cross_delta);
    }
    if report.verify {
        v.push(row.oracle_delta);
    }
    v
}

fn frame_column_names(n: usize) -> Vec<String> {
    (1..=n)
        .flat_map(|k| (1..=n).map(move |c| format!("frame{k}_{c}")))
        .collect()
}

pub fn emit_csv(report: &Report) -> String {
    let mut out = String::new();
    let mut header = column_names(report);
    if report.frames {
        header.extend(frame_column_names(report.dim));
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for row in &report.rows {
        let mut cells: Vec<String> = row_values(report, row)
            .into_iter()
            .map(|v| v.map(format_float).unwrap_or_default())
            .collect();
        if report.frames {
            match &row.frame {
                Some(f) => cells.extend(f.iter().flatten().map(|x| format_float(*x))),
                None => cells.extend(std::iter::repeat_n(String::new(), report.dim * report.dim)),
            }
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn json_number(v: Option<f64>) -> Value {
    v.and_then(serde_json::Number::from_f64)
        .map_or(Value::Null, Value::Number)
}

pub fn emit_json(report: &Report) -> String {
    let names = column_names(report);
    let samples: Vec<Value> = report
        .rows
        .iter()
        .map(|row| {
            let mut obj = Map::new();
            for (name, v) in names.iter().zip(row_values(report, row)) {
                let value = if name == "order" {
                    json!(row.order)
                } else {
                    json_number(v)
                };
                obj.insert(name.clone(), value);
            }
            if report.frames {
                obj.insert(
                    "frame".into(),
                    row.frame.as_ref().map_or(Value::Null, |f| json!(f)),
                );
            }
            Value::Object(obj)
        })
        .collect();
    let grid = &report.segmentation.grid;
    let segments: Vec<Value> = report
        .segmentation
        .segments
        .iter()
        .map(|s| {
            json!({
                "start": s.start,
                "end": s.end,
                "t_start": grid[s.start],
                "t_end": grid[s.end],
                "order": s.order,
            })
        })
        .collect();
    let mut doc = json!({
        "schema": SCHEMA,
        "curve": report.curve,
        "dim": report.dim,
        "method": match report.method {
            MethodChoice::Minor => "minor",
            MethodChoice::Qr => "qr",
            MethodChoice::Both => "both",
        },
        "samples": samples,
        "segments": segments,
    });
    if report.verify {
        doc["verification"] = json!({
            "failures": report.verification_failures,
            "oracle_unavailable": report.oracle_unavailable,
        });
    }
    let mut s = serde_json::to_string_pretty(&doc).expect("JSON values are finite or null");
    s.push('\n');
    s
}

/// Runs the whole command and returns the process exit status. Reports go
/// to `out_path` or `stdout`, diagnostics to `stderr`.
pub fn run(config: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let report = match execute(config) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return e.exit_code();
        }
    };
    let body = match config.output {
        OutputFormat::Csv => emit_csv(&report),
        OutputFormat::Json => emit_json(&report),
    };
    let written = match &config.out_path {
        Some(path) => std::fs::write(path, &body).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => stdout
            .write_all(body.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: {e}");
        return e.exit_code();
    }
    if !report.oracle_unavailable.is_empty() {
        let _ = writeln!(
            stderr,
            "warning: definitional oracle unavailable at {} sample(s)",
            report.oracle_unavailable.len()
        );
    }
    if !report.verification_failures.is_empty() {
        let mut msg = String::new();
        for t in report.verification_failures.iter().take(5) {
            let _ = write!(msg, " {}", format_float(*t));
        }
        let _ = writeln!(
            stderr,
            "error: verification exceeded {} at {} sample(s), first at t ={msg}",
            format_float(config.verify_tol),
            report.verification_failures.len()
        );
        return 4;
    }
    0
}

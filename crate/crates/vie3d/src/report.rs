//! The solve/sweep pipelines and their reports: coefficient sets, error
//! tables, convergence sweeps, emitted as CSV or JSON.
//!
//! CSV data is written with 17 significant digits, so files are lossless
//! and byte-stable across runs; wall-clock timings appear in the JSON
//! reports (and the in-memory structs) but are kept out of the CSV tables.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::chebyshev::TensorApproximant;
use crate::matrix::vec_norm_inf;
use crate::problem::{self, ProblemSpec};
use crate::quadrature::QuadratureRule;
use crate::solver::{
    lu_solve, newton_solve, LinearSolveOptions, NewtonOptions, NewtonTrace,
};
use crate::{assembly, Error};

/// Default quadrature order policy: `q = 2N + 8` points per axis.
pub fn default_quad_order(order: usize) -> usize {
    2 * order + 8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format \"{other}\" (expected csv or json)")),
        }
    }
}

/// Where a problem comes from: a built-in fixture id or a file path.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Fixture(String),
    File(PathBuf),
}

impl ProblemSource {
    /// Fixture ids win over paths; anything that is not a known fixture id
    /// is treated as a path.
    pub fn resolve(arg: &str) -> ProblemSource {
        if problem::FIXTURE_IDS.contains(&arg) {
            ProblemSource::Fixture(arg.to_string())
        } else {
            ProblemSource::File(PathBuf::from(arg))
        }
    }

    /// Loads the spec along with a display label.
    pub fn load(&self) -> Result<(String, ProblemSpec), Error> {
        match self {
            ProblemSource::Fixture(id) => {
                Ok((id.clone(), problem::builtin_fixture(id)?))
            }
            ProblemSource::File(path) => {
                let mut text = String::new();
                File::open(path)
                    .and_then(|mut f| f.read_to_string(&mut text))
                    .map_err(|source| Error::Io {
                        path: path.clone(),
                        source,
                    })?;
                Ok((
                    path.display().to_string(),
                    ProblemSpec::parse(&text)?,
                ))
            }
        }
    }

    /// Tabulated default evaluation points, for fixtures that have them.
    pub fn default_points(&self) -> Option<Vec<[f64; 3]>> {
        match self {
            ProblemSource::Fixture(id) => problem::fixture_eval_points(id),
            ProblemSource::File(_) => None,
        }
    }
}

// ---------------------------------------------------------------------------
// core solve
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    /// Points per axis for the inner quadrature; `2N + 8` when omitted.
    pub quad_order: Option<usize>,
    pub newton: NewtonOptions,
    pub linear: LinearSolveOptions,
}

/// The solved problem with diagnostics; [`run_solve`] trims this down to a
/// serializable [`SolveReport`].
#[derive(Debug, Clone)]
pub struct Solution {
    pub approximant: TensorApproximant,
    pub linear: bool,
    pub quad_order: usize,
    /// Sup-norm of the discrete residual at the returned coefficients.
    pub residual_norm: f64,
    pub newton_trace: Option<NewtonTrace>,
    pub growth_factor: Option<f64>,
    pub condition_estimate: Option<f64>,
    pub assembly_seconds: f64,
    pub solve_seconds: f64,
}

/// Solution of the linearized problem (the nonlinearity replaced by the
/// identity), usable as a Newton warm start for problems where the zero
/// vector stalls.
pub fn linearized_warm_start(
    spec: &ProblemSpec,
    order: usize,
    quad_order: usize,
) -> Result<Vec<f64>, Error> {
    let linearized = ProblemSpec::new(
        spec.f().clone(),
        spec.kernel().clone(),
        None,
        None,
        spec.domain(),
    )?;
    let rule = QuadratureRule::gauss_legendre(quad_order)?;
    let system = assembly::assemble_linear(&linearized, order, &rule)?;
    let solution = lu_solve(&system, &LinearSolveOptions::default())?;
    Ok(solution.coefficients)
}

/// Runs assemble + solve for one problem at one order.
pub fn solve_problem(
    spec: &ProblemSpec,
    order: usize,
    options: &SolveOptions,
) -> Result<Solution, Error> {
    let quad_order = options.quad_order.unwrap_or_else(|| default_quad_order(order));
    let rule = QuadratureRule::gauss_legendre(quad_order)?;
    if spec.is_linear() {
        let assembly_start = Instant::now();
        let system = assembly::assemble_linear(spec, order, &rule)?;
        let assembly_seconds = assembly_start.elapsed().as_secs_f64();

        let solve_start = Instant::now();
        let lu = lu_solve(&system, &options.linear)?;
        let solve_seconds = solve_start.elapsed().as_secs_f64();

        let residual_norm = vec_norm_inf(&system.residual_of(&lu.coefficients));
        let approximant = TensorApproximant::new(order, lu.coefficients, spec.domain())?;
        Ok(Solution {
            approximant,
            linear: true,
            quad_order,
            residual_norm,
            newton_trace: None,
            growth_factor: Some(lu.growth_factor),
            condition_estimate: Some(lu.condition_estimate),
            assembly_seconds,
            solve_seconds,
        })
    } else {
        let assembly_start = Instant::now();
        let system = assembly::build_residual_system(spec, order, &rule)?;
        let assembly_seconds = assembly_start.elapsed().as_secs_f64();

        let solve_start = Instant::now();
        let (coefficients, trace) = newton_solve(&system, &options.newton)?;
        let solve_seconds = solve_start.elapsed().as_secs_f64();

        let residual_norm = trace
            .steps
            .last()
            .map(|s| s.residual_norm)
            .unwrap_or(trace.initial_residual);
        let approximant = TensorApproximant::new(order, coefficients, spec.domain())?;
        Ok(Solution {
            approximant,
            linear: false,
            quad_order,
            residual_norm,
            newton_trace: Some(trace),
            growth_factor: None,
            condition_estimate: None,
            assembly_seconds,
            solve_seconds,
        })
    }
}

// ---------------------------------------------------------------------------
// report types
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub exact: f64,
    pub approx: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonTraceRow {
    pub iteration: usize,
    pub residual_norm: f64,
    pub halvings: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct PhaseTimings {
    pub assembly_seconds: f64,
    pub solve_seconds: f64,
    pub evaluation_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Fixture id or problem-file path.
    pub problem: String,
    pub order: usize,
    pub quad_order: usize,
    pub linear: bool,
    pub coefficients: Vec<CoefficientRow>,
    pub residual_norm: f64,
    pub growth_factor: Option<f64>,
    pub condition_estimate: Option<f64>,
    pub newton_trace: Option<Vec<NewtonTraceRow>>,
    pub error_table: Vec<ErrorRow>,
    pub timings: PhaseTimings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub order: usize,
    pub quad_order: usize,
    pub max_abs_error: Option<f64>,
    pub assembly_seconds: f64,
    pub solve_seconds: f64,
    /// Failure message when this order did not produce a solution.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub problem: String,
    /// Evaluation grid density per axis.
    pub grid: usize,
    /// Rows sorted by order, ascending.
    pub rows: Vec<SweepRow>,
}

// ---------------------------------------------------------------------------
// pipelines
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub source: ProblemSource,
    pub order: usize,
    pub quad_order: Option<usize>,
    /// Explicit evaluation points; fixtures fall back to their tabulated
    /// defaults when this is `None`.
    pub points: Option<Vec<[f64; 3]>>,
    pub threads: Option<usize>,
    pub fd_jacobian: bool,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub source: ProblemSource,
    pub n_min: usize,
    pub n_max: usize,
    pub quad_order: Option<usize>,
    /// Evaluation grid density per axis.
    pub grid: usize,
    pub threads: Option<usize>,
}

fn with_threads<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T, Error> {
    match threads {
        None => Ok(job()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::Config(format!("failed to build thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

fn solve_options(quad_order: Option<usize>, fd_jacobian: bool) -> SolveOptions {
    let mut options = SolveOptions {
        quad_order,
        ..SolveOptions::default()
    };
    if fd_jacobian {
        options.newton.jacobian = crate::solver::JacobianMode::FiniteDifference { step: 1e-6 };
    }
    options
}

/// Full solve pipeline: load, assemble, solve, evaluate the error table.
pub fn run_solve(config: &SolveConfig) -> Result<SolveReport, Error> {
    let (label, spec) = config.source.load()?;
    let points = match &config.points {
        Some(p) => Some(p.clone()),
        None => config.source.default_points(),
    };
    if points.is_some() && spec.exact_solution().is_none() {
        return Err(Error::Config(
            "problem has no exact solution; cannot build an error table".to_string(),
        ));
    }

    let options = solve_options(config.quad_order, config.fd_jacobian);
    let solution = with_threads(config.threads, || solve_problem(&spec, config.order, &options))??;

    let evaluation_start = Instant::now();
    let mut error_table = Vec::new();
    if let Some(points) = points {
        for [x, y, z] in points {
            let exact = spec
                .eval_exact(x, y, z)
                .expect("exact solution checked above")?;
            let approx = solution.approximant.eval(x, y, z)?;
            error_table.push(ErrorRow {
                x,
                y,
                z,
                exact,
                approx,
                abs_error: (exact - approx).abs(),
            });
        }
    }
    let evaluation_seconds = evaluation_start.elapsed().as_secs_f64();

    let indexer = solution.approximant.indexer();
    let coefficients = solution
        .approximant
        .coeffs()
        .iter()
        .enumerate()
        .map(|(flat, value)| {
            let (i, j, k) = indexer.triple(flat);
            CoefficientRow {
                i,
                j,
                k,
                value: *value,
            }
        })
        .collect();

    Ok(SolveReport {
        problem: label,
        order: config.order,
        quad_order: solution.quad_order,
        linear: solution.linear,
        coefficients,
        residual_norm: solution.residual_norm,
        growth_factor: solution.growth_factor,
        condition_estimate: solution.condition_estimate,
        newton_trace: solution.newton_trace.map(|trace| {
            trace
                .steps
                .iter()
                .enumerate()
                .map(|(idx, step)| NewtonTraceRow {
                    iteration: idx + 1,
                    residual_norm: step.residual_norm,
                    halvings: step.halvings,
                })
                .collect()
        }),
        error_table,
        timings: PhaseTimings {
            assembly_seconds: solution.assembly_seconds,
            solve_seconds: solution.solve_seconds,
            evaluation_seconds,
        },
    })
}

/// Uniform grid over the domain box, `per_axis >= 2` points per axis
/// including both endpoints.
pub fn uniform_grid(domain: crate::problem::Box3, per_axis: usize) -> Vec<[f64; 3]> {
    let coords = |upper: f64| -> Vec<f64> {
        (0..per_axis)
            .map(|i| upper * (i as f64) / ((per_axis - 1) as f64))
            .collect()
    };
    let xs = coords(domain.x);
    let ys = coords(domain.y);
    let zs = coords(domain.z);
    let mut out = Vec::with_capacity(per_axis * per_axis * per_axis);
    for x in &xs {
        for y in &ys {
            for z in &zs {
                out.push([*x, *y, *z]);
            }
        }
    }
    out
}

/// Maximum absolute error of a solution against the spec's exact solution
/// over a uniform grid.
pub fn max_grid_error(
    spec: &ProblemSpec,
    approximant: &TensorApproximant,
    per_axis: usize,
) -> Result<f64, Error> {
    if spec.exact_solution().is_none() {
        return Err(Error::Config(
            "problem has no exact solution; cannot measure grid error".to_string(),
        ));
    }
    let mut worst = 0.0f64;
    for [x, y, z] in uniform_grid(spec.domain(), per_axis) {
        let exact = spec.eval_exact(x, y, z).expect("checked above")?;
        let approx = approximant.eval(x, y, z)?;
        worst = worst.max((exact - approx).abs());
    }
    Ok(worst)
}

/// Convergence sweep: one solve per order with the `2N + 8` quadrature
/// policy (unless overridden); failures are recorded as failed rows and
/// the sweep continues.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepReport, Error> {
    if config.n_max < config.n_min || config.n_min == 0 {
        return Err(Error::Config(format!(
            "invalid order range {}..={} (need 1 <= n-min <= n-max)",
            config.n_min, config.n_max
        )));
    }
    if config.grid < 2 {
        return Err(Error::Config(
            "evaluation grid needs at least 2 points per axis".to_string(),
        ));
    }
    let (label, spec) = config.source.load()?;
    if spec.exact_solution().is_none() {
        return Err(Error::Config(
            "sweep needs a problem with an exact solution".to_string(),
        ));
    }

    let mut rows = Vec::new();
    for order in config.n_min..=config.n_max {
        let quad_order = config.quad_order.unwrap_or_else(|| default_quad_order(order));
        let options = solve_options(Some(quad_order), false);
        let outcome = with_threads(config.threads, || solve_problem(&spec, order, &options))?;
        match outcome {
            Ok(solution) => {
                let row = match max_grid_error(&spec, &solution.approximant, config.grid) {
                    Ok(err) => SweepRow {
                        order,
                        quad_order,
                        max_abs_error: Some(err),
                        assembly_seconds: solution.assembly_seconds,
                        solve_seconds: solution.solve_seconds,
                        error: None,
                    },
                    Err(e) => SweepRow {
                        order,
                        quad_order,
                        max_abs_error: None,
                        assembly_seconds: solution.assembly_seconds,
                        solve_seconds: solution.solve_seconds,
                        error: Some(e.to_string()),
                    },
                };
                rows.push(row);
            }
            Err(e) => rows.push(SweepRow {
                order,
                quad_order,
                max_abs_error: None,
                assembly_seconds: 0.0,
                solve_seconds: 0.0,
                error: Some(e.to_string()),
            }),
        }
    }

    Ok(SweepReport {
        problem: label,
        grid: config.grid,
        rows,
    })
}

// ---------------------------------------------------------------------------
// point lists
// ---------------------------------------------------------------------------

/// Parses an evaluation-point file: one `x y z` triple per line,
/// whitespace-separated, `#` comments.
pub fn parse_points(text: &str) -> Result<Vec<[f64; 3]>, Error> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!(
                "points file line {}: expected three reals, got \"{line}\"",
                idx + 1
            )));
        }
        let mut point = [0.0f64; 3];
        for (slot, part) in point.iter_mut().zip(parts.iter()) {
            *slot = part.parse().map_err(|_| {
                Error::Config(format!(
                    "points file line {}: \"{part}\" is not a number",
                    idx + 1
                ))
            })?;
        }
        out.push(point);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// emission
// ---------------------------------------------------------------------------

/// Full-precision decimal: 17 significant digits, enough to reproduce any
/// f64 exactly.
fn full_precision(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Error table as CSV: header row plus one row per evaluation point.
pub fn write_solve_csv<W: Write>(report: &SolveReport, out: &mut W) -> io::Result<()> {
    writeln!(out, "x,y,z,exact,approx,abs_error")?;
    for row in &report.error_table {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            full_precision(row.x),
            full_precision(row.y),
            full_precision(row.z),
            full_precision(row.exact),
            full_precision(row.approx),
            full_precision(row.abs_error)
        )?;
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(report: &SweepReport, out: &mut W) -> io::Result<()> {
    writeln!(out, "n,max_abs_error,status")?;
    for row in &report.rows {
        let error_cell = row
            .max_abs_error
            .map(full_precision)
            .unwrap_or_default();
        let status = match &row.error {
            None => "ok".to_string(),
            Some(msg) => csv_quote(msg),
        };
        writeln!(out, "{},{},{}", row.order, error_cell, status)?;
    }
    Ok(())
}

pub fn write_json<T: Serialize, W: Write>(value: &T, out: &mut W) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)
}

fn open_destination(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    match path {
        None => Ok(Box::new(io::stdout())),
        Some(p) => {
            let file = File::create(p).map_err(|source| Error::Io {
                path: p.to_path_buf(),
                source,
            })?;
            Ok(Box::new(BufWriter::new(file)))
        }
    }
}

/// Writes a solve report to a file or standard output.
pub fn emit_solve_report(
    report: &SolveReport,
    format: OutputFormat,
    destination: Option<&Path>,
) -> Result<(), Error> {
    let mut out = open_destination(destination)?;
    let result = match format {
        OutputFormat::Csv => write_solve_csv(report, &mut out),
        OutputFormat::Json => write_json(report, &mut out),
    };
    result.and_then(|_| out.flush()).map_err(|source| Error::Io {
        path: destination.map(Path::to_path_buf).unwrap_or_else(|| "<stdout>".into()),
        source,
    })
}

pub fn emit_sweep_report(
    report: &SweepReport,
    format: OutputFormat,
    destination: Option<&Path>,
) -> Result<(), Error> {
    let mut out = open_destination(destination)?;
    let result = match format {
        OutputFormat::Csv => write_sweep_csv(report, &mut out),
        OutputFormat::Json => write_json(report, &mut out),
    };
    result.and_then(|_| out.flush()).map_err(|source| Error::Io {
        path: destination.map(Path::to_path_buf).unwrap_or_else(|| "<stdout>".into()),
        source,
    })
}

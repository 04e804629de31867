//! Command-line front end: `solve`, `sweep`, and `fixtures` subcommands
//! over the library pipelines. Machine-readable output (CSV or JSON) goes
//! to `--out` or standard output; a human summary goes to standard error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vie3d::problem::{fixture_summary, FIXTURE_IDS};
use vie3d::report::{
    self, OutputFormat, ProblemSource, SolveConfig, SolveReport, SweepConfig, SweepReport,
};
use vie3d::Error;

#[derive(Parser)]
#[command(
    name = "vie3d",
    about = "Shifted-Chebyshev collocation solver for 3D Volterra integral equations of the second kind",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file or built-in fixture at one order N.
    Solve {
        /// Problem-file path or fixture id (see `fixtures`).
        problem: String,
        /// Truncation order N (the expansion has (N+1)^3 coefficients).
        #[arg(short, long)]
        n: usize,
        /// Quadrature points per axis; default 2N + 8.
        #[arg(long = "quad-order")]
        quad_order: Option<usize>,
        /// File with one "x y z" evaluation point per line; fixtures with
        /// tabulated points use those by default.
        #[arg(long)]
        points: Option<PathBuf>,
        /// Output format: csv (error table) or json (full report).
        #[arg(long, default_value = "csv")]
        format: String,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for assembly; results do not depend on this.
        #[arg(long)]
        threads: Option<usize>,
        /// Use a finite-difference Jacobian instead of the analytic one.
        #[arg(long = "fd-jacobian")]
        fd_jacobian: bool,
    },
    /// Solve over a range of orders and report max grid errors.
    Sweep {
        /// Problem-file path or fixture id (see `fixtures`).
        problem: String,
        #[arg(long = "n-min")]
        n_min: usize,
        #[arg(long = "n-max")]
        n_max: usize,
        /// Evaluation grid density per axis.
        #[arg(long, default_value_t = 5)]
        grid: usize,
        /// Quadrature points per axis; default 2N + 8 per order.
        #[arg(long = "quad-order")]
        quad_order: Option<usize>,
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the built-in fixtures.
    Fixtures,
}

/// Exit codes: 0 success, 2 problem/input parse errors, 3 assembly or
/// evaluation errors, 4 solver failures, 5 i/o errors.
fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::Problem(_) | Error::Config(_) => 2,
        Error::Eval(_) | Error::Chebyshev(_) | Error::Quadrature(_) | Error::Assembly(_) => 3,
        Error::Solve(_) => 4,
        Error::Io { .. } => 5,
    }
}

fn parse_format(text: &str) -> Result<OutputFormat, Error> {
    text.parse().map_err(Error::Config)
}

fn solve_summary(report: &SolveReport) {
    eprintln!(
        "solved {} at N = {} (q = {}, {}): residual {:.3e}, {} coefficients",
        report.problem,
        report.order,
        report.quad_order,
        if report.linear { "linear" } else { "nonlinear" },
        report.residual_norm,
        report.coefficients.len()
    );
    if let Some(trace) = &report.newton_trace {
        for row in trace {
            eprintln!(
                "  newton iteration {:>2}: residual {:.3e} ({} halvings)",
                row.iteration, row.residual_norm, row.halvings
            );
        }
    }
    if let (Some(growth), Some(cond)) = (report.growth_factor, report.condition_estimate) {
        eprintln!("  lu growth factor {growth:.3e}, condition estimate {cond:.3e}");
    }
    eprintln!(
        "  timings: assembly {:.3}s, solve {:.3}s, evaluation {:.3}s",
        report.timings.assembly_seconds,
        report.timings.solve_seconds,
        report.timings.evaluation_seconds
    );
}

fn sweep_summary(report: &SweepReport) {
    eprintln!(
        "sweep of {} over {} orders ({}^3 grid):",
        report.problem,
        report.rows.len(),
        report.grid
    );
    for row in &report.rows {
        match (&row.max_abs_error, &row.error) {
            (Some(err), _) => eprintln!(
                "  N = {}: max error {:.6e} (assembly {:.3}s, solve {:.3}s)",
                row.order, err, row.assembly_seconds, row.solve_seconds
            ),
            (None, Some(msg)) => eprintln!("  N = {}: failed: {msg}", row.order),
            (None, None) => eprintln!("  N = {}: no data", row.order),
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Solve {
            problem,
            n,
            quad_order,
            points,
            format,
            out,
            threads,
            fd_jacobian,
        } => {
            let format = parse_format(&format)?;
            let points = match points {
                None => None,
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|source| Error::Io { path, source })?;
                    Some(report::parse_points(&text)?)
                }
            };
            let report = report::run_solve(&SolveConfig {
                source: ProblemSource::resolve(&problem),
                order: n,
                quad_order,
                points,
                threads,
                fd_jacobian,
            })?;
            report::emit_solve_report(&report, format, out.as_deref())?;
            solve_summary(&report);
            Ok(())
        }
        Command::Sweep {
            problem,
            n_min,
            n_max,
            grid,
            quad_order,
            format,
            out,
            threads,
        } => {
            let format = parse_format(&format)?;
            let report = report::run_sweep(&SweepConfig {
                source: ProblemSource::resolve(&problem),
                n_min,
                n_max,
                quad_order,
                grid,
                threads,
            })?;
            report::emit_sweep_report(&report, format, out.as_deref())?;
            sweep_summary(&report);
            Ok(())
        }
        Command::Fixtures => {
            for id in FIXTURE_IDS {
                println!("{id}  {}", fixture_summary(id).unwrap_or(""));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(exit_code_for(&error))
        }
    }
}

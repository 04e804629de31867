//! Solver library for three-dimensional Volterra integral equations of
//! the second kind,
//!
//! ```text
//! u(x,y,z) = f(x,y,z) + int_0^z int_0^y int_0^x K(x,y,z,r,s,t) G(u(r,s,t)) dr ds dt,
//! ```
//!
//! by shifted-Chebyshev tensor collocation: the unknown is expanded in
//! products `T*_i(x) T*_j(y) T*_k(z)` of shifted Chebyshev polynomials,
//! the residual is collocated at the Gauss-Chebyshev-Lobatto grid, and the
//! resulting `(N+1)^3` algebraic equations are solved by dense LU (linear
//! problems) or damped Newton iteration (nonlinear ones). The inner triple
//! integrals are evaluated by tensor-product Gauss-Legendre quadrature.
//!
//! Problems are declared either programmatically ([`ProblemSpec::new`]),
//! in a small text format ([`ProblemSpec::parse`]), or taken from the
//! built-in fixtures ([`problem::builtin_fixture`]). See the `examples/`
//! directory for one runnable example per capability, and the `vie3d`
//! binary for the command-line front end.
//!
//! ```
//! use vie3d::problem::builtin_fixture;
//! use vie3d::report::{solve_problem, SolveOptions};
//!
//! let spec = builtin_fixture("ex3_1").unwrap();
//! let solution = solve_problem(&spec, 1, &SolveOptions::default()).unwrap();
//! let u = solution.approximant.eval(0.2, 0.3, 0.4).unwrap();
//! assert!((u - 0.9).abs() < 1e-10);
//! ```

pub mod assembly;
pub mod chebyshev;
pub mod expr;
pub mod matrix;
pub mod problem;
pub mod quadrature;
pub mod report;
pub mod solver;

use std::fmt;
use std::io;
use std::path::PathBuf;

pub use chebyshev::{CollocationGrid, TensorApproximant, TripleIndexer};
pub use problem::{Box3, ProblemSpec};
pub use quadrature::QuadratureRule;
pub use report::{SolveReport, SweepReport};

/// Crate-level error type; every pipeline stage keeps its own error enum
/// and is wrapped here with enough context for the CLI exit codes.
#[derive(Debug)]
pub enum Error {
    Problem(problem::ProblemError),
    Eval(expr::EvalError),
    Chebyshev(chebyshev::ChebyshevError),
    Quadrature(quadrature::QuadratureError),
    Assembly(assembly::AssemblyError),
    Solve(solver::SolveError),
    Io { path: PathBuf, source: io::Error },
    /// Invalid configuration: bad ranges, malformed point lists, missing
    /// metadata for a requested report.
    Config(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Problem(e) => write!(f, "problem definition: {e}"),
            Error::Eval(e) => write!(f, "expression evaluation: {e}"),
            Error::Chebyshev(e) => write!(f, "basis evaluation: {e}"),
            Error::Quadrature(e) => write!(f, "quadrature: {e}"),
            Error::Assembly(e) => write!(f, "assembly: {e}"),
            Error::Solve(e) => write!(f, "solver: {e}"),
            Error::Io { path, source } => write!(f, "i/o on {}: {source}", path.display()),
            Error::Config(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Problem(e) => Some(e),
            Error::Eval(e) => Some(e),
            Error::Chebyshev(e) => Some(e),
            Error::Quadrature(e) => Some(e),
            Error::Assembly(e) => Some(e),
            Error::Solve(e) => Some(e),
            Error::Io { source, .. } => Some(source),
            Error::Config(_) => None,
        }
    }
}

impl From<problem::ProblemError> for Error {
    fn from(e: problem::ProblemError) -> Self {
        Error::Problem(e)
    }
}

impl From<expr::EvalError> for Error {
    fn from(e: expr::EvalError) -> Self {
        Error::Eval(e)
    }
}

impl From<chebyshev::ChebyshevError> for Error {
    fn from(e: chebyshev::ChebyshevError) -> Self {
        Error::Chebyshev(e)
    }
}

impl From<quadrature::QuadratureError> for Error {
    fn from(e: quadrature::QuadratureError) -> Self {
        Error::Quadrature(e)
    }
}

impl From<assembly::AssemblyError> for Error {
    fn from(e: assembly::AssemblyError) -> Self {
        Error::Assembly(e)
    }
}

impl From<solver::SolveError> for Error {
    fn from(e: solver::SolveError) -> Self {
        Error::Solve(e)
    }
}

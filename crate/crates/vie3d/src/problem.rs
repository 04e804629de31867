//! The declarative problem object: a three-dimensional Volterra integral
//! equation of the second kind
//!
//! ```text
//! u(x,y,z) = f(x,y,z) + int_0^z int_0^y int_0^x K(x,y,z,r,s,t) G(u(r,s,t)) dr ds dt
//! ```
//!
//! over a box `[0,X] x [0,Y] x [0,Z]`, with an optional pointwise
//! nonlinearity `G` (identity by default) and an optional reference
//! solution used only for error reporting. The stored kernel carries any
//! leading sign, so downstream code only ever implements the `+` form.
//!
//! Problems are declared in a line-based text format, one
//! `key = "expression"` per line; see [`ProblemSpec::parse`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::expr::{self, Bindings, EvalError, Expr, ParseError, Var, VarSet};

/// The domain box `[0,X] x [0,Y] x [0,Z]` with positive upper limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Box3 {
    pub const UNIT: Box3 = Box3 {
        x: 1.0,
        y: 1.0,
        z: 1.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Result<Box3, ProblemError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(x) || !ok(y) || !ok(z) {
            return Err(ProblemError::InvalidDomain {
                message: format!("upper limits must be positive and finite, got {x} {y} {z}"),
            });
        }
        Ok(Box3 { x, y, z })
    }

    pub fn contains(&self, x: f64, y: f64, z: f64) -> bool {
        (0.0..=self.x).contains(&x) && (0.0..=self.y).contains(&y) && (0.0..=self.z).contains(&z)
    }

    pub fn volume(&self) -> f64 {
        self.x * self.y * self.z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemError {
    /// A mandatory key (`f` or `kernel`) is absent.
    MissingKey(&'static str),
    /// A line is not of the form `key = value`.
    Malformed { line: usize, message: String },
    /// A key appeared twice.
    DuplicateKey { line: usize, key: String },
    /// A key that the format does not define.
    UnknownKey { line: usize, key: String },
    /// An expression failed to parse; the offset is within the quoted text.
    Expression {
        line: usize,
        key: String,
        source: ParseError,
    },
    /// An expression references a variable its slot does not allow.
    VariableMisuse { key: String, variable: Var },
    /// Bad `domain` line.
    InvalidDomain { message: String },
    /// Unknown built-in fixture id.
    UnknownFixture(String),
}

impl fmt::Display for ProblemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemError::MissingKey(key) => write!(f, "missing mandatory key \"{key}\""),
            ProblemError::Malformed { line, message } => {
                write!(f, "line {line}: {message}")
            }
            ProblemError::DuplicateKey { line, key } => {
                write!(f, "line {line}: duplicate key \"{key}\"")
            }
            ProblemError::UnknownKey { line, key } => {
                write!(f, "line {line}: unknown key \"{key}\"")
            }
            ProblemError::Expression { line, key, source } => {
                write!(f, "line {line}, key \"{key}\": {source}")
            }
            ProblemError::VariableMisuse { key, variable } => {
                write!(f, "key \"{key}\" may not reference variable \"{variable}\"")
            }
            ProblemError::InvalidDomain { message } => write!(f, "domain: {message}"),
            ProblemError::UnknownFixture(id) => {
                write!(f, "unknown fixture \"{id}\" (try the `fixtures` command)")
            }
        }
    }
}

impl std::error::Error for ProblemError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            ProblemError::Expression { source, .. } => Some(source),
            _ => None,
        }
    }
}

/// A fully parsed problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    f: Expr,
    kernel: Expr,
    nonlinearity: Expr,
    exact: Option<Expr>,
    domain: Box3,
}

fn check_vars(key: &'static str, e: &Expr, allowed: VarSet) -> Result<(), ProblemError> {
    let vars = e.variables();
    if let Some(v) = vars.iter().find(|v| !allowed.contains(*v)) {
        return Err(ProblemError::VariableMisuse {
            key: key.to_string(),
            variable: v,
        });
    }
    Ok(())
}

impl ProblemSpec {
    /// Builds a spec from already-parsed expressions, validating variable
    /// permissions: `f` and `exact` in `(x,y,z)`, the kernel in
    /// `(x,y,z,r,s,t)`, the nonlinearity in `u` alone.
    pub fn new(
        f: Expr,
        kernel: Expr,
        nonlinearity: Option<Expr>,
        exact: Option<Expr>,
        domain: Box3,
    ) -> Result<ProblemSpec, ProblemError> {
        let outer = VarSet::of(&[Var::X, Var::Y, Var::Z]);
        let all_kernel = VarSet::of(&[Var::X, Var::Y, Var::Z, Var::R, Var::S, Var::T]);
        check_vars("f", &f, outer)?;
        check_vars("kernel", &kernel, all_kernel)?;
        let nonlinearity = nonlinearity.unwrap_or(Expr::Variable(Var::U));
        check_vars("nonlinearity", &nonlinearity, VarSet::of(&[Var::U]))?;
        if let Some(e) = &exact {
            check_vars("exact", e, outer)?;
        }
        Ok(ProblemSpec {
            f,
            kernel,
            nonlinearity,
            exact,
            domain,
        })
    }

    /// Parses the problem-file format: UTF-8 text, `#` comments, one
    /// `key = "expression"` per line. Keys: `f`, `kernel` (mandatory),
    /// `nonlinearity` (default `"u"`), `exact` (optional), `domain`
    /// (three positive reals, default `1 1 1`).
    pub fn parse(text: &str) -> Result<ProblemSpec, ProblemError> {
        let mut f = None;
        let mut kernel = None;
        let mut nonlinearity = None;
        let mut exact = None;
        let mut domain = None;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ProblemError::Malformed {
                line: line_no,
                message: "expected `key = value`".to_string(),
            })?;
            let key = key.trim();
            let value = value.trim();

            let parse_quoted = |slot_name: &str| -> Result<Expr, ProblemError> {
                let inner = value
                    .strip_prefix('"')
                    .and_then(|v| v.strip_suffix('"'))
                    .ok_or_else(|| ProblemError::Malformed {
                        line: line_no,
                        message: format!("value for \"{slot_name}\" must be a quoted expression"),
                    })?;
                expr::parse(inner).map_err(|source| ProblemError::Expression {
                    line: line_no,
                    key: slot_name.to_string(),
                    source,
                })
            };

            let check_fresh = |slot: bool| -> Result<(), ProblemError> {
                if slot {
                    Err(ProblemError::DuplicateKey {
                        line: line_no,
                        key: key.to_string(),
                    })
                } else {
                    Ok(())
                }
            };

            match key {
                "f" => {
                    check_fresh(f.is_some())?;
                    f = Some(parse_quoted("f")?);
                }
                "kernel" => {
                    check_fresh(kernel.is_some())?;
                    kernel = Some(parse_quoted("kernel")?);
                }
                "nonlinearity" => {
                    check_fresh(nonlinearity.is_some())?;
                    nonlinearity = Some(parse_quoted("nonlinearity")?);
                }
                "exact" => {
                    check_fresh(exact.is_some())?;
                    exact = Some(parse_quoted("exact")?);
                }
                "domain" => {
                    check_fresh(domain.is_some())?;
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    if parts.len() != 3 {
                        return Err(ProblemError::InvalidDomain {
                            message: format!(
                                "line {line_no}: expected three reals, got \"{value}\""
                            ),
                        });
                    }
                    let mut vals = [0.0f64; 3];
                    for (slot, part) in vals.iter_mut().zip(parts.iter()) {
                        *slot = part.parse().map_err(|_| ProblemError::InvalidDomain {
                            message: format!("line {line_no}: \"{part}\" is not a number"),
                        })?;
                    }
                    domain = Some(Box3::new(vals[0], vals[1], vals[2])?);
                }
                other => {
                    return Err(ProblemError::UnknownKey {
                        line: line_no,
                        key: other.to_string(),
                    });
                }
            }
        }

        let f = f.ok_or(ProblemError::MissingKey("f"))?;
        let kernel = kernel.ok_or(ProblemError::MissingKey("kernel"))?;
        ProblemSpec::new(
            f,
            kernel,
            nonlinearity,
            exact,
            domain.unwrap_or(Box3::UNIT),
        )
    }

    pub fn f(&self) -> &Expr {
        &self.f
    }

    pub fn kernel(&self) -> &Expr {
        &self.kernel
    }

    pub fn nonlinearity(&self) -> &Expr {
        &self.nonlinearity
    }

    pub fn exact_solution(&self) -> Option<&Expr> {
        self.exact.as_ref()
    }

    pub fn domain(&self) -> Box3 {
        self.domain
    }

    /// A spec is linear exactly when its nonlinearity is the identity `u`.
    pub fn is_linear(&self) -> bool {
        self.nonlinearity == Expr::Variable(Var::U)
    }

    pub fn eval_f(&self, x: f64, y: f64, z: f64) -> Result<f64, EvalError> {
        self.f.eval(&Bindings::point(x, y, z))
    }

    #[allow(clippy::many_single_char_names)]
    pub fn eval_kernel(
        &self,
        x: f64,
        y: f64,
        z: f64,
        r: f64,
        s: f64,
        t: f64,
    ) -> Result<f64, EvalError> {
        self.kernel.eval(&Bindings::kernel(x, y, z, r, s, t))
    }

    pub fn eval_nonlinearity(&self, u: f64) -> Result<f64, EvalError> {
        self.nonlinearity.eval(&Bindings::scalar(u))
    }

    pub fn eval_exact(&self, x: f64, y: f64, z: f64) -> Option<Result<f64, EvalError>> {
        self.exact
            .as_ref()
            .map(|e| e.eval(&Bindings::point(x, y, z)))
    }
}

impl fmt::Display for ProblemSpec {
    /// Prints in the problem-file format; `ProblemSpec::parse` of the
    /// output reconstructs an equivalent spec.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "f = \"{}\"", self.f)?;
        writeln!(f, "kernel = \"{}\"", self.kernel)?;
        writeln!(f, "nonlinearity = \"{}\"", self.nonlinearity)?;
        if let Some(exact) = &self.exact {
            writeln!(f, "exact = \"{exact}\"")?;
        }
        writeln!(
            f,
            "domain = {} {} {}",
            self.domain.x, self.domain.y, self.domain.z
        )
    }
}

// ---------------------------------------------------------------------------
// built-in fixtures
// ---------------------------------------------------------------------------

/// Ids of the built-in fixtures: five problems with known exact
/// solutions, covering constant, separable, and trigonometric kernels
/// plus one quadratic nonlinearity.
pub const FIXTURE_IDS: [&str; 5] = ["ex3_1", "ex3_2", "ex3_3", "ex3_4", "ex3_5"];

/// Problem-file sources for the fixtures. The stored kernel absorbs any
/// leading minus sign of the integral term.
fn fixture_source(id: &str) -> Option<&'static str> {
    match id {
        "ex3_1" => Some(
            "# u = f - Int u, exact u = x + y + z\n\
             f = \"x + y + z + (x^2*y*z + x*y^2*z + x*y*z^2)/2\"\n\
             kernel = \"-1\"\n\
             exact = \"x + y + z\"\n",
        ),
        "ex3_2" => Some(
            "# u = f - 24 x^2 y Int u, exact u = x^2 y + y z^2 + x y z\n\
             f = \"x^2*y + y*z^2 + x*y*z + 24*x^2*y*(x*y^2*z^3/6 + x^2*y^2*z^2/8 + x^3*y^2*z/6)\"\n\
             kernel = \"-24*x^2*y\"\n\
             exact = \"x^2*y + y*z^2 + x*y*z\"\n",
        ),
        "ex3_3" => Some(
            "# nonlinear: u = xyz - (xyz)^3/27 + Int u^2, exact u = x y z\n\
             f = \"x*y*z - (x*y*z)^3/27\"\n\
             kernel = \"1\"\n\
             nonlinearity = \"u^2\"\n\
             exact = \"x*y*z\"\n",
        ),
        "ex3_4" => Some(
            "# u = x cos z - x^3 y^3 / 9 sin z + Int r s^2 u, exact u = x cos z\n\
             f = \"x*cos(z) - (x^3*y^3)/9*sin(z)\"\n\
             kernel = \"r*s^2\"\n\
             exact = \"x*cos(z)\"\n",
        ),
        "ex3_5" => Some(
            "# u = f + Int u, exact u = e^(x+y+z)\n\
             f = \"exp(x+y) + exp(x+z) + exp(y+z) - exp(x) - exp(y) - exp(z) + 1\"\n\
             kernel = \"1\"\n\
             exact = \"exp(x + y + z)\"\n",
        ),
        _ => None,
    }
}

/// One-line summaries for the `fixtures` listing.
pub fn fixture_summary(id: &str) -> Option<&'static str> {
    match id {
        "ex3_1" => Some("linear, kernel -1, exact solution x + y + z"),
        "ex3_2" => Some("linear, kernel -24 x^2 y, exact solution x^2 y + y z^2 + x y z"),
        "ex3_3" => Some("nonlinear (G = u^2), exact solution x y z"),
        "ex3_4" => Some("linear, kernel r s^2, exact solution x cos(z)"),
        "ex3_5" => Some("linear, kernel 1, exact solution exp(x + y + z)"),
        _ => None,
    }
}

/// Loads one of the built-in fixtures.
pub fn builtin_fixture(id: &str) -> Result<ProblemSpec, ProblemError> {
    let source = fixture_source(id).ok_or_else(|| ProblemError::UnknownFixture(id.to_string()))?;
    ProblemSpec::parse(source)
}

/// The seven evaluation points tabulated for the fourth and fifth
/// fixtures; used as default error-table points when no point list is
/// supplied.
pub fn fixture_eval_points(id: &str) -> Option<Vec<[f64; 3]>> {
    match id {
        "ex3_4" | "ex3_5" => Some(vec![
            [0.1, 0.1, 0.1],
            [0.01, 0.1, 0.1],
            [0.01, 0.01, 0.1],
            [0.01, 0.01, 0.01],
            [0.001, 0.01, 0.01],
            [0.001, 0.001, 0.01],
            [0.001, 0.001, 0.001],
        ]),
        _ => None,
    }
}

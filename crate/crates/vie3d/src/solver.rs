//! Solvers for the assembled collocation systems: dense LU with partial
//! pivoting for the linear path, damped Newton iteration with analytic
//! Jacobian for the nonlinear path.
//!
//! The systems are small and dense ((N+1)^3 unknowns), so direct
//! factorization is the right tool; no iterative linear solver is needed.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::assembly::{AssemblyError, LinearSystem, ResidualSystem};
use crate::matrix::{vec_norm_inf, DenseMatrix};

#[derive(Debug, Clone, PartialEq)]
pub enum SolveError {
    /// Pivot fell below the relative threshold during elimination.
    Singular { column: usize, pivot: f64 },
    /// Newton exhausted its iteration budget; carries the best iterate.
    MaxIterations {
        residual_norm: f64,
        best: Vec<f64>,
        trace: NewtonTrace,
    },
    /// The Jacobian factorization failed at some Newton iterate.
    SingularJacobian { iteration: usize, column: usize },
    /// Residual/Jacobian evaluation failed.
    Assembly(AssemblyError),
    NotSquare { rows: usize, cols: usize },
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::Singular { column, pivot } => write!(
                f,
                "numerically singular system: pivot {pivot:e} in column {column}"
            ),
            SolveError::MaxIterations { residual_norm, .. } => write!(
                f,
                "Newton iteration did not converge; best residual norm {residual_norm:e}"
            ),
            SolveError::SingularJacobian { iteration, column } => write!(
                f,
                "singular Jacobian at Newton iteration {iteration} (column {column})"
            ),
            SolveError::Assembly(e) => write!(f, "{e}"),
            SolveError::NotSquare { rows, cols } => {
                write!(f, "system is not square: {rows} x {cols}")
            }
        }
    }
}

impl std::error::Error for SolveError {}

impl From<AssemblyError> for SolveError {
    fn from(e: AssemblyError) -> Self {
        SolveError::Assembly(e)
    }
}

// ---------------------------------------------------------------------------
// dense LU with partial pivoting
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct LinearSolveOptions {
    /// Singularity threshold, relative to the largest entry of each column
    /// of the original matrix.
    pub pivot_threshold: f64,
    /// Whether [`lu_solve`] also reports the scaled residual of the
    /// computed solution.
    pub residual_check: bool,
}

impl Default for LinearSolveOptions {
    fn default() -> Self {
        LinearSolveOptions {
            pivot_threshold: 1e-12,
            residual_check: true,
        }
    }
}

/// LU factorization `P A = L U` with partial pivoting, plus the
/// diagnostics the factorization makes cheap to compute.
#[derive(Debug, Clone)]
pub struct LuFactors {
    /// Combined L (below diagonal, unit diagonal implied) and U storage.
    lu: DenseMatrix,
    /// Row permutation: `perm[k]` is the original row in position `k`.
    perm: Vec<usize>,
    /// max |U| / max |A|, the classic element-growth diagnostic.
    growth_factor: f64,
}

impl LuFactors {
    /// Factors a square matrix. `pivot_threshold` is relative to the
    /// largest absolute entry of each column of `matrix`.
    pub fn factor(matrix: &DenseMatrix, pivot_threshold: f64) -> Result<LuFactors, SolveError> {
        if !matrix.is_square() {
            return Err(SolveError::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        let n = matrix.rows();
        let mut lu = matrix.clone();
        let mut perm: Vec<usize> = (0..n).collect();

        // column scales of the original matrix, for the relative threshold
        let mut col_scale = vec![0.0f64; n];
        for r in 0..n {
            for (c, scale) in col_scale.iter_mut().enumerate() {
                *scale = scale.max(matrix.get(r, c).abs());
            }
        }
        let a_max = matrix.max_abs();

        for k in 0..n {
            // pivot search in column k
            let mut pivot_row = k;
            let mut pivot_val = lu.get(k, k).abs();
            for r in (k + 1)..n {
                let v = lu.get(r, k).abs();
                if v > pivot_val {
                    pivot_val = v;
                    pivot_row = r;
                }
            }
            let scale = if col_scale[k] > 0.0 { col_scale[k] } else { 1.0 };
            if pivot_val <= pivot_threshold * scale {
                return Err(SolveError::Singular {
                    column: k,
                    pivot: lu.get(pivot_row, k),
                });
            }
            if pivot_row != k {
                perm.swap(k, pivot_row);
                for c in 0..n {
                    let a = lu.get(k, c);
                    let b = lu.get(pivot_row, c);
                    lu.set(k, c, b);
                    lu.set(pivot_row, c, a);
                }
            }
            let pivot = lu.get(k, k);
            for r in (k + 1)..n {
                let factor = lu.get(r, k) / pivot;
                lu.set(r, k, factor);
                for c in (k + 1)..n {
                    let updated = lu.get(r, c) - factor * lu.get(k, c);
                    lu.set(r, c, updated);
                }
            }
        }

        // element growth: max |U| over max |A|
        let mut u_max = 0.0f64;
        for r in 0..n {
            for c in r..n {
                u_max = u_max.max(lu.get(r, c).abs());
            }
        }
        let growth_factor = if a_max > 0.0 { u_max / a_max } else { 1.0 };
        Ok(LuFactors {
            lu,
            perm,
            growth_factor,
        })
    }

    pub fn growth_factor(&self) -> f64 {
        self.growth_factor
    }

    /// Forward/back substitution for one right-hand side.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.lu.rows();
        assert_eq!(rhs.len(), n, "rhs length mismatch");
        let mut x: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        // Ly = Pb
        for r in 1..n {
            let mut acc = x[r];
            for c in 0..r {
                acc -= self.lu.get(r, c) * x[c];
            }
            x[r] = acc;
        }
        // Ux = y
        for r in (0..n).rev() {
            let mut acc = x[r];
            for c in (r + 1)..n {
                acc -= self.lu.get(r, c) * x[c];
            }
            x[r] = acc / self.lu.get(r, r);
        }
        x
    }

    /// Lower-bound estimate of the infinity-norm condition number, from a
    /// few random +-1 probes of the inverse.
    pub fn condition_estimate(&self, matrix: &DenseMatrix) -> f64 {
        let n = self.lu.rows();
        let norm_a = matrix.norm_inf();
        let mut inv_norm = 0.0f64;
        let mut state = 0x9E3779B97F4A7C15u64;
        for _ in 0..4 {
            let probe: Vec<f64> = (0..n)
                .map(|_| {
                    // xorshift; only signs matter
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    if state & 1 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                })
                .collect();
            let x = self.solve(&probe);
            inv_norm = inv_norm.max(vec_norm_inf(&x));
        }
        norm_a * inv_norm
    }
}

/// Solution of a linear collocation system with diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LuSolution {
    pub coefficients: Vec<f64>,
    pub growth_factor: f64,
    pub condition_estimate: f64,
    /// `||A x - b||_inf / (||A||_inf ||x||_inf + ||b||_inf)` when
    /// requested.
    pub relative_residual: Option<f64>,
}

/// Solves an assembled linear system by LU with partial pivoting.
pub fn lu_solve(
    system: &LinearSystem,
    options: &LinearSolveOptions,
) -> Result<LuSolution, SolveError> {
    let factors = LuFactors::factor(system.matrix(), options.pivot_threshold)?;
    let coefficients = factors.solve(system.rhs());
    let relative_residual = if options.residual_check {
        let r = system.residual_of(&coefficients);
        let denom = system.matrix().norm_inf() * vec_norm_inf(&coefficients)
            + vec_norm_inf(system.rhs());
        Some(if denom > 0.0 {
            vec_norm_inf(&r) / denom
        } else {
            vec_norm_inf(&r)
        })
    } else {
        None
    };
    Ok(LuSolution {
        condition_estimate: factors.condition_estimate(system.matrix()),
        growth_factor: factors.growth_factor(),
        coefficients,
        relative_residual,
    })
}

// ---------------------------------------------------------------------------
// damped Newton
// ---------------------------------------------------------------------------

/// Starting point policy for the Newton iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialGuess {
    /// Start from the zero coefficient vector.
    #[default]
    Zero,
    /// Start from the supplied vector (e.g. the solution of the
    /// linearized problem with `G` replaced by the identity).
    Warm,
}

/// Jacobian evaluation strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JacobianMode {
    Analytic,
    FiniteDifference { step: f64 },
}

#[derive(Debug, Clone)]
pub struct NewtonOptions {
    /// Stopping tolerance on the residual sup-norm.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Backtracking halvings allowed per step.
    pub max_halvings: usize,
    pub initial_guess: InitialGuess,
    pub warm_start: Option<Vec<f64>>,
    pub jacobian: JacobianMode,
    pub linear: LinearSolveOptions,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tolerance: 1e-12,
            max_iterations: 50,
            max_halvings: 20,
            initial_guess: InitialGuess::Zero,
            warm_start: None,
            jacobian: JacobianMode::Analytic,
            linear: LinearSolveOptions::default(),
        }
    }
}

/// One accepted Newton step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonStep {
    /// Residual sup-norm after the step.
    pub residual_norm: f64,
    /// Backtracking halvings used by the step.
    pub halvings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonTrace {
    /// Residual sup-norm at the initial guess.
    pub initial_residual: f64,
    pub steps: Vec<NewtonStep>,
    pub converged: bool,
}

impl NewtonTrace {
    /// Residual norms including the initial one.
    pub fn norms(&self) -> Vec<f64> {
        let mut out = vec![self.initial_residual];
        out.extend(self.steps.iter().map(|s| s.residual_norm));
        out
    }
}

/// Damped Newton iteration on the collocation residual. Each step solves
/// `J delta = -R` by LU and backtracks with factor 1/2 until the residual
/// sup-norm decreases.
pub fn newton_solve(
    system: &ResidualSystem,
    options: &NewtonOptions,
) -> Result<(Vec<f64>, NewtonTrace), SolveError> {
    let dim = system.dim();
    let mut current = match options.initial_guess {
        InitialGuess::Zero => vec![0.0; dim],
        InitialGuess::Warm => options
            .warm_start
            .clone()
            .unwrap_or_else(|| vec![0.0; dim]),
    };
    let mut residual = system.residual(&current)?;
    let mut norm = vec_norm_inf(&residual);

    let mut trace = NewtonTrace {
        initial_residual: norm,
        steps: Vec::new(),
        converged: false,
    };
    let mut best = current.clone();
    let mut best_norm = norm;

    for iteration in 0..options.max_iterations {
        if norm <= options.tolerance {
            trace.converged = true;
            return Ok((current, trace));
        }
        let jacobian = match options.jacobian {
            JacobianMode::Analytic => system.jacobian(&current)?,
            JacobianMode::FiniteDifference { step } => system.jacobian_fd(&current, step)?,
        };
        let factors = LuFactors::factor(&jacobian, options.linear.pivot_threshold).map_err(
            |e| match e {
                SolveError::Singular { column, .. } => {
                    SolveError::SingularJacobian { iteration, column }
                }
                other => other,
            },
        )?;
        let neg_residual: Vec<f64> = residual.iter().map(|v| -v).collect();
        let delta = factors.solve(&neg_residual);

        // backtracking line search: halve until the residual norm drops
        let mut lambda = 1.0;
        let mut accepted: Option<(Vec<f64>, Vec<f64>, f64, usize)> = None;
        let mut fallback: Option<(Vec<f64>, Vec<f64>, f64, usize)> = None;
        for halvings in 0..=options.max_halvings {
            let candidate: Vec<f64> = current
                .iter()
                .zip(delta.iter())
                .map(|(a, d)| a + lambda * d)
                .collect();
            let cand_residual = system.residual(&candidate)?;
            let cand_norm = vec_norm_inf(&cand_residual);
            if cand_norm < norm {
                accepted = Some((candidate, cand_residual, cand_norm, halvings));
                break;
            }
            let better_fallback = fallback
                .as_ref()
                .map(|(_, _, n, _)| cand_norm < *n)
                .unwrap_or(true);
            if better_fallback {
                fallback = Some((candidate, cand_residual, cand_norm, halvings));
            }
            lambda *= 0.5;
        }
        let (next, next_residual, next_norm, halvings) = accepted
            .or(fallback)
            .expect("line search evaluates at least one candidate");

        current = next;
        residual = next_residual;
        norm = next_norm;
        trace.steps.push(NewtonStep {
            residual_norm: norm,
            halvings,
        });
        if norm < best_norm {
            best = current.clone();
            best_norm = norm;
        }
    }

    if norm <= options.tolerance {
        trace.converged = true;
        return Ok((current, trace));
    }
    Err(SolveError::MaxIterations {
        residual_norm: best_norm,
        best,
        trace,
    })
}

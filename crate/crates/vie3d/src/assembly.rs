//! Assembly of the `(N+1)^3`-equation collocation system: a dense linear
//! system for linear problems, and residual/Jacobian evaluators for
//! nonlinear ones.
//!
//! Each equation collocates the integral equation at a grid point
//! `(x_l, y_m, z_n)`; the matrix entry for basis triple `(i, j, k)` is
//!
//! ```text
//! T*_i(x_l) T*_j(y_m) T*_k(z_n)
//!   - int_0^{z_n} int_0^{y_m} int_0^{x_l} K(x_l,y_m,z_n,r,s,t) T*_i(r) T*_j(s) T*_k(t) dr ds dt
//! ```
//!
//! For a fixed collocation point, all `(N+1)^3` basis integrals share the
//! same scaled quadrature nodes, cached per-axis basis evaluations, and
//! cached kernel samples. Rows are filled in parallel; every per-entry sum
//! runs in a fixed sequential order, so the assembled values are bitwise
//! identical regardless of the worker count.

use std::fmt;

use rayon::prelude::*;

use crate::chebyshev::{self, ChebyshevError, CollocationGrid, TripleIndexer};
use crate::expr::{Bindings, DiffError, EvalError, Expr};
use crate::matrix::DenseMatrix;
use crate::problem::{Box3, ProblemSpec};
use crate::quadrature::QuadratureRule;

#[derive(Debug, Clone, PartialEq)]
pub enum AssemblyError {
    /// `assemble_linear` was given a spec whose nonlinearity is not `u`.
    NonlinearSpec,
    Chebyshev(ChebyshevError),
    /// Evaluation of `f` failed at a collocation point.
    FreeTermEval {
        point: (f64, f64, f64),
        source: EvalError,
    },
    /// Evaluation of the kernel failed at a quadrature node.
    KernelEval {
        point: (f64, f64, f64),
        node: (f64, f64, f64),
        source: EvalError,
    },
    /// Evaluation of the nonlinearity (or its derivative) failed.
    NonlinearityEval { argument: f64, source: EvalError },
    /// The nonlinearity could not be differentiated.
    Differentiation(DiffError),
    /// Coefficient vector length does not match `(N+1)^3`.
    DimensionMismatch { expected: usize, actual: usize },
    /// An assembled entry came out NaN or infinite.
    NonFiniteEntry {
        row: (usize, usize, usize),
        col: (usize, usize, usize),
    },
}

impl fmt::Display for AssemblyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssemblyError::NonlinearSpec => {
                write!(f, "assemble_linear requires a linear spec (nonlinearity u)")
            }
            AssemblyError::Chebyshev(e) => write!(f, "{e}"),
            AssemblyError::FreeTermEval { point, source } => {
                write!(
                    f,
                    "evaluating f at collocation point ({}, {}, {}): {source}",
                    point.0, point.1, point.2
                )
            }
            AssemblyError::KernelEval {
                point,
                node,
                source,
            } => write!(
                f,
                "evaluating kernel at point ({}, {}, {}), node ({}, {}, {}): {source}",
                point.0, point.1, point.2, node.0, node.1, node.2
            ),
            AssemblyError::NonlinearityEval { argument, source } => {
                write!(f, "evaluating nonlinearity at u = {argument}: {source}")
            }
            AssemblyError::Differentiation(e) => write!(f, "{e}"),
            AssemblyError::DimensionMismatch { expected, actual } => {
                write!(f, "expected {expected} coefficients, got {actual}")
            }
            AssemblyError::NonFiniteEntry { row, col } => write!(
                f,
                "non-finite entry at collocation triple {row:?}, basis triple {col:?}"
            ),
        }
    }
}

impl std::error::Error for AssemblyError {}

impl From<ChebyshevError> for AssemblyError {
    fn from(e: ChebyshevError) -> Self {
        AssemblyError::Chebyshev(e)
    }
}

impl From<DiffError> for AssemblyError {
    fn from(e: DiffError) -> Self {
        AssemblyError::Differentiation(e)
    }
}

// ---------------------------------------------------------------------------
// normalized view of a problem on the unit cube
// ---------------------------------------------------------------------------

/// View of a problem rescaled to `[0,1]^3`: each axis coordinate is mapped
/// through the domain box and the kernel picks up the Jacobian `X Y Z` of
/// the change of variables.
struct UnitProblem<'a> {
    spec: &'a ProblemSpec,
    scale: Box3,
    jacobian: f64,
}

impl<'a> UnitProblem<'a> {
    fn new(spec: &'a ProblemSpec) -> Self {
        let scale = spec.domain();
        UnitProblem {
            spec,
            jacobian: scale.volume(),
            scale,
        }
    }

    fn f(&self, x: f64, y: f64, z: f64) -> Result<f64, EvalError> {
        self.spec
            .eval_f(self.scale.x * x, self.scale.y * y, self.scale.z * z)
    }

    fn kernel(&self, x: f64, y: f64, z: f64, r: f64, s: f64, t: f64) -> Result<f64, EvalError> {
        Ok(self.jacobian
            * self.spec.eval_kernel(
                self.scale.x * x,
                self.scale.y * y,
                self.scale.z * z,
                self.scale.x * r,
                self.scale.y * s,
                self.scale.z * t,
            )?)
    }
}

// ---------------------------------------------------------------------------
// per-point cached data
// ---------------------------------------------------------------------------

/// Cached data for one collocation point: per-axis basis values at the
/// scaled quadrature nodes (layout `[basis fn][node]`), and the kernel
/// samples pre-multiplied by the tensor quadrature weights.
struct PointBlock {
    /// `x_l * y_m * z_n`; 0 marks a degenerate point with no integral term.
    vol: f64,
    basis_r: Vec<f64>,
    basis_s: Vec<f64>,
    basis_t: Vec<f64>,
    /// `W_p W_q W_w * K(point, r_p, s_q, t_w)`, flat `[p][q][w]`.
    wkernel: Vec<f64>,
}

impl PointBlock {
    fn degenerate() -> Self {
        PointBlock {
            vol: 0.0,
            basis_r: Vec::new(),
            basis_s: Vec::new(),
            basis_t: Vec::new(),
            wkernel: Vec::new(),
        }
    }
}

/// Basis values at the scaled nodes `axis_value * node_p`, stored
/// `[i * q + p] = T*_i(axis_value * node_p)`.
fn scaled_basis(order: usize, axis_value: f64, nodes: &[f64]) -> Vec<f64> {
    let q = nodes.len();
    let np1 = order + 1;
    let mut out = vec![0.0; np1 * q];
    let mut column = Vec::with_capacity(np1);
    for (p, node) in nodes.iter().enumerate() {
        chebyshev::shifted_cheb_all_into(order, axis_value * node, &mut column);
        for (i, v) in column.iter().enumerate() {
            out[i * q + p] = *v;
        }
    }
    out
}

fn build_point_block(
    unit: &UnitProblem<'_>,
    point: (f64, f64, f64),
    order: usize,
    rule: &QuadratureRule,
) -> Result<PointBlock, AssemblyError> {
    let (x, y, z) = point;
    let vol = x * y * z;
    if vol == 0.0 {
        return Ok(PointBlock::degenerate());
    }
    let nodes = rule.nodes();
    let weights = rule.weights();
    let q = nodes.len();
    let basis_r = scaled_basis(order, x, nodes);
    let basis_s = scaled_basis(order, y, nodes);
    let basis_t = scaled_basis(order, z, nodes);
    let mut wkernel = vec![0.0; q * q * q];
    for p in 0..q {
        let r = x * nodes[p];
        for qq in 0..q {
            let s = y * nodes[qq];
            let wpq = weights[p] * weights[qq];
            let base = (p * q + qq) * q;
            for w in 0..q {
                let t = z * nodes[w];
                let k =
                    unit.kernel(x, y, z, r, s, t)
                        .map_err(|source| AssemblyError::KernelEval {
                            point,
                            node: (r, s, t),
                            source,
                        })?;
                wkernel[base + w] = wpq * weights[w] * k;
            }
        }
    }
    Ok(PointBlock {
        vol,
        basis_r,
        basis_s,
        basis_t,
        wkernel,
    })
}

/// Basis values at the collocation grid, `[l * (N+1) + i] = T*_i(xs[l])`.
/// The grid is identical on all three axes.
fn basis_at_grid(grid: &CollocationGrid) -> Vec<f64> {
    let order = grid.order();
    let np1 = order + 1;
    let mut out = vec![0.0; np1 * np1];
    let mut row = Vec::with_capacity(np1);
    for (l, x) in grid.xs().iter().enumerate() {
        chebyshev::shifted_cheb_all_into(order, *x, &mut row);
        out[l * np1..(l + 1) * np1].copy_from_slice(&row);
    }
    out
}

/// Fills one row: `out[col] = interp - vol * sum_nodes wg * T_i T_j T_k`,
/// where `wg` already contains quadrature weights, kernel samples, and any
/// pointwise factor (`G'(u_N)` for Jacobians). Fixed summation order.
#[allow(clippy::too_many_arguments)]
fn fill_integral_row(
    block: &PointBlock,
    wg: &[f64],
    q: usize,
    np1: usize,
    bl: &[f64],
    bm: &[f64],
    bn: &[f64],
    out: &mut [f64],
) {
    let mut col = 0;
    for i in 0..np1 {
        let br_row = &block.basis_r[i * q..(i + 1) * q];
        for j in 0..np1 {
            let bs_row = &block.basis_s[j * q..(j + 1) * q];
            let interp_ij = bl[i] * bm[j];
            for k in 0..np1 {
                let bt_row = &block.basis_t[k * q..(k + 1) * q];
                let mut acc = 0.0;
                for (p, tr) in br_row.iter().enumerate() {
                    for (qq, ts) in bs_row.iter().enumerate() {
                        let trs = tr * ts;
                        let base = (p * q + qq) * q;
                        for (w, tt) in bt_row.iter().enumerate() {
                            acc += wg[base + w] * trs * tt;
                        }
                    }
                }
                out[col] = interp_ij * bn[k] - block.vol * acc;
                col += 1;
            }
        }
    }
}

/// Fills one row of the pure interpolation matrix (degenerate point,
/// empty integration box).
fn fill_interpolation_row(np1: usize, bl: &[f64], bm: &[f64], bn: &[f64], out: &mut [f64]) {
    let mut col = 0;
    for i in 0..np1 {
        for j in 0..np1 {
            let ij = bl[i] * bm[j];
            for k in 0..np1 {
                out[col] = ij * bn[k];
                col += 1;
            }
        }
    }
}

fn check_row_finite(
    row: &[f64],
    row_idx: usize,
    indexer: &TripleIndexer,
) -> Result<(), AssemblyError> {
    if let Some(col) = row.iter().position(|v| !v.is_finite()) {
        return Err(AssemblyError::NonFiniteEntry {
            row: indexer.triple(row_idx),
            col: indexer.triple(col),
        });
    }
    Ok(())
}

/// Evaluates `u_N` (given by `coeffs`) at every tensor quadrature node of
/// a point block, by staged contractions over the three axes. Returns a
/// flat `[p][q][w]` array.
fn eval_on_nodes(coeffs: &[f64], block: &PointBlock, q: usize, np1: usize) -> Vec<f64> {
    // stage 1: contract the i axis -> c1[(j*np1 + k)*q + p]
    let mut c1 = vec![0.0; np1 * np1 * q];
    for j in 0..np1 {
        for k in 0..np1 {
            let out_base = (j * np1 + k) * q;
            for i in 0..np1 {
                let a = coeffs[(i * np1 + j) * np1 + k];
                let br_row = &block.basis_r[i * q..(i + 1) * q];
                for p in 0..q {
                    c1[out_base + p] += a * br_row[p];
                }
            }
        }
    }
    // stage 2: contract the j axis -> c2[(k*q + p)*q + qq]
    let mut c2 = vec![0.0; np1 * q * q];
    for k in 0..np1 {
        for p in 0..q {
            let out_base = (k * q + p) * q;
            for j in 0..np1 {
                let v = c1[(j * np1 + k) * q + p];
                let bs_row = &block.basis_s[j * q..(j + 1) * q];
                for qq in 0..q {
                    c2[out_base + qq] += v * bs_row[qq];
                }
            }
        }
    }
    // stage 3: contract the k axis -> vals[(p*q + qq)*q + w]
    let mut vals = vec![0.0; q * q * q];
    for p in 0..q {
        for qq in 0..q {
            let out_base = (p * q + qq) * q;
            for k in 0..np1 {
                let v = c2[(k * q + p) * q + qq];
                let bt_row = &block.basis_t[k * q..(k + 1) * q];
                for w in 0..q {
                    vals[out_base + w] += v * bt_row[w];
                }
            }
        }
    }
    vals
}

/// Evaluates `u_N` at a collocation point from the cached grid basis rows.
fn eval_at_point(coeffs: &[f64], np1: usize, bl: &[f64], bm: &[f64], bn: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..np1 {
        let mut sum_i = 0.0;
        for j in 0..np1 {
            let mut sum_j = 0.0;
            let base = (i * np1 + j) * np1;
            for k in 0..np1 {
                sum_j += coeffs[base + k] * bn[k];
            }
            sum_i += bm[j] * sum_j;
        }
        total += bl[i] * sum_i;
    }
    total
}

// ---------------------------------------------------------------------------
// linear path
// ---------------------------------------------------------------------------

/// The dense collocation system `A a = b` of a linear problem, together
/// with the index map between flat indices and `(l,m,n)` / `(i,j,k)`
/// triples.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    order: usize,
    quad_order: usize,
    matrix: DenseMatrix,
    rhs: Vec<f64>,
    indexer: TripleIndexer,
    grid: CollocationGrid,
}

impl LinearSystem {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    pub fn dim(&self) -> usize {
        self.indexer.len()
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn indexer(&self) -> TripleIndexer {
        self.indexer
    }

    pub fn grid(&self) -> &CollocationGrid {
        &self.grid
    }

    /// `A a - b`, the residual of a candidate coefficient vector.
    pub fn residual_of(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut r = self.matrix.matvec(coeffs);
        for (ri, bi) in r.iter_mut().zip(self.rhs.iter()) {
            *ri -= bi;
        }
        r
    }
}

/// Assembles the dense collocation system of a linear spec (`G = u`).
pub fn assemble_linear(
    spec: &ProblemSpec,
    order: usize,
    rule: &QuadratureRule,
) -> Result<LinearSystem, AssemblyError> {
    if !spec.is_linear() {
        return Err(AssemblyError::NonlinearSpec);
    }
    let grid = chebyshev::gcl_points(order)?;
    let indexer = TripleIndexer::new(order);
    let np1 = order + 1;
    let q = rule.order();
    let unit = UnitProblem::new(spec);
    let grid_basis = basis_at_grid(&grid);

    let dim = indexer.len();
    let mut matrix = DenseMatrix::zeros(dim, dim);
    let mut rhs = vec![0.0; dim];

    let results: Vec<Result<(), AssemblyError>> = matrix
        .par_row_chunks_mut()
        .zip(rhs.par_iter_mut())
        .enumerate()
        .map(|(row_idx, (out_row, rhs_slot))| {
            let (l, m, n) = indexer.triple(row_idx);
            let point = grid.point(l, m, n);
            *rhs_slot = unit
                .f(point.0, point.1, point.2)
                .map_err(|source| AssemblyError::FreeTermEval { point, source })?;
            let bl = &grid_basis[l * np1..(l + 1) * np1];
            let bm = &grid_basis[m * np1..(m + 1) * np1];
            let bn = &grid_basis[n * np1..(n + 1) * np1];
            let block = build_point_block(&unit, point, order, rule)?;
            if block.vol == 0.0 {
                fill_interpolation_row(np1, bl, bm, bn, out_row);
            } else {
                fill_integral_row(&block, &block.wkernel, q, np1, bl, bm, bn, out_row);
            }
            check_row_finite(out_row, row_idx, &indexer)
        })
        .collect();
    for r in results {
        r?;
    }

    Ok(LinearSystem {
        order,
        quad_order: q,
        matrix,
        rhs,
        indexer,
        grid,
    })
}

// ---------------------------------------------------------------------------
// nonlinear path
// ---------------------------------------------------------------------------

/// Residual and Jacobian evaluators for the collocation system of a
/// (possibly nonlinear) problem. Component `(l,m,n)` of the residual is
///
/// ```text
/// u_N(x_l,y_m,z_n) - int K G(u_N) - f(x_l,y_m,z_n)
/// ```
///
/// and the Jacobian entry replaces `G(u_N)` by `G'(u_N) T*_i T*_j T*_k`.
pub struct ResidualSystem {
    order: usize,
    quad_order: usize,
    indexer: TripleIndexer,
    grid: CollocationGrid,
    grid_basis: Vec<f64>,
    blocks: Vec<PointBlock>,
    f_values: Vec<f64>,
    nonlinearity: Expr,
    derivative: Expr,
}

impl ResidualSystem {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    pub fn dim(&self) -> usize {
        self.indexer.len()
    }

    pub fn indexer(&self) -> TripleIndexer {
        self.indexer
    }

    pub fn grid(&self) -> &CollocationGrid {
        &self.grid
    }

    fn check_dim(&self, coeffs: &[f64]) -> Result<(), AssemblyError> {
        if coeffs.len() != self.dim() {
            return Err(AssemblyError::DimensionMismatch {
                expected: self.dim(),
                actual: coeffs.len(),
            });
        }
        Ok(())
    }

    fn eval_g(&self, value: f64) -> Result<f64, AssemblyError> {
        self.nonlinearity
            .eval(&Bindings::scalar(value))
            .map_err(|source| AssemblyError::NonlinearityEval {
                argument: value,
                source,
            })
    }

    fn eval_g_prime(&self, value: f64) -> Result<f64, AssemblyError> {
        self.derivative
            .eval(&Bindings::scalar(value))
            .map_err(|source| AssemblyError::NonlinearityEval {
                argument: value,
                source,
            })
    }

    /// The residual vector `R_N` at every collocation point.
    pub fn residual(&self, coeffs: &[f64]) -> Result<Vec<f64>, AssemblyError> {
        self.check_dim(coeffs)?;
        let np1 = self.order + 1;
        let q = self.quad_order;
        let results: Vec<Result<f64, AssemblyError>> = (0..self.dim())
            .into_par_iter()
            .map(|row_idx| {
                let (l, m, n) = self.indexer.triple(row_idx);
                let bl = &self.grid_basis[l * np1..(l + 1) * np1];
                let bm = &self.grid_basis[m * np1..(m + 1) * np1];
                let bn = &self.grid_basis[n * np1..(n + 1) * np1];
                let u_point = eval_at_point(coeffs, np1, bl, bm, bn);
                let block = &self.blocks[row_idx];
                let integral = if block.vol == 0.0 {
                    0.0
                } else {
                    let values = eval_on_nodes(coeffs, block, q, np1);
                    let mut acc = 0.0;
                    for (wk, v) in block.wkernel.iter().zip(values.iter()) {
                        acc += wk * self.eval_g(*v)?;
                    }
                    block.vol * acc
                };
                Ok(u_point - integral - self.f_values[row_idx])
            })
            .collect();
        results.into_iter().collect()
    }

    /// The dense Jacobian `dR/da` at the given coefficients, using the
    /// analytic derivative `G'` inside the quadrature.
    pub fn jacobian(&self, coeffs: &[f64]) -> Result<DenseMatrix, AssemblyError> {
        self.check_dim(coeffs)?;
        let np1 = self.order + 1;
        let q = self.quad_order;
        let dim = self.dim();
        let mut matrix = DenseMatrix::zeros(dim, dim);
        let results: Vec<Result<(), AssemblyError>> = matrix
            .par_row_chunks_mut()
            .enumerate()
            .map(|(row_idx, out_row)| {
                let (l, m, n) = self.indexer.triple(row_idx);
                let bl = &self.grid_basis[l * np1..(l + 1) * np1];
                let bm = &self.grid_basis[m * np1..(m + 1) * np1];
                let bn = &self.grid_basis[n * np1..(n + 1) * np1];
                let block = &self.blocks[row_idx];
                if block.vol == 0.0 {
                    fill_interpolation_row(np1, bl, bm, bn, out_row);
                } else {
                    let values = eval_on_nodes(coeffs, block, q, np1);
                    let mut wg = vec![0.0; block.wkernel.len()];
                    for ((wgi, wk), v) in
                        wg.iter_mut().zip(block.wkernel.iter()).zip(values.iter())
                    {
                        *wgi = wk * self.eval_g_prime(*v)?;
                    }
                    fill_integral_row(block, &wg, q, np1, bl, bm, bn, out_row);
                }
                check_row_finite(out_row, row_idx, &self.indexer)
            })
            .collect();
        for r in results {
            r?;
        }
        Ok(matrix)
    }

    /// Central finite-difference Jacobian, the fallback for nonlinearities
    /// whose analytic derivative is unavailable or distrusted.
    pub fn jacobian_fd(&self, coeffs: &[f64], step: f64) -> Result<DenseMatrix, AssemblyError> {
        self.check_dim(coeffs)?;
        let dim = self.dim();
        let mut matrix = DenseMatrix::zeros(dim, dim);
        let mut shifted = coeffs.to_vec();
        for col in 0..dim {
            let saved = shifted[col];
            shifted[col] = saved + step;
            let plus = self.residual(&shifted)?;
            shifted[col] = saved - step;
            let minus = self.residual(&shifted)?;
            shifted[col] = saved;
            for row in 0..dim {
                matrix.set(row, col, (plus[row] - minus[row]) / (2.0 * step));
            }
        }
        Ok(matrix)
    }
}

/// Builds the residual/Jacobian evaluators; the kernel is sampled once per
/// collocation point here, so Newton iterations only re-evaluate `u_N` and
/// the nonlinearity.
pub fn build_residual_system(
    spec: &ProblemSpec,
    order: usize,
    rule: &QuadratureRule,
) -> Result<ResidualSystem, AssemblyError> {
    let grid = chebyshev::gcl_points(order)?;
    let indexer = TripleIndexer::new(order);
    let unit = UnitProblem::new(spec);
    let grid_basis = basis_at_grid(&grid);
    let derivative = spec.nonlinearity().differentiate_u()?;

    let dim = indexer.len();
    let rows: Vec<Result<(PointBlock, f64), AssemblyError>> = (0..dim)
        .into_par_iter()
        .map(|row_idx| {
            let (l, m, n) = indexer.triple(row_idx);
            let point = grid.point(l, m, n);
            let f_value = unit
                .f(point.0, point.1, point.2)
                .map_err(|source| AssemblyError::FreeTermEval { point, source })?;
            let block = build_point_block(&unit, point, order, rule)?;
            Ok((block, f_value))
        })
        .collect();

    let mut blocks = Vec::with_capacity(dim);
    let mut f_values = Vec::with_capacity(dim);
    for row in rows {
        let (block, f_value) = row?;
        blocks.push(block);
        f_values.push(f_value);
    }

    Ok(ResidualSystem {
        order,
        quad_order: rule.order(),
        indexer,
        grid,
        grid_basis,
        blocks,
        f_values,
        nonlinearity: spec.nonlinearity().clone(),
        derivative,
    })
}

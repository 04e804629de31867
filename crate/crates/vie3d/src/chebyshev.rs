//! Shifted Chebyshev polynomials of the first kind on `[0, 1]`,
//! Gauss-Chebyshev-Lobatto collocation grids, and evaluation of
//! tensor-product expansions.
//!
//! The basis is `T*_n(x) = T_n(2x - 1)` with the three-term recurrence
//! `T*_n(x) = 2(2x - 1) T*_{n-1}(x) - T*_{n-2}(x)`, `T*_0 = 1`,
//! `T*_1(x) = 2x - 1`. Evaluation always uses the recurrence; the cosine
//! closed form is reserved for test oracles.

use std::f64::consts::PI;
use std::fmt;

use crate::problem::Box3;

/// Largest polynomial degree accepted by the evaluators.
pub const MAX_DEGREE: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub enum ChebyshevError {
    /// Requested degree exceeds [`MAX_DEGREE`].
    DegreeTooLarge { degree: usize },
    /// Evaluation point lies outside `[0, 1]`.
    OutsideUnitInterval { x: f64 },
    /// Collocation grids need order >= 1 (the node formula divides by N).
    GridOrderZero,
    /// Coefficient array length does not match `(N + 1)^3`.
    CoefficientCount { expected: usize, actual: usize },
    /// A coefficient is NaN or infinite.
    NonFiniteCoefficient { index: usize },
    /// Evaluation point lies outside the approximant's domain box.
    OutsideDomain { x: f64, y: f64, z: f64 },
}

impl fmt::Display for ChebyshevError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChebyshevError::DegreeTooLarge { degree } => {
                write!(f, "degree {degree} exceeds the cap of {MAX_DEGREE}")
            }
            ChebyshevError::OutsideUnitInterval { x } => {
                write!(f, "point {x} lies outside [0, 1]")
            }
            ChebyshevError::GridOrderZero => {
                write!(f, "collocation grid requires order N >= 1")
            }
            ChebyshevError::CoefficientCount { expected, actual } => {
                write!(f, "expected {expected} coefficients, got {actual}")
            }
            ChebyshevError::NonFiniteCoefficient { index } => {
                write!(f, "coefficient at flat index {index} is not finite")
            }
            ChebyshevError::OutsideDomain { x, y, z } => {
                write!(f, "point ({x}, {y}, {z}) lies outside the domain box")
            }
        }
    }
}

impl std::error::Error for ChebyshevError {}

fn check_degree(n: usize) -> Result<(), ChebyshevError> {
    if n > MAX_DEGREE {
        return Err(ChebyshevError::DegreeTooLarge { degree: n });
    }
    Ok(())
}

fn check_unit(x: f64) -> Result<(), ChebyshevError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(ChebyshevError::OutsideUnitInterval { x });
    }
    Ok(())
}

#[inline]
fn shifted_cheb_unchecked(n: usize, x: f64) -> f64 {
    let u = 2.0 * x - 1.0;
    match n {
        0 => 1.0,
        1 => u,
        _ => {
            let mut prev = 1.0;
            let mut cur = u;
            for _ in 2..=n {
                let next = 2.0 * u * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Evaluates `T*_n(x)` on `[0, 1]` by the three-term recurrence.
pub fn shifted_cheb(n: usize, x: f64) -> Result<f64, ChebyshevError> {
    check_degree(n)?;
    check_unit(x)?;
    Ok(shifted_cheb_unchecked(n, x))
}

/// Evaluates `T*_0(x) ..= T*_N(x)` in one pass of the recurrence.
pub fn shifted_cheb_all(order: usize, x: f64) -> Result<Vec<f64>, ChebyshevError> {
    check_degree(order)?;
    check_unit(x)?;
    let mut out = Vec::with_capacity(order + 1);
    shifted_cheb_all_into(order, x, &mut out);
    Ok(out)
}

/// Same recurrence as [`shifted_cheb_all`], writing into a reusable buffer.
/// The caller guarantees `0 <= x <= 1`.
pub(crate) fn shifted_cheb_all_into(order: usize, x: f64, out: &mut Vec<f64>) {
    out.clear();
    let u = 2.0 * x - 1.0;
    out.push(1.0);
    if order == 0 {
        return;
    }
    out.push(u);
    for n in 2..=order {
        let next = 2.0 * u * out[n - 1] - out[n - 2];
        out.push(next);
    }
}

/// Bijection between flat indices and `(i, j, k)` triples for the
/// `(N + 1)^3` tensor basis, ordered i-major:
/// `(0,0,0), (0,0,1), ..., (0,0,N), (0,1,0), ...`
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TripleIndexer {
    per_axis: usize,
}

impl TripleIndexer {
    pub fn new(order: usize) -> Self {
        TripleIndexer {
            per_axis: order + 1,
        }
    }

    /// Points (or basis functions) per axis, `N + 1`.
    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    /// Total number of triples, `(N + 1)^3`.
    pub fn len(&self) -> usize {
        self.per_axis * self.per_axis * self.per_axis
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn flat(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.per_axis + j) * self.per_axis + k
    }

    #[inline]
    pub fn triple(&self, flat: usize) -> (usize, usize, usize) {
        let k = flat % self.per_axis;
        let rest = flat / self.per_axis;
        let j = rest % self.per_axis;
        let i = rest / self.per_axis;
        (i, j, k)
    }

    /// Iterates triples in flat order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.len()).map(|flat| self.triple(flat))
    }
}

/// Gauss-Chebyshev-Lobatto collocation points on `[0, 1]` per axis:
/// `x_l = (1 + cos(l pi / N)) / 2`, `l = 0..N`, identical for all three axes.
#[derive(Debug, Clone, PartialEq)]
pub struct CollocationGrid {
    order: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
    zs: Vec<f64>,
}

impl CollocationGrid {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn zs(&self) -> &[f64] {
        &self.zs
    }

    /// The collocation point `(x_l, y_m, z_n)`.
    pub fn point(&self, l: usize, m: usize, n: usize) -> (f64, f64, f64) {
        (self.xs[l], self.ys[m], self.zs[n])
    }
}

/// Builds the Gauss-Chebyshev-Lobatto grid of order `N >= 1`.
///
/// The vectors run strictly decreasing from 1 to 0; `N = 0` is rejected
/// because the node formula divides by `N`.
pub fn gcl_points(order: usize) -> Result<CollocationGrid, ChebyshevError> {
    if order == 0 {
        return Err(ChebyshevError::GridOrderZero);
    }
    check_degree(order)?;
    let xs: Vec<f64> = (0..=order)
        .map(|l| 0.5 * (1.0 + (l as f64 * PI / order as f64).cos()))
        .collect();
    Ok(CollocationGrid {
        order,
        ys: xs.clone(),
        zs: xs.clone(),
        xs,
    })
}

/// Truncated tensor-product expansion
/// `u_N(x,y,z) = sum_{i,j,k <= N} a_{i,j,k} T*_i(x) T*_j(y) T*_k(z)`
/// over a box `[0,X] x [0,Y] x [0,Z]`; coordinates are mapped affinely to
/// `[0, 1]` per axis before the basis is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorApproximant {
    order: usize,
    coeffs: Vec<f64>,
    domain: Box3,
}

impl TensorApproximant {
    /// Validates the coefficient count `(N + 1)^3` and finiteness.
    pub fn new(order: usize, coeffs: Vec<f64>, domain: Box3) -> Result<Self, ChebyshevError> {
        check_degree(order)?;
        let expected = (order + 1) * (order + 1) * (order + 1);
        if coeffs.len() != expected {
            return Err(ChebyshevError::CoefficientCount {
                expected,
                actual: coeffs.len(),
            });
        }
        if let Some(index) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(ChebyshevError::NonFiniteCoefficient { index });
        }
        Ok(TensorApproximant {
            order,
            coeffs,
            domain,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn domain(&self) -> Box3 {
        self.domain
    }

    pub fn indexer(&self) -> TripleIndexer {
        TripleIndexer::new(self.order)
    }

    /// Evaluates the triple sum at a point of the domain. One basis vector
    /// is computed per axis, so the cost is three O(N) recurrences plus the
    /// O(N^3) accumulation.
    pub fn eval(&self, x: f64, y: f64, z: f64) -> Result<f64, ChebyshevError> {
        if !self.domain.contains(x, y, z) {
            return Err(ChebyshevError::OutsideDomain { x, y, z });
        }
        let tx = shifted_cheb_all(self.order, x / self.domain.x)?;
        let ty = shifted_cheb_all(self.order, y / self.domain.y)?;
        let tz = shifted_cheb_all(self.order, z / self.domain.z)?;
        let np1 = self.order + 1;
        let mut total = 0.0;
        for i in 0..np1 {
            let mut sum_i = 0.0;
            for j in 0..np1 {
                let mut sum_j = 0.0;
                let base = (i * np1 + j) * np1;
                for k in 0..np1 {
                    sum_j += self.coeffs[base + k] * tz[k];
                }
                sum_i += ty[j] * sum_j;
            }
            total += tx[i] * sum_i;
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Closed-form oracle `T*_n(x) = cos(n arccos(2x - 1))`; test-only.
    fn cosine_form(n: usize, x: f64) -> f64 {
        (n as f64 * (2.0 * x - 1.0).acos()).cos()
    }

    #[test]
    fn degree_zero_is_one() {
        assert_eq!(shifted_cheb(0, 0.3).unwrap(), 1.0);
    }

    #[test]
    fn degree_one_is_affine() {
        assert_abs_diff_eq!(shifted_cheb(1, 0.75).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn degree_two_at_half() {
        assert_abs_diff_eq!(shifted_cheb(2, 0.5).unwrap(), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn degree_five_matches_cosine_form() {
        // T*_5(0.3) = cos(5 arccos(-0.4))
        let expected = (5.0 * (-0.4f64).acos()).cos();
        assert_abs_diff_eq!(shifted_cheb(5, 0.3).unwrap(), expected, epsilon = 1e-13);
    }

    #[test]
    fn eval_all_examples() {
        assert_eq!(shifted_cheb_all(2, 0.5).unwrap(), vec![1.0, 0.0, -1.0]);
        assert_eq!(shifted_cheb_all(1, 1.0).unwrap(), vec![1.0, 1.0]);
        let all = shifted_cheb_all(4, 0.146447).unwrap();
        for (n, v) in all.iter().enumerate() {
            assert_eq!(*v, shifted_cheb(n, 0.146447).unwrap());
        }
    }

    #[test]
    fn degree_cap_rejected() {
        assert!(matches!(
            shifted_cheb(MAX_DEGREE + 1, 0.5),
            Err(ChebyshevError::DegreeTooLarge { .. })
        ));
    }

    #[test]
    fn outside_interval_rejected() {
        assert!(shifted_cheb(3, -0.01).is_err());
        assert!(shifted_cheb(3, 1.01).is_err());
        assert!(shifted_cheb_all(3, f64::NAN).is_err());
    }

    #[test]
    fn cosine_identity_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC0C0);
        for _ in 0..1000 {
            let x: f64 = rng.gen_range(0.0..=1.0);
            for n in 0..=64usize {
                let rec = shifted_cheb(n, x).unwrap();
                assert!(
                    (rec - cosine_form(n, x)).abs() <= 1e-12,
                    "n={n} x={x}: {rec} vs {}",
                    cosine_form(n, x)
                );
            }
        }
    }

    #[test]
    fn endpoint_identities() {
        for n in 0..=64usize {
            assert_abs_diff_eq!(shifted_cheb(n, 1.0).unwrap(), 1.0, epsilon = 1e-14);
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert_abs_diff_eq!(shifted_cheb(n, 0.0).unwrap(), sign, epsilon = 1e-14);
        }
    }

    #[test]
    fn gcl_small_orders() {
        assert_eq!(gcl_points(1).unwrap().xs(), &[1.0, 0.0]);
        assert_eq!(gcl_points(2).unwrap().xs(), &[1.0, 0.5, 0.0]);
        let g4 = gcl_points(4).unwrap();
        let expected = [1.0, 0.8535533905932737, 0.5, 0.1464466094067263, 0.0];
        for (a, b) in g4.xs().iter().zip(expected.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        assert_eq!(g4.xs(), g4.ys());
        assert_eq!(g4.xs(), g4.zs());
    }

    #[test]
    fn gcl_order_zero_rejected() {
        assert!(matches!(gcl_points(0), Err(ChebyshevError::GridOrderZero)));
    }

    #[test]
    fn gcl_symmetry_and_monotone() {
        for order in 1..=8usize {
            let g = gcl_points(order).unwrap();
            let xs = g.xs();
            for l in 0..=order {
                assert!((xs[l] + xs[order - l] - 1.0).abs() <= 1e-15);
            }
            for l in 1..=order {
                assert!(xs[l] < xs[l - 1], "grid not strictly decreasing");
            }
            assert_eq!(xs[0], 1.0);
            assert_eq!(xs[order], 0.0);
        }
    }

    #[test]
    fn tensor_eval_recovers_sum_of_coordinates() {
        // a_{0,0,0} = 3/2 and a_{0,0,1} = a_{0,1,0} = a_{1,0,0} = 1/2
        // is the expansion of u(x,y,z) = x + y + z.
        let idx = TripleIndexer::new(1);
        let mut coeffs = vec![0.0; idx.len()];
        coeffs[idx.flat(0, 0, 0)] = 1.5;
        coeffs[idx.flat(0, 0, 1)] = 0.5;
        coeffs[idx.flat(0, 1, 0)] = 0.5;
        coeffs[idx.flat(1, 0, 0)] = 0.5;
        let approx = TensorApproximant::new(1, coeffs, Box3::UNIT).unwrap();
        assert_abs_diff_eq!(approx.eval(0.2, 0.3, 0.4).unwrap(), 0.9, epsilon = 1e-12);
    }

    #[test]
    fn tensor_eval_zero_and_constant() {
        let approx = TensorApproximant::new(2, vec![0.0; 27], Box3::UNIT).unwrap();
        assert_eq!(approx.eval(0.7, 0.1, 0.9).unwrap(), 0.0);

        let mut coeffs = vec![0.0; 27];
        coeffs[0] = 4.25;
        let approx = TensorApproximant::new(2, coeffs, Box3::UNIT).unwrap();
        assert_abs_diff_eq!(approx.eval(0.3, 0.6, 0.2).unwrap(), 4.25, epsilon = 1e-13);
    }

    #[test]
    fn tensor_eval_outside_domain_rejected() {
        let approx = TensorApproximant::new(1, vec![0.0; 8], Box3::UNIT).unwrap();
        assert!(matches!(
            approx.eval(1.5, 0.5, 0.5),
            Err(ChebyshevError::OutsideDomain { .. })
        ));
    }

    #[test]
    fn tensor_eval_linear_in_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let idx = TripleIndexer::new(3);
        for _ in 0..20 {
            let a: Vec<f64> = (0..idx.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..idx.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let alpha: f64 = rng.gen_range(-2.0..2.0);
            let beta: f64 = rng.gen_range(-2.0..2.0);
            let combo: Vec<f64> = a
                .iter()
                .zip(b.iter())
                .map(|(x, y)| alpha * x + beta * y)
                .collect();
            let pa = TensorApproximant::new(3, a, Box3::UNIT).unwrap();
            let pb = TensorApproximant::new(3, b, Box3::UNIT).unwrap();
            let pc = TensorApproximant::new(3, combo, Box3::UNIT).unwrap();
            let (x, y, z) = (
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..1.0),
            );
            let lhs = pc.eval(x, y, z).unwrap();
            let rhs = alpha * pa.eval(x, y, z).unwrap() + beta * pb.eval(x, y, z).unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
        }
    }

    #[test]
    fn approximant_validation() {
        assert!(matches!(
            TensorApproximant::new(1, vec![0.0; 7], Box3::UNIT),
            Err(ChebyshevError::CoefficientCount { expected: 8, .. })
        ));
        let mut coeffs = vec![0.0; 8];
        coeffs[3] = f64::INFINITY;
        assert!(matches!(
            TensorApproximant::new(1, coeffs, Box3::UNIT),
            Err(ChebyshevError::NonFiniteCoefficient { index: 3 })
        ));
    }

    #[test]
    fn indexer_roundtrip() {
        let idx = TripleIndexer::new(4);
        for flat in 0..idx.len() {
            let (i, j, k) = idx.triple(flat);
            assert_eq!(idx.flat(i, j, k), flat);
        }
        assert_eq!(idx.flat(0, 0, 1), 1);
        assert_eq!(idx.flat(1, 0, 0), 25);
    }
}

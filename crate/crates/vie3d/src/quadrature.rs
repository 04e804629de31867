//! Tensor-product Gauss-Legendre quadrature over a variable box
//! `[0,x] x [0,y] x [0,z]`, plus a midpoint-rule reference integrator used
//! as an independent test oracle.
//!
//! Rules are normalized to the unit interval (weights sum to 1) and scaled
//! affinely to each box at integration time. A single integral is summed in
//! a fixed order, so results are bitwise reproducible regardless of how
//! many integrals run concurrently.

use std::f64::consts::PI;
use std::fmt;

/// Largest points-per-axis order accepted by [`QuadratureRule::gauss_legendre`].
pub const MAX_RULE_ORDER: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub enum QuadratureError {
    /// Rule order outside `1..=MAX_RULE_ORDER`.
    InvalidOrder { order: usize },
    /// Newton iteration for a Legendre root failed to reach tolerance.
    NodeConvergence { index: usize },
    /// An upper integration limit is negative or NaN.
    InvalidUpperLimit { x: f64, y: f64, z: f64 },
    /// Subdivision count for the brute-force integrator must be >= 1.
    InvalidSubdivisions,
    /// The integrand produced NaN or infinity at a quadrature node.
    NonFiniteSample { r: f64, s: f64, t: f64, value: f64 },
}

impl fmt::Display for QuadratureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuadratureError::InvalidOrder { order } => {
                write!(f, "rule order {order} outside 1..={MAX_RULE_ORDER}")
            }
            QuadratureError::NodeConvergence { index } => {
                write!(f, "Legendre node {index} did not converge")
            }
            QuadratureError::InvalidUpperLimit { x, y, z } => {
                write!(f, "invalid upper limits ({x}, {y}, {z}); each must be >= 0")
            }
            QuadratureError::InvalidSubdivisions => {
                write!(f, "subdivision count must be >= 1")
            }
            QuadratureError::NonFiniteSample { r, s, t, value } => {
                write!(
                    f,
                    "integrand returned non-finite value {value} at node ({r}, {s}, {t})"
                )
            }
        }
    }
}

impl std::error::Error for QuadratureError {}

/// Integrand of the inner triple integral: `(x, y, z)` are the outer
/// collocation coordinates, `(r, s, t)` the integration variables with
/// `0 <= r <= x`, `0 <= s <= y`, `0 <= t <= z`.
pub trait Integrand3 {
    fn eval(&self, x: f64, y: f64, z: f64, r: f64, s: f64, t: f64) -> f64;
}

impl<F> Integrand3 for F
where
    F: Fn(f64, f64, f64, f64, f64, f64) -> f64,
{
    fn eval(&self, x: f64, y: f64, z: f64, r: f64, s: f64, t: f64) -> f64 {
        self(x, y, z, r, s, t)
    }
}

/// One-dimensional Gauss-Legendre rule on `[0, 1]`: `q` nodes in `(0, 1)`
/// and positive weights summing to 1; exact for polynomials of degree
/// `<= 2q - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Computes the rule by Newton iteration on the Legendre polynomial
    /// `P_q` from the standard asymptotic initial guess
    /// `cos(pi (k - 1/4) / (q + 1/2))`, tolerance 1e-15, at most 100 steps
    /// per root.
    pub fn gauss_legendre(order: usize) -> Result<Self, QuadratureError> {
        if order == 0 || order > MAX_RULE_ORDER {
            return Err(QuadratureError::InvalidOrder { order });
        }
        let q = order;
        let mut nodes = Vec::with_capacity(q);
        let mut weights = Vec::with_capacity(q);
        for k in 1..=q {
            let mut x = (PI * (k as f64 - 0.25) / (q as f64 + 0.5)).cos();
            let mut converged = false;
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(q, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-15 {
                    converged = true;
                    // one polishing step after the tolerance is met
                    let (p, d) = legendre_with_derivative(q, x);
                    dp = d;
                    x -= p / d;
                    break;
                }
            }
            if !converged {
                return Err(QuadratureError::NodeConvergence { index: k - 1 });
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // map [-1, 1] -> [0, 1]
            nodes.push(0.5 * (x + 1.0));
            weights.push(0.5 * w);
        }
        // roots come out in decreasing order of the initial guess; store ascending
        nodes.reverse();
        weights.reverse();
        Ok(QuadratureRule { nodes, weights })
    }

    /// Points per axis.
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrates a one-dimensional function over `[0, 1]`.
    pub fn integrate_unit<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let mut sum = 0.0;
        for (n, w) in self.nodes.iter().zip(self.weights.iter()) {
            sum += w * f(*n);
        }
        sum
    }
}

/// Evaluates `P_q(x)` and `P'_q(x)` by the Legendre recurrence.
fn legendre_with_derivative(q: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    if q == 0 {
        return (1.0, 0.0);
    }
    for n in 1..q {
        let nf = n as f64;
        let p_next = ((2.0 * nf + 1.0) * x * p - nf * p_prev) / (nf + 1.0);
        p_prev = p;
        p = p_next;
    }
    let d = q as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}

fn check_upper(upper: (f64, f64, f64)) -> Result<(), QuadratureError> {
    let (x, y, z) = upper;
    let bad = |v: f64| !v.is_finite() || v < 0.0;
    if bad(x) || bad(y) || bad(z) {
        return Err(QuadratureError::InvalidUpperLimit { x, y, z });
    }
    Ok(())
}

/// Tensor-product quadrature of `f` over `[0,x] x [0,y] x [0,z]`, with the
/// integrand's outer variables bound to the upper limits. Returns exactly 0
/// when any upper limit is 0.
pub fn box_integral<F: Integrand3 + ?Sized>(
    f: &F,
    upper: (f64, f64, f64),
    rule: &QuadratureRule,
) -> Result<f64, QuadratureError> {
    check_upper(upper)?;
    let (ux, uy, uz) = upper;
    if ux == 0.0 || uy == 0.0 || uz == 0.0 {
        return Ok(0.0);
    }
    let nodes = rule.nodes();
    let weights = rule.weights();
    let mut sum = 0.0;
    for (rp, wp) in nodes.iter().zip(weights.iter()) {
        let r = ux * rp;
        for (sq, wq) in nodes.iter().zip(weights.iter()) {
            let s = uy * sq;
            let wpq = wp * wq;
            for (tw, ww) in nodes.iter().zip(weights.iter()) {
                let t = uz * tw;
                let v = f.eval(ux, uy, uz, r, s, t);
                if !v.is_finite() {
                    return Err(QuadratureError::NonFiniteSample { r, s, t, value: v });
                }
                sum += wpq * ww * v;
            }
        }
    }
    Ok(ux * uy * uz * sum)
}

/// Midpoint Riemann sum on an `m x m x m` uniform grid; the slow reference
/// integrator used as a test oracle. Converges O(m^-2) for smooth `f`.
pub fn brute_force_integral<F: Integrand3 + ?Sized>(
    f: &F,
    upper: (f64, f64, f64),
    subdivisions: usize,
) -> Result<f64, QuadratureError> {
    check_upper(upper)?;
    if subdivisions == 0 {
        return Err(QuadratureError::InvalidSubdivisions);
    }
    let (ux, uy, uz) = upper;
    if ux == 0.0 || uy == 0.0 || uz == 0.0 {
        return Ok(0.0);
    }
    let m = subdivisions;
    let mf = m as f64;
    let mut sum = 0.0;
    for i in 0..m {
        let r = ux * ((i as f64 + 0.5) / mf);
        for j in 0..m {
            let s = uy * ((j as f64 + 0.5) / mf);
            for k in 0..m {
                let t = uz * ((k as f64 + 0.5) / mf);
                let v = f.eval(ux, uy, uz, r, s, t);
                if !v.is_finite() {
                    return Err(QuadratureError::NonFiniteSample { r, s, t, value: v });
                }
                sum += v;
            }
        }
    }
    // divide by m^3 last so that a constant integrand is integrated exactly
    Ok(sum * ux * uy * uz / (mf * mf * mf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn one_point_rule_is_midpoint() {
        let rule = QuadratureRule::gauss_legendre(1).unwrap();
        assert_eq!(rule.nodes(), &[0.5]);
        assert_eq!(rule.weights(), &[1.0]);
    }

    #[test]
    fn two_point_rule_closed_form() {
        // roots of P_2 are +-1/sqrt(3), mapped to 1/2 -+ 1/(2 sqrt(3))
        let rule = QuadratureRule::gauss_legendre(2).unwrap();
        let d = 0.5 / 3.0f64.sqrt();
        assert_abs_diff_eq!(rule.nodes()[0], 0.5 - d, epsilon = 1e-15);
        assert_abs_diff_eq!(rule.nodes()[1], 0.5 + d, epsilon = 1e-15);
        assert_abs_diff_eq!(rule.weights()[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rule.weights()[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn cubic_exact_from_two_points() {
        for q in [2usize, 3, 5, 9] {
            let rule = QuadratureRule::gauss_legendre(q).unwrap();
            let integral = rule.integrate_unit(|t| t * t * t);
            assert_abs_diff_eq!(integral, 0.25, epsilon = 1e-14);
        }
    }

    #[test]
    fn weights_normalized() {
        for q in 1..=64usize {
            let rule = QuadratureRule::gauss_legendre(q).unwrap();
            let total: f64 = rule.weights().iter().sum();
            assert!((total - 1.0).abs() <= 1e-13, "q={q}: sum={total}");
            assert!(rule.weights().iter().all(|w| *w > 0.0));
            assert!(rule.nodes().iter().all(|n| *n > 0.0 && *n < 1.0));
            for i in 1..q {
                assert!(rule.nodes()[i] > rule.nodes()[i - 1]);
            }
        }
    }

    #[test]
    fn monomial_exactness_up_to_degree() {
        // integral of t^d over [0,1] is 1/(d+1); exact for d <= 2q-1
        for q in [1usize, 2, 3, 4, 6, 8, 12, 16] {
            let rule = QuadratureRule::gauss_legendre(q).unwrap();
            for d in 0..=(2 * q - 1) {
                let integral = rule.integrate_unit(|t| t.powi(d as i32));
                let exact = 1.0 / (d as f64 + 1.0);
                assert!(
                    (integral - exact).abs() <= 1e-12,
                    "q={q} d={d}: {integral} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn invalid_orders_rejected() {
        assert!(QuadratureRule::gauss_legendre(0).is_err());
        assert!(QuadratureRule::gauss_legendre(MAX_RULE_ORDER + 1).is_err());
        assert!(QuadratureRule::gauss_legendre(MAX_RULE_ORDER).is_ok());
    }

    #[test]
    fn box_volume_of_unit_cube() {
        let rule = QuadratureRule::gauss_legendre(4).unwrap();
        let one = |_x: f64, _y: f64, _z: f64, _r: f64, _s: f64, _t: f64| 1.0;
        let v = box_integral(&one, (1.0, 1.0, 1.0), &rule).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn box_odd_integrand_vanishes() {
        // T*_1(r) = 2r - 1 is odd about r = 1/2
        let rule = QuadratureRule::gauss_legendre(6).unwrap();
        let f = |_x: f64, _y: f64, _z: f64, r: f64, _s: f64, _t: f64| 2.0 * r - 1.0;
        let v = box_integral(&f, (1.0, 1.0, 1.0), &rule).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn box_kernel_of_example_3_4() {
        // integral of r s^2 over the unit cube is 1/2 * 1/3 = 1/6
        let rule = QuadratureRule::gauss_legendre(4).unwrap();
        let f = |_x: f64, _y: f64, _z: f64, r: f64, s: f64, _t: f64| r * s * s;
        let v = box_integral(&f, (1.0, 1.0, 1.0), &rule).unwrap();
        assert_abs_diff_eq!(v, 1.0 / 6.0, epsilon = 1e-14);
    }

    #[test]
    fn empty_box_is_exactly_zero() {
        let rule = QuadratureRule::gauss_legendre(3).unwrap();
        let f = |_x: f64, _y: f64, _z: f64, r: f64, s: f64, t: f64| r + s + t + 1.0;
        assert_eq!(box_integral(&f, (0.0, 1.0, 1.0), &rule).unwrap(), 0.0);
        assert_eq!(box_integral(&f, (1.0, 0.0, 1.0), &rule).unwrap(), 0.0);
        assert_eq!(box_integral(&f, (1.0, 1.0, 0.0), &rule).unwrap(), 0.0);
        assert_eq!(brute_force_integral(&f, (0.5, 0.0, 0.5), 10).unwrap(), 0.0);
    }

    #[test]
    fn negative_upper_limit_rejected() {
        let rule = QuadratureRule::gauss_legendre(3).unwrap();
        let f = |_x: f64, _y: f64, _z: f64, _r: f64, _s: f64, _t: f64| 1.0;
        assert!(matches!(
            box_integral(&f, (-0.1, 1.0, 1.0), &rule),
            Err(QuadratureError::InvalidUpperLimit { .. })
        ));
        assert!(brute_force_integral(&f, (1.0, f64::NAN, 1.0), 10).is_err());
    }

    #[test]
    fn non_finite_sample_reports_node() {
        let rule = QuadratureRule::gauss_legendre(2).unwrap();
        let f = |_x: f64, _y: f64, _z: f64, r: f64, _s: f64, _t: f64| (r - r) / (r - r);
        match box_integral(&f, (1.0, 1.0, 1.0), &rule) {
            Err(QuadratureError::NonFiniteSample { r, value, .. }) => {
                assert!(value.is_nan());
                assert!(r > 0.0 && r < 1.0);
            }
            other => panic!("expected NonFiniteSample, got {other:?}"),
        }
    }

    #[test]
    fn brute_force_constant_is_exact() {
        let one = |_x: f64, _y: f64, _z: f64, _r: f64, _s: f64, _t: f64| 1.0;
        for m in [1usize, 3, 7, 200] {
            assert_eq!(brute_force_integral(&one, (1.0, 1.0, 1.0), m).unwrap(), 1.0);
        }
    }

    #[test]
    fn brute_force_polynomial() {
        let f = |_x: f64, _y: f64, _z: f64, r: f64, s: f64, _t: f64| r * s * s;
        let v = brute_force_integral(&f, (1.0, 1.0, 1.0), 200).unwrap();
        assert_abs_diff_eq!(v, 1.0 / 6.0, epsilon = 1e-4);
    }

    #[test]
    fn brute_force_cosine() {
        let f = |_x: f64, _y: f64, _z: f64, _r: f64, _s: f64, t: f64| t.cos();
        let v = brute_force_integral(&f, (1.0, 1.0, 1.0), 400).unwrap();
        assert_abs_diff_eq!(v, 1.0f64.sin(), epsilon = 1e-5);
    }

    #[test]
    fn zero_subdivisions_rejected() {
        let f = |_x: f64, _y: f64, _z: f64, _r: f64, _s: f64, _t: f64| 1.0;
        assert!(matches!(
            brute_force_integral(&f, (1.0, 1.0, 1.0), 0),
            Err(QuadratureError::InvalidSubdivisions)
        ));
    }
}

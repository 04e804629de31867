//! Newton iteration on a nonlinear problem, with the per-iteration trace.
//!
//! The third fixture carries the quadratic nonlinearity G(u) = u^2; from
//! the zero starting vector the damped Newton iteration converges to the
//! coefficient vector with every entry 1/8, i.e. u_1 = x y z.
//!
//! ```text
//! cargo run --example nonlinear_newton
//! ```

use vie3d::assembly::build_residual_system;
use vie3d::problem::builtin_fixture;
use vie3d::quadrature::QuadratureRule;
use vie3d::solver::{newton_solve, NewtonOptions};

fn main() {
    let spec = builtin_fixture("ex3_3").expect("fixture exists");
    assert!(!spec.is_linear());

    let rule = QuadratureRule::gauss_legendre(12).expect("valid order");
    let system = build_residual_system(&spec, 1, &rule).expect("assembly succeeds");

    let (coefficients, trace) =
        newton_solve(&system, &NewtonOptions::default()).expect("Newton converges");

    println!("initial residual: {:.6e}", trace.initial_residual);
    for (idx, step) in trace.steps.iter().enumerate() {
        println!(
            "iteration {:>2}: residual {:.6e} ({} halvings)",
            idx + 1,
            step.residual_norm,
            step.halvings
        );
    }

    println!("\ncoefficients (all should be 1/8 = 0.125):");
    let indexer = system.indexer();
    for (flat, value) in coefficients.iter().enumerate() {
        let (i, j, k) = indexer.triple(flat);
        println!("  a[{i}{j}{k}] = {value:.15}");
    }
}

//! Reproduce the reference 27-coefficient set of the second fixture.
//!
//! At N = 2 the collocation system for u = x^2 y + y z^2 + x y z is solved
//! exactly; the coefficients come out as the small fractions of the exact
//! solution's tensor-Chebyshev expansion (halves, eighths, sixteenths).
//!
//! ```text
//! cargo run --example coefficient_table
//! ```

use vie3d::problem::builtin_fixture;
use vie3d::report::{solve_problem, SolveOptions};

fn main() {
    let spec = builtin_fixture("ex3_2").expect("fixture exists");
    let options = SolveOptions {
        quad_order: Some(12),
        ..SolveOptions::default()
    };
    let solution = solve_problem(&spec, 2, &options).expect("solve succeeds");

    println!("ex3_2 at N = 2: {} coefficients", solution.approximant.coeffs().len());
    println!("growth factor {:.3}, condition estimate {:.3e}\n",
        solution.growth_factor.unwrap(),
        solution.condition_estimate.unwrap());

    let indexer = solution.approximant.indexer();
    println!("  i j k        value   nearest small fraction");
    for (flat, value) in solution.approximant.coeffs().iter().enumerate() {
        let (i, j, k) = indexer.triple(flat);
        let sixteenths = (value * 16.0).round();
        let label = if (value * 16.0 - sixteenths).abs() < 1e-9 && sixteenths != 0.0 {
            format!("{}/16", sixteenths as i64)
        } else if value.abs() < 1e-9 {
            "0".to_string()
        } else {
            String::new()
        };
        println!("  {i} {j} {k}  {value:+.12e}   {label}");
    }
}

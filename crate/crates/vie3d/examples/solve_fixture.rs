//! Solve a built-in fixture and evaluate the approximation.
//!
//! The first fixture has the polynomial solution u = x + y + z, which an
//! order-1 expansion reproduces exactly; the run prints the recovered
//! coefficients and the error on a sample grid.
//!
//! ```text
//! cargo run --example solve_fixture
//! ```

use vie3d::problem::builtin_fixture;
use vie3d::report::{max_grid_error, solve_problem, SolveOptions};

fn main() {
    let spec = builtin_fixture("ex3_1").expect("fixture exists");
    let solution = solve_problem(&spec, 1, &SolveOptions::default()).expect("solve succeeds");

    println!("solved ex3_1 at N = 1 (q = {})", solution.quad_order);
    println!("discrete residual sup-norm: {:.3e}", solution.residual_norm);

    let indexer = solution.approximant.indexer();
    println!("\ncoefficients:");
    for (flat, value) in solution.approximant.coeffs().iter().enumerate() {
        let (i, j, k) = indexer.triple(flat);
        println!("  a[{i}{j}{k}] = {value:+.12}");
    }

    let err = max_grid_error(&spec, &solution.approximant, 5).expect("grid error");
    println!("\nmax |u_N - (x + y + z)| on a 5x5x5 grid: {err:.3e}");

    let (x, y, z) = (0.2, 0.3, 0.4);
    let u = solution.approximant.eval(x, y, z).expect("inside domain");
    println!("u_N({x}, {y}, {z}) = {u} (exact {})", x + y + z);
}

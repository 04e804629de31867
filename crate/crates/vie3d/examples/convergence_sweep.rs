//! Convergence study: max grid error against the exact solution as the
//! truncation order grows.
//!
//! The fifth fixture's solution e^(x+y+z) is entire, so the error decays
//! spectrally: each extra order buys roughly an order of magnitude.
//!
//! ```text
//! cargo run --release --example convergence_sweep
//! ```

use vie3d::report::{run_sweep, ProblemSource, SweepConfig};

fn main() {
    let report = run_sweep(&SweepConfig {
        source: ProblemSource::resolve("ex3_5"),
        n_min: 1,
        n_max: 5,
        quad_order: None, // per-order policy q = 2N + 8
        grid: 5,
        threads: None,
    })
    .expect("sweep succeeds");

    println!("ex3_5, max |u_N - exp(x+y+z)| on a {0}x{0}x{0} grid:", report.grid);
    println!("{:>3} {:>4} {:>14} {:>12} {:>12}", "N", "q", "max error", "assembly s", "solve s");
    let mut previous: Option<f64> = None;
    for row in &report.rows {
        let err = row.max_abs_error.expect("all orders solve");
        let ratio = previous
            .map(|p| format!("  ({:.1}x smaller)", p / err))
            .unwrap_or_default();
        println!(
            "{:>3} {:>4} {:>14.6e} {:>12.4} {:>12.4}{ratio}",
            row.order, row.quad_order, err, row.assembly_seconds, row.solve_seconds
        );
        previous = Some(err);
    }
}

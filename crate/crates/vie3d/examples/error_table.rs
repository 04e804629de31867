//! Build the reference error table for the fourth fixture.
//!
//! The exact solution x cos(z) is entire but not polynomial, so the N = 2
//! collocation solution carries a genuine truncation error; the table
//! shows it at the fixture's seven tabulated points.
//!
//! ```text
//! cargo run --example error_table
//! ```

use vie3d::report::{run_solve, write_solve_csv, ProblemSource, SolveConfig};

fn main() {
    let report = run_solve(&SolveConfig {
        source: ProblemSource::resolve("ex3_4"),
        order: 2,
        quad_order: Some(12),
        points: None, // fixtures with tabulated points use them by default
        threads: None,
        fd_jacobian: false,
    })
    .expect("solve succeeds");

    println!("{:>8} {:>8} {:>8} {:>16} {:>16} {:>14}", "x", "y", "z", "exact", "approx", "abs error");
    for row in &report.error_table {
        println!(
            "{:>8} {:>8} {:>8} {:>16.12} {:>16.12} {:>14.7e}",
            row.x, row.y, row.z, row.exact, row.approx, row.abs_error
        );
    }

    println!("\nthe same table as CSV (what `vie3d solve ex3_4 --n 2` emits):\n");
    let mut csv = Vec::new();
    write_solve_csv(&report, &mut csv).expect("in-memory write");
    print!("{}", String::from_utf8(csv).expect("utf-8"));
}

//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! The criteria pin the solver against the five built-in fixtures: exact
//! recovery of polynomial solutions, reference coefficient sets, two
//! reference error tables, a solver-independent consistency oracle for
//! the problem encodings, the cross-module property suite, and a
//! convergence sanity sweep.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use vie3d::assembly::{assemble_linear, build_residual_system};
use vie3d::chebyshev::{gcl_points, shifted_cheb};
use vie3d::matrix::vec_norm_inf;
use vie3d::problem::{builtin_fixture, fixture_eval_points, FIXTURE_IDS};
use vie3d::quadrature::{box_integral, brute_force_integral, QuadratureRule};
use vie3d::report::{
    max_grid_error, run_solve, run_sweep, solve_problem, ProblemSource, SolveConfig, SolveOptions,
    SweepConfig,
};
use vie3d::solver::{lu_solve, newton_solve, LinearSolveOptions, NewtonOptions};

struct Criterion {
    number: u32,
    description: &'static str,
    failures: Vec<String>,
}

impl Criterion {
    fn new(number: u32, description: &'static str) -> Self {
        Criterion {
            number,
            description,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(detail());
        }
    }

    fn finish(self) {
        let status = if self.failures.is_empty() {
            "PASS"
        } else {
            "FAIL"
        };
        println!(
            "acceptance criterion {} ({}): {status}",
            self.number, self.description
        );
        assert!(
            self.failures.is_empty(),
            "criterion {} failed:\n  {}",
            self.number,
            self.failures.join("\n  ")
        );
    }
}

fn rule(q: usize) -> QuadratureRule {
    QuadratureRule::gauss_legendre(q).unwrap()
}

fn options_with_quad(q: usize) -> SolveOptions {
    SolveOptions {
        quad_order: Some(q),
        ..SolveOptions::default()
    }
}

#[test]
fn criterion_1_first_example_exact_recovery() {
    let mut c = Criterion::new(1, "ex3_1 exact recovery at N = 1");
    let spec = builtin_fixture("ex3_1").unwrap();

    let start = Instant::now();
    let solution = solve_problem(&spec, 1, &options_with_quad(8)).unwrap();
    let elapsed = start.elapsed();

    let expected = [1.5, 0.5, 0.5, 0.0, 0.5, 0.0, 0.0, 0.0];
    for (pos, (a, e)) in solution
        .approximant
        .coeffs()
        .iter()
        .zip(expected.iter())
        .enumerate()
    {
        c.check((a - e).abs() <= 1e-10, || {
            format!("coefficient {pos}: {a} vs {e}")
        });
    }
    let err = max_grid_error(&spec, &solution.approximant, 5).unwrap();
    c.check(err <= 1e-10, || format!("max grid error {err}"));
    c.check(elapsed < Duration::from_secs(1), || {
        format!("runtime {elapsed:?} exceeds 1 s")
    });
    c.finish();
}

/// Tensor-Chebyshev expansion coefficients of the second fixture's exact
/// solution x^2 y + y z^2 + x y z, in flat (i, j, k) order.
const EX3_2_COEFFS: [f64; 27] = [
    0.5, 0.375, 0.0625, 0.5, 0.375, 0.0625, 0.0, 0.0, 0.0, // i = 0
    0.375, 0.125, 0.0, 0.375, 0.125, 0.0, 0.0, 0.0, 0.0, // i = 1
    0.0625, 0.0, 0.0, 0.0625, 0.0, 0.0, 0.0, 0.0, 0.0, // i = 2
];

#[test]
fn criterion_2_second_example_coefficient_table() {
    let mut c = Criterion::new(2, "ex3_2 coefficient table at N = 2");
    let spec = builtin_fixture("ex3_2").unwrap();

    let start = Instant::now();
    let solution = solve_problem(&spec, 2, &options_with_quad(12)).unwrap();
    let elapsed = start.elapsed();

    for (pos, (a, e)) in solution
        .approximant
        .coeffs()
        .iter()
        .zip(EX3_2_COEFFS.iter())
        .enumerate()
    {
        c.check((a - e).abs() <= 1e-9, || {
            format!("coefficient {pos}: {a} vs {e}")
        });
    }
    c.check(elapsed < Duration::from_secs(10), || {
        format!("runtime {elapsed:?} exceeds 10 s")
    });
    c.finish();
}

#[test]
fn criterion_3_third_example_nonlinear_recovery() {
    let mut c = Criterion::new(3, "ex3_3 Newton recovery at N = 1");
    let spec = builtin_fixture("ex3_3").unwrap();
    let system = build_residual_system(&spec, 1, &rule(12)).unwrap();

    let start = Instant::now();
    let (coeffs, trace) = newton_solve(&system, &NewtonOptions::default()).unwrap();
    let elapsed = start.elapsed();

    c.check(trace.converged, || "Newton did not converge".to_string());
    c.check(trace.steps.len() <= 10, || {
        format!("{} iterations used", trace.steps.len())
    });
    let final_norm = trace.steps.last().map(|s| s.residual_norm).unwrap_or(f64::MAX);
    c.check(final_norm <= 1e-12, || {
        format!("final residual {final_norm}")
    });
    for (pos, a) in coeffs.iter().enumerate() {
        c.check((a - 0.125).abs() <= 1e-8, || {
            format!("coefficient {pos}: {a} vs 1/8")
        });
    }
    c.check(elapsed < Duration::from_secs(5), || {
        format!("runtime {elapsed:?} exceeds 5 s")
    });
    c.finish();
}

struct TableRow {
    exact_reference: f64,
    abs_error_reference: f64,
}

fn check_table(
    c: &mut Criterion,
    fixture: &str,
    reference: &[TableRow],
    exact_tolerance: f64,
) -> Duration {
    let start = Instant::now();
    let report = run_solve(&SolveConfig {
        source: ProblemSource::resolve(fixture),
        order: 2,
        quad_order: Some(12),
        points: None,
        threads: None,
        fd_jacobian: false,
    })
    .unwrap();
    let elapsed = start.elapsed();

    let points = fixture_eval_points(fixture).unwrap();
    assert_eq!(report.error_table.len(), points.len());
    for (row_idx, (row, reference)) in report.error_table.iter().zip(reference.iter()).enumerate()
    {
        // exact column agrees with the reference value at the precision
        // the reference is given to
        c.check(
            (row.exact - reference.exact_reference).abs() <= exact_tolerance,
            || {
                format!(
                    "{fixture} row {row_idx}: exact {} vs reference {}",
                    row.exact, reference.exact_reference
                )
            },
        );
        // absolute error within 1% relative of the reference value
        let rel = (row.abs_error - reference.abs_error_reference).abs()
            / reference.abs_error_reference;
        c.check(rel <= 0.01, || {
            format!(
                "{fixture} row {row_idx}: error {} vs reference {} (relative deviation {rel:.2e})",
                row.abs_error, reference.abs_error_reference
            )
        });
    }
    elapsed
}

#[test]
fn criterion_4_first_table_replication() {
    let mut c = Criterion::new(4, "ex3_4 error table at N = 2");
    let reference = [
        TableRow { exact_reference: 0.09950041653, abs_error_reference: 2.2992069e-4 },
        TableRow { exact_reference: 0.009950041653, abs_error_reference: 2.2994289e-5 },
        TableRow { exact_reference: 0.009950041653, abs_error_reference: 2.2987394e-5 },
        TableRow { exact_reference: 0.009999500004, abs_error_reference: 2.927109e-6 },
        TableRow { exact_reference: 0.0009999500004, abs_error_reference: 2.927257e-7 },
        TableRow { exact_reference: 0.0009999500004, abs_error_reference: 2.927145e-7 },
        TableRow { exact_reference: 0.0009999995000, abs_error_reference: 2.99266e-8 },
    ];
    let elapsed = check_table(&mut c, "ex3_4", &reference, 5e-12);
    c.check(elapsed < Duration::from_secs(10), || {
        format!("runtime {elapsed:?} exceeds 10 s")
    });
    c.finish();
}

#[test]
fn criterion_5_second_table_replication() {
    let mut c = Criterion::new(5, "ex3_5 error table at N = 2");
    let reference = [
        TableRow { exact_reference: 1.349858808, abs_error_reference: 0.033089467 },
        TableRow { exact_reference: 1.233678060, abs_error_reference: 0.021664584 },
        TableRow { exact_reference: 1.127496852, abs_error_reference: 0.011933284 },
        TableRow { exact_reference: 1.030454534, abs_error_reference: 0.003668302 },
        TableRow { exact_reference: 1.021222052, abs_error_reference: 0.002550285 },
        TableRow { exact_reference: 1.012072289, abs_error_reference: 0.001450893 },
        TableRow { exact_reference: 1.003004505, abs_error_reference: 0.000369862 },
    ];
    let elapsed = check_table(&mut c, "ex3_5", &reference, 5e-10);
    c.check(elapsed < Duration::from_secs(10), || {
        format!("runtime {elapsed:?} exceeds 10 s")
    });
    c.finish();
}

#[test]
fn criterion_6_fixture_self_consistency_oracle() {
    let mut c = Criterion::new(6, "fixture encodings satisfy the integral equation");
    let q_rule = rule(16);
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC6);
    for id in FIXTURE_IDS {
        let spec = builtin_fixture(id).unwrap();
        for _ in 0..20 {
            let x: f64 = rng.gen_range(0.0..1.0);
            let y: f64 = rng.gen_range(0.0..1.0);
            let z: f64 = rng.gen_range(0.0..1.0);
            let lhs = spec.eval_exact(x, y, z).unwrap().unwrap();
            let integrand = |xx: f64, yy: f64, zz: f64, r: f64, s: f64, t: f64| {
                let kernel = spec.eval_kernel(xx, yy, zz, r, s, t).unwrap();
                let u = spec.eval_exact(r, s, t).unwrap().unwrap();
                kernel * spec.eval_nonlinearity(u).unwrap()
            };
            let integral = box_integral(&integrand, (x, y, z), &q_rule).unwrap();
            let rhs = spec.eval_f(x, y, z).unwrap() + integral;
            c.check((lhs - rhs).abs() <= 1e-10, || {
                format!("{id} at ({x}, {y}, {z}): defect {}", lhs - rhs)
            });
        }
    }
    c.finish();
}

fn property_chebyshev_cosine_identity(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x07A);
    for _ in 0..1000 {
        let x: f64 = rng.gen_range(0.0..=1.0);
        for n in 0..=64usize {
            let recurrence = shifted_cheb(n, x).unwrap();
            let cosine = (n as f64 * (2.0 * x - 1.0).acos()).cos();
            c.check((recurrence - cosine).abs() <= 1e-12, || {
                format!("cosine identity: n={n} x={x}")
            });
        }
    }
}

fn property_quadrature_polynomial_exactness(c: &mut Criterion) {
    for q in [1usize, 2, 3, 4, 6, 8, 12, 16, 24] {
        let q_rule = rule(q);
        for d in 0..=(2 * q - 1) {
            let integral = q_rule.integrate_unit(|t| t.powi(d as i32));
            let exact = 1.0 / (d as f64 + 1.0);
            c.check((integral - exact).abs() <= 1e-12, || {
                format!("monomial exactness: q={q} d={d}: {integral} vs {exact}")
            });
        }
    }
}

struct RandomPolynomial {
    terms: Vec<(f64, i32, i32, i32)>,
}

impl RandomPolynomial {
    fn sample(rng: &mut ChaCha8Rng) -> Self {
        let count = rng.gen_range(4..=8);
        let terms = (0..count)
            .map(|_| {
                (
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(0..=6),
                    rng.gen_range(0..=6),
                    rng.gen_range(0..=6),
                )
            })
            .collect();
        RandomPolynomial { terms }
    }

    fn eval(&self, r: f64, s: f64, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|(coeff, a, b, cexp)| coeff * r.powi(*a) * s.powi(*b) * t.powi(*cexp))
            .sum()
    }

    /// Exact integral over the box `[0,x] x [0,y] x [0,z]`.
    fn analytic_integral(&self, upper: (f64, f64, f64)) -> f64 {
        let (x, y, z) = upper;
        self.terms
            .iter()
            .map(|(coeff, a, b, cexp)| {
                coeff * x.powi(a + 1) / f64::from(a + 1) * y.powi(b + 1) / f64::from(b + 1)
                    * z.powi(cexp + 1)
                    / f64::from(cexp + 1)
            })
            .sum()
    }
}

fn property_quadrature_vs_brute_force(c: &mut Criterion) {
    let q_rule = rule(12);
    let mut rng = ChaCha8Rng::seed_from_u64(0x0B0);
    let cases: Vec<(RandomPolynomial, (f64, f64, f64))> = (0..50)
        .map(|_| {
            let poly = RandomPolynomial::sample(&mut rng);
            let upper = (
                rng.gen_range(0.1..1.0),
                rng.gen_range(0.1..1.0),
                rng.gen_range(0.1..1.0),
            );
            (poly, upper)
        })
        .collect();
    let failures: Vec<String> = cases
        .par_iter()
        .enumerate()
        .filter_map(|(case, (poly, upper))| {
            let integrand =
                |_x: f64, _y: f64, _z: f64, r: f64, s: f64, t: f64| poly.eval(r, s, t);
            let gauss = box_integral(&integrand, *upper, &q_rule).unwrap();
            let brute = brute_force_integral(&integrand, *upper, 256).unwrap();
            let analytic = poly.analytic_integral(*upper);
            if (gauss - brute).abs() > 1e-3 {
                Some(format!(
                    "oracle case {case}: gauss {gauss} vs brute {brute}"
                ))
            } else if (gauss - analytic).abs() > 1e-12 {
                Some(format!(
                    "oracle case {case}: gauss {gauss} vs analytic {analytic}"
                ))
            } else {
                None
            }
        })
        .collect();
    for f in failures {
        c.check(false, || f.clone());
    }
}

fn property_jacobian_vs_finite_differences(c: &mut Criterion) {
    let spec = builtin_fixture("ex3_3").unwrap();
    let system = build_residual_system(&spec, 1, &rule(12)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0FD);
    for _ in 0..5 {
        let a: Vec<f64> = (0..system.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let analytic = system.jacobian(&a).unwrap();
        let fd = system.jacobian_fd(&a, 1e-6).unwrap();
        let mut worst = 0.0f64;
        for row in 0..system.dim() {
            for col in 0..system.dim() {
                worst = worst.max((analytic.get(row, col) - fd.get(row, col)).abs());
            }
        }
        c.check(worst <= 1e-5, || {
            format!("Jacobian max deviation {worst}")
        });
    }
}

fn property_linear_newton_agreement(c: &mut Criterion) {
    for id in ["ex3_1", "ex3_2", "ex3_4", "ex3_5"] {
        let spec = builtin_fixture(id).unwrap();
        for order in [1usize, 2] {
            let q_rule = rule(2 * order + 8);
            let linear = assemble_linear(&spec, order, &q_rule).unwrap();
            let direct = lu_solve(&linear, &LinearSolveOptions::default()).unwrap();
            let residual_system = build_residual_system(&spec, order, &q_rule).unwrap();
            let (via_newton, _) =
                newton_solve(&residual_system, &NewtonOptions::default()).unwrap();
            let diff: Vec<f64> = direct
                .coefficients
                .iter()
                .zip(via_newton.iter())
                .map(|(a, b)| a - b)
                .collect();
            let gap = vec_norm_inf(&diff);
            c.check(gap <= 1e-9, || {
                format!("{id} N={order}: path disagreement {gap}")
            });
        }
    }
}

fn property_assembly_thread_determinism(c: &mut Criterion) {
    let spec = builtin_fixture("ex3_4").unwrap();
    let q_rule = rule(12);
    let assemble_with = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| assemble_linear(&spec, 2, &q_rule).unwrap())
    };
    let single = assemble_with(1);
    let multi = assemble_with(4);
    let bitwise_rows = single
        .matrix()
        .as_slice()
        .iter()
        .zip(multi.matrix().as_slice().iter())
        .all(|(a, b)| a.to_bits() == b.to_bits());
    let bitwise_rhs = single
        .rhs()
        .iter()
        .zip(multi.rhs().iter())
        .all(|(a, b)| a.to_bits() == b.to_bits());
    c.check(bitwise_rows, || {
        "assembled matrices differ across thread counts".to_string()
    });
    c.check(bitwise_rhs, || {
        "assembled right-hand sides differ across thread counts".to_string()
    });
}

fn property_polynomial_exact_solves(c: &mut Criterion) {
    // fixtures with polynomial exact solutions are reproduced to rounding
    // for every order at or above the per-axis degree
    let cases: [(&str, &[usize]); 3] = [
        ("ex3_1", &[1, 2, 3]),
        ("ex3_2", &[2, 3]),
        ("ex3_3", &[1, 2]),
    ];
    for (id, orders) in cases {
        let spec = builtin_fixture(id).unwrap();
        for &order in orders {
            let solution = solve_problem(&spec, order, &SolveOptions::default()).unwrap();
            let err = max_grid_error(&spec, &solution.approximant, 5).unwrap();
            c.check(err <= 1e-9, || {
                format!("{id} N={order}: max grid error {err}")
            });
        }
    }
}

#[test]
fn criterion_7_property_suite() {
    let mut c = Criterion::new(7, "cross-module property suite");
    property_chebyshev_cosine_identity(&mut c);
    property_quadrature_polynomial_exactness(&mut c);
    property_quadrature_vs_brute_force(&mut c);
    property_jacobian_vs_finite_differences(&mut c);
    property_linear_newton_agreement(&mut c);
    property_assembly_thread_determinism(&mut c);
    property_polynomial_exact_solves(&mut c);
    c.finish();
}

#[test]
fn criterion_8_convergence_sanity_sweep() {
    let mut c = Criterion::new(8, "convergence sweep of ex3_5");
    let report = run_sweep(&SweepConfig {
        source: ProblemSource::resolve("ex3_5"),
        n_min: 1,
        n_max: 5,
        quad_order: None,
        grid: 5,
        threads: None,
    })
    .unwrap();
    let errors: Vec<f64> = report
        .rows
        .iter()
        .map(|row| row.max_abs_error.expect("every order solves"))
        .collect();
    for pair in errors.windows(2) {
        c.check(pair[1] < pair[0], || {
            format!("errors not strictly decreasing: {errors:?}")
        });
    }
    // worst tabulated N = 2 error of the reference table
    let table_worst = 0.033089467;
    let last = *errors.last().unwrap();
    c.check(last <= table_worst / 10.0, || {
        format!("N = 5 error {last} not a tenth of {table_worst}")
    });
    c.finish();
}

/// Collocation grids stay consistent with the node formula
/// `(1 + cos(l pi / N)) / 2`; a guard for the data the criteria above
/// depend on.
#[test]
fn collocation_grid_spot_check() {
    let grid = gcl_points(2).unwrap();
    assert_eq!(grid.xs(), &[1.0, 0.5, 0.0]);
}

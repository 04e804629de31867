//! Tensor-product Gauss-Legendre quadrature over variable boxes, checked
//! against closed forms and the midpoint-rule reference integrator.
//!
//! ```text
//! cargo run --example box_quadrature
//! ```

use vie3d::quadrature::{box_integral, brute_force_integral, QuadratureRule};

fn main() {
    let rule = QuadratureRule::gauss_legendre(8).expect("valid order");
    println!("8-point rule on [0, 1]:");
    for (node, weight) in rule.nodes().iter().zip(rule.weights().iter()) {
        println!("  node {node:.15}  weight {weight:.15}");
    }
    println!("  weight sum: {}\n", rule.weights().iter().sum::<f64>());

    // the kernel integrand of the fourth fixture: r s^2 over the unit box
    let f = |_x: f64, _y: f64, _z: f64, r: f64, s: f64, _t: f64| r * s * s;
    let gauss = box_integral(&f, (1.0, 1.0, 1.0), &rule).expect("finite integrand");
    let brute = brute_force_integral(&f, (1.0, 1.0, 1.0), 200).expect("finite integrand");
    println!("integral of r s^2 over [0,1]^3:");
    println!("  gauss-legendre : {gauss:.15}  (analytic 1/6 = {:.15})", 1.0 / 6.0);
    println!("  midpoint m=200 : {brute:.15}\n");

    // a variable box, as the collocation assembler uses it
    let g = |_x: f64, _y: f64, _z: f64, _r: f64, _s: f64, t: f64| t.cos();
    let upper = (0.5, 0.25, 1.0);
    let gauss = box_integral(&g, upper, &rule).expect("finite integrand");
    let analytic = 0.5 * 0.25 * 1.0f64.sin();
    println!("integral of cos(t) over [0,0.5]x[0,0.25]x[0,1]:");
    println!("  gauss-legendre : {gauss:.15}");
    println!("  analytic       : {analytic:.15}");

    // empty boxes integrate to exactly zero
    let zero = box_integral(&g, (0.0, 0.25, 1.0), &rule).expect("finite integrand");
    println!("\nintegral over an empty box: {zero}");
}

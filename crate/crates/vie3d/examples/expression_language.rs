//! Tour of the expression language used in problem files: parsing,
//! evaluation, printing, error reporting, and the u-derivative that feeds
//! the Newton Jacobian.
//!
//! ```text
//! cargo run --example expression_language
//! ```

use vie3d::expr::{parse, Bindings, Var};

fn main() {
    // the free term of the fourth fixture
    let f = parse("x*cos(z) - (x^3*y^3)/9*sin(z)").expect("parses");
    println!("parsed : {f}");
    let value = f.eval(&Bindings::point(0.5, 0.5, 0.5)).expect("evaluates");
    println!("value at (0.5, 0.5, 0.5): {value}\n");

    // precedence: ^ is right-associative and binds tighter than unary minus
    for src in ["2+3*4", "2^3^2", "-2^2", "2^-2"] {
        let e = parse(src).expect("parses");
        println!("{src:>8} = {}", e.eval(&Bindings::new()).unwrap());
    }

    // parse errors carry byte offsets
    println!();
    for bad in ["2 + foo", "(x + 1", "2*"] {
        let err = parse(bad).unwrap_err();
        println!("parse {bad:?}: error {err}");
    }

    // evaluation errors name the offending sub-expression
    let e = parse("1 + ln(x - 2)").expect("parses");
    let err = e.eval(&Bindings::new().with(Var::X, 0.5)).unwrap_err();
    println!("\neval at x = 0.5: {err}");

    // symbolic derivative with respect to u, for nonlinearities
    println!();
    for src in ["u^2", "sin(u)*u", "exp(-u^2)"] {
        let g = parse(src).expect("parses");
        let dg = g.differentiate_u().expect("only references u");
        let at = 0.7;
        println!(
            "d/du {src:<12} = {dg}   (value at u = {at}: {:.12})",
            dg.eval(&Bindings::scalar(at)).unwrap()
        );
    }
}

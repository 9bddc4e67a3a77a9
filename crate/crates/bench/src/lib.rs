//! Shared inputs for the criterion benches.

use meanscope::{build, GeneratorSpec, Generator, Window};

/// Generators covering the closed-form, expression and spline paths.
pub fn fixtures() -> Vec<(&'static str, Generator)> {
    let w = Window::DEFAULT;
    let expr = meanscope::parse_generator("x^2 + 3*x").expect("fixture parses");
    let spline = meanscope::Piecewise::c1(0.0, 0.0, &[(0.0, 2.0), (0.5, 1.0), (0.8, 0.0)]).expect("fixture spline");
    vec![
        ("power2", build(GeneratorSpec::power(2.0), w).expect("builds")),
        ("expr", build(expr, w).expect("builds")),
        ("spline", build(GeneratorSpec::Piecewise(spline), w).expect("builds")),
    ]
}

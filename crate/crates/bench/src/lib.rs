//! Fixtures shared by the benchmarks.

use varifold::generators::{generate, GeneratorSpec, GraphForm, Shape};
use varifold::DiscreteVarifold;

/// Quadratic curve `y = x^2 / 2` sampled at spacing `h` over `[-1, 1]`.
pub fn parabola(h: f64) -> DiscreteVarifold {
    let spec = GeneratorSpec::new(Shape::Graph { n: 1, form: GraphForm::Quadratic { c: 1.0 } }, h, 2.0);
    generate(&spec).expect("valid spec").varifold
}

/// Unit 2-sphere at spacing `h`.
pub fn sphere(h: f64) -> DiscreteVarifold {
    let spec = GeneratorSpec::new(Shape::Sphere { n: 2, radius: 1.0, center: None }, h, 1.0);
    generate(&spec).expect("valid spec").varifold
}

/// Flat square of side 4 in R^3.
pub fn plane(h: f64) -> DiscreteVarifold {
    generate(&GeneratorSpec::new(Shape::Plane { n: 2, k: 1 }, h, 4.0)).expect("valid spec").varifold
}

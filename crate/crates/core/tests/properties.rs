use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use varifold::excess::{height_excess, tilt_excess};
use varifold::fields::{tangential_from_jacobian, tangential_norm_and_div};
use varifold::generators::{generate, GeneratorSpec, GraphForm, Shape};
use varifold::geometry::{operator_norm, orthonormalize_columns};
use varifold::monotonicity::{density, rescale, MonotonicityOptions};
use varifold::variation::{estimate_K, first_variation, gradient_mass, BallFamily, FieldFamily};
use varifold::{Config, CutoffProfile, DiscreteVarifold, ProjectionPair, VectorField};

fn matrix(d: usize, c: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-2.0f64..2.0, d * c).prop_map(move |v| DMatrix::from_vec(d, c, v))
}

fn frame(d: usize, n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    matrix(d, n).prop_filter_map("rank deficient", |m| orthonormalize_columns(&m))
}

fn rotation(d: usize) -> impl Strategy<Value = DMatrix<f64>> {
    frame(d, d)
}

fn line(h: f64) -> DiscreteVarifold {
    generate(&GeneratorSpec::new(Shape::Plane { n: 1, k: 1 }, h, 2.0)).unwrap().varifold
}

fn wavy() -> DiscreteVarifold {
    let spec = GeneratorSpec::new(Shape::HoelderGraph { n: 1, amplitude: 0.1, alpha: 0.5 }, 1.0 / 200.0, 4.0);
    generate(&spec).unwrap().varifold
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tangential_norm_bounds((dx, f) in (matrix(3, 3), frame(3, 2))) {
        let p = &f * f.transpose();
        let t = tangential_from_jacobian(&dx, &p);
        prop_assert!(t.opnorm <= operator_norm(&dx) * (1.0 + 1e-12) + 1e-14);
        prop_assert!(t.div_m.abs() <= 2.0 * t.opnorm * (1.0 + 1e-12) + 1e-14);
        let (op, div) = tangential_norm_and_div(&dx, &f);
        prop_assert!((op - t.opnorm).abs() <= 1e-10 * (1.0 + op));
        prop_assert!((div - t.div_m).abs() <= 1e-10 * (1.0 + div.abs()));
    }

    #[test]
    fn tangential_quantities_are_rotation_invariant((dx, f, q) in (matrix(4, 4), frame(4, 2), rotation(4))) {
        let (op, div) = tangential_norm_and_div(&dx, &f);
        let (op2, div2) = tangential_norm_and_div(&(&q * &dx * q.transpose()), &(&q * &f));
        prop_assert!((op - op2).abs() <= 1e-10 * (1.0 + op));
        prop_assert!((div - div2).abs() <= 1e-10 * (1.0 + div.abs()));
    }

    #[test]
    fn projection_distance_is_a_metric((a, b) in (frame(4, 2), frame(4, 2))) {
        let (pa, pb) = (ProjectionPair::from_frame(&a), ProjectionPair::from_frame(&b));
        let dab = pa.distance(&pb).unwrap();
        let dba = pb.distance(&pa).unwrap();
        prop_assert!((dab.operator - dba.operator).abs() < 1e-12);
        prop_assert!(dab.operator <= 1.0 + 1e-12);
        prop_assert!(dab.operator <= dab.frobenius + 1e-12);
        prop_assert!(pa.distance(&pa).unwrap().frobenius < 1e-12);
    }

    #[test]
    fn mass_is_monotone_and_scales(x in -0.5f64..0.5, r1 in 0.01f64..0.4, dr in 0.0f64..0.4, m in 1.0f64..4.0) {
        let v = line(0.01);
        let c = DVector::from_vec(vec![x, 0.0]);
        let (a, b) = (v.mass_in_ball(&c, r1), v.mass_in_ball(&c, r1 + dr));
        prop_assert!(a <= b);
        let scaled = v.scale_multiplicity(m).unwrap();
        prop_assert!((scaled.mass_in_ball(&c, r1) - m * a).abs() <= 1e-12 * m * a.max(1.0));
        let doubled = v.union(&v).unwrap();
        prop_assert!((doubled.mass_in_ball(&c, r1) - 2.0 * a).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn first_variation_is_linear(s in -3.0f64..3.0, seed in 0u64..1000) {
        let v = wavy();
        let c = DVector::from_vec(vec![0.1, v.samples()[420].position[1]]);
        let x = VectorField::random_bumps(c.clone(), 0.5, CutoffProfile::Bump, seed, 3).unwrap();
        let y = VectorField::radial(c, 0.4, CutoffProfile::Bump).unwrap();
        let (fx, fy) = (first_variation(&v, &x).unwrap(), first_variation(&v, &y).unwrap());
        let scaled = first_variation(&v, &x.scaled(s)).unwrap();
        prop_assert!((scaled - s * fx).abs() <= 1e-10 * (1.0 + fx.abs() * s.abs()));
        let sum = first_variation(&v, &VectorField::combination(vec![(1.0, x.clone()), (s, y)]).unwrap()).unwrap();
        prop_assert!((sum - fx - s * fy).abs() <= 1e-10 * (1.0 + fx.abs() + s.abs() * fy.abs()));
        let gm = gradient_mass(&v, &x.scaled(s)).unwrap();
        prop_assert!((gm - s.abs() * gradient_mass(&v, &x).unwrap()).abs() <= 1e-10 * (1.0 + gm));
    }

    #[test]
    fn rescaling_composes(lambda in 0.2f64..2.0, mu in 0.2f64..2.0, rho in 0.05f64..0.3, xi in -0.3f64..0.3) {
        let v = wavy();
        let x = v.samples()[(400.0 + xi * 200.0) as usize].position.clone();
        let once = rescale(&v, &x, lambda).unwrap();
        let twice = rescale(&once, &DVector::zeros(2), mu).unwrap();
        let direct = rescale(&v, &x, lambda * mu).unwrap();
        let zero = DVector::zeros(2);
        let (a, b) = (twice.mass_in_ball(&zero, rho), direct.mass_in_ball(&zero, rho));
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        let expected = v.mass_in_ball(&x, lambda * rho) / lambda;
        prop_assert!((once.mass_in_ball(&zero, rho) - expected).abs() <= 1e-12 * expected.max(1.0));
    }

    #[test]
    fn excess_is_rotation_invariant((q, f) in (rotation(2), frame(2, 1)), rho in 0.1f64..0.8) {
        let v = wavy();
        let xi = v.samples()[400].position.clone();
        let t = ProjectionPair::from_frame(&f);
        let rv = v.transformed(&q, &DVector::zeros(2)).unwrap();
        let rt = ProjectionPair::from_frame(&(&q * &f));
        let rxi = &q * &xi;
        let (a, b) = (tilt_excess(&v, &xi, rho, &t).unwrap(), tilt_excess(&rv, &rxi, rho, &rt).unwrap());
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a));
        let (a, b) = (height_excess(&v, &xi, rho, &t).unwrap(), height_excess(&rv, &rxi, rho, &rt).unwrap());
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn density_of_a_plane_is_its_multiplicity(m in 1.0f64..3.0, x in -0.5f64..0.5) {
        let spec = GeneratorSpec::new(Shape::Plane { n: 1, k: 1 }, 1e-3, 2.0).with_multiplicity(m);
        let v = generate(&spec).unwrap().varifold;
        let opts = MonotonicityOptions::for_varifold(&v, 4.0, 8.0);
        let d = density(&v, &DVector::from_vec(vec![x, 0.0]), 1.0, 0.0, &opts);
        prop_assert!((d.theta_hat - m).abs() <= d.tol, "{} vs {m}", d.theta_hat);
    }

    #[test]
    fn more_bumps_never_lower_k(extra in 1usize..6, c in 0.2f64..1.5) {
        let form = GraphForm::Quadratic { c };
        let v = generate(&GeneratorSpec::new(Shape::Graph { n: 1, form }, 1.0 / 100.0, 8.0)).unwrap().varifold;
        let cfg = Config::default().family;
        let balls = BallFamily::standard(&v, &cfg);
        let mut small = FieldFamily::vertical(&cfg);
        small.vertical_bumps = 2;
        let mut large = small.clone();
        large.vertical_bumps = 2 + extra;
        let a = estimate_K(&v, 0.5, &balls, &small).unwrap().k_hat;
        let b = estimate_K(&v, 0.5, &balls, &large).unwrap().k_hat;
        prop_assert!(a <= b, "{a} > {b}");
    }
}

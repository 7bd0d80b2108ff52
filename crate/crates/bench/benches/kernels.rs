use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DVector;

use varifold::excess::{best_plane, tilt_excess};
use varifold::monotonicity::{check_monotonicity, MonotonicityOptions};
use varifold::regularity::graph_conclusion;
use varifold::variation::{dyadic_radii, estimate_K, first_variation, BallFamily, FieldFamily};
use varifold::{Config, CutoffProfile, VectorField};
use varifold_bench::{parabola, plane, sphere};

fn ball_queries(c: &mut Criterion) {
    let mut g = c.benchmark_group("mass_in_ball");
    for h in [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0] {
        let v = sphere(h);
        let x = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        g.bench_with_input(BenchmarkId::from_parameter(v.len()), &v, |b, v| b.iter(|| v.mass_in_ball(&x, 0.25)));
    }
    g.finish();
}

fn first_variation_kernel(c: &mut Criterion) {
    let v = sphere(1.0 / 64.0);
    let x = DVector::from_vec(vec![0.0, 0.0, 1.0]);
    let field = VectorField::random_bumps(x, 0.5, CutoffProfile::Smooth { sharpness: 4.0 }, 1, 3).unwrap();
    c.bench_function("first_variation/sphere", |b| b.iter(|| first_variation(&v, &field).unwrap()));
}

fn estimate_k(c: &mut Criterion) {
    let v = parabola(1.0 / 200.0);
    let cfg = Config::default().family;
    let balls = BallFamily::standard(&v, &cfg);
    let fields = FieldFamily::vertical(&cfg);
    c.bench_function("estimate_K/parabola", |b| b.iter(|| estimate_K(&v, 1.0, &balls, &fields).unwrap()));
}

fn monotonicity(c: &mut Criterion) {
    let v = plane(0.01);
    let x = DVector::zeros(3);
    let opts = MonotonicityOptions::for_varifold(&v, 4.0, 8.0);
    let radii = dyadic_radii(opts.reliable_radius, 1.0);
    c.bench_function("check_monotonicity/plane", |b| b.iter(|| check_monotonicity(&v, &x, 0.5, 0.1, &radii, &opts).unwrap()));
}

fn excess(c: &mut Criterion) {
    let v = sphere(1.0 / 64.0);
    let x = DVector::from_vec(vec![0.0, 0.0, 1.0]);
    c.bench_function("best_plane+tilt/sphere", |b| {
        b.iter(|| {
            let t = best_plane(&v, &x, 0.3).unwrap();
            tilt_excess(&v, &x, 0.3, &t).unwrap()
        })
    });
}

fn graph_test(c: &mut Criterion) {
    let v = sphere(1.0 / 128.0);
    let x = DVector::from_vec(vec![0.0, 0.0, 1.0]);
    c.bench_function("graph_conclusion/sphere_cap", |b| b.iter(|| graph_conclusion(&v, &x, 0.125, 0.5, 0).unwrap()));
}

criterion_group!(kernels, ball_queries, first_variation_kernel, estimate_k, monotonicity, excess, graph_test);
criterion_main!(kernels);

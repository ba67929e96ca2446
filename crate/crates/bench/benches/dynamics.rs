use criterion::{criterion_group, criterion_main, Criterion};
use heisenberg_rch::magnetic::PhasePoint;
use heisenberg_rch::numerics::Method;
use heisenberg_rch::rch::{integrate, rch_vector_field};
use heisenberg_rch::reduction::{check_commutation, reduce_system};
use heisenberg_rch::suite::fixtures;
use nalgebra::Vector3;
use std::hint::black_box;

fn initial() -> PhasePoint {
    PhasePoint::new(Vector3::new(0.1, 0.2, -0.3), Vector3::new(0.5, -0.6, 0.4))
}

fn vector_field(c: &mut Criterion) {
    let sys = fixtures::controlled_particle();
    let x = fixtures::kk_initial_state().with_v(nalgebra::dvector![0.2], nalgebra::dvector![-0.1]);
    c.bench_function("rch_vector_field", |b| {
        b.iter(|| rch_vector_field(black_box(&sys), black_box(&x)))
    });
}

fn integration(c: &mut Criterion) {
    let sys = fixtures::invariant_particle();
    let x0 = initial();
    let mut group = c.benchmark_group("integrate_1000_steps");
    for method in [Method::Midpoint, Method::Rk4] {
        group.bench_function(format!("{method:?}"), |b| {
            b.iter(|| integrate(&sys, black_box(&x0), 1.0, 1e-3, method).unwrap())
        });
    }
    group.finish();
}

fn reduction(c: &mut Criterion) {
    let sys = fixtures::invariant_particle();
    let red = reduce_system(&sys, fixtures::LEVEL).unwrap();
    let o = red.base_point();
    c.bench_function("reduced_vector_field", |b| {
        b.iter(|| red.vector_field(black_box(&o)).unwrap())
    });
    c.bench_function("commutation_10_samples", |b| {
        b.iter(|| check_commutation(&sys, &red, 10, 1).unwrap())
    });
}

criterion_group!(benches, vector_field, integration, reduction);
criterion_main!(benches);

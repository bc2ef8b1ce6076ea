use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use quatlag::dynamics::{c_matrix, d_matrix, lagrangian_accel, regressor_bar};
use quatlag::verify::{verify, VerifyOptions};
use quatlag::{InertiaModel, UnitQuaternion, Vec3, Vec4};

fn setup() -> (UnitQuaternion, Vec4, InertiaModel) {
    let q = UnitQuaternion::new(Vec4::new(0.5, 0.5, -0.5, 0.5)).unwrap();
    let v = Vec4::new(0.1, -0.2, 0.3, 0.05);
    let qdot = v - q.as_vec() * q.as_vec().dot(&v);
    let im = InertiaModel::diagonal(10.0 * Vec3::new(1.0, 2.0, 3.0).normalize(), 1.0).unwrap();
    (q, qdot, im)
}

fn operators(c: &mut Criterion) {
    let (q, qdot, im) = setup();
    let tau_bar = Vec4::new(0.0, 0.1, -0.2, 0.3);
    c.bench_function("d_matrix", |b| b.iter(|| d_matrix(black_box(&q), &im)));
    c.bench_function("c_matrix", |b| b.iter(|| c_matrix(black_box(&q), &qdot, &im)));
    c.bench_function("lagrangian_accel", |b| {
        b.iter(|| lagrangian_accel(black_box(&q), &qdot, &tau_bar, &im))
    });
    c.bench_function("regressor_bar", |b| {
        b.iter(|| regressor_bar(black_box(&q), &qdot, &tau_bar))
    });
}

fn property_suites(c: &mut Criterion) {
    let opts = VerifyOptions {
        samples: 1000,
        ..Default::default()
    };
    c.bench_function("verify_1000", |b| b.iter(|| verify(black_box(&opts)).unwrap()));
}

criterion_group!(benches, operators, property_suites);
criterion_main!(benches);

use std::hint::black_box;

use annni_core::dynamics::{iterate, random_initial_state, IterationConfig};
use annni_core::m1::{exclude_higher_periods, solve_f_fixed_points, two_cycle_quadratic};
use annni_core::m2::solve_m2_fixed_points;
use annni_core::partition::{brute_force_partition, partition_recurrence_log};
use annni_core::scan::{scan, ScanConfig};
use annni_core::{apply_f_map, BoltzmannParams, Couplings, StateVector};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn params(j1: f64, j2: f64, t: f64) -> BoltzmannParams {
    Couplings::new(j1, j2, t).unwrap().params().unwrap()
}

fn recurrence(c: &mut Criterion) {
    let p = params(1.0, -0.5, 1.0);
    let u = StateVector::new(0.3, 1.0, 0.7, 0.2).unwrap();
    c.bench_function("apply_f_map", |b| b.iter(|| apply_f_map(&p, black_box(&u))));
    let mut group = c.benchmark_group("partition_recurrence_log");
    for n in [10usize, 100, 1000] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| partition_recurrence_log(&p, black_box(n)))
        });
    }
    group.finish();
    let couplings = Couplings::new(1.0, -0.5, 1.0).unwrap();
    c.bench_function("brute_force_partition_n3", |b| {
        b.iter(|| brute_force_partition(&couplings, black_box(3)))
    });
}

fn symmetric_slice(c: &mut Criterion) {
    let three = params(0.0, 1.0, 1.0);
    c.bench_function("solve_f_fixed_points", |b| {
        b.iter(|| solve_f_fixed_points(black_box(&three)))
    });
    let cyc = params(1.0, -1.0, 0.5);
    c.bench_function("two_cycle_quadratic", |b| {
        b.iter(|| two_cycle_quadratic(black_box(&cyc)))
    });
    c.bench_function("exclude_higher_periods_8", |b| {
        b.iter(|| exclude_higher_periods(black_box(&cyc), 8))
    });
}

fn ferromagnetic(c: &mut Criterion) {
    let p = params(1.0, 0.3, 1.0);
    c.bench_function("solve_m2_fixed_points", |b| {
        b.iter(|| solve_m2_fixed_points(black_box(&p)))
    });
}

fn trajectories(c: &mut Criterion) {
    let cfg = IterationConfig::default();
    let mut group = c.benchmark_group("iterate");
    for (name, j1, j2, t) in [
        ("ferromagnetic", 1.0, 0.3, 1.0),
        ("cycle4", 1.0, -0.8, 0.5),
        ("incommensurate", 1.0, -0.55, 1.0),
    ] {
        let p = params(j1, j2, t);
        let u0 = random_initial_state(1);
        group.bench_function(name, |b| b.iter(|| iterate(&p, black_box(&u0), &cfg)));
    }
    group.finish();
}

fn grid_scan(c: &mut Criterion) {
    let cfg = ScanConfig {
        axes: vec![
            "j2:-1.2:0.8:8".parse().unwrap(),
            "temperature:0.5:2.5:8".parse().unwrap(),
        ],
        seeds: vec![0],
        iteration: IterationConfig {
            max_iter: 2000,
            ..Default::default()
        },
        ..Default::default()
    };
    let mut group = c.benchmark_group("scan_8x8");
    group.sample_size(10);
    for workers in [1usize, 4] {
        let cfg = ScanConfig {
            workers,
            ..cfg.clone()
        };
        group.bench_with_input(BenchmarkId::from_parameter(workers), &cfg, |b, cfg| {
            b.iter(|| scan(cfg))
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    recurrence,
    symmetric_slice,
    ferromagnetic,
    trajectories,
    grid_scan
);
criterion_main!(benches);

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use qab_core::dynamics::{propagate, schedule_for_total_time, PropagationOptions};
use qab_core::geometry::{christoffel_closed, riemann_tensor, AdiabaticMetric, FdSteps};
use qab_core::hamiltonians::{build_grover, EffectiveTwoLevel};
use qab_core::paths::{projector_pair_geodesic, rc_path, ShootingOptions, DEFAULT_SAMPLES};
use qab_core::ProjectorPairFamily;

fn geometry(c: &mut Criterion) {
    let family = ProjectorPairFamily::new(build_grover(3, 7).unwrap());
    let metric = AdiabaticMetric::new(&family).unwrap();
    let x = [0.4, 0.7];
    c.bench_function("christoffel_closed", |b| b.iter(|| christoffel_closed(&family, black_box(&x)).unwrap()));
    c.bench_function("riemann_fd", |b| b.iter(|| riemann_tensor(&metric, black_box(&x), FdSteps::default()).unwrap()));
}

fn shooting(c: &mut Criterion) {
    let mut group = c.benchmark_group("geodesic_shoot");
    group.sample_size(10);
    for n in [1, 3, 5] {
        let problem = build_grover(n, (1 << n) - 1).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &problem, |b, p| {
            b.iter(|| projector_pair_geodesic(p, &ShootingOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn propagation(c: &mut Criterion) {
    let problem = build_grover(6, 63).unwrap();
    let full = ProjectorPairFamily::new(problem.clone());
    let reduced = ProjectorPairFamily::new(EffectiveTwoLevel::new(&problem).unwrap().reduced().clone());
    let rc = rc_path(&problem, DEFAULT_SAMPLES).unwrap();
    let schedule = schedule_for_total_time(&full, &rc, 100.0).unwrap();
    let mut group = c.benchmark_group("propagate");
    group.sample_size(20);
    for steps in [2_000, 20_000] {
        let opts = PropagationOptions { steps_per_unit: steps, ..Default::default() };
        group.bench_with_input(BenchmarkId::new("reduced", steps), &opts, |b, o| b.iter(|| propagate(&reduced, &schedule, o).unwrap()));
    }
    let small = build_grover(4, 15).unwrap();
    let dense = ProjectorPairFamily::new(small.clone());
    let schedule = schedule_for_total_time(&dense, &rc_path(&small, DEFAULT_SAMPLES).unwrap(), 100.0).unwrap();
    let opts = PropagationOptions { steps_per_unit: 2_000, ..Default::default() };
    group.bench_function("dense_n4_2000", |b| b.iter(|| propagate(&dense, &schedule, &opts).unwrap()));
    group.finish();
}

criterion_group!(benches, geometry, shooting, propagation);
criterion_main!(benches);

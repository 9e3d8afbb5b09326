use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use sislab_bench::{persistent_model, scheme};
use sislab_core::{lcm_simulate, milstein_direct_simulate, strong_error, BrownianGrid};

fn grid_generation(c: &mut Criterion) {
    let mut group = c.benchmark_group("grid_generate");
    for steps in [1usize << 10, 1 << 14] {
        group.throughput(Throughput::Elements(steps as u64));
        group.bench_with_input(BenchmarkId::from_parameter(steps), &steps, |b, &steps| {
            b.iter(|| BrownianGrid::generate(black_box(1), 0, 1.0, steps).unwrap())
        });
    }
    group.finish();
}

fn single_path(c: &mut Criterion) {
    let model = persistent_model();
    let steps = 1usize << 14;
    let grid = BrownianGrid::generate(7, 0, 1.0, steps).unwrap();
    let increments = grid.coarsen(0).unwrap();
    let h = grid.fine_step_size();
    let mut group = c.benchmark_group("simulate");
    group.throughput(Throughput::Elements(steps as u64));
    group.bench_function("lcm", |b| {
        b.iter(|| lcm_simulate(black_box(&increments), &model, &scheme(h)).unwrap())
    });
    group.bench_function("milstein_direct", |b| {
        b.iter(|| milstein_direct_simulate(black_box(&increments), &model, h).unwrap())
    });
    group.finish();
}

fn strong_error_small(c: &mut Criterion) {
    let model = persistent_model();
    let reference = scheme(1.0 / 1024.0);
    let mut group = c.benchmark_group("strong_error");
    group.sample_size(10);
    group.bench_function("64_paths_4_levels", |b| {
        b.iter(|| strong_error(&model, &reference, &[1, 2, 3, 4], 64, black_box(3), 1.0).unwrap())
    });
    group.finish();
}

criterion_group!(benches, grid_generation, single_path, strong_error_small);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, Criterion};
use pll_lockin::{
    conservative_lock_in, lock_in_sweep, lock_in_sweep_serial, LoopParameters, SweepSpec,
};
use std::hint::black_box;

fn bench_lock_in(c: &mut Criterion) {
    let params = LoopParameters::new(0.0633, 0.0225, 250.0).unwrap();
    c.bench_function("lock_in/single_point", |b| {
        b.iter(|| conservative_lock_in(black_box(&params)).unwrap())
    });
}

fn bench_sweep(c: &mut Criterion) {
    let spec = SweepSpec::new(50.0, 500.0, 8).unwrap();
    let mut group = c.benchmark_group("sweep_8_points");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| lock_in_sweep(black_box(0.5), 0.0225, &spec).unwrap())
    });
    group.bench_function("serial", |b| {
        b.iter(|| lock_in_sweep_serial(black_box(0.5), 0.0225, &spec).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_lock_in, bench_sweep);
criterion_main!(benches);

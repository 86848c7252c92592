use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mqm_core::pointer::{kraus_radial_profile, reference_width, PointerConfig};
use mqm_core::weak::weak3d_run;
use mqm_core::{Execution, HalfInt};

const POLICIES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn trajectories(c: &mut Criterion) {
    let mut group = c.benchmark_group("weak3d_run");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_with_input(BenchmarkId::new(name, "N=10"), &exec, |b, &exec| {
            b.iter(|| weak3d_run(10, 8.0 * 10f64.sqrt(), 100, black_box(512), 7, exec).unwrap())
        });
    }
    group.finish();
}

fn pointer_kernel(c: &mut Criterion) {
    let mut group = c.benchmark_group("kraus_radial_profile");
    group.sample_size(10);
    let j = HalfInt::integer(10);
    let cfg = PointerConfig::for_block(j, reference_width(10.0));
    for (name, exec) in POLICIES {
        group.bench_with_input(BenchmarkId::new(name, "J=10"), &exec, |b, &exec| {
            b.iter(|| kraus_radial_profile(black_box(j), &cfg, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, trajectories, pointer_kernel);
criterion_main!(benches);

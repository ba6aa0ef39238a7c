use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use focl::lang::Registry;
use focl::learner::learn;
use focl::precompute::precompute;
use focl::relstore::AccessAudit;
use focl_bench::{config, workload};

fn precompute_scaling(c: &mut Criterion) {
    let cfg = config();
    let registry = Registry::builtin();
    let mut group = c.benchmark_group("precompute");
    group.sample_size(10);
    for n in [1000usize, 2000, 4000] {
        let w = workload(1, n, 4, 8);
        group.bench_with_input(BenchmarkId::from_parameter(n), &w, |b, w| {
            b.iter(|| precompute(&w.structure, &cfg, &registry).unwrap())
        });
    }
    group.finish();
}

// learning cost should not depend on n
fn learn_scaling(c: &mut Criterion) {
    let cfg = config();
    let registry = Registry::builtin();
    let mut group = c.benchmark_group("learn");
    group.sample_size(10);
    for n in [1000usize, 4000, 16000] {
        let w = workload(2, n, 4, 8);
        let index = precompute(&w.structure, &cfg, &registry).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &w, |b, w| {
            b.iter(|| learn(&w.training, &cfg, &index, &registry, &AccessAudit::new()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, precompute_scaling, learn_scaling);
criterion_main!(benches);

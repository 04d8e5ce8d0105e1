use burgers_core::hopf_cole::sup_norm_with;
use burgers_core::initial_data::{make_family, FamilySpec};
use burgers_core::par::Execution;
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

fn sup_norm(c: &mut Criterion) {
    let id = make_family(FamilySpec::power_c0(1.0, 0.5)).unwrap();
    let mut group = c.benchmark_group("sup_norm");
    group.sample_size(20);
    for &t in &[1e3, 1e6] {
        for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            group.bench_with_input(BenchmarkId::new(name, t), &t, |b, &t| {
                b.iter(|| sup_norm_with(&id, black_box(t), 10.0, 128, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, sup_norm);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use fdlbm::schemes::step;
use fdlbm::vonneumann::LinearKernel;
use fdlbm::StepContext;
use fdlbm_bench::{schemes, wave_state};

fn bench_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    for n in [64, 191] {
        group.throughput(Throughput::Elements((n * n) as u64));
        for (label, cfg) in schemes() {
            let fs = wave_state(&cfg, n);
            let ctx = StepContext::default();
            group.bench_with_input(BenchmarkId::new(label, n), &fs, |b, fs| {
                b.iter(|| step(fs, &cfg, &ctx).expect("step"));
            });
        }
    }
    group.finish();
}

fn bench_analyzer(c: &mut Criterion) {
    let mut group = c.benchmark_group("analyzer");
    group.sample_size(20);
    for (label, cfg) in schemes() {
        group.bench_function(BenchmarkId::new("kernel", label), |b| {
            b.iter(|| LinearKernel::build(&cfg, [0.05, 0.0], 1.0, 1e-4).expect("kernel"));
        });
        let kernel = LinearKernel::build(&cfg, [0.05, 0.0], 1.0, 1e-4).expect("kernel");
        group.bench_function(BenchmarkId::new("eigenvalues", label), |b| {
            b.iter(|| kernel.matrix(0.3, 0.2).eigenvalues().expect("eigenvalues"));
        });
    }
    group.finish();
}

criterion_group!(benches, bench_step, bench_analyzer);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, Criterion};
use digger_bench::byte_samples;
use digger_core::oracle::{BuiltinOracle, LossOracle, TinyLmConfig};
use digger_core::Stage;

fn tiny_lm(c: &mut Criterion) {
    let oracle = BuiltinOracle::new(TinyLmConfig::default()).unwrap();
    let samples = byte_samples(16, 128, 7);
    let base = oracle.init().unwrap();

    let mut group = c.benchmark_group("tiny_lm");
    group.sample_size(20);
    group.bench_function("fine_tune_16x128", |b| {
        b.iter(|| oracle.fine_tune(&base, &samples, 1, Stage::Baseline).unwrap())
    });
    group.bench_function("sample_losses_16x128", |b| {
        b.iter(|| oracle.sample_losses(&base, &samples).unwrap())
    });
    group.finish();
}

criterion_group!(benches, tiny_lm);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use digger_core::stats::{fit_normal, roc_auc, threshold_for_fpr, wasserstein_1d, EmpiricalDistribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn values(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f64>()).collect()
}

fn stats(c: &mut Criterion) {
    let mut group = c.benchmark_group("stats");
    for n in [1_000, 100_000] {
        let p = EmpiricalDistribution::new(values(n, 1)).unwrap();
        let q = EmpiricalDistribution::new(values(n / 2, 2)).unwrap();
        group.bench_with_input(BenchmarkId::new("wasserstein_1d", n), &n, |b, _| {
            b.iter(|| wasserstein_1d(&p, &q))
        });

        let (pos, neg) = (values(n, 3), values(n, 4));
        group.bench_with_input(BenchmarkId::new("roc_auc", n), &n, |b, _| {
            b.iter(|| roc_auc(&pos, &neg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("threshold_for_fpr", n), &n, |b, _| {
            b.iter(|| threshold_for_fpr(&neg, 0.2).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("fit_normal", n), &n, |b, _| {
            b.iter(|| fit_normal(&pos).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, stats);
criterion_main!(benches);

use std::hint::black_box;

use corrinfer::copula::sample_copula;
use corrinfer::corrmat::{sample_corr_matrix, sample_s2};
use corrinfer::models::{train, train_lr};
use corrinfer::{Marginal, ModelKind, SeedTree, ThresholdRule, TrainConfig};
use criterion::{criterion_group, criterion_main, Criterion};

fn samplers(c: &mut Criterion) {
    let mut rng = SeedTree::new(1).stream();
    for n in [3usize, 10] {
        let v = vec![0.3 / (n as f64).sqrt(); n - 1];
        c.bench_function(&format!("sample_s2 n={n}"), |b| b.iter(|| sample_s2(n, black_box(&v), &mut rng)));
    }
}

fn copula(c: &mut Criterion) {
    let mut rng = SeedTree::new(2).stream();
    let m = sample_corr_matrix(4, &mut rng);
    let margs = vec![Marginal::uniform(0.0, 1.0, 100).unwrap(); 4];
    c.bench_function("sample_copula m=1000 n=4", |b| {
        b.iter(|| sample_copula(black_box(&m), &margs, 1000, ThresholdRule::Median, &mut rng).unwrap())
    });
}

fn training(c: &mut Criterion) {
    let mut rng = SeedTree::new(3).stream();
    let m = sample_corr_matrix(4, &mut rng);
    let margs = vec![Marginal::StandardNormal; 4];
    let data = sample_copula(&m, &margs, 1000, ThresholdRule::Zero, &mut rng).unwrap();
    let cfg = TrainConfig::default();
    c.bench_function("train_lr m=1000 d=3", |b| b.iter(|| train_lr(black_box(&data), &cfg).unwrap()));
    let mut group = c.benchmark_group("slow");
    group.sample_size(10);
    group.bench_function("train_mlp m=1000 d=3", |b| {
        b.iter(|| train(ModelKind::Mlp, black_box(&data), &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(benches, samplers, copula, training);
criterion_main!(benches);

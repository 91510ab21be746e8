//! One worker versus the full rayon pool on the hot paths. Built without the
//! `parallel` feature, both arms run the sequential fallback.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use salience::eval::{evaluate_with, TieBreak, DEFAULT_CUTOFFS};
use salience::features::fit_scaler;
use salience::models::{Differentiable, KceVariant, ModelInputs};
use salience::par;
use salience::synth::{generate, SynthConfig};
use salience::training::{train, TrainConfig};

fn fixture() -> (salience::synth::SynthOutput, ModelInputs) {
    let cfg = SynthConfig {
        num_train: 128,
        num_dev: 32,
        num_test: 32,
        dim: 64,
        ..SynthConfig::default()
    };
    let out = generate(&cfg).expect("valid synth config");
    let inputs = ModelInputs::from_corpus(&out.train, 2, Some(&out.event_vectors), Some(&out.entity_vectors), 64, 1)
        .expect("matching dims");
    (out, inputs)
}

fn arms() -> Vec<usize> {
    let n = par::current_threads();
    if n > 1 {
        vec![1, n]
    } else {
        vec![1]
    }
}

fn bench_scoring(c: &mut Criterion) {
    let (out, inputs) = fixture();
    let model = inputs.kce(KceVariant::Full, 3);
    let mut group = c.benchmark_group("kce_evaluate");
    for threads in arms() {
        group.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, &t| {
            b.iter(|| {
                par::with_threads(t, || {
                    black_box(evaluate_with(&out.train, |d| model.score(d), &DEFAULT_CUTOFFS, TieBreak::ById))
                })
            })
        });
    }
    group.finish();
}

fn bench_features(c: &mut Criterion) {
    let (out, inputs) = fixture();
    let mut group = c.benchmark_group("fit_scaler");
    for threads in arms() {
        group.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, &t| {
            b.iter(|| par::with_threads(t, || black_box(fit_scaler(&out.train, &inputs.features))))
        });
    }
    group.finish();
}

fn bench_training(c: &mut Criterion) {
    let (out, inputs) = fixture();
    let cfg = TrainConfig {
        epochs: 1,
        batch_docs: 32,
        ..TrainConfig::default()
    };
    let mut group = c.benchmark_group("kce_train_epoch");
    group.sample_size(10);
    for threads in arms() {
        group.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, &t| {
            b.iter(|| {
                par::with_threads(t, || {
                    black_box(train(inputs.kce(KceVariant::Full, 3), &out.train, &out.dev, &cfg).expect("training runs"))
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_scoring, bench_features, bench_training);
criterion_main!(benches);

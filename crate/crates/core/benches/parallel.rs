use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mbs_core::classify::{extract_features, FeatureConfig, Policy, TrainingSet};
use mbs_core::evaluation::leave_one_out;
use mbs_core::synth::{self, Jitter};
use mbs_core::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn corpus_generation(c: &mut Criterion) {
    let protos = synth::body_part_prototypes(7);
    let mut group = c.benchmark_group("corpus_12x5");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| synth::corpus(black_box(&protos), 5, Jitter::displacement(0.03), 7, 1000.0, exec).unwrap())
        });
    }
    group.finish();
}

fn loo(c: &mut Criterion) {
    let protos = synth::body_part_prototypes(7);
    let corpus = synth::corpus(&protos, 20, Jitter::displacement(0.03), 7, 1000.0, Execution::Parallel).unwrap();
    let cfg = FeatureConfig::default();
    let rows =
        corpus.iter().map(|g| extract_features(&g.gesture.trace, &cfg).unwrap().with_label(g.label.clone())).collect();
    let ts = TrainingSet::new(rows).unwrap();
    let mut group = c.benchmark_group("leave_one_out_12x20");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| leave_one_out(black_box(&ts), &Policy::Pooled, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, corpus_generation, loo);
criterion_main!(benches);

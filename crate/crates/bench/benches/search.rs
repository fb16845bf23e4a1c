use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use mtkit_bench::synthetic_models;
use mtkit_core::ensemble::{
    brute_force_select, bsbe_select, greedy_select, CandidatePool, MeanDiversityEvaluator,
    VoteEvaluator,
};
use mtkit_core::metrics::{corpus_bleu, BleuOptions};

fn pool_of(n: usize, lines: usize) -> (CandidatePool, VoteEvaluator) {
    let (models, refs) = synthetic_models(n, lines, 41);
    let ref_sets: Vec<_> = refs.iter().map(|r| vec![r.clone()]).collect();
    let valid_bleu: Vec<f64> = models
        .iter()
        .map(|m| {
            corpus_bleu(&m.sentences, &ref_sets, &BleuOptions::default())
                .unwrap()
                .score
        })
        .collect();
    let pool = CandidatePool::from_translations(models, valid_bleu).unwrap();
    (pool, VoteEvaluator::new(ref_sets))
}

fn bench_strategies(c: &mut Criterion) {
    let (pool, vote) = pool_of(10, 100);
    let mean_diversity = MeanDiversityEvaluator::default();

    let mut group = c.benchmark_group("search_n10");
    group.sample_size(10);
    group.bench_function("bsbe_c5", |b| {
        b.iter(|| bsbe_select(black_box(&pool), 5).unwrap())
    });
    group.bench_function("greedy_vote", |b| {
        b.iter(|| greedy_select(black_box(&pool), &vote, 5).unwrap())
    });
    group.bench_function("brute_force_vote", |b| {
        b.iter(|| brute_force_select(black_box(&pool), &vote, 10).unwrap())
    });
    group.bench_function("brute_force_mean_diversity", |b| {
        b.iter(|| brute_force_select(black_box(&pool), &mean_diversity, 10).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_strategies);
criterion_main!(benches);

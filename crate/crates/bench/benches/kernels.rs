use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mtkit_core::kernels::{
    build_stack, decoder_stack_forward, multi_head_attention, talking_heads_attention,
    DecoderLayerParams, Matrix, StackPattern,
};

fn bench_attention_variants(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 8;
    let t = 64;
    let d = 32;
    let qs: Vec<Matrix> = (0..h).map(|_| Matrix::random(t, d, &mut rng)).collect();
    let ks: Vec<Matrix> = (0..h).map(|_| Matrix::random(t, d, &mut rng)).collect();
    let vs: Vec<Matrix> = (0..h).map(|_| Matrix::random(t, d, &mut rng)).collect();
    let w_l = Matrix::random(h, h, &mut rng);
    let w_w = Matrix::random(h, h, &mut rng);

    let mut group = c.benchmark_group("attention_8h_64t_32d");
    group.bench_function("multi_head", |b| {
        b.iter(|| multi_head_attention(black_box(&qs), &ks, &vs, true).unwrap())
    });
    group.bench_function("talking_heads", |b| {
        b.iter(|| talking_heads_attention(black_box(&qs), &ks, &vs, &w_l, &w_w, true).unwrap())
    });
    group.finish();
}

fn bench_decoder_stacks(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let d_model = 64;
    let depth = 6;
    let x = Matrix::random(32, d_model, &mut rng);
    let enc = Matrix::random(40, d_model, &mut rng);
    let params: Vec<DecoderLayerParams> = (0..depth)
        .map(|_| DecoderLayerParams::random(d_model, 4, 128, &mut rng))
        .collect();

    let mut group = c.benchmark_group("decoder_stack_6l_32t");
    for pattern in [
        StackPattern::UniformSelf,
        StackPattern::AverageFirst,
        StackPattern::AverageBottom,
        StackPattern::Dual,
    ] {
        let stack = build_stack(pattern, depth).unwrap();
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{pattern:?}")),
            &stack,
            |b, stack| {
                b.iter(|| decoder_stack_forward(black_box(&x), &enc, stack, &params).unwrap())
            },
        );
    }
    group.finish();
}

criterion_group!(benches, bench_attention_variants, bench_decoder_stacks);
criterion_main!(benches);

//! Shared generators for the benchmark suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mtkit_core::metrics::ModelTranslations;
use mtkit_core::text::Sentence;

/// A deterministic corpus of `lines` sentences with 5..=24 tokens each over a
/// `vocab`-word vocabulary.
pub fn synthetic_corpus(lines: usize, vocab: usize, seed: u64) -> Vec<Sentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..lines)
        .map(|_| {
            let len = rng.gen_range(5..25);
            Sentence::from_tokens((0..len).map(|_| format!("w{}", rng.gen_range(0..vocab))).collect())
        })
        .collect()
}

/// `n` corrupted variants of a shared reference corpus, plus the references.
pub fn synthetic_models(
    n: usize,
    lines: usize,
    seed: u64,
) -> (Vec<ModelTranslations>, Vec<Sentence>) {
    let refs = synthetic_corpus(lines, 120, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED);
    let models = (0..n)
        .map(|m| {
            let sentences = refs
                .iter()
                .map(|r| {
                    Sentence::from_tokens(
                        r.tokens()
                            .iter()
                            .map(|t| {
                                if rng.gen_bool(0.15) {
                                    format!("v{}", rng.gen_range(0..120))
                                } else {
                                    t.clone()
                                }
                            })
                            .collect(),
                    )
                })
                .collect();
            ModelTranslations {
                id: format!("m{m}"),
                sentences,
            }
        })
        .collect();
    (models, refs)
}

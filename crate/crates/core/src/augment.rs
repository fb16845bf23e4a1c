//! Synthetic-data corruption: multi-granularity noise, target denoising for
//! finetuning, and the tagging/reversal transforms used when building
//! back-translation corpora.
//!
//! Every operation is deterministic given the seed; corpus passes derive one
//! RNG per (seed, epoch, sentence index), so sharded runs produce exactly the
//! serial output.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::text::Sentence;

/// Fraction of sentence pairs picked for target denoising.
pub const DENOISE_PAIR_P: f64 = 0.3;
/// Per-token replacement probability inside a picked pair.
pub const DENOISE_TOKEN_P: f64 = 0.15;

/// Units shuffled together by the permutation operation.
const PERMUTE_WINDOW: usize = 3;

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("noise probability {name} must lie in [0, 1], got {got}")]
    InvalidProbability { name: &'static str, got: f64 },
    #[error("span length must be at least 1")]
    InvalidSpanLen,
    #[error("tag must be a single non-empty whitespace-free token, got {got:?}")]
    InvalidTag { got: String },
}

/// The unit a noise operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseGranularity {
    /// Subword tokens (input is expected to be BPE-segmented).
    Token,
    /// Word tokens.
    #[default]
    Word,
    /// Contiguous windows of `span_len` tokens.
    Span,
}

impl std::str::FromStr for NoiseGranularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "token" => Ok(NoiseGranularity::Token),
            "word" => Ok(NoiseGranularity::Word),
            "span" => Ok(NoiseGranularity::Span),
            other => Err(format!("unknown noise granularity: {other}")),
        }
    }
}

/// Configuration of the three-operation noise pass.
#[derive(Debug, Clone)]
pub struct NoiseSpec {
    pub granularity: NoiseGranularity,
    pub p_replace: f64,
    pub p_delete: f64,
    pub p_permute: f64,
    pub span_len: usize,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            granularity: NoiseGranularity::Word,
            p_replace: 0.2,
            p_delete: 0.2,
            p_permute: 0.2,
            span_len: 3,
            seed: 0,
        }
    }
}

/// Which operations fired on a sentence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NoiseTrace {
    pub replace_enabled: bool,
    pub delete_enabled: bool,
    pub permute_enabled: bool,
}

/// A [`NoiseSpec`] bound to a replacement vocabulary.
#[derive(Debug, Clone)]
pub struct Noiser {
    spec: NoiseSpec,
    vocab: Vec<String>,
}

impl Noiser {
    /// Replacement tokens are drawn from `vocab`; when it is empty they are
    /// drawn from the sentence itself.
    pub fn new(spec: NoiseSpec, vocab: Vec<String>) -> Result<Self, AugmentError> {
        for (name, p) in [
            ("p_replace", spec.p_replace),
            ("p_delete", spec.p_delete),
            ("p_permute", spec.p_permute),
        ] {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(AugmentError::InvalidProbability { name, got: p });
            }
        }
        if spec.span_len == 0 {
            return Err(AugmentError::InvalidSpanLen);
        }
        Ok(Noiser { spec, vocab })
    }

    /// Binds the spec to the corpus vocabulary (sorted unique tokens, so the
    /// draw order is reproducible).
    pub fn from_corpus(spec: NoiseSpec, corpus: &[Sentence]) -> Result<Self, AugmentError> {
        let mut vocab: Vec<String> = corpus
            .iter()
            .flat_map(|s| s.tokens().iter().cloned())
            .collect();
        vocab.sort();
        vocab.dedup();
        Noiser::new(spec, vocab)
    }

    pub fn spec(&self) -> &NoiseSpec {
        &self.spec
    }

    /// One RNG per (seed, epoch, sentence index); splitmix over the three
    /// values keeps the streams independent.
    fn rng_for(&self, epoch: u64, index: u64) -> ChaCha8Rng {
        let mut state = self
            .spec
            .seed
            .wrapping_mul(0x9E3779B97F4A7C15)
            .wrapping_add(epoch.wrapping_mul(0xBF58476D1CE4E5B9))
            .wrapping_add(index.wrapping_mul(0x94D049BB133111EB));
        state ^= state >> 30;
        state = state.wrapping_mul(0xBF58476D1CE4E5B9);
        state ^= state >> 27;
        ChaCha8Rng::seed_from_u64(state)
    }

    fn units(&self, sentence: &Sentence) -> Vec<Vec<String>> {
        match self.spec.granularity {
            NoiseGranularity::Token | NoiseGranularity::Word => sentence
                .tokens()
                .iter()
                .map(|t| vec![t.clone()])
                .collect(),
            NoiseGranularity::Span => sentence
                .tokens()
                .chunks(self.spec.span_len)
                .map(|c| c.to_vec())
                .collect(),
        }
    }

    /// Applies the noise pass and reports which operations were enabled.
    ///
    /// Each operation is independently enabled with its probability; an
    /// enabled operation acts on one uniformly chosen unit (replacement and
    /// deletion) or one window of up to three units (permutation).
    pub fn apply_traced(&self, sentence: &Sentence, rng: &mut ChaCha8Rng) -> (Sentence, NoiseTrace) {
        let trace = NoiseTrace {
            replace_enabled: rng.gen_bool(self.spec.p_replace),
            delete_enabled: rng.gen_bool(self.spec.p_delete),
            permute_enabled: rng.gen_bool(self.spec.p_permute),
        };
        let mut units = self.units(sentence);

        if trace.replace_enabled && !units.is_empty() {
            let target = rng.gen_range(0..units.len());
            let fallback: Vec<String>;
            let vocab = if self.vocab.is_empty() {
                fallback = sentence.tokens().to_vec();
                &fallback
            } else {
                &self.vocab
            };
            if !vocab.is_empty() {
                for slot in &mut units[target] {
                    *slot = vocab[rng.gen_range(0..vocab.len())].clone();
                }
            }
        }

        if trace.delete_enabled && !units.is_empty() {
            let target = rng.gen_range(0..units.len());
            units.remove(target);
        }

        if trace.permute_enabled && units.len() >= 2 {
            let window = PERMUTE_WINDOW.min(units.len());
            let start = rng.gen_range(0..=units.len() - window);
            units[start..start + window].shuffle(rng);
        }

        let tokens: Vec<String> = units.into_iter().flatten().collect();
        (Sentence::from_tokens(tokens), trace)
    }

    pub fn apply(&self, sentence: &Sentence, rng: &mut ChaCha8Rng) -> Sentence {
        self.apply_traced(sentence, rng).0
    }

    /// Noises a whole corpus for one epoch. The realization depends only on
    /// (seed, epoch, sentence index).
    pub fn stream(&self, corpus: &[Sentence], epoch: u64) -> Vec<Sentence> {
        corpus
            .iter()
            .enumerate()
            .map(|(index, sentence)| {
                let mut rng = self.rng_for(epoch, index as u64);
                self.apply(sentence, &mut rng)
            })
            .collect()
    }

    /// [`Noiser::stream`] with per-sentence traces, for rate instrumentation.
    pub fn stream_traced(&self, corpus: &[Sentence], epoch: u64) -> Vec<(Sentence, NoiseTrace)> {
        corpus
            .iter()
            .enumerate()
            .map(|(index, sentence)| {
                let mut rng = self.rng_for(epoch, index as u64);
                self.apply_traced(sentence, &mut rng)
            })
            .collect()
    }
}

/// The canonical seeded noise run: seed 42, default spec, a fixed six-token
/// sentence, a five-token replacement vocabulary, streamed over epochs 0..4.
/// Returns the input and the per-epoch outputs. The outputs are frozen in
/// tests and emitted by the CLI `noise --fixture` flag, so regressions in the
/// RNG plumbing are visible.
pub fn golden_fixture_run() -> (Sentence, Vec<Sentence>) {
    let spec = NoiseSpec {
        seed: 42,
        ..NoiseSpec::default()
    };
    let vocab = ["alpha", "bravo", "charlie", "delta", "echo"]
        .iter()
        .map(|t| t.to_string())
        .collect();
    let noiser = Noiser::new(spec, vocab).expect("fixture spec is valid");
    let input = Sentence::from_tokens(
        ["the", "quick", "brown", "fox", "jumps", "today"]
            .iter()
            .map(|t| t.to_string())
            .collect(),
    );
    let outputs = (0..4)
        .map(|epoch| noiser.stream(std::slice::from_ref(&input), epoch)[0].clone())
        .collect();
    (input, outputs)
}

/// Target-denoising corruption for finetuning data: 30% of pairs are picked,
/// and inside a picked pair each target token is independently replaced by a
/// uniformly drawn token of the same (original) target sentence 15% of the
/// time. The source side is never touched.
pub fn target_denoise(
    pair: &crate::text::ParallelPair,
    rng: &mut ChaCha8Rng,
) -> crate::text::ParallelPair {
    target_denoise_traced(pair, rng).0
}

/// [`target_denoise`] plus whether the pair was picked for corruption, for
/// rate instrumentation.
pub fn target_denoise_traced(
    pair: &crate::text::ParallelPair,
    rng: &mut ChaCha8Rng,
) -> (crate::text::ParallelPair, bool) {
    if !rng.gen_bool(DENOISE_PAIR_P) || pair.target.is_empty() {
        return (pair.clone(), false);
    }
    let original = pair.target.tokens();
    let tokens = original
        .iter()
        .map(|token| {
            if rng.gen_bool(DENOISE_TOKEN_P) {
                original[rng.gen_range(0..original.len())].clone()
            } else {
                token.clone()
            }
        })
        .collect();
    let noised = crate::text::ParallelPair {
        source: pair.source.clone(),
        target: Sentence::from_tokens(tokens),
    };
    (noised, true)
}

/// Prepends a reserved tag token (tagged back-translation convention).
pub fn tag_sentence(sentence: &Sentence, tag: &str) -> Result<Sentence, AugmentError> {
    if tag.is_empty() || tag.chars().any(char::is_whitespace) {
        return Err(AugmentError::InvalidTag {
            got: tag.to_string(),
        });
    }
    let mut tokens = Vec::with_capacity(sentence.len() + 1);
    tokens.push(tag.to_string());
    tokens.extend(sentence.tokens().iter().cloned());
    Ok(Sentence::from_tokens(tokens))
}

/// Removes one leading `tag` token if present.
pub fn strip_tag(sentence: &Sentence, tag: &str) -> Sentence {
    match sentence.tokens().split_first() {
        Some((first, rest)) if first == tag => Sentence::from_tokens(rest.to_vec()),
        _ => sentence.clone(),
    }
}

/// Reverses token order (right-to-left back-translation). An involution.
pub fn reverse_sentence(sentence: &Sentence) -> Sentence {
    let mut tokens = sentence.tokens().to_vec();
    tokens.reverse();
    Sentence::from_tokens(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{tokenize, ParallelPair, TokenizeMode};

    fn s(text: &str) -> Sentence {
        tokenize(text, TokenizeMode::Word)
    }

    fn zero_noise() -> NoiseSpec {
        NoiseSpec {
            p_replace: 0.0,
            p_delete: 0.0,
            p_permute: 0.0,
            ..NoiseSpec::default()
        }
    }

    #[test]
    fn zero_probabilities_are_identity() {
        let noiser = Noiser::new(zero_noise(), vec![]).unwrap();
        let sentence = s("the quick brown fox");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(noiser.apply(&sentence, &mut rng).tokens(), sentence.tokens());
        for epoch in 0..3 {
            assert_eq!(noiser.stream(std::slice::from_ref(&sentence), epoch)[0], sentence);
        }
    }

    #[test]
    fn permutation_alone_cannot_change_single_token() {
        let spec = NoiseSpec {
            p_replace: 0.0,
            p_delete: 0.0,
            p_permute: 1.0,
            ..NoiseSpec::default()
        };
        let noiser = Noiser::new(spec, vec![]).unwrap();
        let sentence = s("lonely");
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            assert_eq!(noiser.apply(&sentence, &mut rng).tokens(), sentence.tokens());
        }
    }

    // Golden outputs recorded once from this implementation at seed 42 and
    // frozen; the `noise --fixture` CLI run must reproduce them byte for byte.
    #[test]
    fn seeded_golden_fixture() {
        let (input, outputs) = golden_fixture_run();
        assert_eq!(input.text(), "the quick brown fox jumps today");
        let texts: Vec<String> = outputs.iter().map(Sentence::text).collect();
        assert_eq!(
            texts,
            [
                "the quick brown fox jumps today",
                "the alpha fox jumps today",
                "the quick brown fox jumps today",
                "the charlie brown fox jumps today",
            ]
        );
    }

    #[test]
    fn streams_differ_across_epochs_and_repeat_within() {
        let spec = NoiseSpec {
            seed: 9,
            ..NoiseSpec::default()
        };
        let corpus: Vec<Sentence> = (0..200)
            .map(|i| s(&format!("sentence number {i} has a few tokens")))
            .collect();
        let noiser = Noiser::from_corpus(spec, &corpus).unwrap();
        let epoch1 = noiser.stream(&corpus, 1);
        let epoch2 = noiser.stream(&corpus, 2);
        assert_ne!(epoch1, epoch2);
        assert_eq!(epoch1, noiser.stream(&corpus, 1));
    }

    #[test]
    fn replacement_stays_within_vocab_union_original() {
        let spec = NoiseSpec {
            p_replace: 1.0,
            p_delete: 0.0,
            p_permute: 0.0,
            seed: 3,
            ..NoiseSpec::default()
        };
        let vocab: Vec<String> = ["aa", "bb"].iter().map(|t| t.to_string()).collect();
        let noiser = Noiser::new(spec, vocab.clone()).unwrap();
        let sentence = s("one two three four");
        let allowed: Vec<&str> = vocab
            .iter()
            .map(String::as_str)
            .chain(sentence.tokens().iter().map(String::as_str))
            .collect();
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = noiser.apply(&sentence, &mut rng);
            assert!(out.tokens().iter().all(|t| allowed.contains(&t.as_str())));
        }
    }

    #[test]
    fn span_granularity_deletes_whole_spans() {
        let spec = NoiseSpec {
            granularity: NoiseGranularity::Span,
            p_replace: 0.0,
            p_delete: 1.0,
            p_permute: 0.0,
            span_len: 3,
            seed: 0,
        };
        let noiser = Noiser::new(spec, vec![]).unwrap();
        let sentence = s("a b c d e f");
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = noiser.apply(&sentence, &mut rng);
        assert_eq!(out.len(), 3);
        assert!(
            out.tokens() == ["a", "b", "c"] || out.tokens() == ["d", "e", "f"],
            "unexpected span deletion result: {:?}",
            out.tokens()
        );
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad = NoiseSpec {
            p_replace: 1.5,
            ..NoiseSpec::default()
        };
        assert!(matches!(
            Noiser::new(bad, vec![]),
            Err(AugmentError::InvalidProbability { .. })
        ));
        let bad = NoiseSpec {
            span_len: 0,
            ..NoiseSpec::default()
        };
        assert!(matches!(
            Noiser::new(bad, vec![]),
            Err(AugmentError::InvalidSpanLen)
        ));
    }

    #[test]
    fn unselected_denoise_pair_is_unchanged() {
        let pair = ParallelPair {
            source: s("the source stays"),
            target: s("das ziel bleibt"),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut saw_unchanged = false;
        for _ in 0..100 {
            let out = target_denoise(&pair, &mut rng);
            assert_eq!(out.source, pair.source);
            if out.target == pair.target {
                saw_unchanged = true;
            }
        }
        assert!(saw_unchanged);
    }

    #[test]
    fn single_token_target_cannot_change() {
        let pair = ParallelPair {
            source: s("src"),
            target: s("only"),
        };
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = target_denoise(&pair, &mut rng);
            assert_eq!(out.target.tokens(), pair.target.tokens());
        }
    }

    #[test]
    fn tagging_round_trip() {
        let sentence = s("a b");
        let tagged = tag_sentence(&sentence, "<BT>").unwrap();
        assert_eq!(tagged.tokens(), ["<BT>", "a", "b"]);
        let twice = tag_sentence(&tagged, "<BT>").unwrap();
        let stripped = strip_tag(&strip_tag(&twice, "<BT>"), "<BT>");
        assert_eq!(stripped.tokens(), sentence.tokens());

        let empty = tag_sentence(&s(""), "<BT>").unwrap();
        assert_eq!(empty.tokens(), ["<BT>"]);

        assert!(matches!(
            tag_sentence(&sentence, "bad tag"),
            Err(AugmentError::InvalidTag { .. })
        ));
    }

    #[test]
    fn reverse_is_an_involution() {
        let sentence = s("a b c");
        assert_eq!(reverse_sentence(&sentence).tokens(), ["c", "b", "a"]);
        assert_eq!(
            reverse_sentence(&reverse_sentence(&sentence)).tokens(),
            sentence.tokens()
        );
        assert!(reverse_sentence(&s("")).is_empty());
    }
}

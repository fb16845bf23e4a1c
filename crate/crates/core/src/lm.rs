//! Additive-smoothed n-gram language model used to filter monolingual data.
//!
//! Sentences are padded with begin-of-sentence context markers and a single
//! end-of-sentence symbol; the end symbol is a regular vocabulary entry, so
//! the model scores sentence endings like any other token. Tokens never seen
//! in training fall into a single unknown class whose smoothing mass keeps
//! every perplexity finite.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::text::Sentence;

const BOS: &str = "<s>";
const EOS: &str = "</s>";

#[derive(Debug, Error)]
pub enum LmError {
    #[error("cannot train a language model on an empty corpus")]
    EmptyCorpus,
    #[error("n-gram order must be at least 1, got {got}")]
    InvalidOrder { got: usize },
    #[error("smoothing constant must be positive, got {got}")]
    InvalidSmoothing { got: f64 },
    #[error("percentile threshold must lie in (0, 100], got {got}")]
    InvalidPercentile { got: f64 },
}

/// Frequency tables and smoothing state of a trained model.
#[derive(Debug, Clone)]
pub struct NgramLm {
    order: usize,
    smoothing_k: f64,
    vocab: HashSet<String>,
    /// Context occurrences, counted once per predicted position.
    context_counts: HashMap<Vec<String>, u64>,
    /// Full-order occurrences: context extended by the predicted token.
    continuation_counts: HashMap<Vec<String>, u64>,
}

fn padded_stream(sentence: &Sentence, order: usize) -> Vec<String> {
    let mut stream = Vec::with_capacity(sentence.len() + order);
    for _ in 0..order.saturating_sub(1) {
        stream.push(BOS.to_string());
    }
    stream.extend(sentence.tokens().iter().cloned());
    stream.push(EOS.to_string());
    stream
}

/// Trains an order-`order` model with additive-`smoothing_k` smoothing.
pub fn train_ngram_lm(
    corpus: &[Sentence],
    order: usize,
    smoothing_k: f64,
) -> Result<NgramLm, LmError> {
    if corpus.is_empty() {
        return Err(LmError::EmptyCorpus);
    }
    if order == 0 {
        return Err(LmError::InvalidOrder { got: order });
    }
    if smoothing_k <= 0.0 || !smoothing_k.is_finite() {
        return Err(LmError::InvalidSmoothing { got: smoothing_k });
    }

    let mut vocab = HashSet::new();
    let mut context_counts: HashMap<Vec<String>, u64> = HashMap::new();
    let mut continuation_counts: HashMap<Vec<String>, u64> = HashMap::new();
    for sentence in corpus {
        let stream = padded_stream(sentence, order);
        for i in (order - 1)..stream.len() {
            vocab.insert(stream[i].clone());
            let context = stream[i + 1 - order..i].to_vec();
            let full = stream[i + 1 - order..=i].to_vec();
            *context_counts.entry(context).or_insert(0) += 1;
            *continuation_counts.entry(full).or_insert(0) += 1;
        }
    }

    Ok(NgramLm {
        order,
        smoothing_k,
        vocab,
        context_counts,
        continuation_counts,
    })
}

impl NgramLm {
    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of distinct trained outcomes (including the end symbol). The
    /// unknown class adds one more outcome on top of this.
    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.vocab.contains(token)
    }

    fn denominator(&self, context: &[String]) -> f64 {
        let total = self
            .context_counts
            .get(context)
            .copied()
            .unwrap_or(0) as f64;
        total + self.smoothing_k * (self.vocab_size() + 1) as f64
    }

    /// Smoothed conditional probability of `token` after `context`. Tokens
    /// outside the vocabulary collapse into the single unknown class.
    pub fn probability(&self, context: &[String], token: &str) -> f64 {
        debug_assert_eq!(context.len(), self.order - 1);
        let count = if self.vocab.contains(token) {
            let mut full = context.to_vec();
            full.push(token.to_string());
            self.continuation_counts.get(&full).copied().unwrap_or(0) as f64
        } else {
            0.0
        };
        (count + self.smoothing_k) / self.denominator(context)
    }

    /// Probability mass of the unknown class after `context`.
    pub fn unknown_probability(&self, context: &[String]) -> f64 {
        self.smoothing_k / self.denominator(context)
    }
}

/// Perplexity of a sentence under the model: exp of the mean negative
/// log-likelihood per predicted position, the end-of-sentence included.
pub fn lm_perplexity(lm: &NgramLm, sentence: &Sentence) -> f64 {
    let stream = padded_stream(sentence, lm.order);
    let mut nll = 0.0;
    let mut positions = 0usize;
    for i in (lm.order - 1)..stream.len() {
        let context = &stream[i + 1 - lm.order..i];
        nll -= lm.probability(context, &stream[i]).ln();
        positions += 1;
    }
    (nll / positions as f64).exp()
}

/// Splits a monolingual corpus by a perplexity percentile threshold.
///
/// The cut value is the linear-interpolation quantile of the corpus
/// perplexity distribution; sentences strictly above it are rejected, so a
/// threshold of 100 keeps everything.
pub fn filter_monolingual(
    corpus: &[Sentence],
    lm: &NgramLm,
    percentile_threshold: f64,
) -> Result<(Vec<Sentence>, Vec<Sentence>), LmError> {
    if !(percentile_threshold > 0.0 && percentile_threshold <= 100.0) {
        return Err(LmError::InvalidPercentile {
            got: percentile_threshold,
        });
    }
    if corpus.is_empty() {
        return Ok((Vec::new(), Vec::new()));
    }
    let ppls: Vec<f64> = corpus.iter().map(|s| lm_perplexity(lm, s)).collect();
    let cut = quantile(&ppls, percentile_threshold / 100.0);
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for (sentence, ppl) in corpus.iter().zip(&ppls) {
        if *ppl > cut {
            rejected.push(sentence.clone());
        } else {
            kept.push(sentence.clone());
        }
    }
    Ok((kept, rejected))
}

fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

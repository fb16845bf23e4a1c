//! Corpus BLEU and Self-BLEU, including the model-pairwise Self-BLEU matrix
//! consumed by the ensemble search.
//!
//! BLEU is the shared-task flavor: clipped modified n-gram precision summed
//! over the corpus, brevity penalty from the per-sentence closest reference
//! length (ties go to the shorter reference), case-sensitive by default, and
//! unsmoothed at corpus level. An optional add-one smoothing on orders >= 2
//! is available for short desk-scale fixtures.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::Sentence;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("hypothesis/reference length mismatch: {hyps} hypotheses vs {refs} reference sets")]
    LengthMismatch { hyps: usize, refs: usize },
    #[error("empty hypothesis list")]
    EmptyHypotheses,
    #[error("reference set {index} is empty")]
    EmptyReferenceSet { index: usize },
    #[error("max n-gram order must be at least 1")]
    ZeroOrder,
    #[error("self-BLEU needs at least 2 models, got {got}")]
    TooFewModels { got: usize },
    #[error("model {id:?} translated {got} sentences, expected {expected}")]
    MisalignedTranslations {
        id: String,
        got: usize,
        expected: usize,
    },
    #[error("model index {index} out of range for pool of {len}")]
    ModelIndexOutOfRange { index: usize, len: usize },
}

/// Precision smoothing applied to short fixtures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Smoothing {
    /// Corpus-level convention: any zero precision zeroes the score.
    #[default]
    None,
    /// `(matches + 1) / (total + 1)` on orders >= 2.
    AddOne,
}

#[derive(Debug, Clone)]
pub struct BleuOptions {
    pub max_order: usize,
    pub case_sensitive: bool,
    pub smoothing: Smoothing,
}

impl Default for BleuOptions {
    fn default() -> Self {
        BleuOptions {
            max_order: 4,
            case_sensitive: true,
            smoothing: Smoothing::None,
        }
    }
}

/// Corpus BLEU with its components.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BleuReport {
    /// Percentage in [0, 100].
    pub score: f64,
    /// Modified n-gram precisions for orders 1..=max_order, as ratios.
    pub precisions: Vec<f64>,
    /// In (0, 1]; 1 when the hypothesis is at least as long as the reference.
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut out = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *out.entry(window).or_insert(0) += 1;
        }
    }
    out
}

fn lowered(sentence: &Sentence) -> Vec<String> {
    sentence.tokens().iter().map(|t| t.to_lowercase()).collect()
}

/// Corpus BLEU of `hyps` against line-aligned reference sets.
pub fn corpus_bleu(
    hyps: &[Sentence],
    refs: &[Vec<Sentence>],
    opts: &BleuOptions,
) -> Result<BleuReport, MetricsError> {
    if hyps.is_empty() {
        return Err(MetricsError::EmptyHypotheses);
    }
    if hyps.len() != refs.len() {
        return Err(MetricsError::LengthMismatch {
            hyps: hyps.len(),
            refs: refs.len(),
        });
    }
    if opts.max_order == 0 {
        return Err(MetricsError::ZeroOrder);
    }
    for (index, rs) in refs.iter().enumerate() {
        if rs.is_empty() {
            return Err(MetricsError::EmptyReferenceSet { index });
        }
    }

    let max_order = opts.max_order;
    let mut matches = vec![0usize; max_order];
    let mut totals = vec![0usize; max_order];
    let mut hyp_len = 0usize;
    let mut ref_len = 0usize;

    for (hyp, rs) in hyps.iter().zip(refs) {
        let hyp_tokens: Vec<String> = if opts.case_sensitive {
            hyp.tokens().to_vec()
        } else {
            lowered(hyp)
        };
        let ref_tokens: Vec<Vec<String>> = rs
            .iter()
            .map(|r| {
                if opts.case_sensitive {
                    r.tokens().to_vec()
                } else {
                    lowered(r)
                }
            })
            .collect();

        hyp_len += hyp_tokens.len();
        // closest reference length; tie broken toward the shorter reference
        ref_len += ref_tokens
            .iter()
            .map(|r| r.len())
            .min_by_key(|&len| (len.abs_diff(hyp_tokens.len()), len))
            .expect("reference set checked non-empty");

        for n in 1..=max_order {
            let hyp_grams = ngram_counts(&hyp_tokens, n);
            totals[n - 1] += hyp_grams.values().sum::<usize>();
            let mut max_ref: HashMap<&[String], usize> = HashMap::new();
            for r in &ref_tokens {
                for (gram, count) in ngram_counts(r, n) {
                    let entry = max_ref.entry(gram).or_insert(0);
                    *entry = (*entry).max(count);
                }
            }
            matches[n - 1] += hyp_grams
                .iter()
                .map(|(gram, count)| (*count).min(max_ref.get(gram).copied().unwrap_or(0)))
                .sum::<usize>();
        }
    }

    let precisions: Vec<f64> = (0..max_order)
        .map(|i| {
            if totals[i] == 0 {
                0.0
            } else if opts.smoothing == Smoothing::AddOne && i >= 1 {
                (matches[i] + 1) as f64 / (totals[i] + 1) as f64
            } else {
                matches[i] as f64 / totals[i] as f64
            }
        })
        .collect();

    if hyp_len == 0 {
        return Ok(BleuReport {
            score: 0.0,
            precisions,
            brevity_penalty: 0.0,
            hyp_len,
            ref_len,
        });
    }

    let brevity_penalty = if hyp_len < ref_len {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    } else {
        1.0
    };
    let score = if precisions.contains(&0.0) {
        0.0
    } else {
        let mean_log = precisions.iter().map(|p| p.ln()).sum::<f64>() / max_order as f64;
        brevity_penalty * mean_log.exp() * 100.0
    };

    Ok(BleuReport {
        score,
        precisions,
        brevity_penalty,
        hyp_len,
        ref_len,
    })
}

fn single_refs(sentences: &[Sentence]) -> Vec<Vec<Sentence>> {
    sentences.iter().map(|s| vec![s.clone()]).collect()
}

/// Symmetrized Self-BLEU between two translation lists: the mean of BLEU in
/// both hypothesis/reference directions. Single-direction BLEU is not
/// symmetric; the published score tables are.
pub fn self_bleu_pair(a: &[Sentence], b: &[Sentence]) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch {
            hyps: a.len(),
            refs: b.len(),
        });
    }
    let opts = BleuOptions::default();
    let ab = corpus_bleu(a, &single_refs(b), &opts)?.score;
    let ba = corpus_bleu(b, &single_refs(a), &opts)?.score;
    Ok((ab + ba) / 2.0)
}

/// One model's translations of the shared valid set.
#[derive(Debug, Clone)]
pub struct ModelTranslations {
    pub id: String,
    pub sentences: Vec<Sentence>,
}

/// Square matrix of pairwise Self-BLEU percentages, diagonal 100.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfBleuMatrix {
    pub model_ids: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl SelfBleuMatrix {
    pub fn dim(&self) -> usize {
        self.model_ids.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| self.values[i][j] == self.values[j][i]))
    }
}

fn check_pool(models: &[ModelTranslations]) -> Result<(), MetricsError> {
    if models.len() < 2 {
        return Err(MetricsError::TooFewModels { got: models.len() });
    }
    let expected = models[0].sentences.len();
    for m in models {
        if m.sentences.len() != expected {
            return Err(MetricsError::MisalignedTranslations {
                id: m.id.clone(),
                got: m.sentences.len(),
                expected,
            });
        }
    }
    Ok(())
}

fn matrix_from_pairs(
    models: &[ModelTranslations],
    pairs: Vec<((usize, usize), f64)>,
) -> SelfBleuMatrix {
    let n = models.len();
    let mut values = vec![vec![0.0; n]; n];
    for (i, row) in values.iter_mut().enumerate() {
        row[i] = 100.0;
    }
    for ((i, j), v) in pairs {
        values[i][j] = v;
        values[j][i] = v;
    }
    SelfBleuMatrix {
        model_ids: models.iter().map(|m| m.id.clone()).collect(),
        values,
    }
}

fn unordered_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push((i, j));
        }
    }
    out
}

/// Pairwise Self-BLEU over all unordered model pairs, fanned out to parallel
/// workers. Each pair lands in its own slot, so the result is bit-identical
/// to [`self_bleu_matrix_serial`].
pub fn self_bleu_matrix(models: &[ModelTranslations]) -> Result<SelfBleuMatrix, MetricsError> {
    check_pool(models)?;
    let pairs = unordered_pairs(models.len())
        .into_par_iter()
        .map(|(i, j)| {
            self_bleu_pair(&models[i].sentences, &models[j].sentences).map(|v| ((i, j), v))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(matrix_from_pairs(models, pairs))
}

/// Single-threaded twin of [`self_bleu_matrix`].
pub fn self_bleu_matrix_serial(
    models: &[ModelTranslations],
) -> Result<SelfBleuMatrix, MetricsError> {
    check_pool(models)?;
    let pairs = unordered_pairs(models.len())
        .into_iter()
        .map(|(i, j)| {
            self_bleu_pair(&models[i].sentences, &models[j].sentences).map(|v| ((i, j), v))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(matrix_from_pairs(models, pairs))
}

/// Per-model average Self-BLEU: mean of each row excluding the diagonal.
pub fn avg_self_bleu(matrix: &SelfBleuMatrix) -> Vec<f64> {
    let n = matrix.dim();
    (0..n)
        .map(|i| {
            let sum: f64 = (0..n).filter(|&j| j != i).map(|j| matrix.values[i][j]).sum();
            sum / (n - 1) as f64
        })
        .collect()
}

/// Per-model Self-BLEU in the multi-reference reading: model `index` as the
/// hypothesis, every other model's translations as one reference set.
pub fn self_bleu_multiref(
    models: &[ModelTranslations],
    index: usize,
) -> Result<f64, MetricsError> {
    check_pool(models)?;
    if index >= models.len() {
        return Err(MetricsError::ModelIndexOutOfRange {
            index,
            len: models.len(),
        });
    }
    let hyp = &models[index].sentences;
    let refs: Vec<Vec<Sentence>> = (0..hyp.len())
        .map(|line| {
            models
                .iter()
                .enumerate()
                .filter(|(m, _)| *m != index)
                .map(|(_, model)| model.sentences[line].clone())
                .collect()
        })
        .collect();
    Ok(corpus_bleu(hyp, &refs, &BleuOptions::default())?.score)
}

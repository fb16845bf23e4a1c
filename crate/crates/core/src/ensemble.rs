//! Diversity-aware ensemble subset search: the boosted Self-BLEU search, a
//! greedy baseline with a one-retry temp list, exhaustive search, and the
//! valid-set translation-pass accounting that separates them.
//!
//! The boosted search ranks models by a weighted combination of valid-set
//! BLEU and diversity, seeds the selection with the top-ranked model, and
//! then repeatedly adds the candidate with the lowest average Self-BLEU
//! against the already-selected set. It needs one translation pass per model
//! (to fill the Self-BLEU matrix) plus a single pass for the final ensemble,
//! while exhaustive search pays one pass per subset.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::metrics::{
    avg_self_bleu, corpus_bleu, self_bleu_matrix, BleuOptions, MetricsError, ModelTranslations,
    SelfBleuMatrix,
};
use crate::text::Sentence;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("ensemble size {size} out of range 1..={max}")]
    SizeOutOfRange { size: usize, max: usize },
    #[error("pool has {n} models; exhaustive search is guarded at {max} — use the bsbe strategy")]
    PoolTooLarge { n: usize, max: usize },
    #[error("candidate pool needs at least {need} models, got {got}")]
    TooFewModels { need: usize, got: usize },
    #[error("member index {index} out of range for pool of {len}")]
    UnknownMember { index: usize, len: usize },
    #[error("pool dimensions disagree: {detail}")]
    DimensionMismatch { detail: String },
    #[error("unknown search algorithm {got:?}, expected greedy, brute or bsbe")]
    UnknownAlgorithm { got: String },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Candidate models with their valid-set translations, valid-set BLEU, and
/// pairwise Self-BLEU matrix. Translation sets may be empty for search-only
/// pools built from precomputed scores.
#[derive(Debug, Clone)]
pub struct CandidatePool {
    ids: Vec<String>,
    translations: Vec<Vec<Sentence>>,
    valid_bleu: Vec<f64>,
    matrix: SelfBleuMatrix,
    avg_self_bleu: Vec<f64>,
}

impl CandidatePool {
    /// Builds a pool from precomputed valid BLEU scores and a Self-BLEU
    /// matrix; no translations are attached.
    pub fn from_scores(
        ids: Vec<String>,
        valid_bleu: Vec<f64>,
        matrix: SelfBleuMatrix,
    ) -> Result<Self, EnsembleError> {
        let n = ids.len();
        if n < 2 {
            return Err(EnsembleError::TooFewModels { need: 2, got: n });
        }
        if valid_bleu.len() != n || matrix.dim() != n {
            return Err(EnsembleError::DimensionMismatch {
                detail: format!(
                    "{} ids, {} bleu scores, {}x{} matrix",
                    n,
                    valid_bleu.len(),
                    matrix.dim(),
                    matrix.dim()
                ),
            });
        }
        let avg = avg_self_bleu(&matrix);
        Ok(CandidatePool {
            ids,
            translations: vec![Vec::new(); n],
            valid_bleu,
            matrix,
            avg_self_bleu: avg,
        })
    }

    /// Builds a pool from translations, computing the Self-BLEU matrix.
    pub fn from_translations(
        models: Vec<ModelTranslations>,
        valid_bleu: Vec<f64>,
    ) -> Result<Self, EnsembleError> {
        let matrix = self_bleu_matrix(&models)?;
        let ids = models.iter().map(|m| m.id.clone()).collect();
        let translations = models.into_iter().map(|m| m.sentences).collect();
        let avg = avg_self_bleu(&matrix);
        let pool = CandidatePool {
            ids,
            translations,
            valid_bleu,
            matrix,
            avg_self_bleu: avg,
        };
        if pool.valid_bleu.len() != pool.ids.len() {
            return Err(EnsembleError::DimensionMismatch {
                detail: format!(
                    "{} ids, {} bleu scores",
                    pool.ids.len(),
                    pool.valid_bleu.len()
                ),
            });
        }
        Ok(pool)
    }

    /// Attaches translation sets to a scores-built pool (for evaluators that
    /// need them). Order must match the pool's model order.
    pub fn with_translations(
        mut self,
        translations: Vec<Vec<Sentence>>,
    ) -> Result<Self, EnsembleError> {
        if translations.len() != self.ids.len() {
            return Err(EnsembleError::DimensionMismatch {
                detail: format!(
                    "{} translation sets for {} models",
                    translations.len(),
                    self.ids.len()
                ),
            });
        }
        self.translations = translations;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn valid_bleu(&self) -> &[f64] {
        &self.valid_bleu
    }

    pub fn matrix(&self) -> &SelfBleuMatrix {
        &self.matrix
    }

    pub fn avg_self_bleu(&self) -> &[f64] {
        &self.avg_self_bleu
    }

    pub fn translations(&self, index: usize) -> &[Sentence] {
        &self.translations[index]
    }
}

/// Per-model weighted scores and the balancing weight.
///
/// The weight rescales the valid-BLEU spread to the Self-BLEU spread so the
/// two indicators are comparable; when every model has the same valid BLEU
/// the weight degenerates to 1 and the ranking falls back to diversity alone.
pub fn weighted_scores(valid_bleu: &[f64], avg_self: &[f64]) -> (Vec<f64>, f64) {
    assert_eq!(valid_bleu.len(), avg_self.len());
    assert!(valid_bleu.len() >= 2, "weighted scores need at least 2 models");
    let min_b = valid_bleu.iter().copied().fold(f64::INFINITY, f64::min);
    let max_b = valid_bleu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_s = avg_self.iter().copied().fold(f64::INFINITY, f64::min);
    let max_s = avg_self.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weight = if max_b == min_b {
        1.0
    } else {
        (max_s - min_s) / (max_b - min_b)
    };
    let scores = valid_bleu
        .iter()
        .zip(avg_self)
        .map(|(b, s)| (b - min_b) * weight + (max_s - s))
        .collect();
    (scores, weight)
}

/// One addition step of the boosted search: every remaining candidate's
/// average Self-BLEU against the selected set, and the argmin.
#[derive(Debug, Clone, Serialize)]
pub struct SelectionStep {
    pub picked: usize,
    pub picked_id: String,
    /// (candidate index, mean Self-BLEU against the selected set)
    pub candidates: Vec<(usize, f64)>,
}

/// Search result: chosen model indices/ids in selection order plus the
/// instrumented evaluation accounting.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSelection {
    pub chosen: Vec<usize>,
    pub chosen_ids: Vec<String>,
    pub target_size: usize,
    /// Weighted scores, present for the boosted strategy.
    pub weighted_scores: Vec<f64>,
    /// Balancing weight, present for the boosted strategy.
    pub weight: Option<f64>,
    /// Valid-set passes: actual evaluator calls for greedy and brute force;
    /// the n+1 translation-pass accounting for the boosted search.
    pub evaluations_used: u64,
    pub steps: Vec<SelectionStep>,
}

fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut best_index = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > best {
            best = v;
            best_index = i;
        }
    }
    best_index
}

/// Boosted Self-BLEU ensemble search.
///
/// `top_n` optionally restricts the candidate set to the N best models by
/// weighted score before the loop runs.
pub fn bsbe_select_with_options(
    pool: &CandidatePool,
    c: usize,
    top_n: Option<usize>,
) -> Result<EnsembleSelection, EnsembleError> {
    let n = pool.len();
    let candidates: Vec<usize> = match top_n {
        None => (0..n).collect(),
        Some(top_n) => {
            if top_n == 0 || top_n > n {
                return Err(EnsembleError::SizeOutOfRange {
                    size: top_n,
                    max: n,
                });
            }
            let (scores, _) = weighted_scores(&pool.valid_bleu, &pool.avg_self_bleu);
            let mut ranked: Vec<usize> = (0..n).collect();
            ranked.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
            let mut kept: Vec<usize> = ranked.into_iter().take(top_n).collect();
            kept.sort_unstable();
            kept
        }
    };
    if c == 0 || c > candidates.len() {
        return Err(EnsembleError::SizeOutOfRange {
            size: c,
            max: candidates.len(),
        });
    }

    let (scores, weight) = weighted_scores(&pool.valid_bleu, &pool.avg_self_bleu);
    let candidate_scores: Vec<f64> = candidates.iter().map(|&i| scores[i]).collect();
    let first = candidates[argmax_lowest(&candidate_scores)];

    let mut chosen = vec![first];
    let mut steps = Vec::new();
    while chosen.len() < c {
        let mut step_candidates = Vec::new();
        let mut best = f64::INFINITY;
        let mut best_index = usize::MAX;
        for &i in &candidates {
            if chosen.contains(&i) {
                continue;
            }
            let sum: f64 = chosen.iter().map(|&j| pool.matrix.get(i, j)).sum();
            let mean = sum / chosen.len() as f64;
            step_candidates.push((i, mean));
            if mean < best {
                best = mean;
                best_index = i;
            }
        }
        steps.push(SelectionStep {
            picked: best_index,
            picked_id: pool.ids[best_index].clone(),
            candidates: step_candidates,
        });
        chosen.push(best_index);
    }

    let chosen_ids = chosen.iter().map(|&i| pool.ids[i].clone()).collect();
    Ok(EnsembleSelection {
        chosen,
        chosen_ids,
        target_size: c,
        weighted_scores: scores,
        weight: Some(weight),
        // n passes filled the matrix, one more scores the final ensemble
        evaluations_used: n as u64 + 1,
        steps,
    })
}

pub fn bsbe_select(pool: &CandidatePool, c: usize) -> Result<EnsembleSelection, EnsembleError> {
    bsbe_select_with_options(pool, c, None)
}

/// Scores a member set on the valid set. Implementations must be cheap and
/// deterministic; parallel subset enumeration calls them concurrently.
pub trait Evaluator: Sync {
    fn evaluate(&self, pool: &CandidatePool, members: &[usize]) -> Result<f64, EnsembleError>;
}

fn check_members(pool: &CandidatePool, members: &[usize]) -> Result<(), EnsembleError> {
    if members.is_empty() {
        return Err(EnsembleError::TooFewModels { need: 1, got: 0 });
    }
    for &m in members {
        if m >= pool.len() {
            return Err(EnsembleError::UnknownMember {
                index: m,
                len: pool.len(),
            });
        }
    }
    Ok(())
}

/// Stand-in for ensembling real models: position-wise plurality vote over the
/// member translations (over the shortest length per sentence; tied token
/// counts go to the highest-valid-BLEU member), scored by corpus BLEU against
/// the references.
pub struct VoteEvaluator {
    references: Vec<Vec<Sentence>>,
    options: BleuOptions,
}

impl VoteEvaluator {
    pub fn new(references: Vec<Vec<Sentence>>) -> Self {
        VoteEvaluator {
            references,
            options: BleuOptions::default(),
        }
    }

    /// The voted translation for one line.
    fn vote_line(&self, pool: &CandidatePool, members: &[usize], line: usize) -> Sentence {
        let min_len = members
            .iter()
            .map(|&m| pool.translations(m)[line].len())
            .min()
            .unwrap_or(0);
        // members by descending valid BLEU, ties to the lower index
        let mut by_bleu: Vec<usize> = members.to_vec();
        by_bleu.sort_by(|&a, &b| {
            pool.valid_bleu[b]
                .total_cmp(&pool.valid_bleu[a])
                .then(a.cmp(&b))
        });

        let mut tokens = Vec::with_capacity(min_len);
        for pos in 0..min_len {
            let token_at = |m: usize| &pool.translations(m)[line].tokens()[pos];
            let count_of = |token: &String| {
                members
                    .iter()
                    .filter(|&&m| token_at(m) == token)
                    .count()
            };
            let top_count = members.iter().map(|&m| count_of(token_at(m))).max().unwrap();
            let winner = by_bleu
                .iter()
                .map(|&m| token_at(m))
                .find(|token| count_of(token) == top_count)
                .expect("some member holds the plurality token");
            tokens.push(winner.clone());
        }
        Sentence::from_tokens(tokens)
    }
}

impl Evaluator for VoteEvaluator {
    fn evaluate(&self, pool: &CandidatePool, members: &[usize]) -> Result<f64, EnsembleError> {
        check_members(pool, members)?;
        let lines = self.references.len();
        for &m in members {
            if pool.translations(m).len() != lines {
                return Err(EnsembleError::DimensionMismatch {
                    detail: format!(
                        "model {} translated {} lines, references have {}",
                        pool.ids[m],
                        pool.translations(m).len(),
                        lines
                    ),
                });
            }
        }
        let voted: Vec<Sentence> = (0..lines)
            .map(|line| self.vote_line(pool, members, line))
            .collect();
        Ok(corpus_bleu(&voted, &self.references, &self.options)?.score)
    }
}

/// Score-space surrogate: mean member valid BLEU plus `lambda` times the mean
/// pairwise diversity `(100 - SelfBLEU) / 100`. Singletons have no pairs and
/// score their valid BLEU alone.
pub struct MeanDiversityEvaluator {
    pub lambda: f64,
}

impl Default for MeanDiversityEvaluator {
    fn default() -> Self {
        MeanDiversityEvaluator { lambda: 1.0 }
    }
}

impl Evaluator for MeanDiversityEvaluator {
    fn evaluate(&self, pool: &CandidatePool, members: &[usize]) -> Result<f64, EnsembleError> {
        check_members(pool, members)?;
        let mean_bleu: f64 =
            members.iter().map(|&m| pool.valid_bleu[m]).sum::<f64>() / members.len() as f64;
        let mut pair_sum = 0.0;
        let mut pairs = 0usize;
        for (k, &a) in members.iter().enumerate() {
            for &b in &members[k + 1..] {
                pair_sum += (100.0 - pool.matrix.get(a, b)) / 100.0;
                pairs += 1;
            }
        }
        if pairs == 0 {
            return Ok(mean_bleu);
        }
        Ok(mean_bleu + self.lambda * pair_sum / pairs as f64)
    }
}

/// Greedy baseline: walk models in descending valid-BLEU order, keep a model
/// iff adding it improves the evaluator score, and push rejected models to a
/// temp list. After the walk, each temp model is retried exactly once in
/// order, then withdrawn definitely.
pub fn greedy_select(
    pool: &CandidatePool,
    evaluator: &dyn Evaluator,
    c: usize,
) -> Result<EnsembleSelection, EnsembleError> {
    if c == 0 || c > pool.len() {
        return Err(EnsembleError::SizeOutOfRange {
            size: c,
            max: pool.len(),
        });
    }
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| {
        pool.valid_bleu[b]
            .total_cmp(&pool.valid_bleu[a])
            .then(a.cmp(&b))
    });

    let mut chosen: Vec<usize> = Vec::new();
    let mut temp: Vec<usize> = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let mut evaluations = 0u64;

    let try_add = |chosen: &mut Vec<usize>,
                   best: &mut f64,
                   evaluations: &mut u64,
                   candidate: usize|
     -> Result<bool, EnsembleError> {
        let mut trial = chosen.clone();
        trial.push(candidate);
        let score = evaluator.evaluate(pool, &trial)?;
        *evaluations += 1;
        if score > *best {
            *chosen = trial;
            *best = score;
            Ok(true)
        } else {
            Ok(false)
        }
    };

    for candidate in order {
        if chosen.len() >= c {
            break;
        }
        if !try_add(&mut chosen, &mut best, &mut evaluations, candidate)? {
            temp.push(candidate);
        }
    }
    for candidate in temp {
        if chosen.len() >= c {
            break;
        }
        try_add(&mut chosen, &mut best, &mut evaluations, candidate)?;
    }

    let chosen_ids = chosen.iter().map(|&i| pool.ids[i].clone()).collect();
    Ok(EnsembleSelection {
        chosen,
        chosen_ids,
        target_size: c,
        weighted_scores: Vec::new(),
        weight: None,
        evaluations_used: evaluations,
        steps: Vec::new(),
    })
}

/// Guard on exhaustive enumeration.
pub const BRUTE_FORCE_MAX_MODELS: usize = 20;

fn subsets_up_to(n: usize, max_size: usize) -> Vec<Vec<usize>> {
    // lexicographic order over index sets
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn extend(
        out: &mut Vec<Vec<usize>>,
        current: &mut Vec<usize>,
        next: usize,
        n: usize,
        max_size: usize,
    ) {
        for i in next..n {
            current.push(i);
            out.push(current.clone());
            if current.len() < max_size {
                extend(out, current, i + 1, n, max_size);
            }
            current.pop();
        }
    }
    extend(&mut out, &mut current, 0, n, max_size);
    out
}

/// Exhaustive search over every non-empty subset up to `max_size`. Subsets
/// are evaluated in parallel and reduced in lexicographic order, so ties are
/// deterministic. Refuses pools beyond [`BRUTE_FORCE_MAX_MODELS`].
pub fn brute_force_select(
    pool: &CandidatePool,
    evaluator: &dyn Evaluator,
    max_size: usize,
) -> Result<EnsembleSelection, EnsembleError> {
    let n = pool.len();
    if n > BRUTE_FORCE_MAX_MODELS {
        return Err(EnsembleError::PoolTooLarge {
            n,
            max: BRUTE_FORCE_MAX_MODELS,
        });
    }
    if max_size == 0 || max_size > n {
        return Err(EnsembleError::SizeOutOfRange {
            size: max_size,
            max: n,
        });
    }
    let subsets = subsets_up_to(n, max_size);
    let scores: Vec<f64> = subsets
        .par_iter()
        .map(|subset| evaluator.evaluate(pool, subset))
        .collect::<Result<_, _>>()?;
    let best = argmax_lowest(&scores);
    let chosen = subsets[best].clone();
    let chosen_ids = chosen.iter().map(|&i| pool.ids[i].clone()).collect();
    Ok(EnsembleSelection {
        chosen,
        chosen_ids,
        target_size: max_size,
        weighted_scores: Vec::new(),
        weight: None,
        evaluations_used: subsets.len() as u64,
        steps: Vec::new(),
    })
}

/// Search strategies with closed-form valid-set pass counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchAlgorithm {
    Greedy,
    BruteForce,
    Bsbe,
}

impl std::str::FromStr for SearchAlgorithm {
    type Err = EnsembleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy" => Ok(SearchAlgorithm::Greedy),
            "brute" | "brute-force" | "brute_force" => Ok(SearchAlgorithm::BruteForce),
            "bsbe" => Ok(SearchAlgorithm::Bsbe),
            other => Err(EnsembleError::UnknownAlgorithm {
                got: other.to_string(),
            }),
        }
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut result = 1u64;
    for i in 0..k {
        result = result * (n - i) / (i + 1);
    }
    result
}

/// Closed-form number of valid-set passes for a pool of `n` models:
/// 2n for greedy, the sum of C(n, i) over 1..=n for brute force, and n+1 for
/// the boosted search.
pub fn search_cost(algorithm: SearchAlgorithm, n: u64) -> u64 {
    assert!(n >= 1, "search cost needs at least one model");
    match algorithm {
        SearchAlgorithm::Greedy => 2 * n,
        SearchAlgorithm::BruteForce => (1..=n).map(|i| binomial(n, i)).sum(),
        SearchAlgorithm::Bsbe => n + 1,
    }
}

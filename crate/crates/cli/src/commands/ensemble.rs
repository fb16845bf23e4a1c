use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use mtkit_core::ensemble::{
    brute_force_select, bsbe_select_with_options, greedy_select, search_cost, CandidatePool,
    EnsembleSelection, Evaluator, MeanDiversityEvaluator, SearchAlgorithm, VoteEvaluator,
};
use mtkit_core::metrics::{ModelTranslations, SelfBleuMatrix};
use mtkit_core::text::Sentence;

use super::resolve_mode;
use super::selfbleu::manifest_relative;
use crate::errors::{data, usage, CliError};
use crate::io::read_sentences;
use crate::report::Report;
use crate::EnsembleArgs;

#[derive(Debug, Deserialize)]
struct PoolManifest {
    models: Vec<PoolModel>,
    /// Precomputed pairwise Self-BLEU; computed from translations when absent.
    self_bleu_matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
struct PoolModel {
    id: String,
    valid_bleu: f64,
    file: Option<PathBuf>,
}

#[derive(Serialize)]
struct SearchResult {
    strategy: SearchAlgorithm,
    selection: EnsembleSelection,
    /// Closed-form pass count for this strategy at this pool size.
    search_cost: u64,
    pool_size: usize,
}

pub fn run(args: EnsembleArgs) -> Result<Report, CliError> {
    let strategy: SearchAlgorithm = args.strategy.parse().map_err(usage)?;
    let mode = resolve_mode(&args.mode, &args.lang_pair)?;

    let manifest_text = std::fs::read_to_string(&args.pool)
        .map_err(|e| data(format!("{}: {e}", args.pool.display())))?;
    let manifest: PoolManifest = serde_json::from_str(&manifest_text)
        .map_err(|e| data(format!("{}: {e}", args.pool.display())))?;
    if manifest.models.len() < 2 {
        return Err(data("pool manifest needs at least two models"));
    }

    let ids: Vec<String> = manifest.models.iter().map(|m| m.id.clone()).collect();
    let valid_bleu: Vec<f64> = manifest.models.iter().map(|m| m.valid_bleu).collect();
    let has_files = manifest.models.iter().all(|m| m.file.is_some());

    let translations: Option<Vec<ModelTranslations>> = if has_files {
        let mut models = Vec::new();
        for entry in &manifest.models {
            let path = manifest_relative(&args.pool, entry.file.as_ref().expect("has_files"));
            models.push(ModelTranslations {
                id: entry.id.clone(),
                sentences: read_sentences(&path, mode)?,
            });
        }
        Some(models)
    } else {
        None
    };

    // a manifest matrix wins over one recomputed from translation files
    let pool = match (manifest.self_bleu_matrix, translations) {
        (Some(values), translations) => {
            let matrix = SelfBleuMatrix {
                model_ids: ids.clone(),
                values,
            };
            let pool = CandidatePool::from_scores(ids, valid_bleu, matrix).map_err(data)?;
            match translations {
                Some(models) => pool
                    .with_translations(models.into_iter().map(|m| m.sentences).collect())
                    .map_err(data)?,
                None => pool,
            }
        }
        (None, Some(models)) => {
            CandidatePool::from_translations(models, valid_bleu).map_err(data)?
        }
        (None, None) => {
            return Err(data(
                "pool manifest needs either a self_bleu_matrix or a translation file per model",
            ))
        }
    };

    let selection = match strategy {
        SearchAlgorithm::Bsbe => {
            bsbe_select_with_options(&pool, args.size, args.top_n).map_err(usage)?
        }
        SearchAlgorithm::Greedy | SearchAlgorithm::BruteForce => {
            let references: Option<Vec<Vec<Sentence>>> = match &args.refs {
                Some(path) => Some(
                    read_sentences(path, mode)?
                        .into_iter()
                        .map(|s| vec![s])
                        .collect(),
                ),
                None => None,
            };
            let vote;
            let mean_diversity;
            let evaluator: &dyn Evaluator = match args.evaluator.as_str() {
                "vote" => {
                    let refs = references.ok_or_else(|| {
                        usage("the vote evaluator needs --refs and translation files in the pool")
                    })?;
                    if !has_files {
                        return Err(usage(
                            "the vote evaluator needs a translation file per pool model",
                        ));
                    }
                    vote = VoteEvaluator::new(refs);
                    &vote
                }
                "mean-diversity" => {
                    mean_diversity = MeanDiversityEvaluator::default();
                    &mean_diversity
                }
                other => {
                    return Err(usage(format!(
                        "unknown evaluator {other:?}, expected vote or mean-diversity"
                    )))
                }
            };
            match strategy {
                SearchAlgorithm::Greedy => greedy_select(&pool, evaluator, args.size),
                _ => brute_force_select(&pool, evaluator, args.size),
            }
            .map_err(data)?
        }
    };

    let n = pool.len() as u64;
    Ok(Report::new(
        "ensemble-search",
        0,
        &args,
        SearchResult {
            strategy,
            selection,
            search_cost: search_cost(strategy, n),
            pool_size: pool.len(),
        },
    ))
}

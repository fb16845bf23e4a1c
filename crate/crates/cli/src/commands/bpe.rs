use serde::Serialize;

use mtkit_core::bpe::{bpe_apply, bpe_learn, BpeModel};
use mtkit_core::text::{Sentence, TokenizeMode};

use crate::errors::{data, CliError};
use crate::io::{read_sentences, write_lines, write_text};
use crate::report::Report;
use crate::{BpeApplyArgs, BpeLearnArgs};

#[derive(Serialize)]
struct LearnResult {
    requested_merges: usize,
    learned_merges: usize,
}

#[derive(Serialize)]
struct ApplyResult {
    lines: usize,
    model_merges: usize,
}

pub fn run_learn(args: BpeLearnArgs) -> Result<Report, CliError> {
    let corpus = read_sentences(&args.input, TokenizeMode::Word)?;
    let model = bpe_learn(&corpus, args.merges);
    write_text(&args.output, &model.to_text())?;
    Ok(Report::new(
        "bpe-learn",
        0,
        &args,
        LearnResult {
            requested_merges: args.merges,
            learned_merges: model.num_merges(),
        },
    ))
}

pub fn run_apply(args: BpeApplyArgs) -> Result<Report, CliError> {
    let model_text = std::fs::read_to_string(&args.model)
        .map_err(|e| data(format!("{}: {e}", args.model.display())))?;
    let model =
        BpeModel::parse(&model_text).map_err(|e| data(format!("{}: {e}", args.model.display())))?;
    let corpus = read_sentences(&args.input, TokenizeMode::Word)?;
    let segmented: Vec<String> = corpus
        .iter()
        .map(|s| bpe_apply(s, &model))
        .map(|s: Sentence| s.text())
        .collect();
    write_lines(&args.output, &segmented)?;
    Ok(Report::new(
        "bpe-apply",
        0,
        &args,
        ApplyResult {
            lines: segmented.len(),
            model_merges: model.num_merges(),
        },
    ))
}

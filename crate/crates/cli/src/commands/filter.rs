use serde::Serialize;

use mtkit_core::filtering::{
    filter_corpus, FilterRuleSet, LangPair, LanguageDetector, PredictionsDetector, RuleId,
    ScriptDetector,
};
use mtkit_core::lm::{filter_monolingual, train_ngram_lm};
use mtkit_core::text::{ParallelPair, Sentence, TokenizeMode};

use crate::errors::{data, usage, CliError};
use crate::io::{read_lines, read_sentences, read_tsv_pairs, write_lines};
use crate::report::Report;
use crate::FilterArgs;

#[derive(Serialize)]
struct FilterResult {
    input_pairs: usize,
    kept: usize,
    rejected: usize,
    rejection_counts: Vec<(String, usize)>,
}

#[derive(Serialize)]
struct MonoResult {
    input_sentences: usize,
    kept: usize,
    rejected: usize,
    lm_vocab_size: usize,
}

#[derive(Serialize)]
struct RejectionLine<'a> {
    /// One-based input line number.
    line: usize,
    reasons: &'a [RuleId],
}

pub fn run(args: FilterArgs) -> Result<Report, CliError> {
    if args.mono.is_some() {
        run_monolingual(args)
    } else {
        run_parallel(args)
    }
}

fn run_parallel(args: FilterArgs) -> Result<Report, CliError> {
    let pair: LangPair = args.lang_pair.parse().map_err(usage)?;
    let source_mode = if pair.source.char_mode() {
        TokenizeMode::Char
    } else {
        TokenizeMode::Word
    };
    let target_mode = if pair.target.char_mode() {
        TokenizeMode::Char
    } else {
        TokenizeMode::Word
    };

    let pairs: Vec<ParallelPair> = match (&args.input, &args.src, &args.tgt) {
        (Some(input), None, None) => read_tsv_pairs(input, source_mode, target_mode)?,
        (None, Some(src), Some(tgt)) => {
            let sources = read_sentences(src, source_mode)?;
            let targets = read_sentences(tgt, target_mode)?;
            if sources.len() != targets.len() {
                return Err(data(format!(
                    "{}: {} lines, {}: {} lines",
                    src.display(),
                    sources.len(),
                    tgt.display(),
                    targets.len()
                )));
            }
            sources
                .into_iter()
                .zip(targets)
                .map(|(source, target)| ParallelPair { source, target })
                .collect()
        }
        _ => return Err(usage("provide --input TSV, or --src and --tgt files")),
    };

    let rules = FilterRuleSet {
        max_len_words: args.max_len,
        max_word_chars: args.max_word_chars,
        ratio_limit: args.ratio_limit,
        dedup: !args.no_dedup,
        langid_check: !args.no_langid,
        unicode_check: !args.no_unicode_check,
        ..FilterRuleSet::for_lang_pair(pair)
    };

    let predictions = match &args.langid_predictions {
        None => None,
        Some(path) => {
            let mut source = Vec::new();
            let mut target = Vec::new();
            for (i, line) in read_lines(path)?.iter().enumerate() {
                let (src, tgt) = line.split_once('\t').ok_or_else(|| {
                    data(format!(
                        "{} line {}: expected src_lang TAB tgt_lang",
                        path.display(),
                        i + 1
                    ))
                })?;
                let parse = |code: &str| -> Result<_, CliError> {
                    let pair: LangPair = format!("{code}-{code}").parse().map_err(usage)?;
                    Ok(pair.source.script())
                };
                source.push(parse(src)?);
                target.push(parse(tgt)?);
            }
            Some(PredictionsDetector::new(source, target))
        }
    };
    let script_detector = ScriptDetector;
    let detector: &dyn LanguageDetector = match &predictions {
        Some(detector) => detector,
        None => &script_detector,
    };

    let outcome = filter_corpus(&pairs, &rules, detector);

    let kept_lines: Vec<String> = outcome
        .kept
        .iter()
        .map(|p| format!("{}\t{}", p.source.raw(), p.target.raw()))
        .collect();
    write_lines(&args.output, &kept_lines)?;

    let rejection_lines: Vec<String> = outcome
        .rejected
        .iter()
        .map(|r| {
            serde_json::to_string(&RejectionLine {
                line: r.index + 1,
                reasons: &r.verdict.reasons,
            })
            .expect("rejection line serializes")
        })
        .collect();
    write_lines(&args.rejections, &rejection_lines)?;

    let mut counts: Vec<(String, usize)> = Vec::new();
    for rejected in &outcome.rejected {
        for reason in &rejected.verdict.reasons {
            let key = reason.to_string();
            match counts.iter_mut().find(|(name, _)| *name == key) {
                Some((_, n)) => *n += 1,
                None => counts.push((key, 1)),
            }
        }
    }
    counts.sort();

    Ok(Report::new(
        "filter",
        0,
        &args,
        FilterResult {
            input_pairs: pairs.len(),
            kept: outcome.kept.len(),
            rejected: outcome.rejected.len(),
            rejection_counts: counts,
        },
    ))
}

fn run_monolingual(args: FilterArgs) -> Result<Report, CliError> {
    let pair: LangPair = args.lang_pair.parse().map_err(usage)?;
    let mode = if pair.target.char_mode() {
        TokenizeMode::Char
    } else {
        TokenizeMode::Word
    };
    let mono_path = args.mono.as_ref().expect("checked by caller");
    let lm_path = args.lm_corpus.as_ref().expect("clap requires lm_corpus");
    let corpus = read_sentences(mono_path, mode)?;
    let lm_corpus = read_sentences(lm_path, mode)?;
    let lm = train_ngram_lm(&lm_corpus, args.lm_order, args.lm_k).map_err(data)?;
    let (kept, rejected) = filter_monolingual(&corpus, &lm, args.percentile).map_err(usage)?;

    write_lines(&args.output, &kept.iter().map(Sentence::text).collect::<Vec<_>>())?;
    write_lines(
        &args.rejections,
        &rejected.iter().map(Sentence::text).collect::<Vec<_>>(),
    )?;

    Ok(Report::new(
        "filter",
        0,
        &args,
        MonoResult {
            input_sentences: corpus.len(),
            kept: kept.len(),
            rejected: rejected.len(),
            lm_vocab_size: lm.vocab_size(),
        },
    ))
}

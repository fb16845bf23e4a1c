use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use mtkit_core::augment::{golden_fixture_run, target_denoise, NoiseSpec, Noiser};
use mtkit_core::text::{Sentence, TokenizeMode};

use crate::errors::{usage, CliError};
use crate::io::{read_sentences, read_tsv_pairs, write_lines};
use crate::report::Report;
use crate::NoiseArgs;

#[derive(Serialize)]
struct NoiseResult {
    lines: usize,
    changed: usize,
}

#[derive(Serialize)]
struct FixtureResult {
    input: String,
    outputs: Vec<String>,
}

pub fn run(args: NoiseArgs) -> Result<Report, CliError> {
    if args.fixture {
        let (input, outputs) = golden_fixture_run();
        let result = FixtureResult {
            input: input.text(),
            outputs: outputs.iter().map(Sentence::text).collect(),
        };
        return Ok(Report::new("noise", 42, &args, result));
    }

    let input = args.input.as_ref().expect("clap requires input");
    let output = args.output.as_ref().expect("clap requires output");
    let seed = args.seed;

    match args.format.as_str() {
        "text" => {
            let corpus = read_sentences(input, TokenizeMode::Word)?;
            let spec = NoiseSpec {
                granularity: args.granularity.parse().map_err(usage)?,
                p_replace: args.p_replace,
                p_delete: args.p_delete,
                p_permute: args.p_permute,
                span_len: args.span_len,
                seed,
            };
            let noiser = match &args.vocab_from {
                Some(path) => {
                    let vocab_corpus = read_sentences(path, TokenizeMode::Word)?;
                    Noiser::from_corpus(spec, &vocab_corpus)
                }
                None => Noiser::from_corpus(spec, &corpus),
            }
            .map_err(usage)?;
            let noised = noiser.stream(&corpus, args.epoch);
            let changed = corpus
                .iter()
                .zip(&noised)
                .filter(|(a, b)| a.tokens() != b.tokens())
                .count();
            write_lines(output, &noised.iter().map(Sentence::text).collect::<Vec<_>>())?;
            Ok(Report::new(
                "noise",
                seed,
                &args,
                NoiseResult {
                    lines: noised.len(),
                    changed,
                },
            ))
        }
        "tsv" => {
            if !args.denoise {
                return Err(usage(
                    "tsv input is for target denoising; pass --denoise",
                ));
            }
            let pairs = read_tsv_pairs(input, TokenizeMode::Word, TokenizeMode::Word)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(args.epoch));
            let denoised: Vec<_> = pairs.iter().map(|p| target_denoise(p, &mut rng)).collect();
            let changed = pairs
                .iter()
                .zip(&denoised)
                .filter(|(a, b)| a.target.tokens() != b.target.tokens())
                .count();
            let lines: Vec<String> = denoised
                .iter()
                .map(|p| format!("{}\t{}", p.source.text(), p.target.text()))
                .collect();
            write_lines(output, &lines)?;
            Ok(Report::new(
                "noise",
                seed,
                &args,
                NoiseResult {
                    lines: lines.len(),
                    changed,
                },
            ))
        }
        other => Err(usage(format!("unknown format {other:?}, expected text or tsv"))),
    }
}

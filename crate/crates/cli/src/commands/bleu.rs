use mtkit_core::metrics::{corpus_bleu, BleuOptions, Smoothing};
use mtkit_core::text::Sentence;

use super::resolve_mode;
use crate::errors::{data, CliError};
use crate::io::read_sentences;
use crate::report::Report;
use crate::BleuArgs;

pub fn run(args: BleuArgs) -> Result<Report, CliError> {
    let mode = resolve_mode(&args.mode, &args.lang_pair)?;
    let hyps = read_sentences(&args.hyp, mode)?;
    let mut ref_sets: Vec<Vec<Sentence>> = vec![Vec::new(); hyps.len()];
    for path in &args.refs {
        let sentences = read_sentences(path, mode)?;
        if sentences.len() != hyps.len() {
            return Err(data(format!(
                "{}: {} lines, hypothesis file has {}",
                path.display(),
                sentences.len(),
                hyps.len()
            )));
        }
        for (set, sentence) in ref_sets.iter_mut().zip(sentences) {
            set.push(sentence);
        }
    }
    let options = BleuOptions {
        max_order: args.max_order,
        case_sensitive: !args.lowercase,
        smoothing: if args.smooth {
            Smoothing::AddOne
        } else {
            Smoothing::None
        },
    };
    let report = corpus_bleu(&hyps, &ref_sets, &options).map_err(data)?;
    Ok(Report::new("bleu", 0, &args, report))
}

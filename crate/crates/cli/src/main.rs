//! `mtkit` — pipeline steps over the toolkit with file-based I/O.
//!
//! Every run prints a JSON report (tool version, seed, config echo, result)
//! to stdout; artifacts go to the paths given by flags. Exit codes: 0 on
//! success, 1 on data errors (with the offending line), 2 on argument
//! errors. The only environment configuration is `MTKIT_QUIET`, which
//! suppresses human-readable stderr output.

mod commands;
mod errors;
mod io;
mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "mtkit", version, about = "Corpus filtering, noising, scoring and ensemble search for NMT system building", propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Corpus BLEU of a hypothesis file against reference file(s)
    Bleu(BleuArgs),
    /// Pairwise Self-BLEU matrix over a manifest of model translations
    Selfbleu(SelfBleuArgs),
    /// Rule-based parallel-corpus filtering (and LM-based monolingual filtering)
    Filter(FilterArgs),
    /// Multi-granularity noising and target denoising
    Noise(NoiseArgs),
    /// Ensemble subset search over a candidate pool
    EnsembleSearch(EnsembleArgs),
    /// Run the kernel invariant suite and print a pass/fail table
    KernelCheck(KernelCheckArgs),
    /// Emit (t, g(t)) tables for the three scheduled-sampling decays as CSV
    SchedulePlot(SchedulePlotArgs),
    /// Learn a BPE merge list from a corpus
    BpeLearn(BpeLearnArgs),
    /// Apply a learned BPE merge list to text
    BpeApply(BpeApplyArgs),
}

#[derive(Args, serde::Serialize)]
struct BleuArgs {
    /// Hypothesis file, one sentence per line
    #[arg(long)]
    hyp: PathBuf,
    /// Reference file(s), line-aligned with the hypotheses; repeatable
    #[arg(long = "ref", required = true)]
    refs: Vec<PathBuf>,
    /// Maximum n-gram order
    #[arg(long, default_value_t = 4)]
    max_order: usize,
    /// Score case-insensitively
    #[arg(long)]
    lowercase: bool,
    /// Add-one smoothing on orders >= 2 (for short fixtures)
    #[arg(long)]
    smooth: bool,
    /// Tokenization: word or char; overrides the language-pair default
    #[arg(long)]
    mode: Option<String>,
    /// Language pair like en-zh; zh/ja targets default to char tokenization
    #[arg(long)]
    lang_pair: Option<String>,
}

#[derive(Args, serde::Serialize)]
struct SelfBleuArgs {
    /// JSON manifest: {"models": [{"id": "...", "file": "..."}]}
    #[arg(long)]
    manifest: PathBuf,
    /// Tokenization: word or char
    #[arg(long)]
    mode: Option<String>,
    /// Language pair like en-zh; zh/ja targets default to char tokenization
    #[arg(long)]
    lang_pair: Option<String>,
    /// Also report per-model multi-reference Self-BLEU scores
    #[arg(long)]
    multiref: bool,
    /// Compute the matrix single-threaded
    #[arg(long)]
    serial: bool,
}

#[derive(Args, serde::Serialize)]
struct FilterArgs {
    /// Parallel corpus as "source TAB target" lines
    #[arg(long, conflicts_with_all = ["src", "tgt", "mono"])]
    input: Option<PathBuf>,
    /// Source side of a paired corpus (with --tgt)
    #[arg(long, requires = "tgt")]
    src: Option<PathBuf>,
    /// Target side of a paired corpus (with --src)
    #[arg(long, requires = "src")]
    tgt: Option<PathBuf>,
    /// Kept pairs are written here as TSV (monolingual mode: kept lines)
    #[arg(long)]
    output: PathBuf,
    /// Rejection report written here as JSONL: {"line": N, "reasons": [...]}
    #[arg(long)]
    rejections: PathBuf,
    /// Language pair like en-zh; gates script checks and char tokenization
    #[arg(long)]
    lang_pair: String,
    /// Reject pairs with a side longer than this many tokens
    #[arg(long, default_value_t = 100)]
    max_len: usize,
    /// Reject pairs with a single token longer than this many characters
    #[arg(long, default_value_t = 40)]
    max_word_chars: usize,
    /// Reject pairs whose side token counts differ by more than this factor
    #[arg(long, default_value_t = 4.0)]
    ratio_limit: f64,
    /// Keep duplicated pairs
    #[arg(long)]
    no_dedup: bool,
    /// Skip the language-id check
    #[arg(long)]
    no_langid: bool,
    /// Skip the invalid-unicode check
    #[arg(long)]
    no_unicode_check: bool,
    /// Per-line external language predictions: "src_lang TAB tgt_lang"
    #[arg(long)]
    langid_predictions: Option<PathBuf>,
    /// Monolingual file to filter by LM perplexity percentile
    #[arg(long, requires = "lm_corpus")]
    mono: Option<PathBuf>,
    /// Training corpus for the n-gram LM (monolingual mode)
    #[arg(long)]
    lm_corpus: Option<PathBuf>,
    /// n-gram order of the LM
    #[arg(long, default_value_t = 5)]
    lm_order: usize,
    /// Additive smoothing constant of the LM
    #[arg(long, default_value_t = 0.1)]
    lm_k: f64,
    /// Perplexity percentile above which sentences are rejected
    #[arg(long, default_value_t = 95.0)]
    percentile: f64,
}

#[derive(Args, serde::Serialize)]
struct NoiseArgs {
    /// Input corpus: one sentence per line, or TSV pairs with --format tsv
    #[arg(long, required_unless_present = "fixture")]
    input: Option<PathBuf>,
    /// Noised corpus is written here
    #[arg(long, required_unless_present = "fixture")]
    output: Option<PathBuf>,
    /// text: noise each line; tsv: noise the target side only
    #[arg(long, default_value = "text")]
    format: String,
    /// Noise unit: token, word or span
    #[arg(long, default_value = "word")]
    granularity: String,
    #[arg(long, default_value_t = 0.2)]
    p_replace: f64,
    #[arg(long, default_value_t = 0.2)]
    p_delete: f64,
    #[arg(long, default_value_t = 0.2)]
    p_permute: f64,
    /// Tokens per span at span granularity
    #[arg(long, default_value_t = 3)]
    span_len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Epoch index for on-the-fly noise
    #[arg(long, default_value_t = 0)]
    epoch: u64,
    /// Replacement vocabulary corpus (defaults to the input corpus)
    #[arg(long)]
    vocab_from: Option<PathBuf>,
    /// TSV mode: apply target denoising (30%/15%) instead of span noise
    #[arg(long)]
    denoise: bool,
    /// Emit the canonical seed-42 golden run and exit
    #[arg(long)]
    fixture: bool,
}

#[derive(Args, serde::Serialize)]
struct EnsembleArgs {
    /// Pool manifest: {"models": [{"id", "valid_bleu", "file"?}], "self_bleu_matrix"?}
    #[arg(long)]
    pool: PathBuf,
    /// Reference file for the vote evaluator
    #[arg(long)]
    refs: Option<PathBuf>,
    /// Search strategy: bsbe, greedy or brute
    #[arg(long)]
    strategy: String,
    /// Ensemble size (bsbe/greedy) or maximum subset size (brute)
    #[arg(long)]
    size: usize,
    /// Evaluator for greedy/brute: vote or mean-diversity
    #[arg(long, default_value = "vote")]
    evaluator: String,
    /// Restrict the boosted search to the top N models by weighted score
    #[arg(long)]
    top_n: Option<usize>,
    /// Tokenization for translation files: word or char
    #[arg(long)]
    mode: Option<String>,
    /// Language pair like en-zh; zh/ja targets default to char tokenization
    #[arg(long)]
    lang_pair: Option<String>,
}

#[derive(Args, serde::Serialize)]
struct KernelCheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 6)]
    seq_len: usize,
    #[arg(long, default_value_t = 8)]
    d_model: usize,
    #[arg(long, default_value_t = 2)]
    heads: usize,
    #[arg(long, default_value_t = 12)]
    hidden: usize,
    #[arg(long, default_value_t = 50)]
    trials: usize,
}

#[derive(Args, serde::Serialize)]
struct SchedulePlotArgs {
    /// Number of decoding steps to tabulate (t = 0..steps)
    #[arg(long, default_value_t = 100)]
    steps: u64,
    /// CSV is written here
    #[arg(long)]
    output: PathBuf,
    /// Linear decay slope (must be negative)
    #[arg(long, default_value_t = -0.01)]
    linear_k: f64,
    /// Linear decay offset
    #[arg(long, default_value_t = 1.0)]
    linear_b: f64,
    /// Linear decay floor
    #[arg(long, default_value_t = 0.1)]
    linear_eps: f64,
    /// Exponential decay radix
    #[arg(long, default_value_t = 0.99)]
    exp_k: f64,
    /// Inverse-sigmoid steepness (at least 1)
    #[arg(long, default_value_t = 10.0)]
    sig_k: f64,
}

#[derive(Args, serde::Serialize)]
struct BpeLearnArgs {
    /// Training corpus, one sentence per line
    #[arg(long)]
    input: PathBuf,
    /// Number of merge operations to learn
    #[arg(long)]
    merges: usize,
    /// Merge list is written here, one "left right" pair per line
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, serde::Serialize)]
struct BpeApplyArgs {
    /// Text to segment, one sentence per line
    #[arg(long)]
    input: PathBuf,
    /// Learned merge list file
    #[arg(long)]
    model: PathBuf,
    /// Segmented text is written here
    #[arg(long)]
    output: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Bleu(args) => commands::bleu::run(args),
        Command::Selfbleu(args) => commands::selfbleu::run(args),
        Command::Filter(args) => commands::filter::run(args),
        Command::Noise(args) => commands::noise::run(args),
        Command::EnsembleSearch(args) => commands::ensemble::run(args),
        Command::KernelCheck(args) => commands::kernel::run(args),
        Command::SchedulePlot(args) => commands::schedule::run(args),
        Command::BpeLearn(args) => commands::bpe::run_learn(args),
        Command::BpeApply(args) => commands::bpe::run_apply(args),
    };
    match outcome {
        Ok(report) => report.print(),
        Err(err) => {
            eprintln!("{err}");
            std::process::exit(err.exit_code());
        }
    }
}

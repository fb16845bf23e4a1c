//! Machine-checkable machinery for building a shared-task NMT system:
//! corpus filtering, synthetic-data noising and sampling, BLEU/Self-BLEU
//! scoring, diversity-aware ensemble search, forward-pass kernels for the
//! attention variants, and the finetuning schedule functions.
//!
//! Everything is deterministic: randomized operations take explicit seeds,
//! and parallel passes reduce to the same bytes as their serial twins.

pub mod augment;
pub mod bpe;
pub mod ensemble;
pub mod filtering;
pub mod kernels;
pub mod lm;
pub mod metrics;
pub mod sampling;
pub mod schedule;
pub mod text;

pub use text::{Corpus, ParallelPair, Sentence, TokenizeMode};

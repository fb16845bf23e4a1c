//! Byte pair encoding: merge-list learning and subword segmentation.
//!
//! Words are split into single-character symbols with a reserved end-of-word
//! marker appended to the last symbol, so segmentations are reversible: join
//! subwords and split on the marker to recover the original tokens. Learned
//! models can be trained jointly or per language by choosing the corpus.

use std::collections::HashMap;

use thiserror::Error;

use crate::text::Sentence;

/// Marker appended to the last subword of every word.
pub const END_OF_WORD: &str = "</w>";

#[derive(Debug, Error)]
pub enum BpeError {
    #[error("merges line {line}: expected \"left right\", got {got:?}")]
    MalformedMerge { line: usize, got: String },
    #[error("duplicate merge pair at line {line}: {left} {right}")]
    DuplicateMerge {
        line: usize,
        left: String,
        right: String,
    },
}

/// An ordered list of learned symbol-pair merges. Order is significant:
/// `apply` replays merges in learned order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
}

impl BpeModel {
    pub fn new(merges: Vec<(String, String)>) -> Self {
        BpeModel { merges }
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn num_merges(&self) -> usize {
        self.merges.len()
    }

    /// Merges file format: one "left right" pair per line, in learned order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (a, b) in &self.merges {
            out.push_str(a);
            out.push(' ');
            out.push_str(b);
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, BpeError> {
        let mut merges = Vec::new();
        let mut seen = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            let (left, right) = match (parts.next(), parts.next(), parts.next()) {
                (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => (l, r),
                _ => {
                    return Err(BpeError::MalformedMerge {
                        line: i + 1,
                        got: line.to_string(),
                    })
                }
            };
            if seen
                .insert((left.to_string(), right.to_string()), ())
                .is_some()
            {
                return Err(BpeError::DuplicateMerge {
                    line: i + 1,
                    left: left.to_string(),
                    right: right.to_string(),
                });
            }
            merges.push((left.to_string(), right.to_string()));
        }
        Ok(BpeModel { merges })
    }
}

fn word_symbols(word: &str) -> Vec<String> {
    let mut syms: Vec<String> = word.chars().map(String::from).collect();
    if let Some(last) = syms.last_mut() {
        last.push_str(END_OF_WORD);
    }
    syms
}

fn merge_in_place(syms: &mut Vec<String>, left: &str, right: &str) {
    let mut out = Vec::with_capacity(syms.len());
    let mut i = 0;
    while i < syms.len() {
        if i + 1 < syms.len() && syms[i] == left && syms[i + 1] == right {
            out.push(format!("{}{}", syms[i], syms[i + 1]));
            i += 2;
        } else {
            out.push(std::mem::take(&mut syms[i]));
            i += 1;
        }
    }
    *syms = out;
}

/// Learns up to `num_merges` merges from the corpus word frequencies.
///
/// Each step merges the most frequent adjacent symbol pair; ties are broken
/// lexicographically by the pair so learned models are deterministic. Stops
/// early when no adjacent pairs remain, so the result holds
/// `min(num_merges, available)` merges. An empty corpus yields an empty model.
pub fn bpe_learn(corpus: &[Sentence], num_merges: usize) -> BpeModel {
    let mut word_freqs: HashMap<Vec<String>, u64> = HashMap::new();
    for sentence in corpus {
        for word in sentence.tokens() {
            *word_freqs.entry(word_symbols(word)).or_insert(0) += 1;
        }
    }

    let mut merges = Vec::new();
    for _ in 0..num_merges {
        let mut pair_counts: HashMap<(&str, &str), u64> = HashMap::new();
        for (syms, freq) in &word_freqs {
            for pair in syms.windows(2) {
                *pair_counts
                    .entry((pair[0].as_str(), pair[1].as_str()))
                    .or_insert(0) += freq;
            }
        }
        let best = pair_counts
            .into_iter()
            .max_by(|(pa, ca), (pb, cb)| ca.cmp(cb).then_with(|| pb.cmp(pa)));
        let Some(((left, right), _)) = best else {
            break;
        };
        let (left, right) = (left.to_string(), right.to_string());

        let mut next: HashMap<Vec<String>, u64> = HashMap::with_capacity(word_freqs.len());
        for (mut syms, freq) in word_freqs {
            merge_in_place(&mut syms, &left, &right);
            *next.entry(syms).or_insert(0) += freq;
        }
        word_freqs = next;
        merges.push((left, right));
    }
    BpeModel { merges }
}

/// Segments each word of the sentence by replaying the model's merges.
pub fn bpe_apply(sentence: &Sentence, model: &BpeModel) -> Sentence {
    let mut out = Vec::new();
    for word in sentence.tokens() {
        let mut syms = word_symbols(word);
        for (left, right) in model.merges() {
            merge_in_place(&mut syms, left, right);
        }
        out.extend(syms);
    }
    Sentence::from_tokens(out)
}

/// Undoes [`bpe_apply`]: joins subwords and splits words on the marker.
pub fn bpe_detokenize(sentence: &Sentence) -> Sentence {
    let mut words = Vec::new();
    let mut current = String::new();
    for sym in sentence.tokens() {
        match sym.strip_suffix(END_OF_WORD) {
            Some(head) => {
                current.push_str(head);
                words.push(std::mem::take(&mut current));
            }
            None => current.push_str(sym),
        }
    }
    if !current.is_empty() {
        words.push(current);
    }
    Sentence::from_tokens(words)
}

//! Tokenization and text normalization primitives shared by all other modules.
//!
//! Plain-text corpora are line-based: one sentence per line, UTF-8, LF line
//! endings. Invalid UTF-8 is rejected at the I/O boundary before any text
//! reaches this module.

use std::collections::HashMap;

/// German opening quote (double low-9).
const DE_OPEN: char = '\u{201E}';
/// German closing quote (left double quotation mark, the high-6 shape).
const DE_CLOSE: char = '\u{201C}';

/// How raw text is split into tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenizeMode {
    /// Split on whitespace runs, then split punctuation runs from adjacent
    /// word characters. Scores computed on latin-script text with this mode
    /// approximate standard shared-task tokenization.
    Word,
    /// Every non-whitespace codepoint becomes its own token. Used for
    /// Chinese/Japanese targets where scores are reported at char level.
    Char,
}

impl std::str::FromStr for TokenizeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "word" => Ok(TokenizeMode::Word),
            "char" => Ok(TokenizeMode::Char),
            other => Err(format!("unknown tokenize mode: {other}")),
        }
    }
}

/// A tokenized sentence. Tokens never contain whitespace; joining tokens with
/// single spaces and re-tokenizing in the same mode is idempotent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    tokens: Vec<String>,
    raw: String,
}

/// A monolingual sentence collection.
pub type Corpus = Vec<Sentence>;

/// A source/target sentence pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelPair {
    pub source: Sentence,
    pub target: Sentence,
}

impl Sentence {
    /// Builds a sentence from pre-split tokens; `raw` is the space-join.
    pub fn from_tokens(tokens: Vec<String>) -> Self {
        debug_assert!(
            tokens.iter().all(|t| !t.chars().any(char::is_whitespace)),
            "tokens must not contain whitespace"
        );
        let raw = tokens.join(" ");
        Sentence { tokens, raw }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens joined with single spaces.
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Splits `text` into a [`Sentence`] according to `mode`.
pub fn tokenize(text: &str, mode: TokenizeMode) -> Sentence {
    let tokens = match mode {
        TokenizeMode::Word => tokenize_words(text),
        TokenizeMode::Char => text
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(String::from)
            .collect(),
    };
    Sentence {
        tokens,
        raw: text.to_string(),
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Whitespace split, then maximal same-class runs (word chars vs punctuation)
/// become separate tokens, so `"Hallo"` turns into `"`, `Hallo`, `"`.
fn tokenize_words(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let mut current = String::new();
        let mut current_is_word = false;
        for c in chunk.chars() {
            let word = is_word_char(c);
            if !current.is_empty() && word != current_is_word {
                tokens.push(std::mem::take(&mut current));
            }
            current_is_word = word;
            current.push(c);
        }
        if !current.is_empty() {
            tokens.push(current);
        }
    }
    tokens
}

/// All `n`-grams of the sentence with multiplicities. Empty when the sentence
/// is shorter than `n`.
pub fn ngrams(sentence: &Sentence, n: usize) -> HashMap<Vec<String>, usize> {
    assert!(n >= 1, "n-gram order must be at least 1");
    let mut out = HashMap::new();
    if sentence.len() >= n {
        for window in sentence.tokens().windows(n) {
            *out.entry(window.to_vec()).or_insert(0) += 1;
        }
    }
    out
}

/// Converts paired ASCII double quotes to German low-9/high-6 quotes.
///
/// Quote occurrences are paired in reading order: odd occurrences open,
/// even occurrences close. A sentence with an odd total quote count is
/// returned unchanged, since there is no unambiguous pairing.
pub fn germanize_quotes(sentence: &Sentence) -> Sentence {
    let count: usize = sentence
        .tokens()
        .iter()
        .map(|t| t.chars().filter(|&c| c == '"').count())
        .sum();
    if count == 0 || !count.is_multiple_of(2) {
        return sentence.clone();
    }
    let mut opening = true;
    let tokens = sentence
        .tokens()
        .iter()
        .map(|t| {
            t.chars()
                .map(|c| {
                    if c == '"' {
                        let q = if opening { DE_OPEN } else { DE_CLOSE };
                        opening = !opening;
                        q
                    } else {
                        c
                    }
                })
                .collect()
        })
        .collect();
    Sentence::from_tokens(tokens)
}

//! Rule-based parallel-corpus filtering.
//!
//! Every enabled rule is evaluated for every pair with no short-circuiting,
//! so rejection reports carry the complete set of violated rules. The length
//! and ratio rules count tokens as tokenized upstream: word tokens for
//! space-delimited languages, characters for Chinese/Japanese sides.
//!
//! Punctuation normalization is expected to happen at ingestion and is not a
//! rule here.

use std::collections::HashSet;

use serde::Serialize;
use thiserror::Error;

use crate::text::{ParallelPair, Sentence};

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("unknown language pair {got:?}, expected e.g. \"en-zh\"")]
    UnknownLangPair { got: String },
}

/// Writing-script classes distinguished by the built-in detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptClass {
    Latin,
    Han,
    /// Han plus kana; kana presence is what separates this from [`ScriptClass::Han`].
    Japanese,
    Unknown,
}

/// Identifier of a violated filter rule. Serializes to the same snake_case
/// names `Display` prints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RuleId {
    #[serde(rename = "max_len")]
    MaxLen,
    #[serde(rename = "max_word_chars")]
    MaxWordChars,
    #[serde(rename = "ratio")]
    Ratio,
    #[serde(rename = "duplicate")]
    Duplicate,
    #[serde(rename = "langid_mismatch")]
    LangIdMismatch,
    #[serde(rename = "langid_error")]
    LangIdError,
    #[serde(rename = "invalid_unicode")]
    InvalidUnicode,
    #[serde(rename = "zh_latin")]
    ZhLatin,
}

impl std::fmt::Display for RuleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            RuleId::MaxLen => "max_len",
            RuleId::MaxWordChars => "max_word_chars",
            RuleId::Ratio => "ratio",
            RuleId::Duplicate => "duplicate",
            RuleId::LangIdMismatch => "langid_mismatch",
            RuleId::LangIdError => "langid_error",
            RuleId::InvalidUnicode => "invalid_unicode",
            RuleId::ZhLatin => "zh_latin",
        };
        f.write_str(name)
    }
}

/// Thresholds and switches for the pair rules.
#[derive(Debug, Clone)]
pub struct FilterRuleSet {
    /// Reject when either side exceeds this many tokens.
    pub max_len_words: usize,
    /// Reject when any single token exceeds this many characters.
    pub max_word_chars: usize,
    /// Reject when the side token counts differ by more than this factor.
    pub ratio_limit: f64,
    pub dedup: bool,
    pub langid_check: bool,
    pub unicode_check: bool,
    /// Reject when the Chinese (target) side contains ASCII letters.
    pub zh_reject_latin: bool,
    /// Expected script of each side; `None` skips the check for that side.
    pub source_script: Option<ScriptClass>,
    pub target_script: Option<ScriptClass>,
}

impl Default for FilterRuleSet {
    fn default() -> Self {
        FilterRuleSet {
            max_len_words: 100,
            max_word_chars: 40,
            ratio_limit: 4.0,
            dedup: true,
            langid_check: true,
            unicode_check: true,
            zh_reject_latin: false,
            source_script: None,
            target_script: None,
        }
    }
}

/// Languages recognized by the CLI language-pair switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lang {
    En,
    De,
    Zh,
    Ja,
}

impl Lang {
    pub fn script(self) -> ScriptClass {
        match self {
            Lang::En | Lang::De => ScriptClass::Latin,
            Lang::Zh => ScriptClass::Han,
            Lang::Ja => ScriptClass::Japanese,
        }
    }

    /// Whether scores and rules operate at char level for this language.
    pub fn char_mode(self) -> bool {
        matches!(self, Lang::Zh | Lang::Ja)
    }
}

/// A translation direction like `en-zh`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LangPair {
    pub source: Lang,
    pub target: Lang,
}

impl std::str::FromStr for LangPair {
    type Err = FilterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || FilterError::UnknownLangPair { got: s.to_string() };
        let (src, tgt) = s.split_once('-').ok_or_else(err)?;
        let parse = |code: &str| match code {
            "en" => Ok(Lang::En),
            "de" => Ok(Lang::De),
            "zh" => Ok(Lang::Zh),
            "ja" => Ok(Lang::Ja),
            _ => Err(err()),
        };
        Ok(LangPair {
            source: parse(src)?,
            target: parse(tgt)?,
        })
    }
}

impl FilterRuleSet {
    /// Rules preconfigured for a translation direction: script expectations
    /// from the pair, and the Latin-character rejection on Chinese targets.
    pub fn for_lang_pair(pair: LangPair) -> Self {
        FilterRuleSet {
            zh_reject_latin: pair.target == Lang::Zh,
            source_script: Some(pair.source.script()),
            target_script: Some(pair.target.script()),
            ..FilterRuleSet::default()
        }
    }
}

/// Outcome of filtering a single pair. Kept if and only if no rule fired.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub kept: bool,
    pub reasons: Vec<RuleId>,
}

impl Verdict {
    fn from_reasons(reasons: Vec<RuleId>) -> Self {
        Verdict {
            kept: reasons.is_empty(),
            reasons,
        }
    }
}

/// Which side of a pair a detector query refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Source,
    Target,
}

/// Language identification backend. The built-in detector classifies by
/// Unicode script; a predictions-file backend replays external classifier
/// output by line index. `None` marks a detector failure, reported with its
/// own rule id.
pub trait LanguageDetector: Sync {
    fn detect(&self, index: usize, side: Side, sentence: &Sentence) -> Option<ScriptClass>;
}

/// Unicode-script majority heuristic (see [`detect_language_script`]).
#[derive(Debug, Default, Clone, Copy)]
pub struct ScriptDetector;

impl LanguageDetector for ScriptDetector {
    fn detect(&self, _index: usize, _side: Side, sentence: &Sentence) -> Option<ScriptClass> {
        Some(detect_language_script(sentence))
    }
}

/// Replays per-line (source, target) predictions from an external classifier.
/// Out-of-range lines count as detector failures.
#[derive(Debug, Clone)]
pub struct PredictionsDetector {
    source: Vec<ScriptClass>,
    target: Vec<ScriptClass>,
}

impl PredictionsDetector {
    pub fn new(source: Vec<ScriptClass>, target: Vec<ScriptClass>) -> Self {
        PredictionsDetector { source, target }
    }
}

impl LanguageDetector for PredictionsDetector {
    fn detect(&self, index: usize, side: Side, _sentence: &Sentence) -> Option<ScriptClass> {
        match side {
            Side::Source => self.source.get(index).copied(),
            Side::Target => self.target.get(index).copied(),
        }
    }
}

fn is_latin_letter(c: char) -> bool {
    c.is_ascii_alphabetic()
        || matches!(c as u32, 0xC0..=0x24F | 0x1E00..=0x1EFF) && c.is_alphabetic()
}

fn is_han(c: char) -> bool {
    matches!(c as u32, 0x3400..=0x4DBF | 0x4E00..=0x9FFF | 0xF900..=0xFAFF)
}

fn is_kana(c: char) -> bool {
    matches!(c as u32, 0x3040..=0x30FF)
}

/// Classifies a sentence by majority codepoint script.
///
/// Only letters and ideographs are counted; a class must hold strictly more
/// than half of them to win. Kana presence turns a Han/kana majority into
/// [`ScriptClass::Japanese`]. Empty or undecided sentences are
/// [`ScriptClass::Unknown`].
pub fn detect_language_script(sentence: &Sentence) -> ScriptClass {
    let mut latin = 0usize;
    let mut han = 0usize;
    let mut kana = 0usize;
    let mut other = 0usize;
    for token in sentence.tokens() {
        for c in token.chars() {
            if is_han(c) {
                han += 1;
            } else if is_kana(c) {
                kana += 1;
            } else if is_latin_letter(c) {
                latin += 1;
            } else if c.is_alphabetic() {
                other += 1;
            }
        }
    }
    let total = latin + han + kana + other;
    if total == 0 {
        return ScriptClass::Unknown;
    }
    let majority = |count: usize| 2 * count > total;
    if kana > 0 && majority(han + kana) {
        ScriptClass::Japanese
    } else if majority(han) {
        ScriptClass::Han
    } else if majority(latin) {
        ScriptClass::Latin
    } else {
        ScriptClass::Unknown
    }
}

/// True iff the sentence contains a replacement character or a control
/// character other than tab. Unpaired surrogates cannot reach this point:
/// the UTF-8 decode at the I/O boundary already rejects them.
pub fn has_invalid_unicode(sentence: &Sentence) -> bool {
    sentence
        .raw()
        .chars()
        .any(|c| c == '\u{FFFD}' || (c.is_control() && c != '\t'))
}

/// True iff any codepoint is an ASCII letter. Applied to the Chinese side of
/// En-Zh data.
pub fn zh_contains_latin(sentence: &Sentence) -> bool {
    sentence
        .tokens()
        .iter()
        .any(|t| t.chars().any(|c| c.is_ascii_alphabetic()))
}

fn script_matches(expected: ScriptClass, detected: ScriptClass) -> bool {
    // kanji-only Japanese sentences detect as Han; accept them
    expected == detected || (expected == ScriptClass::Japanese && detected == ScriptClass::Han)
}

/// Evaluates every enabled per-pair rule and reports all violations.
/// `index` is the zero-based line number, used by detector backends and
/// rejection reports. Deduplication is corpus-level and lives in
/// [`filter_corpus`].
pub fn filter_pair(
    pair: &ParallelPair,
    rules: &FilterRuleSet,
    detector: &dyn LanguageDetector,
    index: usize,
) -> Verdict {
    let mut reasons = Vec::new();

    if pair.source.len() > rules.max_len_words || pair.target.len() > rules.max_len_words {
        reasons.push(RuleId::MaxLen);
    }

    let too_long_word = |s: &Sentence| {
        s.tokens()
            .iter()
            .any(|t| t.chars().count() > rules.max_word_chars)
    };
    if too_long_word(&pair.source) || too_long_word(&pair.target) {
        reasons.push(RuleId::MaxWordChars);
    }

    let (a, b) = (pair.source.len(), pair.target.len());
    let ratio_violated = match (a.min(b), a.max(b)) {
        (0, 0) => false,
        (0, _) => true,
        (lo, hi) => hi as f64 / lo as f64 > rules.ratio_limit,
    };
    if ratio_violated {
        reasons.push(RuleId::Ratio);
    }

    if rules.langid_check {
        let mut mismatch = false;
        let mut failed = false;
        for (side, sentence, expected) in [
            (Side::Source, &pair.source, rules.source_script),
            (Side::Target, &pair.target, rules.target_script),
        ] {
            let Some(expected) = expected else { continue };
            match detector.detect(index, side, sentence) {
                Some(detected) if script_matches(expected, detected) => {}
                Some(_) => mismatch = true,
                None => failed = true,
            }
        }
        if mismatch {
            reasons.push(RuleId::LangIdMismatch);
        }
        if failed {
            reasons.push(RuleId::LangIdError);
        }
    }

    if rules.unicode_check && (has_invalid_unicode(&pair.source) || has_invalid_unicode(&pair.target))
    {
        reasons.push(RuleId::InvalidUnicode);
    }

    if rules.zh_reject_latin && zh_contains_latin(&pair.target) {
        reasons.push(RuleId::ZhLatin);
    }

    Verdict::from_reasons(reasons)
}

/// A rejected pair with its position and full verdict.
#[derive(Debug, Clone)]
pub struct RejectedPair {
    /// Zero-based position in the input.
    pub index: usize,
    pub pair: ParallelPair,
    pub verdict: Verdict,
}

/// Result of a corpus pass; `kept` and `rejected` partition the input in
/// input order.
#[derive(Debug, Clone, Default)]
pub struct FilterOutcome {
    pub kept: Vec<ParallelPair>,
    pub rejected: Vec<RejectedPair>,
}

fn dedup_key(pair: &ParallelPair) -> (String, String) {
    let normalize = |s: &Sentence| s.raw().split_whitespace().collect::<Vec<_>>().join(" ");
    (normalize(&pair.source), normalize(&pair.target))
}

/// Runs all rules over the corpus. Deduplication keeps the first occurrence
/// of each pair, comparing sides after trimming and collapsing internal
/// whitespace.
pub fn filter_corpus(
    pairs: &[ParallelPair],
    rules: &FilterRuleSet,
    detector: &dyn LanguageDetector,
) -> FilterOutcome {
    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut outcome = FilterOutcome::default();
    for (index, pair) in pairs.iter().enumerate() {
        let mut verdict = filter_pair(pair, rules, detector, index);
        if rules.dedup && !seen.insert(dedup_key(pair)) {
            verdict.reasons.push(RuleId::Duplicate);
            verdict.kept = false;
        }
        if verdict.kept {
            outcome.kept.push(pair.clone());
        } else {
            outcome.rejected.push(RejectedPair {
                index,
                pair: pair.clone(),
                verdict,
            });
        }
    }
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{tokenize, TokenizeMode};

    fn wpair(source: &str, target: &str) -> ParallelPair {
        ParallelPair {
            source: tokenize(source, TokenizeMode::Word),
            target: tokenize(target, TokenizeMode::Word),
        }
    }

    fn zh_pair(source: &str, target: &str) -> ParallelPair {
        ParallelPair {
            source: tokenize(source, TokenizeMode::Word),
            target: tokenize(target, TokenizeMode::Char),
        }
    }

    fn en_zh_rules() -> FilterRuleSet {
        FilterRuleSet::for_lang_pair("en-zh".parse().unwrap())
    }

    #[test]
    fn long_source_is_rejected() {
        let source = vec!["word"; 101].join(" ");
        let verdict = filter_pair(
            &zh_pair(&source, &"好".repeat(30)),
            &en_zh_rules(),
            &ScriptDetector,
            0,
        );
        assert_eq!(verdict.reasons, vec![RuleId::MaxLen]);
    }

    #[test]
    fn ratio_five_to_one_is_rejected() {
        let source = vec!["word"; 50].join(" ");
        let verdict = filter_pair(
            &zh_pair(&source, &"好".repeat(10)),
            &en_zh_rules(),
            &ScriptDetector,
            0,
        );
        assert_eq!(verdict.reasons, vec![RuleId::Ratio]);
        // exactly 4:1 is allowed
        let source = vec!["word"; 40].join(" ");
        let verdict = filter_pair(
            &zh_pair(&source, &"好".repeat(10)),
            &en_zh_rules(),
            &ScriptDetector,
            0,
        );
        assert!(verdict.kept);
    }

    #[test]
    fn clean_pair_is_kept() {
        let verdict = filter_pair(
            &zh_pair("the weather is nice", "天气很好"),
            &en_zh_rules(),
            &ScriptDetector,
            0,
        );
        assert!(verdict.kept);
        assert!(verdict.reasons.is_empty());
    }

    #[test]
    fn all_violations_are_reported() {
        // latin target: both a script mismatch and the zh-latin rule
        let verdict = filter_pair(
            &zh_pair("the weather is nice", "hello"),
            &en_zh_rules(),
            &ScriptDetector,
            0,
        );
        assert_eq!(
            verdict.reasons,
            vec![RuleId::LangIdMismatch, RuleId::ZhLatin]
        );
    }

    #[test]
    fn detector_failure_has_its_own_reason() {
        let detector = PredictionsDetector::new(vec![], vec![]);
        let verdict = filter_pair(
            &zh_pair("the weather is nice", "天气很好"),
            &en_zh_rules(),
            &detector,
            0,
        );
        assert_eq!(verdict.reasons, vec![RuleId::LangIdError]);
    }

    #[test]
    fn script_detection() {
        let detect = |t: &str, mode| detect_language_script(&tokenize(t, mode));
        assert_eq!(detect("hello world", TokenizeMode::Word), ScriptClass::Latin);
        assert_eq!(detect("天气很好", TokenizeMode::Char), ScriptClass::Han);
        assert_eq!(
            detect("今日はいい天気", TokenizeMode::Char),
            ScriptClass::Japanese
        );
        // 50/50 latin/han stays below the majority threshold
        assert_eq!(detect("ab 天气", TokenizeMode::Char), ScriptClass::Unknown);
        assert_eq!(detect("", TokenizeMode::Word), ScriptClass::Unknown);
        assert_eq!(detect("123 !!", TokenizeMode::Word), ScriptClass::Unknown);
    }

    #[test]
    fn invalid_unicode_detection() {
        let check = |t: &str| has_invalid_unicode(&tokenize(t, TokenizeMode::Word));
        assert!(!check("abc"));
        assert!(check("ab\u{FFFD}c"));
        assert!(check("ab\u{7}c"));
        assert!(!check("tab\tis fine"));
    }

    #[test]
    fn zh_latin_detection() {
        let check = |t: &str| zh_contains_latin(&tokenize(t, TokenizeMode::Char));
        assert!(!check("天气很好"));
        assert!(check("我的iPhone很好"));
        assert!(!check(""));
    }

    #[test]
    fn duplicates_keep_first_occurrence() {
        let pairs = vec![
            wpair("good morning", "guten Morgen"),
            wpair("good  morning", " guten Morgen "),
        ];
        let rules = FilterRuleSet {
            langid_check: false,
            ..FilterRuleSet::default()
        };
        let outcome = filter_corpus(&pairs, &rules, &ScriptDetector);
        assert_eq!(outcome.kept.len(), 1);
        assert_eq!(outcome.rejected.len(), 1);
        assert_eq!(outcome.rejected[0].index, 1);
        assert_eq!(outcome.rejected[0].verdict.reasons, vec![RuleId::Duplicate]);
    }

    #[test]
    fn empty_corpus() {
        let outcome = filter_corpus(&[], &FilterRuleSet::default(), &ScriptDetector);
        assert!(outcome.kept.is_empty() && outcome.rejected.is_empty());
    }

    #[test]
    fn rule_ids_serialize_like_display() {
        for rule in [
            RuleId::MaxLen,
            RuleId::MaxWordChars,
            RuleId::Ratio,
            RuleId::Duplicate,
            RuleId::LangIdMismatch,
            RuleId::LangIdError,
            RuleId::InvalidUnicode,
            RuleId::ZhLatin,
        ] {
            let json = serde_json::to_value(rule).unwrap();
            assert_eq!(json, serde_json::Value::String(rule.to_string()));
        }
    }

    #[test]
    fn filtering_partitions_input_and_is_dedup_idempotent() {
        let pairs = vec![
            wpair("one two", "eins zwei"),
            wpair("one two", "eins zwei"),
            wpair("three", "drei"),
            wpair(&vec!["w"; 101].join(" "), "zu lang"),
        ];
        let rules = FilterRuleSet {
            langid_check: false,
            ..FilterRuleSet::default()
        };
        let outcome = filter_corpus(&pairs, &rules, &ScriptDetector);
        assert_eq!(outcome.kept.len() + outcome.rejected.len(), pairs.len());
        // a second pass over the kept pairs rejects nothing
        let again = filter_corpus(&outcome.kept, &rules, &ScriptDetector);
        assert!(again.rejected.is_empty());
    }
}

pub mod bleu;
pub mod bpe;
pub mod ensemble;
pub mod filter;
pub mod kernel;
pub mod noise;
pub mod schedule;
pub mod selfbleu;

use mtkit_core::filtering::LangPair;
use mtkit_core::text::TokenizeMode;

use crate::errors::{usage, CliError};

/// Resolves the tokenization mode for translation/hypothesis files: an
/// explicit --mode wins, otherwise zh/ja targets of --lang-pair use char
/// tokens, otherwise word.
pub fn resolve_mode(
    mode: &Option<String>,
    lang_pair: &Option<String>,
) -> Result<TokenizeMode, CliError> {
    if let Some(mode) = mode {
        return mode.parse().map_err(usage);
    }
    if let Some(pair) = lang_pair {
        let pair: LangPair = pair.parse().map_err(usage)?;
        if pair.target.char_mode() {
            return Ok(TokenizeMode::Char);
        }
    }
    Ok(TokenizeMode::Word)
}

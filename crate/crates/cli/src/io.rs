//! Line-based corpus I/O. Inputs are UTF-8 with LF line endings; invalid
//! UTF-8 is a data error reported with its line number.

use std::path::Path;

use mtkit_core::text::{tokenize, ParallelPair, Sentence, TokenizeMode};

use crate::errors::{data, CliError};

pub fn read_lines(path: &Path) -> Result<Vec<String>, CliError> {
    let bytes = std::fs::read(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
    let mut lines = Vec::new();
    for (i, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        let line = std::str::from_utf8(raw).map_err(|e| {
            data(format!("{} line {}: invalid UTF-8 ({e})", path.display(), i + 1))
        })?;
        lines.push(line.to_string());
    }
    // files end with a trailing newline; drop the phantom final entry
    if lines.last().is_some_and(String::is_empty) {
        lines.pop();
    }
    Ok(lines)
}

pub fn read_sentences(path: &Path, mode: TokenizeMode) -> Result<Vec<Sentence>, CliError> {
    Ok(read_lines(path)?
        .iter()
        .map(|line| tokenize(line, mode))
        .collect())
}

/// Reads "source TAB target" pairs, tokenizing each side in its own mode.
pub fn read_tsv_pairs(
    path: &Path,
    source_mode: TokenizeMode,
    target_mode: TokenizeMode,
) -> Result<Vec<ParallelPair>, CliError> {
    read_lines(path)?
        .iter()
        .enumerate()
        .map(|(i, line)| {
            let (src, tgt) = line.split_once('\t').ok_or_else(|| {
                data(format!("{} line {}: expected source TAB target", path.display(), i + 1))
            })?;
            Ok(ParallelPair {
                source: tokenize(src, source_mode),
                target: tokenize(tgt, target_mode),
            })
        })
        .collect()
}

pub fn write_text(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(|e| data(format!("{}: {e}", path.display())))
}

pub fn write_lines(path: &Path, lines: &[String]) -> Result<(), CliError> {
    let mut out = lines.join("\n");
    if !out.is_empty() {
        out.push('\n');
    }
    write_text(path, &out)
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mtkit_core::metrics::{
    avg_self_bleu, self_bleu_matrix, self_bleu_matrix_serial, self_bleu_multiref,
    ModelTranslations, SelfBleuMatrix,
};

use super::resolve_mode;
use crate::errors::{data, usage, CliError};
use crate::io::read_sentences;
use crate::report::Report;
use crate::SelfBleuArgs;

#[derive(Debug, Deserialize)]
struct Manifest {
    models: Vec<ManifestModel>,
}

#[derive(Debug, Deserialize)]
struct ManifestModel {
    id: String,
    file: PathBuf,
}

#[derive(Serialize)]
struct SelfBleuResult {
    matrix: SelfBleuMatrix,
    average_self_bleu: Vec<ModelAverage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    multiref_self_bleu: Option<Vec<ModelAverage>>,
}

#[derive(Serialize)]
struct ModelAverage {
    id: String,
    score: f64,
}

/// Paths in a manifest are resolved relative to the manifest's directory.
pub fn manifest_relative(manifest: &Path, file: &Path) -> PathBuf {
    if file.is_absolute() {
        file.to_path_buf()
    } else {
        manifest.parent().unwrap_or(Path::new(".")).join(file)
    }
}

pub fn run(args: SelfBleuArgs) -> Result<Report, CliError> {
    let mode = resolve_mode(&args.mode, &args.lang_pair)?;
    let manifest_text = std::fs::read_to_string(&args.manifest)
        .map_err(|e| data(format!("{}: {e}", args.manifest.display())))?;
    let manifest: Manifest = serde_json::from_str(&manifest_text)
        .map_err(|e| data(format!("{}: {e}", args.manifest.display())))?;
    if manifest.models.len() < 2 {
        return Err(usage("self-BLEU needs at least two models in the manifest"));
    }

    let mut models = Vec::new();
    for entry in &manifest.models {
        let path = manifest_relative(&args.manifest, &entry.file);
        models.push(ModelTranslations {
            id: entry.id.clone(),
            sentences: read_sentences(&path, mode)?,
        });
    }

    let matrix = if args.serial {
        self_bleu_matrix_serial(&models)
    } else {
        self_bleu_matrix(&models)
    }
    .map_err(data)?;

    let averages = avg_self_bleu(&matrix)
        .into_iter()
        .zip(&models)
        .map(|(score, m)| ModelAverage {
            id: m.id.clone(),
            score,
        })
        .collect();
    let multiref = if args.multiref {
        let mut scores = Vec::new();
        for i in 0..models.len() {
            scores.push(ModelAverage {
                id: models[i].id.clone(),
                score: self_bleu_multiref(&models, i).map_err(data)?,
            });
        }
        Some(scores)
    } else {
        None
    };

    Ok(Report::new(
        "selfbleu",
        0,
        &args,
        SelfBleuResult {
            matrix,
            average_self_bleu: averages,
            multiref_self_bleu: multiref,
        },
    ))
}

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::corpus::Trait;
use crate::error::{Error, Result};
use crate::fsio;
use crate::pdfmodel::{BinningScheme, PdfPersonalityModel, PdfPrediction, WordPdf};

pub const PDF_MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    #[serde(rename = "trait")]
    trait_: Trait,
    binning: BinningScheme,
    g: Vec<u64>,
    min_word_freq: u64,
    smoothing_alpha: f64,
    pdfs: BTreeMap<String, PdfEntry>,
}

#[derive(Serialize, Deserialize)]
struct PdfEntry {
    raw_counts: Vec<u64>,
    mass: Vec<f64>,
}

fn checksum(payload: &Value) -> String {
    // serde_json maps are key-sorted, so this rendering is canonical
    let canonical = payload.to_string();
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Renders the versioned, checksummed JSON document for `model`.
pub fn model_to_json(model: &PdfPersonalityModel) -> Result<String> {
    let file = ModelFile {
        version: PDF_MODEL_FORMAT_VERSION,
        trait_: model.trait_,
        binning: model.binning,
        g: model.g.clone(),
        min_word_freq: model.min_word_freq,
        smoothing_alpha: model.smoothing_alpha,
        pdfs: model
            .pdfs
            .iter()
            .map(|(w, p)| {
                (
                    w.clone(),
                    PdfEntry {
                        raw_counts: p.raw_counts.clone(),
                        mass: p.mass.clone(),
                    },
                )
            })
            .collect(),
    };
    let mut value = serde_json::to_value(&file)?;
    let sum = checksum(&value);
    value
        .as_object_mut()
        .expect("model file is an object")
        .insert("checksum".into(), Value::String(sum));
    Ok(serde_json::to_string(&value)? + "\n")
}

/// Parses and verifies a document produced by [`model_to_json`].
/// `origin` only labels error messages.
pub fn model_from_json(text: &str, origin: &Path) -> Result<PdfPersonalityModel> {
    let integrity = |detail: String| Error::Checksum {
        path: origin.to_path_buf(),
        detail,
    };
    let mut value: Value = serde_json::from_str(text).map_err(|e| integrity(format!("unreadable content ({e})")))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| integrity("top level is not an object".into()))?;

    match obj.get("version") {
        Some(Value::Number(n)) if n.as_u64() == Some(u64::from(PDF_MODEL_FORMAT_VERSION)) => {}
        other => {
            return Err(Error::VersionMismatch {
                expected: PDF_MODEL_FORMAT_VERSION,
                found: other.map(|v| v.to_string()).unwrap_or_else(|| "none".into()),
            })
        }
    }
    let stored = match obj.remove("checksum") {
        Some(Value::String(s)) => s,
        _ => return Err(integrity("missing checksum".into())),
    };
    let actual = checksum(&value);
    if stored != actual {
        return Err(integrity(format!("expected {stored}, content hashes to {actual}")));
    }

    let file: ModelFile = serde_json::from_value(value)?;
    let pdfs = file
        .pdfs
        .into_iter()
        .map(|(w, e)| {
            (
                w.clone(),
                WordPdf {
                    word: w,
                    raw_counts: e.raw_counts,
                    mass: e.mass,
                },
            )
        })
        .collect();
    PdfPersonalityModel::from_parts(
        file.trait_,
        file.binning,
        file.g,
        pdfs,
        file.min_word_freq,
        file.smoothing_alpha,
    )
}

pub fn serialize_model(model: &PdfPersonalityModel, path: &Path) -> Result<()> {
    fsio::write_atomic(path, model_to_json(model)?.as_bytes())
}

pub fn load_model(path: &Path) -> Result<PdfPersonalityModel> {
    model_from_json(&fsio::read_to_string(path)?, path)
}

/// `sample_id,label,confidence,words_used` rows.
pub fn predictions_csv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a PdfPrediction)>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["sample_id", "label", "confidence", "words_used"])?;
    for (id, p) in rows {
        w.write_record([
            id.to_string(),
            format!("{:.2}", p.label),
            format!("{:.6}", p.confidence),
            p.words_used.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

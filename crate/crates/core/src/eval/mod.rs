//! Error metrics, splits, cross-validation and reports.

mod confusion;
mod curve;
mod split;

pub use confusion::ConfusionMatrix;
pub use curve::{confidence_curve, curve_csv, default_thresholds, CurvePoint};
pub use split::{cross_validate, kfold, kfold_indices, split_indices, train_test_split, CvResult};

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusStore, FilterPolicy, Trait};
use crate::error::{Error, Result};
use crate::pdfmodel::{self, BinningScheme, PdfPersonalityModel};

pub const DEFAULT_MARGIN: f64 = 0.10;

fn check_pair(pred: &[f64], truth: &[f64]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} truth values",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::invalid("no predictions to evaluate"));
    }
    Ok(())
}

/// Mean absolute error.
pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred, truth)?;
    Ok(pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64)
}

/// Root mean squared error.
pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred, truth)?;
    let mse = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64;
    Ok(mse.sqrt())
}

/// Share of predictions with `|p - t| <= margin`. A tiny slack absorbs
/// decimal representation error so that 0.6 vs 0.5 counts at margin 0.1.
pub fn marginal_accuracy(pred: &[f64], truth: &[f64], margin: f64) -> Result<f64> {
    check_pair(pred, truth)?;
    let slack = 1e-12;
    let hits = pred
        .iter()
        .zip(truth)
        .filter(|(p, t)| (*p - *t).abs() <= margin + slack)
        .count();
    Ok(hits as f64 / pred.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mae: f64,
    pub rmse: f64,
    pub marginal_accuracy: f64,
    pub margin: f64,
    pub n: usize,
}

impl EvalReport {
    pub fn compute(pred: &[f64], truth: &[f64], margin: f64) -> Result<Self> {
        Ok(Self {
            mae: mae(pred, truth)?,
            rmse: rmse(pred, truth)?,
            marginal_accuracy: marginal_accuracy(pred, truth, margin)?,
            margin,
            n: pred.len(),
        })
    }

    /// `metric,value` rows.
    pub fn to_csv(&self) -> String {
        format!(
            "metric,value\nmae,{}\nrmse,{}\nmarginal_accuracy,{}\nmargin,{}\nn,{}\n",
            self.mae, self.rmse, self.marginal_accuracy, self.margin, self.n
        )
    }
}

/// Percentage of scored samples in each of `n_bins` equal bins over [0, 1].
pub fn score_distribution(store: &CorpusStore, trait_: Trait, n_bins: usize) -> Result<Vec<f64>> {
    let binning = BinningScheme::new(0.0, 1.0, n_bins)?;
    let mut counts = vec![0u64; n_bins];
    let mut n = 0u64;
    for s in store.samples() {
        if let Some(k) = s.score(trait_).and_then(|v| binning.bin_index(v)) {
            counts[k] += 1;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::invalid(format!("no samples scored for trait {trait_}")));
    }
    Ok(counts.iter().map(|&c| 100.0 * c as f64 / n as f64).collect())
}

/// `bin_lo,bin_hi,percent` rows for [`score_distribution`] output.
pub fn distribution_csv(percentages: &[f64]) -> String {
    let n = percentages.len() as f64;
    let mut out = String::from("bin_lo,bin_hi,percent\n");
    for (k, p) in percentages.iter().enumerate() {
        out.push_str(&format!("{:.2},{:.2},{:.4}\n", k as f64 / n, (k + 1) as f64 / n, p));
    }
    out
}

/// One scored sample in a pdf-model evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdfEvalRow {
    pub sample_id: String,
    pub label: f64,
    pub truth: f64,
    pub confidence: f64,
    pub words_used: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdfEvaluation {
    pub rows: Vec<PdfEvalRow>,
    /// `(sample_id, reason)` for samples that produced no prediction.
    pub skipped: Vec<(String, String)>,
    pub report: EvalReport,
    pub curve: Vec<CurvePoint>,
}

impl PdfEvaluation {
    /// `sample_id,label,truth,confidence,words_used`.
    pub fn rows_csv(&self) -> String {
        let mut out = String::from("sample_id,label,truth,confidence,words_used\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.2},{},{:.6},{}\n",
                r.sample_id, r.label, r.truth, r.confidence, r.words_used
            ));
        }
        out
    }
}

/// Predicts every sample of `store` scored for the model's trait and
/// compares the bin midpoint with the true score. Samples failing `policy`
/// or carrying no informative word are skipped and listed.
pub fn evaluate_pdf(
    model: &PdfPersonalityModel,
    store: &CorpusStore,
    policy: &FilterPolicy,
    margin: f64,
    thresholds: &[f64],
) -> Result<PdfEvaluation> {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for s in store.samples() {
        let Some(truth) = s.score(model.trait_()) else { continue };
        match pdfmodel::predict(model, s, policy) {
            Ok(p) => rows.push(PdfEvalRow {
                sample_id: s.id.clone(),
                label: p.label,
                truth,
                confidence: p.confidence,
                words_used: p.words_used,
            }),
            Err(e @ (Error::Rejected { .. } | Error::NoInformativeMass)) => skipped.push((s.id.clone(), e.to_string())),
            Err(e) => return Err(e),
        }
    }
    let pred: Vec<f64> = rows.iter().map(|r| r.label).collect();
    let truth: Vec<f64> = rows.iter().map(|r| r.truth).collect();
    let report = EvalReport::compute(&pred, &truth, margin)?;
    let triples: Vec<(f64, f64, f64)> = rows.iter().map(|r| (r.label, r.truth, r.confidence)).collect();
    let curve = confidence_curve(&triples, thresholds);
    Ok(PdfEvaluation {
        rows,
        skipped,
        report,
        curve,
    })
}

//! Per-word binned score densities and their aggregation into a posterior
//! over score bins for a whole text.
//!
//! For a trait, every contributing sample adds its full per-word counts to
//! the bin holding its score. Dividing by the number of samples per bin
//! (`g`) and renormalizing turns each word's histogram into a probability
//! mass vector. A new text's posterior is the normalized product of the
//! mass vectors of the words it uses, each repeated once per occurrence.

mod binning;
mod io;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{filter_sample, CorpusStore, FilterOutcome, FilterPolicy, TextSample, Trait};
use crate::error::{Error, Result};

pub use binning::BinningScheme;
pub use io::{load_model, model_from_json, model_to_json, predictions_csv, serialize_model, PDF_MODEL_FORMAT_VERSION};

/// Tolerance on `Σ phi = 1` accepted by [`confidence`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// Upper end of the confidence scale.
pub const MAX_CONFIDENCE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordPdf {
    pub word: String,
    pub raw_counts: Vec<u64>,
    pub mass: Vec<f64>,
}

impl WordPdf {
    pub fn total_count(&self) -> u64 {
        self.raw_counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdfPersonalityModel {
    pub(crate) trait_: Trait,
    pub(crate) binning: BinningScheme,
    pub(crate) g: Vec<u64>,
    pub(crate) pdfs: BTreeMap<String, WordPdf>,
    pub(crate) min_word_freq: u64,
    pub(crate) smoothing_alpha: f64,
}

impl PdfPersonalityModel {
    pub fn trait_(&self) -> Trait {
        self.trait_
    }

    pub fn binning(&self) -> &BinningScheme {
        &self.binning
    }

    /// Number of contributing samples per bin.
    pub fn g(&self) -> &[u64] {
        &self.g
    }

    pub fn pdfs(&self) -> &BTreeMap<String, WordPdf> {
        &self.pdfs
    }

    pub fn pdf(&self, word: &str) -> Option<&WordPdf> {
        self.pdfs.get(word)
    }

    pub fn min_word_freq(&self) -> u64 {
        self.min_word_freq
    }

    pub fn smoothing_alpha(&self) -> f64 {
        self.smoothing_alpha
    }

    pub fn n_samples(&self) -> u64 {
        self.g.iter().sum()
    }

    /// Assembles a model from precomputed parts, checking every invariant.
    pub fn from_parts(
        trait_: Trait,
        binning: BinningScheme,
        g: Vec<u64>,
        pdfs: BTreeMap<String, WordPdf>,
        min_word_freq: u64,
        smoothing_alpha: f64,
    ) -> Result<Self> {
        let model = Self {
            trait_,
            binning,
            g,
            pdfs,
            min_word_freq,
            smoothing_alpha,
        };
        model.validate()?;
        Ok(model)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let n = self.binning.n_bins();
        if self.g.len() != n {
            return Err(Error::invalid(format!("g has {} entries for {n} bins", self.g.len())));
        }
        let empty: Vec<usize> = (0..n).filter(|&k| self.g[k] == 0).collect();
        if !empty.is_empty() {
            return Err(Error::EmptyBins(empty));
        }
        if !(self.smoothing_alpha >= 0.0 && self.smoothing_alpha.is_finite()) {
            return Err(Error::invalid("smoothing_alpha must be a finite value >= 0"));
        }
        for (word, pdf) in &self.pdfs {
            if pdf.word != *word || pdf.raw_counts.len() != n || pdf.mass.len() != n {
                return Err(Error::invalid(format!("malformed pdf for {word:?}")));
            }
            if pdf.total_count() < self.min_word_freq {
                return Err(Error::invalid(format!(
                    "word {word:?} has {} occurrences, below min_word_freq {}",
                    pdf.total_count(),
                    self.min_word_freq
                )));
            }
            let sum: f64 = pdf.mass.iter().sum();
            if pdf.mass.iter().any(|&m| !(m >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("mass of {word:?} is not a distribution")));
            }
        }
        Ok(())
    }
}

/// Builds the per-word mass vectors for `trait_` from scored samples.
///
/// Samples without a score for the trait, or with a score outside
/// `[binning.lo, binning.hi]`, do not contribute. Words whose summed count
/// is below `min_word_freq` are dropped.
pub fn build_model(
    store: &CorpusStore,
    trait_: Trait,
    binning: BinningScheme,
    min_word_freq: u64,
    smoothing_alpha: f64,
) -> Result<PdfPersonalityModel> {
    if store.is_empty() {
        return Err(Error::invalid("cannot build a model from an empty store"));
    }
    if !(smoothing_alpha >= 0.0 && smoothing_alpha.is_finite()) {
        return Err(Error::invalid("smoothing_alpha must be a finite value >= 0"));
    }
    let n = binning.n_bins();
    let mut g = vec![0u64; n];
    let mut counts: BTreeMap<&str, Vec<u64>> = BTreeMap::new();

    for sample in store.samples() {
        let Some(k) = sample.score(trait_).and_then(|s| binning.bin_index(s)) else {
            continue;
        };
        g[k] += 1;
        for (word, &x) in &sample.adj_freqs {
            counts.entry(word.as_str()).or_insert_with(|| vec![0; n])[k] += u64::from(x);
        }
    }

    let empty: Vec<usize> = (0..n).filter(|&k| g[k] == 0).collect();
    if !empty.is_empty() {
        return Err(Error::EmptyBins(empty));
    }

    let pdfs = counts
        .into_iter()
        .filter(|(_, c)| c.iter().sum::<u64>() >= min_word_freq)
        .map(|(word, raw_counts)| {
            let mass = normalized_mass(&raw_counts, &g, smoothing_alpha);
            (
                word.to_string(),
                WordPdf {
                    word: word.to_string(),
                    raw_counts,
                    mass,
                },
            )
        })
        .collect();

    Ok(PdfPersonalityModel {
        trait_,
        binning,
        g,
        pdfs,
        min_word_freq,
        smoothing_alpha,
    })
}

fn normalized_mass(raw: &[u64], g: &[u64], alpha: f64) -> Vec<f64> {
    let scaled: Vec<f64> = raw
        .iter()
        .zip(g)
        .map(|(&c, &gk)| (c as f64 + alpha) / gk as f64)
        .collect();
    let total: f64 = scaled.iter().sum();
    scaled.into_iter().map(|v| v / total).collect()
}

/// Outcome of combining a text's word densities.
#[derive(Debug, Clone, PartialEq)]
pub enum Aggregation {
    /// Normalized posterior over bins. `words_used` counts repeats.
    Informative { phi: Vec<f64>, words_used: u64 },
    /// The product vanished in every bin.
    Degenerate { words_used: u64 },
}

impl Aggregation {
    pub fn words_used(&self) -> u64 {
        match self {
            Aggregation::Informative { words_used, .. } | Aggregation::Degenerate { words_used } => *words_used,
        }
    }

    pub fn phi(&self) -> Option<&[f64]> {
        match self {
            Aggregation::Informative { phi, .. } => Some(phi),
            Aggregation::Degenerate { .. } => None,
        }
    }
}

/// Normalized product of the mass vectors of the words in `adj_freqs`,
/// each raised to its count. Computed as a sum of logs and exp-normalized.
/// Words unknown to the model are ignored; no matches gives a uniform vector.
pub fn aggregate(model: &PdfPersonalityModel, adj_freqs: &BTreeMap<String, u32>) -> Aggregation {
    let n = model.binning.n_bins();
    let mut log_phi = vec![0.0f64; n];
    let mut words_used = 0u64;

    for (word, &count) in adj_freqs {
        let Some(pdf) = model.pdfs.get(word) else {
            continue;
        };
        if count == 0 {
            continue;
        }
        words_used += u64::from(count);
        let reps = f64::from(count);
        for (acc, &m) in log_phi.iter_mut().zip(&pdf.mass) {
            *acc += if m > 0.0 { reps * m.ln() } else { f64::NEG_INFINITY };
        }
    }

    let max = log_phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Aggregation::Degenerate { words_used };
    }
    let mut phi: Vec<f64> = log_phi.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = phi.iter().sum();
    for p in &mut phi {
        *p /= total;
    }
    Aggregation::Informative { phi, words_used }
}

/// Base-10 log ratio of the largest to the second-largest entry of `phi`,
/// clamped to `[0, 10]`; a zero runner-up gives 10.
pub fn confidence(phi: &[f64]) -> Result<f64> {
    if phi.len() < 2 {
        return Err(Error::invalid("confidence needs at least two bins"));
    }
    if phi.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(Error::invalid("confidence input has negative or non-finite entries"));
    }
    let sum: f64 = phi.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::invalid(format!("confidence input sums to {sum}, not 1")));
    }
    let (mut p1, mut p2) = (0.0f64, 0.0f64);
    for &p in phi {
        if p > p1 {
            p2 = p1;
            p1 = p;
        } else if p > p2 {
            p2 = p;
        }
    }
    if p2 == 0.0 {
        return Ok(MAX_CONFIDENCE);
    }
    Ok((p1 / p2).log10().clamp(0.0, MAX_CONFIDENCE))
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdfPrediction {
    pub phi: Vec<f64>,
    pub bin: usize,
    pub label: f64,
    pub confidence: f64,
    pub words_used: u64,
}

/// Predicts from raw adjective counts, without any sample filter.
pub fn predict_freqs(model: &PdfPersonalityModel, adj_freqs: &BTreeMap<String, u32>) -> Result<PdfPrediction> {
    match aggregate(model, adj_freqs) {
        Aggregation::Degenerate { .. } => Err(Error::NoInformativeMass),
        Aggregation::Informative { phi, words_used } => {
            let bin = argmax(&phi);
            let confidence = confidence(&phi)?;
            Ok(PdfPrediction {
                label: model.binning.label(bin),
                bin,
                confidence,
                words_used,
                phi,
            })
        }
    }
}

/// Predicts the trait bin of `sample`, which must pass `policy`
/// (normally [`FilterPolicy::pdf_stage`]).
pub fn predict(model: &PdfPersonalityModel, sample: &TextSample, policy: &FilterPolicy) -> Result<PdfPrediction> {
    if let FilterOutcome::Reject(reason) = filter_sample(sample, policy) {
        return Err(Error::Rejected {
            id: sample.id.clone(),
            rule: reason.code(),
        });
    }
    predict_freqs(model, &sample.adj_freqs)
}

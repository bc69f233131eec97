use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusStore, Trait};
use crate::error::{Error, Result};
use crate::fsio;
use crate::pdfmodel::BinningScheme;

/// Which label column a CSV dataset carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Class,
    Score,
}

/// Feature matrix (rows are samples) with class labels, score labels, or both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    feature_names: Vec<String>,
    x: Vec<Vec<f64>>,
    y_class: Option<Vec<usize>>,
    y_score: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        x: Vec<Vec<f64>>,
        y_class: Option<Vec<usize>>,
        y_score: Option<Vec<f64>>,
    ) -> Result<Self> {
        if y_class.is_none() && y_score.is_none() {
            return Err(Error::invalid("dataset needs class labels, score labels, or both"));
        }
        for (i, row) in x.iter().enumerate() {
            if row.len() != feature_names.len() {
                return Err(Error::invalid(format!(
                    "row {i} has {} values for {} features",
                    row.len(),
                    feature_names.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("row {i}, feature {j}: value is not finite")));
            }
        }
        if y_class.as_ref().is_some_and(|y| y.len() != x.len()) || y_score.as_ref().is_some_and(|y| y.len() != x.len()) {
            return Err(Error::invalid("label count differs from row count"));
        }
        Ok(Self {
            feature_names,
            x,
            y_class,
            y_score,
        })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i]
    }

    pub fn y_class(&self) -> Option<&[usize]> {
        self.y_class.as_deref()
    }

    pub fn y_score(&self) -> Option<&[f64]> {
        self.y_score.as_deref()
    }

    pub fn n_rows(&self) -> usize {
        self.x.len()
    }

    pub fn n_cols(&self) -> usize {
        self.feature_names.len()
    }

    /// `max(y_class) + 1`, or 0 without class labels.
    pub fn n_classes(&self) -> usize {
        self.y_class
            .as_ref()
            .and_then(|y| y.iter().max())
            .map_or(0, |m| m + 1)
    }

    pub fn with_class_labels(mut self, y: Vec<usize>) -> Result<Self> {
        if y.len() != self.x.len() {
            return Err(Error::invalid("label count differs from row count"));
        }
        self.y_class = Some(y);
        Ok(self)
    }

    /// Copy without score labels, or `None` when there are no class labels.
    pub fn class_only(&self) -> Option<Self> {
        self.y_class.as_ref()?;
        Some(Self {
            y_score: None,
            ..self.clone()
        })
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            feature_names: self.feature_names.clone(),
            x: rows.iter().map(|&i| self.x[i].clone()).collect(),
            y_class: self.y_class.as_ref().map(|y| rows.iter().map(|&i| y[i]).collect()),
            y_score: self.y_score.as_ref().map(|y| rows.iter().map(|&i| y[i]).collect()),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self {
            feature_names: cols.iter().map(|&j| self.feature_names[j].clone()).collect(),
            x: self.x.iter().map(|r| cols.iter().map(|&j| r[j]).collect()).collect(),
            y_class: self.y_class.clone(),
            y_score: self.y_score.clone(),
        }
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_cols()];
        for row in &self.x {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }

    /// Adjective-count features for every sample scored inside `binning`.
    /// Columns are the store's adjectives in lexical order; labels are the
    /// bin index and the raw score.
    pub fn from_store(store: &CorpusStore, trait_: Trait, binning: &BinningScheme) -> Result<Self> {
        let names: Vec<String> = store.adjectives().keys().cloned().collect();
        let mut x = Vec::new();
        let mut y_class = Vec::new();
        let mut y_score = Vec::new();
        for s in store.samples() {
            let Some(score) = s.score(trait_) else { continue };
            let Some(bin) = binning.bin_index(score) else { continue };
            x.push(
                names
                    .iter()
                    .map(|w| f64::from(*s.adj_freqs.get(w).unwrap_or(&0)))
                    .collect(),
            );
            y_class.push(bin);
            y_score.push(score);
        }
        if x.is_empty() {
            return Err(Error::invalid(format!("no samples scored for trait {trait_} inside the binning range")));
        }
        Self::new(names, x, Some(y_class), Some(y_score))
    }

    /// CSV with a header of feature names and a trailing `label` column.
    pub fn to_csv(&self, target: TargetKind) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = self.feature_names.clone();
        header.push("label".into());
        w.write_record(&header)?;
        for (i, row) in self.x.iter().enumerate() {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(match target {
                TargetKind::Class => self
                    .y_class
                    .as_ref()
                    .ok_or_else(|| Error::invalid("dataset has no class labels"))?[i]
                    .to_string(),
                TargetKind::Score => self
                    .y_score
                    .as_ref()
                    .ok_or_else(|| Error::invalid("dataset has no score labels"))?[i]
                    .to_string(),
            });
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str, target: TargetKind, source_name: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.last().map(String::as_str) != Some("label") {
            return Err(Error::Malformed {
                source_name: source_name.into(),
                line: 1,
                message: "last column must be `label`".into(),
            });
        }
        let names = header[..header.len() - 1].to_vec();
        let mut x = Vec::new();
        let mut y_class = Vec::new();
        let mut y_score = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let line = i + 2;
            let rec = rec?;
            let bad = |message: String| Error::Malformed {
                source_name: source_name.into(),
                line,
                message,
            };
            if rec.len() != header.len() {
                return Err(bad(format!("expected {} fields, found {}", header.len(), rec.len())));
            }
            let row = rec
                .iter()
                .take(names.len())
                .map(|v| v.trim().parse::<f64>().map_err(|e| bad(format!("{v:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            let label = rec[names.len()].trim();
            match target {
                TargetKind::Class => y_class.push(label.parse::<usize>().map_err(|e| bad(format!("label {label:?}: {e}")))?),
                TargetKind::Score => {
                    let v: f64 = label.parse().map_err(|e| bad(format!("label {label:?}: {e}")))?;
                    if !(0.0..=1.0).contains(&v) {
                        return Err(bad(format!("score label {v} outside [0, 1]")));
                    }
                    y_score.push(v)
                }
            }
            x.push(row);
        }
        match target {
            TargetKind::Class => Self::new(names, x, Some(y_class), None),
            TargetKind::Score => Self::new(names, x, None, Some(y_score)),
        }
    }

    pub fn read_csv(path: &Path, target: TargetKind) -> Result<Self> {
        Self::from_csv(&fsio::read_to_string(path)?, target, &path.display().to_string())
    }
}

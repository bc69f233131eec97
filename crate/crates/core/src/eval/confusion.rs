use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows are the correct label, columns the predicted one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new<S: AsRef<str>>(truth: &[S], pred: &[S], labels: &[String]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("confusion matrix needs at least one label"));
        }
        if truth.len() != pred.len() {
            return Err(Error::invalid(format!("{} truth values for {} predictions", truth.len(), pred.len())));
        }
        let index = |s: &str| {
            labels
                .iter()
                .position(|l| l == s)
                .ok_or_else(|| Error::UnknownLabel(s.to_string()))
        };
        let mut counts = vec![vec![0u64; labels.len()]; labels.len()];
        for (t, p) in truth.iter().zip(pred) {
            counts[index(t.as_ref())?][index(p.as_ref())?] += 1;
        }
        Ok(Self {
            labels: labels.to_vec(),
            counts,
        })
    }

    /// Same matrix from label indices.
    pub fn from_indices(truth: &[usize], pred: &[usize], labels: &[String]) -> Result<Self> {
        let name = |i: usize| {
            labels
                .get(i)
                .cloned()
                .ok_or_else(|| Error::UnknownLabel(i.to_string()))
        };
        let t = truth.iter().map(|&i| name(i)).collect::<Result<Vec<_>>>()?;
        let p = pred.iter().map(|&i| name(i)).collect::<Result<Vec<_>>>()?;
        Self::new(&t, &p, labels)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let diag: u64 = (0..self.labels.len()).map(|i| self.counts[i][i]).sum();
        diag as f64 / self.total().max(1) as f64
    }

    /// Header row of predicted labels, then one row per correct label.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["correct\\predicted".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (l, row) in self.labels.iter().zip(&self.counts) {
            let mut rec = vec![l.clone()];
            rec.extend(row.iter().map(u64::to_string));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

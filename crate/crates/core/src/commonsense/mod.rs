//! Answer prediction for multi-choice questions from 50-item Likert
//! questionnaire responses.

mod bank;
mod survey;

pub use bank::{
    predict_answer, train_all, train_question_model, ModelBank, QuestionModel, ReportRow, TrainAllOutput,
    BANK_FORMAT_VERSION, DEFAULT_MIN_ABS_R,
};
pub use survey::{read_survey_csv, survey_to_csv, Catalog, SurveyIngest, CATALOG_FORMAT_VERSION};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Questionnaire length.
pub const N_ITEMS: usize = 50;

/// One respondent's 50 Likert answers (1 = very inaccurate … 5 = very accurate).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawResponse")]
pub struct QuestionnaireResponse {
    respondent_id: String,
    answers: Vec<u8>,
}

#[derive(Deserialize)]
struct RawResponse {
    respondent_id: String,
    answers: Vec<u8>,
}

impl TryFrom<RawResponse> for QuestionnaireResponse {
    type Error = Error;

    fn try_from(r: RawResponse) -> Result<Self> {
        Self::new(r.respondent_id, r.answers)
    }
}

impl QuestionnaireResponse {
    pub fn new(respondent_id: impl Into<String>, answers: Vec<u8>) -> Result<Self> {
        let respondent_id = respondent_id.into();
        if answers.len() != N_ITEMS {
            return Err(Error::invalid(format!(
                "respondent {respondent_id:?}: expected {N_ITEMS} answers, got {}",
                answers.len()
            )));
        }
        if let Some(i) = answers.iter().position(|a| !(1..=5).contains(a)) {
            return Err(Error::invalid(format!(
                "respondent {respondent_id:?}: item q{} has Likert value {} outside 1..5",
                i + 1,
                answers[i]
            )));
        }
        Ok(Self { respondent_id, answers })
    }

    pub fn respondent_id(&self) -> &str {
        &self.respondent_id
    }

    pub fn answers(&self) -> &[u8] {
        &self.answers
    }

    pub fn features(&self) -> Vec<f64> {
        self.answers.iter().map(|&a| f64::from(a)).collect()
    }
}

/// Relabeling of a question's original answers onto merged labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionMap {
    pub labels: Vec<String>,
    /// `map[original] = fused`.
    pub map: Vec<usize>,
}

impl FusionMap {
    pub fn identity(labels: &[String]) -> Self {
        Self {
            labels: labels.to_vec(),
            map: (0..labels.len()).collect(),
        }
    }

    /// Total over `n_original` labels and onto `0..labels.len()`.
    pub fn validate(&self, n_original: usize) -> Result<()> {
        if self.map.len() != n_original {
            return Err(Error::invalid(format!(
                "fusion map covers {} of {n_original} answer labels",
                self.map.len()
            )));
        }
        let mut hit = vec![false; self.labels.len()];
        for &f in &self.map {
            *hit.get_mut(f)
                .ok_or_else(|| Error::invalid(format!("fusion target {f} has no label")))? = true;
        }
        if let Some(f) = hit.iter().position(|h| !h) {
            return Err(Error::invalid(format!("fused label {:?} receives no original label", self.labels[f])));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommonsenseQuestion {
    pub id: String,
    pub text: String,
    pub answer_labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fusion_map: Option<FusionMap>,
}

impl CommonsenseQuestion {
    pub fn validate(&self) -> Result<()> {
        let n = self.answer_labels.len();
        if !(2..=7).contains(&n) {
            return Err(Error::invalid(format!("question {:?} has {n} answer labels; need 2 to 7", self.id)));
        }
        let mut seen = std::collections::BTreeSet::new();
        if let Some(dup) = self.answer_labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::invalid(format!("question {:?} repeats answer label {dup:?}", self.id)));
        }
        if let Some(f) = &self.fusion_map {
            f.validate(n).map_err(|e| Error::invalid(format!("question {:?}: {e}", self.id)))?;
        }
        Ok(())
    }

    /// The question's fusion map, or the identity when it has none.
    pub fn effective_fusion(&self) -> FusionMap {
        self.fusion_map
            .clone()
            .unwrap_or_else(|| FusionMap::identity(&self.answer_labels))
    }
}

/// Responses plus, for each question id, one answer index per respondent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyDataset {
    pub responses: Vec<QuestionnaireResponse>,
    pub answers: BTreeMap<String, Vec<usize>>,
}

impl SurveyDataset {
    pub fn new(responses: Vec<QuestionnaireResponse>, answers: BTreeMap<String, Vec<usize>>) -> Result<Self> {
        for (qid, v) in &answers {
            if v.len() != responses.len() {
                return Err(Error::invalid(format!(
                    "question {qid:?} has {} answers for {} respondents",
                    v.len(),
                    responses.len()
                )));
            }
        }
        Ok(Self { responses, answers })
    }

    /// Checks every answer index against its question's label count.
    pub fn check(&self, questions: &[CommonsenseQuestion]) -> Result<()> {
        for (qid, v) in &self.answers {
            let q = questions
                .iter()
                .find(|q| &q.id == qid)
                .ok_or_else(|| Error::invalid(format!("answers for unknown question {qid:?}")))?;
            if let Some(i) = v.iter().position(|&a| a >= q.answer_labels.len()) {
                return Err(Error::invalid(format!(
                    "respondent {:?}: answer index {} invalid for question {qid:?}",
                    self.responses[i].respondent_id(),
                    v[i]
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn features(&self) -> Vec<Vec<f64>> {
        self.responses.iter().map(QuestionnaireResponse::features).collect()
    }
}

/// Elementwise relabeling through `map`.
pub fn fuse_labels(answers: &[usize], map: &FusionMap) -> Result<Vec<usize>> {
    answers
        .iter()
        .map(|&a| {
            map.map
                .get(a)
                .copied()
                .ok_or_else(|| Error::UnknownLabel(format!("answer index {a} has no fusion target")))
        })
        .collect()
}

/// Percentage of answers per label index.
pub fn label_distribution(answers: &[usize], n_labels: usize) -> Vec<f64> {
    let mut counts = vec![0usize; n_labels];
    for &a in answers {
        if a < n_labels {
            counts[a] += 1;
        }
    }
    let n = answers.len().max(1) as f64;
    counts.iter().map(|&c| 100.0 * c as f64 / n).collect()
}

/// Pearson correlation, or `None` when either side is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Indices of the columns whose |Pearson r| with `y` reaches `min_abs_r`.
/// Constant columns never qualify.
pub fn correlation_filter(x: &[Vec<f64>], y: &[usize], min_abs_r: f64) -> Result<Vec<usize>> {
    if x.len() < 2 || x.len() != y.len() {
        return Err(Error::invalid("correlation filter needs at least two aligned rows"));
    }
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::SingleClass);
    }
    let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
    let d = x[0].len();
    Ok((0..d)
        .filter(|&j| {
            let col: Vec<f64> = x.iter().map(|r| r[j]).collect();
            pearson(&col, &yf).is_some_and(|r| r.abs() >= min_abs_r)
        })
        .collect())
}

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CommonsenseQuestion, QuestionnaireResponse, SurveyDataset, N_ITEMS};
use crate::error::{Error, Result};
use crate::fsio;

pub const CATALOG_FORMAT_VERSION: u32 = 1;

const BUNDLED_CATALOG: &str = include_str!("../../data/question_catalog.json");

/// Question list plus the questionnaire's repeated-item pairs (0-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub format_version: u32,
    pub n_items: usize,
    #[serde(default)]
    pub duplicate_pairs: Vec<(usize, usize)>,
    pub questions: Vec<CommonsenseQuestion>,
}

impl Catalog {
    pub fn parse(text: &str) -> Result<Self> {
        let c: Catalog = serde_json::from_str(text)?;
        if c.format_version != CATALOG_FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                expected: CATALOG_FORMAT_VERSION,
                found: c.format_version.to_string(),
            });
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fsio::read_to_string(path)?)
    }

    /// Partial transcription of the published question set and its merges.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_CATALOG).expect("bundled catalog is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_items != N_ITEMS {
            return Err(Error::invalid(format!("catalog declares {} items; expected {N_ITEMS}", self.n_items)));
        }
        for &(a, b) in &self.duplicate_pairs {
            if a >= N_ITEMS || b >= N_ITEMS || a == b {
                return Err(Error::invalid(format!("bad duplicate item pair ({a}, {b})")));
            }
        }
        let mut ids = std::collections::BTreeSet::new();
        for q in &self.questions {
            if !ids.insert(q.id.as_str()) {
                return Err(Error::invalid(format!("duplicate question id {:?}", q.id)));
            }
            if q.id.is_empty() || q.id.contains(',') {
                return Err(Error::invalid(format!("question id {:?} is not CSV-safe", q.id)));
            }
            q.validate()?;
        }
        Ok(())
    }

    pub fn question(&self, id: &str) -> Option<&CommonsenseQuestion> {
        self.questions.iter().find(|q| q.id == id)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// First duplicate pair answered more than one Likert step apart.
    pub fn inconsistency(&self, r: &QuestionnaireResponse) -> Option<(usize, usize)> {
        let a = r.answers();
        self.duplicate_pairs
            .iter()
            .copied()
            .find(|&(i, j)| a[i].abs_diff(a[j]) > 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurveyIngest {
    pub survey: SurveyDataset,
    /// `(respondent_id, reason)` for respondents failing the consistency check.
    pub rejected: Vec<(String, String)>,
}

/// Reads `respondent_id,q1..q50,a_<qid>...`. Answers are 1-based option
/// numbers; question ids must exist in `catalog`.
pub fn read_survey_csv(text: &str, catalog: &Catalog, source_name: &str) -> Result<SurveyIngest> {
    let bad = |line: usize, message: String| Error::Malformed {
        source_name: source_name.into(),
        line,
        message,
    };
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.first().map(String::as_str) != Some("respondent_id") {
        return Err(bad(1, "first column must be respondent_id".into()));
    }
    for i in 0..N_ITEMS {
        let want = format!("q{}", i + 1);
        if header.get(i + 1) != Some(&want) {
            return Err(bad(1, format!("column {} must be {want}", i + 2)));
        }
    }
    let mut qcols = Vec::new();
    for h in &header[N_ITEMS + 1..] {
        let qid = h
            .strip_prefix("a_")
            .ok_or_else(|| bad(1, format!("unexpected column {h:?}; answer columns are a_<qid>")))?;
        let q = catalog
            .question(qid)
            .ok_or_else(|| bad(1, format!("column {h:?} names a question missing from the catalog")))?;
        qcols.push(q);
    }

    let mut responses = Vec::new();
    let mut answers: BTreeMap<String, Vec<usize>> = qcols.iter().map(|q| (q.id.clone(), Vec::new())).collect();
    let mut rejected = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(bad(line, format!("expected {} fields, found {}", header.len(), rec.len())));
        }
        let id = rec[0].trim().to_string();
        if !seen.insert(id.clone()) {
            return Err(bad(line, format!("duplicate respondent {id:?}")));
        }
        let likert = (1..=N_ITEMS)
            .map(|j| {
                rec[j]
                    .trim()
                    .parse::<u8>()
                    .map_err(|e| bad(line, format!("q{j} value {:?}: {e}", &rec[j])))
            })
            .collect::<Result<Vec<u8>>>()?;
        let resp = QuestionnaireResponse::new(id.clone(), likert).map_err(|e| bad(line, e.to_string()))?;
        let mut row_answers = Vec::with_capacity(qcols.len());
        for (k, q) in qcols.iter().enumerate() {
            let raw = rec[N_ITEMS + 1 + k].trim();
            let opt: usize = raw
                .parse()
                .map_err(|e| bad(line, format!("a_{} value {raw:?}: {e}", q.id)))?;
            if opt == 0 || opt > q.answer_labels.len() {
                return Err(bad(
                    line,
                    format!("a_{} option {opt} outside 1..{}", q.id, q.answer_labels.len()),
                ));
            }
            row_answers.push(opt - 1);
        }
        if let Some((a, b)) = catalog.inconsistency(&resp) {
            rejected.push((id, format!("q{} and q{} differ by more than one step", a + 1, b + 1)));
            continue;
        }
        responses.push(resp);
        for (q, a) in qcols.iter().zip(row_answers) {
            answers.get_mut(&q.id).expect("column registered").push(a);
        }
    }
    let survey = SurveyDataset::new(responses, answers)?;
    Ok(SurveyIngest { survey, rejected })
}

/// Inverse of [`read_survey_csv`] for accepted respondents.
pub fn survey_to_csv(survey: &SurveyDataset) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["respondent_id".to_string()];
    header.extend((1..=N_ITEMS).map(|j| format!("q{j}")));
    header.extend(survey.answers.keys().map(|q| format!("a_{q}")));
    w.write_record(&header)?;
    for (i, r) in survey.responses.iter().enumerate() {
        let mut rec = vec![r.respondent_id().to_string()];
        rec.extend(r.answers().iter().map(u8::to_string));
        rec.extend(survey.answers.values().map(|v| (v[i] + 1).to_string()));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, likert: &[u8], answers: &[usize]) -> String {
        let mut v = vec![id.to_string()];
        v.extend(likert.iter().map(u8::to_string));
        v.extend(answers.iter().map(usize::to_string));
        v.join(",")
    }

    fn header(qids: &[&str]) -> String {
        let mut v = vec!["respondent_id".to_string()];
        v.extend((1..=50).map(|j| format!("q{j}")));
        v.extend(qids.iter().map(|q| format!("a_{q}")));
        v.join(",")
    }

    #[test]
    fn bundled_catalog_loads() {
        let c = Catalog::bundled();
        assert_eq!(c.duplicate_pairs, vec![(0, 6)]);
        let tb = c.question("travel_ban").unwrap();
        assert_eq!(tb.fusion_map.as_ref().unwrap().map, vec![0, 1, 0, 1]);
        assert!(c.question("driverless_car").unwrap().fusion_map.is_none());
        assert_eq!(Catalog::parse(&c.to_json().unwrap()).unwrap(), c);
    }

    #[test]
    fn csv_round_trip_and_consistency_rejection() {
        let c = Catalog::bundled();
        let mut ok = vec![3u8; 50];
        ok[0] = 4;
        let mut bad = vec![3u8; 50];
        bad[0] = 5;
        bad[6] = 1;
        let text = format!(
            "{}\n{}\n{}\n",
            header(&["healthcare", "travel_ban"]),
            row("r1", &ok, &[1, 4]),
            row("r2", &bad, &[2, 2])
        );
        let ing = read_survey_csv(&text, &c, "s.csv").unwrap();
        assert_eq!(ing.survey.len(), 1);
        assert_eq!(ing.rejected.len(), 1);
        assert_eq!(ing.rejected[0].0, "r2");
        assert_eq!(ing.survey.answers["travel_ban"], vec![3]);
        ing.survey.check(&c.questions).unwrap();

        let back = read_survey_csv(&survey_to_csv(&ing.survey).unwrap(), &c, "t").unwrap();
        assert_eq!(back.survey, ing.survey);
    }

    #[test]
    fn diagnostics_name_the_line() {
        let c = Catalog::bundled();
        let text = format!("{}\n{}\n", header(&["healthcare"]), row("r1", &[3; 50], &[9]));
        let err = read_survey_csv(&text, &c, "s.csv").unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 2, .. }), "{err}");

        let text = format!("{}\n", header(&["nope"]));
        assert!(read_survey_csv(&text, &c, "s.csv").is_err());

        let mut likert = vec![3u8; 50];
        likert[3] = 6;
        let text = format!("{}\n{}\n", header(&[]), row("r1", &likert, &[]));
        assert!(read_survey_csv(&text, &c, "s.csv").unwrap_err().to_string().contains("q4"));
    }
}

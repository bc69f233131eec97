use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{correlation_filter, fuse_labels, CommonsenseQuestion, QuestionnaireResponse, SurveyDataset, N_ITEMS};
use crate::error::{Error, Result};
use crate::eval::cross_validate;
use crate::fsio;
use crate::ml::{self, Algorithm, Dataset, TrainConfig, TrainedModel};

pub const DEFAULT_MIN_ABS_R: f64 = 0.05;
pub const BANK_FORMAT_VERSION: u32 = 1;

fn item_names() -> Vec<String> {
    (1..=N_ITEMS).map(|j| format!("q{j}")).collect()
}

/// A trained learner for one question, over a subset of the 50 items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionModel {
    pub qid: String,
    /// Output label names, after fusion when `fused`.
    pub labels: Vec<String>,
    pub fused: bool,
    /// 0-based questionnaire items fed to the learner.
    pub selected: Vec<usize>,
    /// True when the correlation filter kept nothing and every item is used.
    pub fallback_all: bool,
    pub model: TrainedModel,
}

struct Prepared {
    labels: Vec<String>,
    fused: bool,
    selected: Vec<usize>,
    fallback_all: bool,
    ds: Dataset,
}

/// Applies fusion (when asked and the question has a map), then the
/// correlation filter over the whole survey.
fn prepare(survey: &SurveyDataset, q: &CommonsenseQuestion, min_abs_r: f64, fuse: bool) -> Result<Prepared> {
    let raw = survey
        .answers
        .get(&q.id)
        .ok_or_else(|| Error::invalid(format!("survey has no answers for question {:?}", q.id)))?;
    let (labels, y, fused) = match (&q.fusion_map, fuse) {
        (Some(map), true) => (map.labels.clone(), fuse_labels(raw, map)?, true),
        _ => (q.answer_labels.clone(), raw.clone(), false),
    };
    if y.is_empty() || y.iter().all(|&v| v == y[0]) {
        return Err(Error::SingleClass);
    }
    let x = survey.features();
    let mut selected = correlation_filter(&x, &y, min_abs_r)?;
    let fallback_all = selected.is_empty();
    if fallback_all {
        selected = (0..N_ITEMS).collect();
    }
    let names = item_names();
    let full = Dataset::new(names, x, Some(y), None)?;
    Ok(Prepared {
        labels,
        fused,
        ds: full.select_columns(&selected),
        selected,
        fallback_all,
    })
}

fn fit(config: &TrainConfig, p: Prepared, qid: &str) -> Result<QuestionModel> {
    let model = ml::train(config, &p.ds)?;
    Ok(QuestionModel {
        qid: qid.to_string(),
        labels: p.labels,
        fused: p.fused,
        selected: p.selected,
        fallback_all: p.fallback_all,
        model,
    })
}

/// Fusion (if the question defines it), correlation filter, then training.
pub fn train_question_model(
    config: &TrainConfig,
    survey: &SurveyDataset,
    question: &CommonsenseQuestion,
    min_abs_r: f64,
) -> Result<QuestionModel> {
    fit(config, prepare(survey, question, min_abs_r, true)?, &question.id)
}

/// Predicted answer label for one respondent.
pub fn predict_answer(model: &QuestionModel, response: &QuestionnaireResponse) -> Result<String> {
    let response = QuestionnaireResponse::new(response.respondent_id(), response.answers().to_vec())?;
    let feats = response.features();
    let x: Vec<f64> = model.selected.iter().map(|&j| feats[j]).collect();
    let class = match model.model.predict(&x)? {
        ml::Prediction::Class(c) => c,
        ml::Prediction::Score(s) => s.round() as usize,
    };
    model
        .labels
        .get(class)
        .cloned()
        .ok_or_else(|| Error::UnknownLabel(class.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub qid: String,
    pub algorithm: Algorithm,
    pub cv_accuracy_prefusion: Option<f64>,
    pub cv_accuracy_postfusion: Option<f64>,
    pub n_features: usize,
    /// `fallback_all_features`, an error message, or empty.
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBank {
    pub format_version: u32,
    pub min_abs_r: f64,
    pub models: Vec<QuestionModel>,
    /// Algorithm with the best post-fusion CV accuracy per question.
    pub best: BTreeMap<String, Algorithm>,
}

impl ModelBank {
    pub fn get(&self, qid: &str, algorithm: Algorithm) -> Option<&QuestionModel> {
        self.models
            .iter()
            .find(|m| m.qid == qid && m.model.algorithm() == algorithm)
    }

    /// Best model's answer for every question in the bank.
    pub fn predict(&self, response: &QuestionnaireResponse) -> Result<BTreeMap<String, String>> {
        self.best
            .iter()
            .map(|(qid, &a)| {
                let m = self
                    .get(qid, a)
                    .ok_or_else(|| Error::invalid(format!("bank lacks the {a} model for {qid:?}")))?;
                Ok((qid.clone(), predict_answer(m, response)?))
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let found = v.get("format_version").cloned().unwrap_or(serde_json::Value::Null);
        if found.as_u64() != Some(u64::from(BANK_FORMAT_VERSION)) {
            return Err(Error::VersionMismatch {
                expected: BANK_FORMAT_VERSION,
                found: found.to_string(),
            });
        }
        Ok(serde_json::from_value(v)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fsio::write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fsio::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainAllOutput {
    pub bank: ModelBank,
    pub report: Vec<ReportRow>,
}

impl TrainAllOutput {
    /// `qid,algorithm,cv_accuracy_prefusion,cv_accuracy_postfusion,n_features,note`;
    /// missing accuracies are left empty.
    pub fn report_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "qid",
            "algorithm",
            "cv_accuracy_prefusion",
            "cv_accuracy_postfusion",
            "n_features",
            "note",
        ])?;
        let fmt = |v: Option<f64>| v.map_or_else(String::new, |a| format!("{a:.6}"));
        for r in &self.report {
            w.write_record([
                r.qid.clone(),
                r.algorithm.to_string(),
                fmt(r.cv_accuracy_prefusion),
                fmt(r.cv_accuracy_postfusion),
                r.n_features.to_string(),
                r.note.clone(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// `qid,algorithm,cv_accuracy_postfusion` for each question's winner.
    pub fn best_csv(&self) -> String {
        let mut out = String::from("qid,algorithm,cv_accuracy_postfusion\n");
        for (qid, a) in &self.bank.best {
            let acc = self
                .report
                .iter()
                .find(|r| &r.qid == qid && r.algorithm == *a)
                .and_then(|r| r.cv_accuracy_postfusion)
                .unwrap_or(f64::NAN);
            out.push_str(&format!("{qid},{a},{acc:.6}\n"));
        }
        out
    }
}

struct PairOutcome {
    row: ReportRow,
    model: Option<QuestionModel>,
}

fn run_pair(
    survey: &SurveyDataset,
    q: &CommonsenseQuestion,
    config: &TrainConfig,
    k: usize,
    seed: u64,
    min_abs_r: f64,
) -> PairOutcome {
    let mut row = ReportRow {
        qid: q.id.clone(),
        algorithm: config.algorithm,
        cv_accuracy_prefusion: None,
        cv_accuracy_postfusion: None,
        n_features: 0,
        note: String::new(),
    };
    let result = (|| -> Result<QuestionModel> {
        let post = prepare(survey, q, min_abs_r, true)?;
        row.n_features = post.selected.len();
        if post.fallback_all {
            row.note = "fallback_all_features".into();
        }
        let post_acc = cross_validate(config, &post.ds, k, seed)?.mean_accuracy;
        row.cv_accuracy_postfusion = Some(post_acc);
        row.cv_accuracy_prefusion = if post.fused {
            match prepare(survey, q, min_abs_r, false).and_then(|pre| cross_validate(config, &pre.ds, k, seed)) {
                Ok(cv) => Some(cv.mean_accuracy),
                Err(_) => None,
            }
        } else {
            Some(post_acc)
        };
        fit(config, post, &q.id)
    })();
    match result {
        Ok(model) => PairOutcome { row, model: Some(model) },
        Err(e) => {
            row.note = format!("error: {e}");
            PairOutcome { row, model: None }
        }
    }
}

/// Trains and cross-validates every (question, config) pair. A failing pair
/// is reported in its row and left out of the bank.
pub fn train_all(
    survey: &SurveyDataset,
    questions: &[CommonsenseQuestion],
    configs: &[TrainConfig],
    k: usize,
    seed: u64,
    min_abs_r: f64,
) -> Result<TrainAllOutput> {
    if questions.is_empty() || configs.is_empty() {
        return Err(Error::invalid("train_all needs at least one question and one configuration"));
    }
    let pairs: Vec<(&CommonsenseQuestion, &TrainConfig)> =
        questions.iter().flat_map(|q| configs.iter().map(move |c| (q, c))).collect();
    let outcomes: Vec<PairOutcome> = pairs
        .par_iter()
        .map(|(q, c)| run_pair(survey, q, c, k, seed, min_abs_r))
        .collect();

    let mut best: BTreeMap<String, (Algorithm, f64)> = BTreeMap::new();
    for o in &outcomes {
        if let (Some(acc), Some(_)) = (o.row.cv_accuracy_postfusion, &o.model) {
            let e = best.entry(o.row.qid.clone()).or_insert((o.row.algorithm, acc));
            if acc > e.1 {
                *e = (o.row.algorithm, acc);
            }
        }
    }
    let report = outcomes.iter().map(|o| o.row.clone()).collect();
    let models = outcomes.into_iter().filter_map(|o| o.model).collect();
    Ok(TrainAllOutput {
        bank: ModelBank {
            format_version: BANK_FORMAT_VERSION,
            min_abs_r,
            models,
            best: best.into_iter().map(|(q, (a, _))| (q, a)).collect(),
        },
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commonsense::FusionMap;
    use crate::rng::seeded;
    use rand::Rng as _;

    fn rule_survey(n: usize, seed: u64) -> (SurveyDataset, Vec<CommonsenseQuestion>) {
        let mut rng = seeded(seed);
        let responses: Vec<QuestionnaireResponse> = (0..n)
            .map(|i| QuestionnaireResponse::new(format!("r{i}"), (0..N_ITEMS).map(|_| rng.random_range(1..=5)).collect()).unwrap())
            .collect();
        // answer 0 iff q7 >= 3, else 1; a third label is folded by the fusion map
        let rule: Vec<usize> = responses
            .iter()
            .map(|r| if r.answers()[6] >= 3 { 0 } else if r.answers()[2] >= 3 { 1 } else { 2 })
            .collect();
        let q = CommonsenseQuestion {
            id: "rule".into(),
            text: "rule".into(),
            answer_labels: vec!["A".into(), "B".into(), "C".into()],
            fusion_map: Some(FusionMap {
                labels: vec!["A".into(), "not A".into()],
                map: vec![0, 1, 1],
            }),
        };
        let answers = [("rule".to_string(), rule)].into_iter().collect();
        (SurveyDataset::new(responses, answers).unwrap(), vec![q])
    }

    fn small_forest(seed: u64) -> TrainConfig {
        let mut c = TrainConfig::new(Algorithm::RandomForestClf, seed);
        c.hyperparams.random_forest_clf.n_trees = 60;
        c
    }

    #[test]
    fn rule_driven_question_is_learned() {
        let (survey, qs) = rule_survey(300, 1);
        let m = train_question_model(&small_forest(0), &survey, &qs[0], DEFAULT_MIN_ABS_R).unwrap();
        assert!(m.fused && m.selected.contains(&6));
        let mut hits = 0;
        for (r, &a) in survey.responses.iter().zip(&survey.answers["rule"]) {
            let want = if a == 0 { "A" } else { "not A" };
            hits += usize::from(predict_answer(&m, r).unwrap() == want);
        }
        assert!(hits as f64 / 300.0 > 0.95);
    }

    #[test]
    fn identity_fusion_and_zero_threshold_keeps_every_item() {
        let (survey, mut qs) = rule_survey(60, 2);
        qs[0].fusion_map = None;
        let m = train_question_model(&TrainConfig::new(Algorithm::Knn, 0), &survey, &qs[0], 0.0).unwrap();
        assert_eq!(m.selected, (0..50).collect::<Vec<_>>());
        assert!(!m.fused && !m.fallback_all);
    }

    #[test]
    fn single_class_is_an_error() {
        let (mut survey, qs) = rule_survey(30, 3);
        survey.answers.insert("rule".into(), vec![1; 30]);
        let err = train_question_model(&TrainConfig::new(Algorithm::Knn, 0), &survey, &qs[0], 0.05).unwrap_err();
        assert!(matches!(err, Error::SingleClass));
    }

    #[test]
    fn majority_label_from_uninformative_items() {
        let responses: Vec<QuestionnaireResponse> =
            (0..40).map(|i| QuestionnaireResponse::new(format!("r{i}"), vec![3; 50]).unwrap()).collect();
        let y: Vec<usize> = (0..40).map(|i| usize::from(i % 4 == 0)).collect();
        let survey = SurveyDataset::new(responses.clone(), [("q".to_string(), y)].into_iter().collect()).unwrap();
        let q = CommonsenseQuestion {
            id: "q".into(),
            text: String::new(),
            answer_labels: vec!["yes".into(), "no".into()],
            fusion_map: None,
        };
        let m = train_question_model(&TrainConfig::new(Algorithm::DecisionTree, 0), &survey, &q, 0.05).unwrap();
        assert!(m.fallback_all);
        assert_eq!(predict_answer(&m, &responses[0]).unwrap(), "yes");
    }

    #[test]
    fn train_all_cardinality_determinism_and_persistence() {
        let (survey, mut qs) = rule_survey(80, 4);
        let mut q2 = qs[0].clone();
        q2.id = "rule2".into();
        q2.fusion_map = None;
        qs.push(q2);
        let mut survey = survey;
        let a = survey.answers["rule"].clone();
        survey.answers.insert("rule2".into(), a);

        let configs: Vec<TrainConfig> = Algorithm::ALL
            .iter()
            .map(|&alg| {
                let mut c = TrainConfig::new(alg, 0);
                c.hyperparams.random_forest_clf.n_trees = 20;
                c.hyperparams.random_forest_reg.n_trees = 10;
                c.hyperparams.mlp.max_epochs = 10;
                c.hyperparams.linear_svm.epochs = 20;
                c.hyperparams.perceptron.max_epochs = 50;
                c
            })
            .collect();
        let out = train_all(&survey, &qs, &configs, 5, 7, DEFAULT_MIN_ABS_R).unwrap();
        assert_eq!(out.report.len(), 16);
        assert_eq!(out.bank.models.len(), 16);
        assert_eq!(out.bank.best.len(), 2);
        let csv = out.report_csv().unwrap();
        assert!(csv.starts_with("qid,algorithm,cv_accuracy_prefusion,cv_accuracy_postfusion"));
        assert_eq!(csv.lines().count(), 17);

        let again = train_all(&survey, &qs, &configs, 5, 7, DEFAULT_MIN_ABS_R).unwrap();
        assert_eq!(again.report_csv().unwrap(), csv);
        assert_eq!(again.bank.to_json().unwrap(), out.bank.to_json().unwrap());

        let back = ModelBank::from_json(&out.bank.to_json().unwrap()).unwrap();
        for r in &survey.responses {
            assert_eq!(back.predict(r).unwrap(), out.bank.predict(r).unwrap());
        }
    }
}

//! Seeded synthetic corpora and surveys with known ground truth.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::commonsense::{Catalog, CommonsenseQuestion, FusionMap, QuestionnaireResponse, SurveyDataset, CATALOG_FORMAT_VERSION, N_ITEMS};
use crate::corpus::{AdjectiveLexicon, CorpusStore, StoreManifest, TextSample, Trait, TraitScores};
use crate::error::{Error, Result};
use crate::fsio;
use crate::pdfmodel::BinningScheme;
use crate::rng::{substream, Rng, GENERATOR_NAME};

/// Non-lexicon words mixed into every sample to pad its length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Filler {
    pub words: Vec<String>,
    /// Probability that a drawn token is filler.
    pub share: f64,
}

/// `x[item] >= value` or `x[item] <= value`, with `item` 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predicate {
    pub item: usize,
    pub op: Comparison,
    pub value: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparison {
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<=")]
    AtMost,
}

impl Predicate {
    pub fn holds(&self, answers: &[u8]) -> bool {
        match self.op {
            Comparison::AtLeast => answers[self.item] >= self.value,
            Comparison::AtMost => answers[self.item] <= self.value,
        }
    }
}

/// Label `label` when every predicate in `when` holds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRule {
    pub when: Vec<Predicate>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticQuestion {
    pub id: String,
    pub labels: Vec<String>,
    /// First matching rule wins. Without rules answers are uniform.
    #[serde(default)]
    pub rules: Vec<AnswerRule>,
    /// Label when rules exist but none matches.
    #[serde(default)]
    pub default_label: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fusion_map: Option<FusionMap>,
}

impl SyntheticQuestion {
    pub fn is_rule_bound(&self) -> bool {
        !self.rules.is_empty()
    }

    /// Rule-driven label, or `None` for a free question.
    pub fn rule_label(&self, answers: &[u8]) -> Option<usize> {
        if self.rules.is_empty() {
            return None;
        }
        Some(
            self.rules
                .iter()
                .find(|r| r.when.iter().all(|p| p.holds(answers)))
                .map_or(self.default_label, |r| r.label),
        )
    }

    /// Every item index any rule reads.
    pub fn driving_items(&self) -> BTreeSet<usize> {
        self.rules.iter().flat_map(|r| r.when.iter().map(|p| p.item)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveySpec {
    pub n_respondents: usize,
    pub questions: Vec<SyntheticQuestion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub seed: u64,
    pub n_samples: usize,
    /// Inclusive token-count range per sample.
    pub words_per_sample: (usize, usize),
    pub binning: BinningScheme,
    #[serde(default = "default_trait")]
    pub trait_: Trait,
    /// One word-probability table per bin.
    pub vocab: Vec<BTreeMap<String, f64>>,
    /// Per-bin sampling weights.
    pub score_distribution: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filler: Option<Filler>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub survey: Option<SurveySpec>,
}

fn default_trait() -> Trait {
    Trait::Neuroticism
}

fn is_word(w: &str) -> bool {
    !w.is_empty() && w.bytes().all(|b| b.is_ascii_lowercase())
}

/// `prefix` followed by a three-letter base-26 code for `i`.
pub fn synthetic_word(prefix: &str, i: usize) -> String {
    let mut code = [b'a'; 3];
    let mut v = i;
    for c in code.iter_mut().rev() {
        *c = b'a' + (v % 26) as u8;
        v /= 26;
    }
    format!("{prefix}{}", std::str::from_utf8(&code).expect("ascii"))
}

impl GeneratorSpec {
    /// Sliding-window vocabularies: bin `k` draws uniformly from words
    /// `[s·k, s·k + words_per_bin)` where `s = round(words_per_bin · (1 - overlap))`,
    /// so neighbouring bins share `overlap` of their words. Uniform bin
    /// weights; lengths 1200..=2000 tokens of which about 4% are adjectives.
    pub fn sliding_window(seed: u64, n_samples: usize, n_bins: usize, words_per_bin: usize, overlap: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&overlap) || words_per_bin == 0 {
            return Err(Error::invalid("overlap must be in [0, 1) and words_per_bin positive"));
        }
        let binning = BinningScheme::new(0.1, 0.9, n_bins)?;
        let stride = ((words_per_bin as f64) * (1.0 - overlap)).round().max(1.0) as usize;
        let vocab = (0..n_bins)
            .map(|k| {
                let p = 1.0 / words_per_bin as f64;
                (stride * k..stride * k + words_per_bin)
                    .map(|i| (synthetic_word("adj", i), p))
                    .collect()
            })
            .collect();
        Ok(Self {
            seed,
            n_samples,
            words_per_sample: (1200, 2000),
            binning,
            trait_: Trait::Neuroticism,
            vocab,
            score_distribution: vec![1.0; n_bins],
            filler: Some(Filler {
                words: (0..200).map(|i| synthetic_word("fil", i)).collect(),
                share: 0.96,
            }),
            survey: None,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fsio::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.binning.n_bins();
        if self.vocab.len() != n || self.score_distribution.len() != n {
            return Err(Error::invalid(format!(
                "{n} bins but {} vocab tables and {} weights",
                self.vocab.len(),
                self.score_distribution.len()
            )));
        }
        for (k, table) in self.vocab.iter().enumerate() {
            let sum: f64 = table.values().sum();
            if table.values().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("vocab table {k} must be non-negative and sum to 1 (sums to {sum})")));
            }
            if let Some(w) = table.keys().find(|w| !is_word(w)) {
                return Err(Error::invalid(format!("vocab word {w:?} is not a lowercase alphabetic token")));
            }
        }
        if self.score_distribution.iter().any(|&w| !(w >= 0.0) || !w.is_finite())
            || self.score_distribution.iter().all(|&w| w == 0.0)
        {
            return Err(Error::invalid("bin weights must be non-negative and not all zero"));
        }
        let (lo, hi) = self.words_per_sample;
        if lo == 0 || lo > hi {
            return Err(Error::invalid(format!("bad words_per_sample range {lo}..={hi}")));
        }
        if let Some(f) = &self.filler {
            if !(0.0..1.0).contains(&f.share) || (f.share > 0.0 && f.words.is_empty()) {
                return Err(Error::invalid("filler share must be in [0, 1) with at least one word"));
            }
            let vocab: BTreeSet<&String> = self.vocab.iter().flat_map(|t| t.keys()).collect();
            if let Some(w) = f.words.iter().find(|w| !is_word(w) || vocab.contains(w)) {
                return Err(Error::invalid(format!("filler word {w:?} is not alphabetic or collides with the vocabulary")));
            }
        }
        if let Some(s) = &self.survey {
            for q in &s.questions {
                if !(2..=7).contains(&q.labels.len()) {
                    return Err(Error::invalid(format!("survey question {:?} needs 2 to 7 labels", q.id)));
                }
                let bad_label = q.rules.iter().any(|r| r.label >= q.labels.len()) || q.default_label >= q.labels.len();
                let bad_item = q
                    .rules
                    .iter()
                    .flat_map(|r| &r.when)
                    .any(|p| p.item >= N_ITEMS || !(1..=5).contains(&p.value));
                if bad_label || bad_item {
                    return Err(Error::invalid(format!("survey question {:?} has an invalid rule", q.id)));
                }
            }
        }
        Ok(())
    }

    /// Lexicon made of every vocabulary word.
    pub fn lexicon(&self) -> Result<AdjectiveLexicon> {
        let words: BTreeSet<String> = self.vocab.iter().flat_map(|t| t.keys().cloned()).collect();
        AdjectiveLexicon::new(words, "synthetic", &format!("seed-{}", self.seed))
    }

    /// Name, seed and stream layout for manifests.
    pub fn generator_info(&self) -> serde_json::Value {
        serde_json::json!({
            "generator": GENERATOR_NAME,
            "seed": self.seed,
            "corpus_stream": 0,
            "survey_stream": 1,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub store: CorpusStore,
    pub lexicon: AdjectiveLexicon,
    /// True bin of every sample, aligned with `store.samples()`.
    pub truth: Vec<usize>,
}

fn draw_score(binning: &BinningScheme, k: usize, rng: &mut Rng) -> f64 {
    let (lo, hi) = binning.edges(k);
    loop {
        let s = rng.random_range(lo..hi);
        if binning.bin_index(s) == Some(k) {
            return s;
        }
    }
}

/// Bin by weight, score uniform within the bin, then i.i.d. tokens from the
/// bin's table (or filler words at the filler share).
pub fn generate_corpus(spec: &GeneratorSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let lexicon = spec.lexicon()?;
    let mut rng = substream(spec.seed, 0);
    let bins = WeightedIndex::new(&spec.score_distribution).map_err(|e| Error::invalid(e.to_string()))?;
    let tables: Vec<(Vec<&str>, WeightedIndex<f64>)> = spec
        .vocab
        .iter()
        .map(|t| {
            let words: Vec<&str> = t.keys().map(String::as_str).collect();
            let w = WeightedIndex::new(t.values().copied()).map_err(|e| Error::invalid(e.to_string()))?;
            Ok((words, w))
        })
        .collect::<Result<_>>()?;
    let width = spec.n_samples.max(1).to_string().len();

    let mut samples = Vec::with_capacity(spec.n_samples);
    let mut truth = Vec::with_capacity(spec.n_samples);
    for i in 0..spec.n_samples {
        let k = bins.sample(&mut rng);
        let score = draw_score(&spec.binning, k, &mut rng);
        let n_words = rng.random_range(spec.words_per_sample.0..=spec.words_per_sample.1);
        let mut text = String::with_capacity(n_words * 7);
        for j in 0..n_words {
            if j > 0 {
                text.push(' ');
            }
            let word = match &spec.filler {
                Some(f) if f.share > 0.0 && rng.random_bool(f.share) => f.words[rng.random_range(0..f.words.len())].as_str(),
                _ => tables[k].0[tables[k].1.sample(&mut rng)],
            };
            text.push_str(word);
        }
        let scores: TraitScores = [(spec.trait_, score)].into_iter().collect();
        samples.push(TextSample::from_text(format!("syn{i:0width$}"), text, Some("en"), Some(scores), &lexicon)?);
        truth.push(k);
    }
    let mut manifest = StoreManifest::for_lexicon(&lexicon, None);
    manifest.generator = Some(spec.generator_info());
    Ok(SyntheticCorpus {
        store: CorpusStore::from_samples(samples, manifest)?,
        lexicon,
        truth,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSurvey {
    pub survey: SurveyDataset,
    /// Questions as a catalog (no duplicate-item pairs).
    pub catalog: Catalog,
}

/// Uniform Likert answers; rule-bound questions take their rule's label,
/// free questions a uniform label.
pub fn generate_survey(spec: &GeneratorSpec) -> Result<SyntheticSurvey> {
    spec.validate()?;
    let s = spec
        .survey
        .as_ref()
        .ok_or_else(|| Error::invalid("generator spec has no survey section"))?;
    let mut rng = substream(spec.seed, 1);
    let width = s.n_respondents.max(1).to_string().len();
    let mut responses = Vec::with_capacity(s.n_respondents);
    let mut answers: BTreeMap<String, Vec<usize>> = s.questions.iter().map(|q| (q.id.clone(), Vec::new())).collect();
    for i in 0..s.n_respondents {
        let likert: Vec<u8> = (0..N_ITEMS).map(|_| rng.random_range(1..=5)).collect();
        for q in &s.questions {
            let a = match q.rule_label(&likert) {
                Some(l) => l,
                None => rng.random_range(0..q.labels.len()),
            };
            answers.get_mut(&q.id).expect("registered").push(a);
        }
        responses.push(QuestionnaireResponse::new(format!("resp{i:0width$}"), likert)?);
    }
    let questions = s
        .questions
        .iter()
        .map(|q| CommonsenseQuestion {
            id: q.id.clone(),
            text: format!("synthetic question {}", q.id),
            answer_labels: q.labels.clone(),
            fusion_map: q.fusion_map.clone(),
        })
        .collect();
    let catalog = Catalog {
        format_version: CATALOG_FORMAT_VERSION,
        n_items: N_ITEMS,
        duplicate_pairs: Vec::new(),
        questions,
    };
    catalog.validate()?;
    let survey = SurveyDataset::new(responses, answers)?;
    survey.check(&catalog.questions)?;
    Ok(SyntheticSurvey { survey, catalog })
}

/// Five rule-bound questions over one or two items each, for acceptance
/// runs and the CLI's default survey.
pub fn threshold_rule_survey(n_respondents: usize) -> SurveySpec {
    let at_least = |item, value| Predicate { item, op: Comparison::AtLeast, value };
    let at_most = |item, value| Predicate { item, op: Comparison::AtMost, value };
    let two = |a: &str, b: &str| vec![a.to_string(), b.to_string()];
    let questions = vec![
        SyntheticQuestion {
            id: "rule_q7".into(),
            labels: two("A", "B"),
            rules: vec![AnswerRule { when: vec![at_least(6, 3)], label: 0 }],
            default_label: 1,
            fusion_map: None,
        },
        SyntheticQuestion {
            id: "rule_q12".into(),
            labels: two("yes", "no"),
            rules: vec![AnswerRule { when: vec![at_most(11, 2)], label: 0 }],
            default_label: 1,
            fusion_map: None,
        },
        SyntheticQuestion {
            id: "rule_q3_q20".into(),
            labels: two("both", "not both"),
            rules: vec![AnswerRule { when: vec![at_least(2, 3), at_least(19, 3)], label: 0 }],
            default_label: 1,
            fusion_map: None,
        },
        SyntheticQuestion {
            id: "rule_q30_q41".into(),
            labels: vec!["high".into(), "middle".into(), "low".into()],
            rules: vec![
                AnswerRule { when: vec![at_least(29, 4)], label: 0 },
                AnswerRule { when: vec![at_least(40, 3)], label: 1 },
            ],
            default_label: 2,
            fusion_map: None,
        },
        SyntheticQuestion {
            id: "rule_q45".into(),
            labels: vec!["strong yes".into(), "yes".into(), "no".into(), "strong no".into()],
            rules: vec![
                AnswerRule { when: vec![at_least(44, 5)], label: 0 },
                AnswerRule { when: vec![at_least(44, 3)], label: 1 },
                AnswerRule { when: vec![at_least(44, 2)], label: 2 },
            ],
            default_label: 3,
            fusion_map: Some(FusionMap {
                labels: two("agree", "disagree"),
                map: vec![0, 0, 1, 1],
            }),
        },
    ];
    SurveySpec { n_respondents, questions }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pdfmodel::{argmax, build_model};

    fn small(seed: u64, overlap: f64) -> GeneratorSpec {
        let mut s = GeneratorSpec::sliding_window(seed, 200, 8, 10, overlap).unwrap();
        s.words_per_sample = (40, 60);
        s.filler = None;
        s
    }

    #[test]
    fn words_are_alphabetic() {
        assert_eq!(synthetic_word("adj", 0), "adjaaa");
        assert_eq!(synthetic_word("adj", 27), "adjabb");
        let s = GeneratorSpec::sliding_window(0, 1, 8, 40, 0.6).unwrap();
        let shared = s.vocab[0].keys().filter(|w| s.vocab[1].contains_key(*w)).count();
        assert_eq!(shared, 24);
        s.validate().unwrap();
    }

    #[test]
    fn disjoint_vocabularies_recover_each_word_bin() {
        let spec = small(3, 0.0);
        let c = generate_corpus(&spec).unwrap();
        let m = build_model(&c.store, Trait::Neuroticism, spec.binning, 1, 0.0).unwrap();
        for (k, table) in spec.vocab.iter().enumerate() {
            for w in table.keys() {
                assert_eq!(argmax(&m.pdf(w).unwrap().mass), k, "{w}");
            }
        }
    }

    #[test]
    fn weights_on_one_bin() {
        let mut spec = small(1, 0.5);
        spec.score_distribution = vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let c = generate_corpus(&spec).unwrap();
        for s in c.store.samples() {
            let v = s.score(Trait::Neuroticism).unwrap();
            assert!((0.4..0.5).contains(&v), "{v}");
        }
        assert!(c.truth.iter().all(|&k| k == 3));
    }

    #[test]
    fn corpus_is_seed_deterministic() {
        let a = generate_corpus(&small(9, 0.6)).unwrap();
        assert_eq!(a, generate_corpus(&small(9, 0.6)).unwrap());
        assert_ne!(a.store, generate_corpus(&small(10, 0.6)).unwrap().store);
        a.store.check_consistency().unwrap();
    }

    #[test]
    fn spec_json_round_trip_and_validation() {
        let s = GeneratorSpec::sliding_window(2, 10, 8, 40, 0.6).unwrap();
        assert_eq!(GeneratorSpec::from_json(&s.to_json().unwrap()).unwrap(), s);
        let mut bad = s.clone();
        bad.vocab[2].insert("adjzzz".into(), 0.5);
        assert!(bad.validate().is_err());
        let mut bad = s;
        bad.score_distribution = vec![0.0; 8];
        assert!(bad.validate().is_err());
    }

    #[test]
    fn rule_bound_answers_follow_the_rule() {
        let mut spec = small(4, 0.5);
        spec.survey = Some(threshold_rule_survey(300));
        let out = generate_survey(&spec).unwrap();
        let sspec = spec.survey.as_ref().unwrap();
        for q in &sspec.questions {
            for (r, &a) in out.survey.responses.iter().zip(&out.survey.answers[&q.id]) {
                assert_eq!(q.rule_label(r.answers()), Some(a));
            }
        }
        assert_eq!(out, generate_survey(&spec).unwrap());
    }

    #[test]
    fn free_question_is_near_uniform() {
        let mut spec = small(5, 0.5);
        spec.survey = Some(SurveySpec {
            n_respondents: 10_000,
            questions: vec![SyntheticQuestion {
                id: "free".into(),
                labels: vec!["a".into(), "b".into(), "c".into(), "d".into()],
                rules: vec![],
                default_label: 0,
                fusion_map: None,
            }],
        });
        let out = generate_survey(&spec).unwrap();
        let d = crate::commonsense::label_distribution(&out.survey.answers["free"], 4);
        assert!(d.iter().all(|p| (p - 25.0).abs() < 2.0), "{d:?}");
    }
}

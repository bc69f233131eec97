//! Text ingest: tokenizing, adjective extraction against a lexicon, sample
//! filtering and the two-table corpus store (samples and adjectives).

mod filter;
mod lexicon;
mod store;
mod tokenize;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use filter::{filter_sample, FilterOutcome, FilterPolicy, RejectReason};
pub use lexicon::{detect_language, extract_adjectives, AdjectiveLexicon, ENGLISH_STOPWORD_RATIO};
pub use store::{
    ingest, ingest_str, load, persist, AdjectiveOccurrence, AdjectiveRecord, CorpusStore,
    IngestReport, Rejection, StoreManifest, STORE_FORMAT_VERSION,
};
pub use tokenize::tokenize;

/// One of the five OCEAN personality traits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Trait {
    #[serde(rename = "O")]
    Openness,
    #[serde(rename = "C")]
    Conscientiousness,
    #[serde(rename = "E")]
    Extroversion,
    #[serde(rename = "A")]
    Agreeableness,
    #[serde(rename = "N")]
    Neuroticism,
}

impl Trait {
    pub const ALL: [Trait; 5] = [
        Trait::Openness,
        Trait::Conscientiousness,
        Trait::Extroversion,
        Trait::Agreeableness,
        Trait::Neuroticism,
    ];

    pub fn code(self) -> char {
        match self {
            Trait::Openness => 'O',
            Trait::Conscientiousness => 'C',
            Trait::Extroversion => 'E',
            Trait::Agreeableness => 'A',
            Trait::Neuroticism => 'N',
        }
    }
}

impl fmt::Display for Trait {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

impl FromStr for Trait {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "O" | "OPENNESS" => Ok(Trait::Openness),
            "C" | "CONSCIENTIOUSNESS" => Ok(Trait::Conscientiousness),
            "E" | "EXTROVERSION" | "EXTRAVERSION" => Ok(Trait::Extroversion),
            "A" | "AGREEABLENESS" => Ok(Trait::Agreeableness),
            "N" | "NEUROTICISM" => Ok(Trait::Neuroticism),
            _ => Err(Error::invalid(format!("unknown trait {s:?} (expected one of O,C,E,A,N)"))),
        }
    }
}

pub type TraitScores = BTreeMap<Trait, f64>;

/// One ingested document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextSample {
    pub id: String,
    pub text: String,
    pub lang: String,
    pub word_count: usize,
    pub adj_freqs: BTreeMap<String, u32>,
    pub scores: Option<TraitScores>,
}

impl TextSample {
    /// Tokenizes `text` and counts lexicon hits. A missing or empty `lang`
    /// is filled in by the stopword heuristic.
    pub fn from_text(
        id: impl Into<String>,
        text: impl Into<String>,
        lang: Option<&str>,
        scores: Option<TraitScores>,
        lexicon: &AdjectiveLexicon,
    ) -> Result<Self> {
        let id = id.into();
        let text = text.into();
        let tokens = tokenize(&text);
        let lang = match lang.map(str::trim) {
            Some(l) if !l.is_empty() => l.to_ascii_lowercase(),
            _ => detect_language(&tokens).to_string(),
        };
        let sample = Self {
            adj_freqs: extract_adjectives(&tokens, lexicon),
            word_count: tokens.len(),
            id,
            text,
            lang,
            scores,
        };
        sample.check_scores()?;
        Ok(sample)
    }

    pub fn score(&self, t: Trait) -> Option<f64> {
        self.scores.as_ref().and_then(|s| s.get(&t).copied())
    }

    pub(crate) fn check_scores(&self) -> Result<()> {
        if let Some(scores) = &self.scores {
            for (t, &v) in scores {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::ScoreOutOfRange {
                        id: self.id.clone(),
                        trait_code: t.code(),
                        value: v,
                    });
                }
            }
        }
        Ok(())
    }

    pub(crate) fn check_invariants(&self) -> Result<()> {
        self.check_scores()?;
        if let Some((word, _)) = self.adj_freqs.iter().find(|(_, &c)| c == 0) {
            return Err(Error::Inconsistent(format!(
                "sample {:?} has zero count for {word:?}",
                self.id
            )));
        }
        if let Some(word) = self.adj_freqs.keys().find(|w| w.chars().any(char::is_uppercase)) {
            return Err(Error::Inconsistent(format!(
                "sample {:?} has non-lowercase adjective {word:?}",
                self.id
            )));
        }
        Ok(())
    }
}

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::TextSample;
use crate::error::{Error, Result};

/// Sample acceptance rules. Word-count bounds are exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterPolicy {
    pub min_words: usize,
    pub max_words: Option<usize>,
    pub required_lang: Option<String>,
    /// Corpus-wide: adjectives whose total count over the accepted samples
    /// is below this value are removed from every sample at ingest.
    pub min_adjective_total_freq: u64,
}

impl FilterPolicy {
    pub fn new(
        min_words: usize,
        max_words: Option<usize>,
        required_lang: Option<String>,
        min_adjective_total_freq: u64,
    ) -> Result<Self> {
        let policy = Self {
            min_words,
            max_words,
            required_lang,
            min_adjective_total_freq,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(max) = self.max_words {
            if max <= self.min_words {
                return Err(Error::invalid(format!(
                    "max_words ({max}) must exceed min_words ({})",
                    self.min_words
                )));
            }
        }
        Ok(())
    }

    /// English only, more than 600 words, adjectives seen more than 25 times corpus-wide.
    pub fn ingest_default() -> Self {
        Self {
            min_words: 600,
            max_words: None,
            required_lang: Some("en".into()),
            min_adjective_total_freq: 26,
        }
    }

    /// Strictly between 1000 and 6000 words.
    pub fn pdf_stage() -> Self {
        Self {
            min_words: 1000,
            max_words: Some(6000),
            required_lang: None,
            min_adjective_total_freq: 0,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "ingest-default" => Some(Self::ingest_default()),
            "pdf-stage" => Some(Self::pdf_stage()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Lang,
    MinWords,
    MaxWords,
}

impl RejectReason {
    pub fn code(self) -> &'static str {
        match self {
            RejectReason::Lang => "lang",
            RejectReason::MinWords => "min_words",
            RejectReason::MaxWords => "max_words",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterOutcome {
    Accept,
    Reject(RejectReason),
}

impl FilterOutcome {
    pub fn is_accept(self) -> bool {
        matches!(self, FilterOutcome::Accept)
    }
}

/// Applies the rules in fixed order (lang, min_words, max_words) and reports the first failure.
pub fn filter_sample(sample: &TextSample, policy: &FilterPolicy) -> FilterOutcome {
    if let Some(lang) = &policy.required_lang {
        if !sample.lang.eq_ignore_ascii_case(lang) {
            return FilterOutcome::Reject(RejectReason::Lang);
        }
    }
    if sample.word_count <= policy.min_words {
        return FilterOutcome::Reject(RejectReason::MinWords);
    }
    if let Some(max) = policy.max_words {
        if sample.word_count >= max {
            return FilterOutcome::Reject(RejectReason::MaxWords);
        }
    }
    FilterOutcome::Accept
}

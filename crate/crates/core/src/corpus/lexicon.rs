use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsio;

const BUNDLED_ADJECTIVES: &str = include_str!("../../data/adjectives.txt");
const BUNDLED_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

/// Set of lowercase adjectives that defines the feature vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjectiveLexicon {
    entries: BTreeSet<String>,
    source_name: String,
    version: String,
}

impl AdjectiveLexicon {
    pub fn new(
        entries: impl IntoIterator<Item = String>,
        source_name: impl Into<String>,
        version: impl Into<String>,
    ) -> Result<Self> {
        let mut set = BTreeSet::new();
        for entry in entries {
            let entry = entry.trim().to_string();
            if entry.is_empty() {
                continue;
            }
            if entry.chars().any(|c| c.is_uppercase()) {
                return Err(Error::invalid(format!(
                    "lexicon entry {entry:?} is not lowercase"
                )));
            }
            set.insert(entry);
        }
        if set.is_empty() {
            return Err(Error::invalid("lexicon is empty"));
        }
        Ok(Self {
            entries: set,
            source_name: source_name.into(),
            version: version.into(),
        })
    }

    /// Parses the one-adjective-per-line format. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str, source_name: &str, version: &str) -> Result<Self> {
        let entries = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(String::from);
        Self::new(entries, source_name, version)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fsio::read_to_string(path)?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let mut lex = Self::parse(&text, &name, "1")?;
        // version is the content digest, so the manifest pins the exact list
        lex.version = short_digest(&text);
        Ok(lex)
    }

    /// The small general-purpose English list shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_ADJECTIVES, "bundled-english-adjectives", "1")
            .expect("bundled lexicon is valid")
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(String::as_str)
    }

    pub fn source_name(&self) -> &str {
        &self.source_name
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(e);
            out.push('\n');
        }
        out
    }
}

fn short_digest(text: &str) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(&Sha256::digest(text.as_bytes())[..8])
}

/// Counts lexicon hits in `tokens`. Tokens are expected to be lowercased already.
pub fn extract_adjectives(tokens: &[String], lexicon: &AdjectiveLexicon) -> BTreeMap<String, u32> {
    let mut counts = BTreeMap::new();
    for token in tokens {
        if lexicon.contains(token) {
            *counts.entry(token.clone()).or_insert(0) += 1;
        }
    }
    counts
}

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        BUNDLED_STOPWORDS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect()
    })
}

/// Minimum share of English stopwords for untagged text to count as English.
pub const ENGLISH_STOPWORD_RATIO: f64 = 0.02;

/// Guesses the language tag of untagged text: `en` when at least 2% of the
/// tokens are common English stopwords, `und` otherwise.
pub fn detect_language(tokens: &[String]) -> &'static str {
    if tokens.is_empty() {
        return "und";
    }
    let set = stopwords();
    let hits = tokens.iter().filter(|t| set.contains(t.as_str())).count();
    if hits as f64 >= ENGLISH_STOPWORD_RATIO * tokens.len() as f64 {
        "en"
    } else {
        "und"
    }
}

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{filter_sample, AdjectiveLexicon, FilterOutcome, FilterPolicy, RejectReason, TextSample, TraitScores};
use crate::error::{Error, Result};
use crate::fsio;

pub const STORE_FORMAT_VERSION: u32 = 1;

const SAMPLES_FILE: &str = "samples.jsonl";
const ADJECTIVES_FILE: &str = "adjectives.jsonl";
const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjectiveOccurrence {
    pub sample_id: String,
    pub count: u32,
    pub scores: Option<TraitScores>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjectiveRecord {
    pub adjective: String,
    pub total_frequency: u64,
    pub occurrences: Vec<AdjectiveOccurrence>,
}

/// Provenance written next to the two tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreManifest {
    pub format_version: u32,
    pub lexicon_source: String,
    pub lexicon_version: String,
    pub policy: Option<FilterPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<serde_json::Value>,
}

impl StoreManifest {
    pub fn for_lexicon(lexicon: &AdjectiveLexicon, policy: Option<FilterPolicy>) -> Self {
        Self {
            format_version: STORE_FORMAT_VERSION,
            lexicon_source: lexicon.source_name().to_string(),
            lexicon_version: lexicon.version().to_string(),
            policy,
            generator: None,
        }
    }
}

/// The samples table plus the adjectives table derived from it.
/// Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStore {
    samples: Vec<TextSample>,
    adjectives: BTreeMap<String, AdjectiveRecord>,
    manifest: StoreManifest,
}

impl CorpusStore {
    pub fn from_samples(samples: Vec<TextSample>, manifest: StoreManifest) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &samples {
            if !seen.insert(s.id.as_str()) {
                return Err(Error::DuplicateId(s.id.clone()));
            }
            s.check_invariants()?;
        }
        let adjectives = derive_adjectives(&samples);
        Ok(Self {
            samples,
            adjectives,
            manifest,
        })
    }

    pub fn samples(&self) -> &[TextSample] {
        &self.samples
    }

    pub fn adjectives(&self) -> &BTreeMap<String, AdjectiveRecord> {
        &self.adjectives
    }

    pub fn manifest(&self) -> &StoreManifest {
        &self.manifest
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&TextSample> {
        self.samples.iter().find(|s| s.id == id)
    }

    /// Checks that the adjectives table is exactly what the samples table implies.
    pub fn check_consistency(&self) -> Result<()> {
        check_tables(&self.samples, &self.adjectives)
    }

    /// A new store holding the samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let samples = indices
            .iter()
            .map(|&i| {
                self.samples
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::invalid(format!("sample index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_samples(samples, self.manifest.clone())
    }
}

fn derive_adjectives(samples: &[TextSample]) -> BTreeMap<String, AdjectiveRecord> {
    let mut table: BTreeMap<String, AdjectiveRecord> = BTreeMap::new();
    for s in samples {
        for (word, &count) in &s.adj_freqs {
            let rec = table.entry(word.clone()).or_insert_with(|| AdjectiveRecord {
                adjective: word.clone(),
                total_frequency: 0,
                occurrences: Vec::new(),
            });
            rec.total_frequency += u64::from(count);
            rec.occurrences.push(AdjectiveOccurrence {
                sample_id: s.id.clone(),
                count,
                scores: s.scores.clone(),
            });
        }
    }
    table
}

fn check_tables(samples: &[TextSample], adjectives: &BTreeMap<String, AdjectiveRecord>) -> Result<()> {
    for (word, rec) in adjectives {
        let sum: u64 = rec.occurrences.iter().map(|o| u64::from(o.count)).sum();
        if sum != rec.total_frequency {
            return Err(Error::Inconsistent(format!(
                "adjective {word:?}: total_frequency {} but occurrences sum to {sum}",
                rec.total_frequency
            )));
        }
    }
    let derived = derive_adjectives(samples);
    if &derived != adjectives {
        let bad = derived
            .keys()
            .chain(adjectives.keys())
            .find(|k| derived.get(*k) != adjectives.get(*k))
            .cloned()
            .unwrap_or_default();
        return Err(Error::Inconsistent(format!(
            "adjectives table does not match samples table (first difference at {bad:?})"
        )));
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct CorpusRecord {
    id: String,
    text: String,
    #[serde(default)]
    lang: Option<String>,
    #[serde(default)]
    scores: Option<TraitScores>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub id: String,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub read: usize,
    pub accepted: usize,
    pub rejected: Vec<Rejection>,
    /// Adjectives removed by the corpus-wide frequency floor.
    pub dropped_adjectives: Vec<String>,
}

impl IngestReport {
    pub fn rejections_csv(&self) -> String {
        let mut out = String::from("id,reason\n");
        for r in &self.rejected {
            out.push_str(&csv_field(&r.id));
            out.push(',');
            out.push_str(r.reason.code());
            out.push('\n');
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Reads a corpus JSONL file, filters it and builds the store.
pub fn ingest(path: &Path, lexicon: &AdjectiveLexicon, policy: &FilterPolicy) -> Result<(CorpusStore, IngestReport)> {
    let text = fsio::read_to_string(path)?;
    ingest_str(&text, &path.display().to_string(), lexicon, policy)
}

/// [`ingest`] over in-memory JSONL; `source_name` only labels diagnostics.
pub fn ingest_str(
    jsonl: &str,
    source_name: &str,
    lexicon: &AdjectiveLexicon,
    policy: &FilterPolicy,
) -> Result<(CorpusStore, IngestReport)> {
    policy.validate()?;
    let mut report = IngestReport::default();
    let mut seen = HashSet::new();
    let mut accepted = Vec::new();

    for (idx, line) in jsonl.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CorpusRecord = serde_json::from_str(line).map_err(|e| Error::Malformed {
            source_name: source_name.to_string(),
            line: line_no,
            message: e.to_string(),
        })?;
        report.read += 1;
        if !seen.insert(rec.id.clone()) {
            return Err(Error::DuplicateId(rec.id));
        }
        let sample = TextSample::from_text(rec.id, rec.text, rec.lang.as_deref(), rec.scores, lexicon)
            .map_err(|e| match e {
                Error::ScoreOutOfRange { .. } => Error::Malformed {
                    source_name: source_name.to_string(),
                    line: line_no,
                    message: e.to_string(),
                },
                other => other,
            })?;
        match filter_sample(&sample, policy) {
            FilterOutcome::Accept => accepted.push(sample),
            FilterOutcome::Reject(reason) => report.rejected.push(Rejection {
                id: sample.id,
                reason,
            }),
        }
    }

    if policy.min_adjective_total_freq > 0 {
        let mut totals: BTreeMap<&str, u64> = BTreeMap::new();
        for s in &accepted {
            for (w, &c) in &s.adj_freqs {
                *totals.entry(w.as_str()).or_insert(0) += u64::from(c);
            }
        }
        let dropped: HashSet<String> = totals
            .into_iter()
            .filter(|&(_, t)| t < policy.min_adjective_total_freq)
            .map(|(w, _)| w.to_string())
            .collect();
        for s in &mut accepted {
            s.adj_freqs.retain(|w, _| !dropped.contains(w));
        }
        let mut dropped: Vec<String> = dropped.into_iter().collect();
        dropped.sort();
        report.dropped_adjectives = dropped;
    }

    report.accepted = accepted.len();
    let manifest = StoreManifest::for_lexicon(lexicon, Some(policy.clone()));
    let store = CorpusStore::from_samples(accepted, manifest)?;
    Ok((store, report))
}

fn to_jsonl<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut out = String::new();
    for row in rows {
        out.push_str(&serde_json::to_string(&row)?);
        out.push('\n');
    }
    Ok(out)
}

fn from_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = fsio::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Malformed {
                source_name: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Writes `samples.jsonl`, `adjectives.jsonl` and `manifest.json` into `dir`.
pub fn persist(store: &CorpusStore, dir: &Path) -> Result<()> {
    fsio::write_atomic(&dir.join(SAMPLES_FILE), to_jsonl(&store.samples)?.as_bytes())?;
    fsio::write_atomic(&dir.join(ADJECTIVES_FILE), to_jsonl(store.adjectives.values())?.as_bytes())?;
    let manifest = serde_json::to_string_pretty(&store.manifest)? + "\n";
    fsio::write_atomic(&dir.join(MANIFEST_FILE), manifest.as_bytes())?;
    Ok(())
}

/// Reads a store written by [`persist`] and verifies the two tables agree.
pub fn load(dir: &Path) -> Result<CorpusStore> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest: StoreManifest = serde_json::from_str(&fsio::read_to_string(&manifest_path)?)
        .map_err(|e| Error::Malformed {
            source_name: manifest_path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })?;
    if manifest.format_version != STORE_FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            expected: STORE_FORMAT_VERSION,
            found: manifest.format_version.to_string(),
        });
    }
    let samples: Vec<TextSample> = from_jsonl(&dir.join(SAMPLES_FILE))?;
    let records: Vec<AdjectiveRecord> = from_jsonl(&dir.join(ADJECTIVES_FILE))?;
    let mut adjectives = BTreeMap::new();
    for rec in records {
        if adjectives.insert(rec.adjective.clone(), rec).is_some() {
            return Err(Error::Inconsistent("duplicate adjective row".into()));
        }
    }
    check_tables(&samples, &adjectives)?;
    CorpusStore::from_samples(samples, manifest)
}

//! Python bindings: corpus stores, the word-density model, the learners,
//! metrics and the questionnaire model bank.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use traitlex::commonsense::{self, FusionMap, QuestionnaireResponse};
use traitlex::corpus::{self, AdjectiveLexicon, FilterPolicy, Trait};
use traitlex::eval;
use traitlex::ml::{self, Algorithm, Dataset, Prediction, TrainConfig, TrainedModel};
use traitlex::pdfmodel::{self, BinningScheme};
use traitlex::synth::{self, GeneratorSpec};

fn err(e: traitlex::Error) -> PyErr {
    match e {
        traitlex::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_trait(s: &str) -> PyResult<Trait> {
    s.parse().map_err(err)
}

fn policy(name: &str) -> PyResult<FilterPolicy> {
    FilterPolicy::preset(name).ok_or_else(|| PyValueError::new_err(format!("unknown policy preset {name:?}")))
}

/// Tool and file-format versions.
#[pyfunction]
fn version() -> String {
    format!(
        "{} (store v{}, pdf model v{}, ml model v{}, model bank v{})",
        env!("CARGO_PKG_VERSION"),
        corpus::STORE_FORMAT_VERSION,
        pdfmodel::PDF_MODEL_FORMAT_VERSION,
        ml::ML_MODEL_FORMAT_VERSION,
        commonsense::BANK_FORMAT_VERSION
    )
}

#[pyclass(name = "CorpusStore", module = "pytraitlex")]
pub struct PyCorpusStore {
    inner: corpus::CorpusStore,
}

#[pymethods]
impl PyCorpusStore {
    /// Reads a store directory written by `persist` or the CLI.
    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: corpus::load(&dir).map_err(err)?,
        })
    }

    /// Ingests a JSONL corpus; returns the store and the rejected ids.
    #[staticmethod]
    #[pyo3(signature = (path, lexicon=None, policy_name="ingest-default"))]
    fn ingest(path: PathBuf, lexicon: Option<PathBuf>, policy_name: &str) -> PyResult<(Self, Vec<(String, String)>)> {
        let lex = match lexicon {
            Some(p) => AdjectiveLexicon::load(&p).map_err(err)?,
            None => AdjectiveLexicon::bundled(),
        };
        let (inner, report) = corpus::ingest(&path, &lex, &policy(policy_name)?).map_err(err)?;
        let rejected = report
            .rejected
            .iter()
            .map(|r| (r.id.clone(), r.reason.code().to_string()))
            .collect();
        Ok((Self { inner }, rejected))
    }

    fn persist(&self, dir: PathBuf) -> PyResult<()> {
        corpus::persist(&self.inner, &dir).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn sample_ids(&self) -> Vec<String> {
        self.inner.samples().iter().map(|s| s.id.clone()).collect()
    }

    /// `{adjective: count}` for one sample.
    fn adjective_counts(&self, sample_id: &str) -> PyResult<BTreeMap<String, u32>> {
        self.inner
            .get(sample_id)
            .map(|s| s.adj_freqs.clone())
            .ok_or_else(|| PyValueError::new_err(format!("no sample {sample_id:?}")))
    }

    #[pyo3(signature = (sample_id, trait_code="N"))]
    fn score(&self, sample_id: &str, trait_code: &str) -> PyResult<Option<f64>> {
        let t = parse_trait(trait_code)?;
        self.inner
            .get(sample_id)
            .map(|s| s.score(t))
            .ok_or_else(|| PyValueError::new_err(format!("no sample {sample_id:?}")))
    }

    fn subset(&self, indices: Vec<usize>) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.subset(&indices).map_err(err)?,
        })
    }

    /// Percentage of scored samples per equal-width bin over [0, 1].
    #[pyo3(signature = (trait_code="N", n_bins=10))]
    fn distribution(&self, trait_code: &str, n_bins: usize) -> PyResult<Vec<f64>> {
        eval::score_distribution(&self.inner, parse_trait(trait_code)?, n_bins).map_err(err)
    }
}

/// Sliding-window synthetic corpus with known generating densities.
#[pyfunction]
#[pyo3(signature = (seed, n_samples, n_bins=8, words_per_bin=40, overlap=0.6))]
fn synth_corpus(seed: u64, n_samples: usize, n_bins: usize, words_per_bin: usize, overlap: f64) -> PyResult<PyCorpusStore> {
    let spec = GeneratorSpec::sliding_window(seed, n_samples, n_bins, words_per_bin, overlap).map_err(err)?;
    Ok(PyCorpusStore {
        inner: synth::generate_corpus(&spec).map_err(err)?.store,
    })
}

#[pyclass(name = "PdfModel", module = "pytraitlex")]
pub struct PyPdfModel {
    inner: pdfmodel::PdfPersonalityModel,
}

#[pymethods]
impl PyPdfModel {
    #[staticmethod]
    #[pyo3(signature = (store, trait_code="N", n_bins=8, lo=0.1, hi=0.9, min_word_freq=300, alpha=0.0))]
    #[allow(clippy::too_many_arguments)]
    fn build(
        store: &PyCorpusStore,
        trait_code: &str,
        n_bins: usize,
        lo: f64,
        hi: f64,
        min_word_freq: u64,
        alpha: f64,
    ) -> PyResult<Self> {
        let binning = BinningScheme::new(lo, hi, n_bins).map_err(err)?;
        let inner = pdfmodel::build_model(&store.inner, parse_trait(trait_code)?, binning, min_word_freq, alpha).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: pdfmodel::load_model(&path).map_err(err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        pdfmodel::serialize_model(&self.inner, &path).map_err(err)
    }

    fn labels(&self) -> Vec<f64> {
        self.inner.binning().labels()
    }

    fn n_words(&self) -> usize {
        self.inner.pdfs().len()
    }

    /// Prediction from `{adjective: count}`: a dict with phi, bin, label,
    /// confidence and words_used.
    fn predict(&self, py: Python<'_>, adj_counts: BTreeMap<String, u32>) -> PyResult<Py<PyAny>> {
        let p = pdfmodel::predict_freqs(&self.inner, &adj_counts).map_err(err)?;
        let d = pyo3::types::PyDict::new(py);
        d.set_item("phi", p.phi)?;
        d.set_item("bin", p.bin)?;
        d.set_item("label", p.label)?;
        d.set_item("confidence", p.confidence)?;
        d.set_item("words_used", p.words_used)?;
        Ok(d.into_any().unbind())
    }

    /// `{mae, rmse, marginal_accuracy, n, skipped}` on a store.
    #[pyo3(signature = (store, margin=0.10, policy_name="pdf-stage"))]
    fn evaluate(&self, store: &PyCorpusStore, margin: f64, policy_name: &str) -> PyResult<BTreeMap<String, f64>> {
        let e = eval::evaluate_pdf(&self.inner, &store.inner, &policy(policy_name)?, margin, &eval::default_thresholds())
            .map_err(err)?;
        Ok(BTreeMap::from([
            ("mae".to_string(), e.report.mae),
            ("rmse".to_string(), e.report.rmse),
            ("marginal_accuracy".to_string(), e.report.marginal_accuracy),
            ("n".to_string(), e.report.n as f64),
            ("skipped".to_string(), e.skipped.len() as f64),
        ]))
    }
}

#[pyfunction]
fn mae(pred: Vec<f64>, truth: Vec<f64>) -> PyResult<f64> {
    eval::mae(&pred, &truth).map_err(err)
}

#[pyfunction]
fn rmse(pred: Vec<f64>, truth: Vec<f64>) -> PyResult<f64> {
    eval::rmse(&pred, &truth).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (pred, truth, margin=0.10))]
fn marginal_accuracy(pred: Vec<f64>, truth: Vec<f64>, margin: f64) -> PyResult<f64> {
    eval::marginal_accuracy(&pred, &truth, margin).map_err(err)
}

fn dataset(x: Vec<Vec<f64>>, y: Vec<usize>) -> PyResult<Dataset> {
    let d = x.first().map_or(0, Vec::len);
    Dataset::new((0..d).map(|j| format!("x{j}")).collect(), x, Some(y), None).map_err(err)
}

fn algorithm(name: &str) -> PyResult<Algorithm> {
    name.parse().map_err(err)
}

/// A trained learner over numeric features with class labels.
#[pyclass(name = "Model", module = "pytraitlex")]
pub struct PyModel {
    inner: TrainedModel,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    #[pyo3(signature = (x, y, algorithm_name, seed=0))]
    fn train(x: Vec<Vec<f64>>, y: Vec<usize>, algorithm_name: &str, seed: u64) -> PyResult<Self> {
        let cfg = TrainConfig::new(algorithm(algorithm_name)?, seed);
        Ok(Self {
            inner: ml::train(&cfg, &dataset(x, y)?).map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: TrainedModel::load(&path).map_err(err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(err)
    }

    fn algorithm(&self) -> &'static str {
        self.inner.algorithm().name()
    }

    /// Class index (or score for score-trained regressors) per row.
    fn predict(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        x.iter()
            .map(|row| self.inner.predict(row).map(Prediction::as_f64).map_err(err))
            .collect()
    }
}

/// Per-fold and mean k-fold accuracy.
#[pyfunction]
#[pyo3(signature = (x, y, algorithm_name, k=10, seed=0))]
fn cross_validate(x: Vec<Vec<f64>>, y: Vec<usize>, algorithm_name: &str, k: usize, seed: u64) -> PyResult<(Vec<f64>, f64)> {
    let cfg = TrainConfig::new(algorithm(algorithm_name)?, seed);
    let cv = eval::cross_validate(&cfg, &dataset(x, y)?, k, seed).map_err(err)?;
    Ok((cv.fold_accuracies, cv.mean_accuracy))
}

/// Merges answer options by `mapping` and returns the fused percentages.
#[pyfunction]
fn fused_distribution(answers: Vec<usize>, mapping: Vec<usize>) -> PyResult<Vec<f64>> {
    let n = mapping.iter().max().map_or(0, |m| m + 1);
    let map = FusionMap {
        labels: (0..n).map(|i| i.to_string()).collect(),
        map: mapping,
    };
    let fused = commonsense::fuse_labels(&answers, &map).map_err(err)?;
    Ok(commonsense::label_distribution(&fused, n))
}

#[pyclass(name = "ModelBank", module = "pytraitlex")]
pub struct PyModelBank {
    inner: commonsense::ModelBank,
}

#[pymethods]
impl PyModelBank {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: commonsense::ModelBank::load(&path).map_err(err)?,
        })
    }

    fn questions(&self) -> Vec<String> {
        self.inner.best.keys().cloned().collect()
    }

    /// `{question_id: label}` from 50 Likert answers.
    fn predict(&self, likert: Vec<u8>) -> PyResult<BTreeMap<String, String>> {
        let r = QuestionnaireResponse::new("respondent", likert).map_err(err)?;
        self.inner.predict(&r).map_err(err)
    }
}

#[pymodule]
pub fn pytraitlex(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(version, m)?)?;
    m.add_function(wrap_pyfunction!(synth_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(mae, m)?)?;
    m.add_function(wrap_pyfunction!(rmse, m)?)?;
    m.add_function(wrap_pyfunction!(marginal_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(cross_validate, m)?)?;
    m.add_function(wrap_pyfunction!(fused_distribution, m)?)?;
    m.add_class::<PyCorpusStore>()?;
    m.add_class::<PyPdfModel>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyModelBank>()?;
    Ok(())
}

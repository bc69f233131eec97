//! Supervised learners over count or Likert features, plus dataset shaping.

mod dataset;
pub mod knn;
pub mod linear;
pub mod mlp;
mod shaping;
pub mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use dataset::{Dataset, TargetKind};
pub use knn::{Knn, KnnParams};
pub use linear::{LinearFit, LinearRegressionParams, OneVsRest, PerceptronParams, SvmParams};
pub use mlp::{Mlp, MlpParams};
pub use shaping::{
    bin_labels, filter_datapoints_by_coverage, frequency_threshold, select_features_by_frequency,
    select_features_by_min_total, DEFAULT_COVERAGE_FRACTION, DEFAULT_FEATURE_FRACTION,
};
pub use tree::{Forest, ForestClassifierParams, ForestRegressorParams, Tree, TreeParams};

use crate::error::{Error, Result};
use crate::fsio;
use crate::rng::seeded;

pub const ML_MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Perceptron,
    Mlp,
    Knn,
    DecisionTree,
    RandomForestClf,
    RandomForestReg,
    LinearRegression,
    LinearSvm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Perceptron,
        Algorithm::Mlp,
        Algorithm::Knn,
        Algorithm::DecisionTree,
        Algorithm::RandomForestClf,
        Algorithm::RandomForestReg,
        Algorithm::LinearRegression,
        Algorithm::LinearSvm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Perceptron => "perceptron",
            Algorithm::Mlp => "mlp",
            Algorithm::Knn => "knn",
            Algorithm::DecisionTree => "decision_tree",
            Algorithm::RandomForestClf => "random_forest_clf",
            Algorithm::RandomForestReg => "random_forest_reg",
            Algorithm::LinearRegression => "linear_regression",
            Algorithm::LinearSvm => "linear_svm",
        }
    }

    /// Regressors fit a real target; everything else predicts a class.
    pub fn is_regressor(self) -> bool {
        matches!(self, Algorithm::RandomForestReg | Algorithm::LinearRegression)
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown algorithm {s:?}")))
    }
}

/// Settings for every learner; only the selected algorithm's entry is read.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub perceptron: PerceptronParams,
    pub mlp: MlpParams,
    pub knn: KnnParams,
    pub decision_tree: TreeParams,
    pub random_forest_clf: ForestClassifierParams,
    pub random_forest_reg: ForestRegressorParams,
    pub linear_regression: LinearRegressionParams,
    pub linear_svm: SvmParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub seed: u64,
    #[serde(default)]
    pub hyperparams: Hyperparams,
}

impl TrainConfig {
    pub fn new(algorithm: Algorithm, seed: u64) -> Self {
        Self {
            algorithm,
            seed,
            hyperparams: Hyperparams::default(),
        }
    }
}

/// Learned parameters, tagged by algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", content = "params", rename_all = "snake_case")]
pub enum Learned {
    Perceptron(OneVsRest),
    Mlp(Mlp),
    Knn(Knn),
    DecisionTree(Tree),
    RandomForestClf(Forest),
    RandomForestReg(Forest),
    LinearRegression(LinearFit),
    LinearSvm(OneVsRest),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Prediction {
    Class(usize),
    Score(f64),
}

impl Prediction {
    pub fn as_f64(self) -> f64 {
        match self {
            Prediction::Class(c) => c as f64,
            Prediction::Score(s) => s,
        }
    }

    pub fn class(self) -> Option<usize> {
        match self {
            Prediction::Class(c) => Some(c),
            Prediction::Score(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub feature_names: Vec<String>,
    /// Label space the model was fitted on. A regressor fitted on class
    /// indices rounds its output back into `0..n_classes`.
    pub target: TargetKind,
    pub n_classes: usize,
    pub model: Learned,
}

/// Fits `config.algorithm` to `ds`. Classifiers use the class labels;
/// regressors use score labels when present and class indices otherwise.
pub fn train(config: &TrainConfig, ds: &Dataset) -> Result<TrainedModel> {
    if ds.n_rows() == 0 {
        return Err(Error::invalid("cannot train on an empty dataset"));
    }
    let hp = &config.hyperparams;
    let x = ds.x();
    let n_classes = ds.n_classes();

    let (target, model) = if config.algorithm.is_regressor() {
        let (target, y): (TargetKind, Vec<f64>) = match (ds.y_score(), ds.y_class()) {
            (Some(s), _) => (TargetKind::Score, s.to_vec()),
            (None, Some(c)) => (TargetKind::Class, c.iter().map(|&v| v as f64).collect()),
            (None, None) => unreachable!("dataset invariant"),
        };
        let model = match config.algorithm {
            Algorithm::RandomForestReg => Learned::RandomForestReg(tree::fit_forest_regressor(x, &y, &hp.random_forest_reg, config.seed)),
            _ => Learned::LinearRegression(linear::fit_linear_regression(x, &y, &hp.linear_regression)?),
        };
        (target, model)
    } else {
        let y = ds
            .y_class()
            .ok_or_else(|| Error::invalid(format!("{} needs class labels", config.algorithm)))?;
        let first = y[0];
        if y.iter().all(|&v| v == first) {
            return Err(Error::SingleClass);
        }
        let mut rng = seeded(config.seed);
        let model = match config.algorithm {
            Algorithm::Perceptron => Learned::Perceptron(linear::fit_perceptron(x, y, n_classes, &hp.perceptron, &mut rng)),
            Algorithm::LinearSvm => Learned::LinearSvm(linear::fit_linear_svm(x, y, n_classes, &hp.linear_svm, &mut rng)),
            Algorithm::Mlp => Learned::Mlp(mlp::fit_mlp(x, y, n_classes, &hp.mlp, &mut rng).0),
            Algorithm::Knn => Learned::Knn(Knn::fit(x, y, n_classes, &hp.knn)),
            Algorithm::DecisionTree => Learned::DecisionTree(tree::fit_tree_classifier(x, y, n_classes, &hp.decision_tree)),
            Algorithm::RandomForestClf => {
                Learned::RandomForestClf(tree::fit_forest_classifier(x, y, n_classes, &hp.random_forest_clf, config.seed))
            }
            Algorithm::RandomForestReg | Algorithm::LinearRegression => unreachable!(),
        };
        (TargetKind::Class, model)
    };

    Ok(TrainedModel {
        format_version: ML_MODEL_FORMAT_VERSION,
        feature_names: ds.feature_names().to_vec(),
        target,
        n_classes,
        model,
    })
}

impl TrainedModel {
    pub fn algorithm(&self) -> Algorithm {
        match self.model {
            Learned::Perceptron(_) => Algorithm::Perceptron,
            Learned::Mlp(_) => Algorithm::Mlp,
            Learned::Knn(_) => Algorithm::Knn,
            Learned::DecisionTree(_) => Algorithm::DecisionTree,
            Learned::RandomForestClf(_) => Algorithm::RandomForestClf,
            Learned::RandomForestReg(_) => Algorithm::RandomForestReg,
            Learned::LinearRegression(_) => Algorithm::LinearRegression,
            Learned::LinearSvm(_) => Algorithm::LinearSvm,
        }
    }

    /// Fails unless `names` equals the training snapshot.
    pub fn check_features(&self, names: &[String]) -> Result<()> {
        if names.len() != self.feature_names.len() {
            return Err(Error::ArityMismatch {
                expected: self.feature_names.len(),
                found: names.len(),
            });
        }
        match names.iter().zip(&self.feature_names).position(|(a, b)| a != b) {
            Some(column) => Err(Error::FeatureNameMismatch {
                column,
                expected: self.feature_names[column].clone(),
                found: names[column].clone(),
            }),
            None => Ok(()),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.feature_names.len() {
            return Err(Error::ArityMismatch {
                expected: self.feature_names.len(),
                found: x.len(),
            });
        }
        if let Some(j) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("feature {j} is not finite")));
        }
        let real = match &self.model {
            Learned::Perceptron(m) | Learned::LinearSvm(m) => return Ok(Prediction::Class(m.predict(x))),
            Learned::Mlp(m) => return Ok(Prediction::Class(m.predict(x))),
            Learned::Knn(m) => return Ok(Prediction::Class(m.predict(x))),
            Learned::DecisionTree(t) => return Ok(Prediction::Class(t.predict_class(x))),
            Learned::RandomForestClf(f) => return Ok(Prediction::Class(f.predict_class(x, self.n_classes))),
            Learned::RandomForestReg(f) => f.predict_mean(x),
            Learned::LinearRegression(m) => m.predict(x),
        };
        Ok(match self.target {
            TargetKind::Score => Prediction::Score(real.clamp(0.0, 1.0)),
            TargetKind::Class => {
                let top = self.n_classes.saturating_sub(1) as f64;
                Prediction::Class(real.round().clamp(0.0, top) as usize)
            }
        })
    }

    /// Predictions for every row of `ds`, after checking its feature names.
    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<Prediction>> {
        self.check_features(ds.feature_names())?;
        ds.x().iter().map(|r| self.predict(r)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let found = v.get("format_version").cloned().unwrap_or(serde_json::Value::Null);
        if found.as_u64() != Some(u64::from(ML_MODEL_FORMAT_VERSION)) {
            return Err(Error::VersionMismatch {
                expected: ML_MODEL_FORMAT_VERSION,
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

/// Share of predictions equal to `truth`.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    if pred.is_empty() {
        return 0.0;
    }
    pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / pred.len() as f64
}

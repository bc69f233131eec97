use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "traitlex", about = "Trait-score estimation, learners and questionnaire answer prediction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Read a JSONL corpus, filter it and write a corpus store
    Ingest(IngestArgs),
    /// Percentage of samples per equal-width score bin
    Distribution(DistributionArgs),
    /// Build a per-word score-density model from a store
    PdfBuild(PdfBuildArgs),
    /// Predict trait bins for every sample of a store
    PdfPredict(PdfPredictArgs),
    /// Predict and score against the store's true scores
    PdfEval(PdfEvalArgs),
    /// Train one learner on a feature CSV or a store
    MlTrain(MlTrainArgs),
    /// Evaluate a trained learner
    MlEval(MlEvalArgs),
    /// Train answer models for every question of a survey
    CsTrain(CsTrainArgs),
    /// Predict answers from one questionnaire response
    CsPredict(CsPredictArgs),
    /// Generate a synthetic corpus (and optionally a survey)
    Synth(SynthArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Distribution(_) => "distribution",
            Command::PdfBuild(_) => "pdf-build",
            Command::PdfPredict(_) => "pdf-predict",
            Command::PdfEval(_) => "pdf-eval",
            Command::MlTrain(_) => "ml-train",
            Command::MlEval(_) => "ml-eval",
            Command::CsTrain(_) => "cs-train",
            Command::CsPredict(_) => "cs-predict",
            Command::Synth(_) => "synth",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Class,
    Score,
}

#[derive(Debug, Args, Serialize)]
pub struct PolicyArgs {
    /// Named filter preset
    #[arg(long)]
    pub policy: Option<String>,
    /// Override: minimum token count
    #[arg(long)]
    pub min_words: Option<usize>,
    /// Override: maximum token count
    #[arg(long)]
    pub max_words: Option<usize>,
    /// Override: required language code
    #[arg(long)]
    pub lang: Option<String>,
    /// Override: minimum total adjective count per sample
    #[arg(long)]
    pub min_adjective_freq: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct BinningArgs {
    /// Trait code (O, C, E, A, N)
    #[arg(long = "trait", default_value = "N")]
    pub trait_: String,
    #[arg(long, default_value_t = 8)]
    pub bins: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lo: f64,
    #[arg(long, default_value_t = 0.9)]
    pub hi: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    /// Corpus JSONL: one {"id","text","lang"?,"scores"?} object per line
    #[arg(long)]
    pub input: PathBuf,
    /// Output store directory
    #[arg(long)]
    pub out: PathBuf,
    /// Adjective list (one word per line); the bundled list by default
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[command(flatten)]
    pub policy: PolicyArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct DistributionArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long = "trait", default_value = "N")]
    pub trait_: String,
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PdfBuildArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub binning: BinningArgs,
    #[arg(long, default_value_t = 300)]
    pub min_word_freq: u64,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    /// Output model JSON
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PdfPredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// Output predictions CSV
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PdfEvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long, default_value_t = 0.10)]
    pub margin: f64,
    /// Comma-separated confidence thresholds; 0 to 10 in steps of 0.5 by default
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    /// Output directory for report.csv, curve.csv, predictions.csv and skipped.csv
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct DataArgs {
    /// Feature CSV with a trailing `label` column
    #[arg(long, conflicts_with = "corpus")]
    pub data: Option<PathBuf>,
    /// Corpus store; adjective counts become features
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Target::Class)]
    pub target: Target,
    #[command(flatten)]
    pub binning: BinningArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct MlTrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub algorithm: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON file overriding learner settings
    #[arg(long)]
    pub hyperparams: Option<PathBuf>,
    /// Store input only: keep adjectives whose total count reaches this fraction of the mean
    #[arg(long, default_value_t = 0.10)]
    pub feature_fraction: f64,
    /// Store input only: keep samples whose adjective total reaches this fraction of the mean
    #[arg(long, default_value_t = 0.055)]
    pub coverage_fraction: f64,
    /// Also run k-fold cross-validation and write <out>.cv.csv
    #[arg(long)]
    pub k: Option<usize>,
    /// Output model JSON
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct MlEvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0.10)]
    pub margin: f64,
    /// Output directory for report.csv, predictions.csv and (classes) confusion.csv
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CsTrainArgs {
    /// Survey CSV: respondent_id,q1..q50,a_<qid>...
    #[arg(long)]
    pub survey: PathBuf,
    /// Question catalog JSON; the bundled catalog by default
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Comma-separated algorithm names; all by default
    #[arg(long, value_delimiter = ',')]
    pub algorithms: Option<Vec<String>>,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.05)]
    pub min_abs_r: f64,
    #[arg(long)]
    pub hyperparams: Option<PathBuf>,
    /// Output directory for bank.json, report.csv, best.csv and rejected.csv
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CsPredictArgs {
    /// Model bank JSON written by cs-train
    #[arg(long)]
    pub model: PathBuf,
    /// File with 50 Likert values (1-5); prompts on stdin when absent
    #[arg(long)]
    pub answers_file: Option<PathBuf>,
    /// Output CSV; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Generator spec JSON; overrides the sliding-window flags below
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2500)]
    pub samples: usize,
    #[arg(long, default_value_t = 8)]
    pub bins: usize,
    #[arg(long, default_value_t = 40)]
    pub words_per_bin: usize,
    #[arg(long, default_value_t = 0.6)]
    pub overlap: f64,
    /// Add the threshold-rule survey with this many respondents
    #[arg(long)]
    pub respondents: Option<usize>,
    /// Output directory
    #[arg(long)]
    pub out_dir: PathBuf,
}

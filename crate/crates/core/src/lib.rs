//! Lexical personality-trait estimation.
//!
//! * [`corpus`]: tokenizing, adjective extraction, sample filters, the two-table store.
//! * [`pdfmodel`]: per-adjective binned score densities and their aggregation.
//! * [`ml`]: from-scratch supervised learners over adjective or questionnaire features.
//! * [`eval`]: metrics, splits, cross-validation, confusion matrices, confidence curves.
//! * [`commonsense`]: answer prediction for multi-choice questions from Likert responses.
//! * [`synth`]: seeded synthetic corpora and surveys with known ground truth.

pub mod commonsense;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod fsio;
pub mod ml;
pub mod pdfmodel;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};

//! Batch analytics for short-text health discourse.
//!
//! The crate covers a five-step workflow over file-based post corpora:
//!
//! 1. [`corpus`] loads line-delimited JSON posts, deduplicates them and
//!    filters by language; [`matchkw`] selects posts by keyword and proposes
//!    new hashtags for snowball expansion of the keyword list.
//! 2. [`textprep`] normalizes text three ways: placeholder tokens for
//!    classification, light cleanup for lexicon scoring, and lemmatized,
//!    stopword-free tokens for topic modeling.
//! 3. [`classify`] trains hashed-feature logistic regression models and
//!    runs the two-stage relevant/irrelevant then promotional/laypeople split.
//! 4. [`sentiment`] scores word-category percentages against an open
//!    lexicon format and aggregates them by month or state ([`geo`]).
//! 5. [`btm`] fits a biterm topic model by collapsed Gibbs sampling, infers
//!    per-post topics and folds them through a hand-authored merge map.
//!
//! [`stats`] provides monthly aggregation, the Mann-Kendall trend test and
//! Pearson correlation with Student-t significance. [`pipeline`] wires the
//! stages into restartable file-to-file commands, which the
//! `discourse-miner` binary exposes on the command line.
//!
//! Runnable examples for each capability live in `examples/`.

pub mod btm;
pub mod classify;
pub mod corpus;
mod error;
pub mod geo;
pub mod matchkw;
pub mod pipeline;
pub mod sentiment;
pub mod stats;
pub mod textprep;

pub use error::{Error, Result};

//! Severity triage for online mental-health forum posts.
//!
//! The crate covers the whole pipeline: ingesting forum threads, extracting
//! bag-of-words, lexicon, context, topic and metadata features, training
//! gradient-boosted tree classifiers and majority-vote ensembles over them,
//! evaluating with the shared-task metric suite, and running user-level
//! longitudinal analyses (severity trends, first/last contingency tables,
//! moderator response times).

pub mod analytics;
pub mod cli;
pub mod contextfeat;
pub mod corpus;
pub mod densevec;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod gbt;
pub mod label;
pub mod model;
pub mod psychfeat;
pub mod synthgen;
pub mod textprep;
pub mod topics;

pub use error::{Result, TriageError};
pub use label::SeverityLabel;

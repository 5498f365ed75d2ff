//! Output-similarity metrics for generated code, and the tooling to compare
//! them against human semantic-correctness labels.
//!
//! The pipeline is file-mediated: [`corpus`] loads samples, [`textprep`]
//! tokenizes and standardizes text, [`metrics`] scores each prediction against
//! its reference, [`stats`] computes offsets and correlations against the human
//! labels, and [`report`] renders the resulting tables.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod parallel;
pub mod report;
pub mod stats;
pub mod textprep;

pub use error::{Error, Result};

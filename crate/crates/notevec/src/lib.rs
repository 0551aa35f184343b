//! notevec turns free-text chart notes into quantitative model features.
//!
//! The pipeline: clean and tokenize notes ([`corpus`]), train skip-gram
//! embeddings ([`embedding`]), query similarity and cluster the vector
//! space ([`vecops`]), score notes into per-encounter features
//! ([`features`]), and evaluate them against a readmission label with a
//! boosted stump ensemble and ROC AUC ([`learn`]). [`synth`] generates
//! planted-structure data so every stage is testable at desk scale, and
//! [`cli`] strings the stages together as subcommands over one config file.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod features;
pub mod learn;
pub mod synth;
pub mod vecops;

pub use error::{Error, Result};

//! Extraction of turn-segmented dialogue corpora from plain-text books,
//! with dataset splitting, corpus statistics, annotation sampling and a
//! response evaluation suite.

pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod extract;
pub mod filters;
pub mod ingest;
pub mod lang;
pub mod pipeline;
pub mod qa;
pub mod split;
pub mod stats;
pub mod text;

pub use config::PipelineConfig;
pub use error::{Error, Result};

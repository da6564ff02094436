//! File formats, parallel generation and the command-line pipeline around
//! [`stormgen_core`].
//!
//! The pipeline is `fit` (CSV record to model bundle), `generate` (bundle to
//! scenario set), `evaluate` (scenarios against the record) and `report`.

pub mod bundle;
pub mod config;
pub mod error;
pub mod evaluate;
pub mod ingest;
pub mod output;
pub mod parallel;
pub mod pipeline;
pub mod report;

pub use error::{PipelineError, Result};

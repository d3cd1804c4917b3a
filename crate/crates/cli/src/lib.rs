//! Batch front end for the design-space exploration engine.
//!
//! The library half of the `cosmos` binary: configuration ingestion, the
//! four commands, canonical artifact serialization and the report builder.
//! Kept as a library so integration tests can drive full runs in-process.

pub mod commands;
pub mod config;
pub mod format;
pub mod report;

use std::path::PathBuf;

use cosmos_core::backend::BackendError;
use cosmos_core::characterize::CharacterizeError;
use cosmos_core::mapper::MapError;
use cosmos_core::model::ModelError;
use cosmos_core::planner::PlanError;
use cosmos_core::tmg::TmgError;

/// Command-level failures, mapped onto process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("missing required artifacts: {0:?}; run the earlier stages into this output directory first")]
    MissingInputs(Vec<String>),
    #[error("characterization error: {0}")]
    Characterize(#[from] CharacterizeError),
    #[error("planning error: {0}")]
    Plan(#[from] PlanError),
    #[error("mapping error: {0}")]
    Map(#[from] MapError),
    #[error("backend error: {0}")]
    Backend(#[from] BackendError),
    #[error("model error: {0}")]
    Model(#[from] ModelError),
    #[error("graph error: {0}")]
    Graph(#[from] TmgError),
    #[error("exhaustive composition refused: {combinations} combinations exceed the guard of {max}")]
    Refusal { combinations: u128, max: u64 },
}

impl CliError {
    /// 2 = configuration/usage, 3 = planning or mapping, 4 = refusal.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_)
            | CliError::Io { .. }
            | CliError::MissingInputs(_)
            | CliError::Characterize(_)
            | CliError::Backend(_)
            | CliError::Model(_) => 2,
            CliError::Plan(_) | CliError::Map(_) | CliError::Graph(_) => 3,
            CliError::Refusal { .. } => 4,
        }
    }
}

//! Error type mapping every failure onto the exit-code contract:
//! 1 usage/config, 2 data, 3 empty-result pipeline.

use std::path::PathBuf;

use thiserror::Error;

use vasculatree::graph::GraphError;
use vasculatree::ingest::IngestError;
use vasculatree::pipeline::{PipelineError, SolverExportError};
use vasculatree::project::ProjectError;
use vasculatree::prune::PruneError;
use vasculatree::tree::TreeError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{message}")]
    Usage { message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Project(#[from] ProjectError),
    #[error(transparent)]
    SolverExport(#[from] SolverExportError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage {
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage { .. } => 1,
            CliError::Io { .. } => 2,
            CliError::Ingest(_)
            | CliError::Graph(_)
            | CliError::Tree(_)
            | CliError::Project(_)
            | CliError::SolverExport(_) => 2,
            CliError::Pipeline(err) => match err {
                PipelineError::Config(_)
                | PipelineError::InvalidConfig { .. }
                | PipelineError::UnmaterializedSelection { .. } => 1,
                PipelineError::EmptyResult { .. } => 3,
                // A filtered-out inlet leaves nothing to build on: an
                // empty result rather than malformed data.
                PipelineError::Step {
                    source: PruneError::RootNotEligible { .. },
                    ..
                } => 3,
                PipelineError::Step { .. } | PipelineError::Tree(_) => 2,
            },
        }
    }
}

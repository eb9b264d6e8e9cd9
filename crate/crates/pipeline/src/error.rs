use seekcad_clients::ClientError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::session::Status;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Retrieve,
    Generate,
    Compile,
    Render,
    Judge,
    Refine,
    Edit,
    Evaluate,
    Session,
}

#[derive(Debug, Clone, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("compile failed: {0}")]
    CompileFailed(String),
    #[error("render failed: {0}")]
    RenderFailed(String),
    #[error("retrieval failed: {0}")]
    Retrieval(String),
    #[error("session {0} not found")]
    NotFound(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("session is {0:?}; it must be Done")]
    NotReady(Status),
    #[error("i/o: {0}")]
    Io(String),
}

impl PipelineError {
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::Client(e) => match e {
                ClientError::ContextOverflow { .. } => "ContextOverflow",
                ClientError::VlmUnavailable(_) => "VlmUnavailable",
                ClientError::UnparseableVerdict(_) => "UnparseableVerdict",
                ClientError::EmbedderFailure(_) => "EmbedderFailure",
                ClientError::Timeout(_) => "Timeout",
                ClientError::MockExhausted(_) => "MockExhausted",
                ClientError::Config(_) => "Config",
                _ => "BackendError",
            },
            PipelineError::CompileFailed(_) => "CompileFailed",
            PipelineError::RenderFailed(_) => "RenderFailed",
            PipelineError::Retrieval(_) => "RetrievalFailed",
            PipelineError::NotFound(_) => "NotFound",
            PipelineError::InvalidRequest(_) => "InvalidRequest",
            PipelineError::NotReady(_) => "NotReady",
            PipelineError::Io(_) => "Io",
        }
    }

    pub fn at(&self, stage: Stage) -> StageFailure {
        StageFailure {
            stage,
            code: self.code().to_string(),
            message: self.to_string(),
        }
    }
}

impl From<std::io::Error> for PipelineError {
    fn from(e: std::io::Error) -> Self {
        PipelineError::Io(e.to_string())
    }
}

/// A recorded failure: the error payload of the HTTP API as well.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: Stage,
    pub code: String,
    pub message: String,
}

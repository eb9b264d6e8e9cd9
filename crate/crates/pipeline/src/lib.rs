//! Text-to-CAD sessions: retrieval-augmented generation, step-wise renders,
//! visual judging and refinement, plus batch evaluation and an HTTP API.

pub mod batch;
pub mod cons;
mod error;
pub mod extract;
pub mod pipeline;
pub mod server;
pub mod session;

pub use error::{PipelineError, Stage, StageFailure};
pub use pipeline::{Pipeline, PipelineConfig};
pub use session::{SessionState, SessionStore, Status};

//! Turning an LLM reply into a compiled model.

use crate::PipelineError;
use seekcad_core::kernel::{compile_steps, LabeledMesh, TessellationConfig};
use seekcad_core::model::SsrModelDoc;
use seekcad_core::script::{auto_fix, lower, parse, Diagnostic, Severity};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub severity: String,
    pub code: String,
    pub line: usize,
    pub col: usize,
    pub message: String,
    pub fix_applied: bool,
}

impl From<&Diagnostic> for DiagnosticRecord {
    fn from(d: &Diagnostic) -> Self {
        DiagnosticRecord {
            severity: match d.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
            }
            .into(),
            code: d.code.into(),
            line: d.span.line,
            col: d.span.col,
            message: d.message.clone(),
            fix_applied: d.fix_applied,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Extracted {
    /// The repaired script, without fences or prose.
    pub code: String,
    pub diagnostics: Vec<DiagnosticRecord>,
    pub doc: SsrModelDoc,
}

/// Whether unfenced text has at least one `name = ...(` statement line.
fn looks_like_script(text: &str) -> bool {
    text.lines().any(|l| {
        let Some((lhs, rhs)) = l.split_once('=') else { return false };
        let lhs = lhs.trim();
        !lhs.is_empty()
            && lhs.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '.')
            && !rhs.starts_with('=')
            && rhs.contains('(')
    })
}

/// Repairs, parses and lowers a reply.
pub fn extract_script(reply: &str) -> Result<Extracted, PipelineError> {
    if !reply.contains("```") && !looks_like_script(reply) {
        return Err(PipelineError::CompileFailed("no script found".into()));
    }
    let (code, fixes) = auto_fix(reply);
    let script = parse(&code).map_err(|diags| {
        let first = diags.iter().find(|d| d.severity == Severity::Error).unwrap_or(&diags[0]);
        PipelineError::CompileFailed(first.to_string())
    })?;
    let doc = lower(&script).map_err(|e| PipelineError::CompileFailed(format!("line {}: {}", e.span.line, e.message)))?;
    let diagnostics = fixes.iter().chain(&script.warnings).map(DiagnosticRecord::from).collect();
    Ok(Extracted { code, diagnostics, doc })
}

/// Running boolean folds of a document, one per triplet.
pub fn compile_folds(doc: &SsrModelDoc, cfg: &TessellationConfig) -> Result<Vec<LabeledMesh>, PipelineError> {
    compile_steps(doc, cfg).map_err(|e| PipelineError::CompileFailed(e.to_string()))
}

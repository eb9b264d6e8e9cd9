//! Clients for the three external model roles: a reasoning LLM that writes
//! scripts, a VLM that judges renders, and an embedding model for retrieval.
//!
//! Each role has an HTTP backend speaking the chat-completions wire format and
//! an offline stand-in ([`MockLlm`], [`MockVlm`], [`HashingEmbedder`],
//! [`GrayEmbedder`]) so the whole pipeline can run without a network.

mod cot;
mod embed;
mod http;
mod mock;
mod verdict;

pub use cot::{extract_think, split_segments};
pub use embed::{cosine, tokenize, EmbeddingClient, GrayEmbedder, HashingEmbedder, ImageEmbedder};
pub use http::{network_requests, HttpConfig, HttpEmbedder, HttpLlm, HttpVlm};
pub use mock::{MockEntry, MockLlm, MockScript, MockVlm, Role};
pub use verdict::{judge_alignment, parse_verdict, Verdict, VerdictKind, DEFAULT_JUDGE_TEMPLATE};

use seekcad_render::Raster;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClientError {
    #[error("request timed out: {0}")]
    Timeout(String),
    #[error("backend returned status {status}: {message}")]
    Backend { status: u16, message: String },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("prompt needs about {estimated} tokens but only {budget} fit the context")]
    ContextOverflow { estimated: usize, budget: usize },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("vision model unavailable: {0}")]
    VlmUnavailable(String),
    #[error("no verdict marker in reply: {0:?}")]
    UnparseableVerdict(String),
    #[error("embedding failed: {0}")]
    EmbedderFailure(String),
    #[error("mock script has no {0} reply left for this request")]
    MockExhausted(Role),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("configuration: {0}")]
    Config(String),
}

/// Rough token count used for pre-flight budget checks: four characters per token.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "user".into(),
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "assistant".into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub top_p: f64,
    pub max_context_tokens: usize,
    /// Tokens held back for the reply when checking the prompt budget.
    pub reply_reserve: usize,
}

impl ChatRequest {
    pub fn new(system: impl Into<String>, user: impl Into<String>) -> Self {
        ChatRequest {
            system: system.into(),
            messages: vec![ChatMessage::user(user)],
            temperature: 0.7,
            top_p: 0.8,
            max_context_tokens: 15_000,
            reply_reserve: 4_000,
        }
    }

    /// System prompt and messages as one text, in order.
    pub fn full_text(&self) -> String {
        let mut out = self.system.clone();
        for m in &self.messages {
            out.push_str("\n\n");
            out.push_str(&m.content);
        }
        out
    }

    pub fn prompt_tokens(&self) -> usize {
        estimate_tokens(&self.system) + self.messages.iter().map(|m| estimate_tokens(&m.content)).sum::<usize>()
    }

    pub fn check(&self) -> Result<(), ClientError> {
        if self.temperature < 0.0 {
            return Err(ClientError::InvalidRequest(format!("temperature {}", self.temperature)));
        }
        let budget = self.max_context_tokens.saturating_sub(self.reply_reserve);
        let estimated = self.prompt_tokens();
        if estimated > budget {
            return Err(ClientError::ContextOverflow { estimated, budget });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: usize,
    pub completion_tokens: usize,
}

/// What a backend sent back before reasoning extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct RawReply {
    pub answer: String,
    /// Content of an explicit reasoning channel, when the backend has one.
    pub reasoning: Option<String>,
    pub usage: TokenUsage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub answer: String,
    pub cot: Vec<String>,
    pub usage: TokenUsage,
}

impl ChatResponse {
    /// Prefers the explicit reasoning channel, then a `<think>` block in the answer.
    pub fn from_raw(raw: RawReply) -> ChatResponse {
        let (answer, think) = extract_think(&raw.answer);
        let reasoning = raw.reasoning.filter(|r| !r.trim().is_empty()).or(think);
        ChatResponse {
            answer,
            cot: reasoning.as_deref().map(split_segments).unwrap_or_default(),
            usage: raw.usage,
        }
    }
}

pub trait LlmClient: Send + Sync {
    fn name(&self) -> String;

    fn send(&self, req: &ChatRequest) -> Result<RawReply, ClientError>;

    /// Checks the prompt budget locally, then sends and extracts the CoT.
    fn chat(&self, req: &ChatRequest) -> Result<ChatResponse, ClientError> {
        req.check()?;
        Ok(ChatResponse::from_raw(self.send(req)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VlmRequest {
    pub prompt: String,
    pub images: Vec<Raster>,
}

pub trait VlmClient: Send + Sync {
    fn name(&self) -> String;

    fn send(&self, req: &VlmRequest) -> Result<String, ClientError>;
}

//! Scripted replies for offline runs.
//!
//! A mock script is JSON lines of `{"role", "match"?, "reply", "reasoning"?,
//! "repeat"?}`. For each request the first unused entry of the right role
//! whose `match` text occurs in the prompt is replayed and marked used;
//! `repeat` entries are never used up.

use crate::{estimate_tokens, ChatRequest, ClientError, LlmClient, RawReply, TokenUsage, VlmClient, VlmRequest};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::sync::{Arc, Mutex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Llm,
    Vlm,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Llm => "llm",
            Role::Vlm => "vlm",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockEntry {
    pub role: Role,
    #[serde(rename = "match", default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
    pub reply: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub repeat: bool,
}

impl MockEntry {
    pub fn llm(reply: impl Into<String>) -> Self {
        MockEntry {
            role: Role::Llm,
            pattern: None,
            reply: reply.into(),
            reasoning: None,
            repeat: false,
        }
    }

    pub fn vlm(reply: impl Into<String>) -> Self {
        MockEntry {
            role: Role::Vlm,
            ..MockEntry::llm(reply)
        }
    }

    pub fn with_reasoning(mut self, r: impl Into<String>) -> Self {
        self.reasoning = Some(r.into());
        self
    }

    pub fn matching(mut self, pattern: impl Into<String>) -> Self {
        self.pattern = Some(pattern.into());
        self
    }

    pub fn repeating(mut self) -> Self {
        self.repeat = true;
        self
    }
}

#[derive(Debug, Default)]
struct State {
    entries: Vec<(MockEntry, bool)>,
    log: Vec<(Role, String)>,
}

/// Shared handle; clones replay from the same script.
#[derive(Debug, Clone, Default)]
pub struct MockScript {
    state: Arc<Mutex<State>>,
}

impl MockScript {
    pub fn new(entries: Vec<MockEntry>) -> Self {
        MockScript {
            state: Arc::new(Mutex::new(State {
                entries: entries.into_iter().map(|e| (e, false)).collect(),
                log: Vec::new(),
            })),
        }
    }

    pub fn from_jsonl(text: &str) -> Result<Self, ClientError> {
        let entries = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| ClientError::Config(format!("mock script line {}: {e}", i + 1)))
            })
            .collect::<Result<_, _>>()?;
        Ok(MockScript::new(entries))
    }

    pub fn load(path: &Path) -> Result<Self, ClientError> {
        let text = std::fs::read_to_string(path).map_err(|e| ClientError::Config(format!("{}: {e}", path.display())))?;
        Self::from_jsonl(&text)
    }

    fn next(&self, role: Role, prompt: &str) -> Result<MockEntry, ClientError> {
        let mut st = self.state.lock().expect("mock state poisoned");
        st.log.push((role, prompt.to_string()));
        let slot = st
            .entries
            .iter_mut()
            .find(|(e, used)| !*used && e.role == role && e.pattern.as_ref().is_none_or(|p| prompt.contains(p.as_str())))
            .ok_or(ClientError::MockExhausted(role))?;
        slot.1 = !slot.0.repeat;
        Ok(slot.0.clone())
    }

    /// Prompts received so far, in order.
    pub fn log(&self) -> Vec<(Role, String)> {
        self.state.lock().expect("mock state poisoned").log.clone()
    }

    pub fn calls(&self, role: Role) -> usize {
        self.log().iter().filter(|(r, _)| *r == role).count()
    }

    /// Unused, non-repeating entries left for `role`.
    pub fn remaining(&self, role: Role) -> usize {
        let st = self.state.lock().expect("mock state poisoned");
        st.entries.iter().filter(|(e, used)| e.role == role && !used && !e.repeat).count()
    }
}

#[derive(Debug, Clone)]
pub struct MockLlm(pub MockScript);

impl LlmClient for MockLlm {
    fn name(&self) -> String {
        "mock-llm".into()
    }

    fn send(&self, req: &ChatRequest) -> Result<RawReply, ClientError> {
        let e = self.0.next(Role::Llm, &req.full_text())?;
        Ok(RawReply {
            usage: TokenUsage {
                prompt_tokens: req.prompt_tokens(),
                completion_tokens: estimate_tokens(&e.reply),
            },
            answer: e.reply,
            reasoning: e.reasoning,
        })
    }
}

#[derive(Debug, Clone)]
pub struct MockVlm(pub MockScript);

impl VlmClient for MockVlm {
    fn name(&self) -> String {
        "mock-vlm".into()
    }

    fn send(&self, req: &VlmRequest) -> Result<String, ClientError> {
        Ok(self.0.next(Role::Vlm, &req.prompt)?.reply)
    }
}

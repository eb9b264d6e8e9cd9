//! Chat-completions style HTTP backends.

use crate::{
    ChatRequest, ClientError, EmbeddingClient, LlmClient, RawReply, TokenUsage, VlmClient, VlmRequest,
};
use base64::Engine;
use serde_json::{json, Value};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

static NETWORK_REQUESTS: AtomicUsize = AtomicUsize::new(0);

/// HTTP attempts made by any backend in this process.
pub fn network_requests() -> usize {
    NETWORK_REQUESTS.load(Ordering::SeqCst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    /// Base URL up to and including the API version, e.g. `http://localhost:8000/v1`.
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub attempts: u32,
    pub backoff: Duration,
}

impl HttpConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        HttpConfig {
            base_url: base_url.into(),
            model: model.into(),
            api_key: None,
            timeout: Duration::from_secs(120),
            attempts: 2,
            backoff: Duration::from_secs(1),
        }
    }

    fn from_env(url: &str, model: &str, key: &str) -> Option<Self> {
        let base = std::env::var(url).ok().filter(|s| !s.is_empty())?;
        let mut cfg = HttpConfig::new(base, std::env::var(model).unwrap_or_else(|_| "default".into()));
        cfg.api_key = std::env::var(key).ok().filter(|s| !s.is_empty());
        Some(cfg)
    }

    /// `SEEKCAD_LLM_URL`, `SEEKCAD_LLM_MODEL`, `SEEKCAD_LLM_KEY`.
    pub fn llm_from_env() -> Option<Self> {
        Self::from_env("SEEKCAD_LLM_URL", "SEEKCAD_LLM_MODEL", "SEEKCAD_LLM_KEY")
    }

    /// `SEEKCAD_VLM_URL`, `SEEKCAD_VLM_MODEL`, `SEEKCAD_VLM_KEY`.
    pub fn vlm_from_env() -> Option<Self> {
        Self::from_env("SEEKCAD_VLM_URL", "SEEKCAD_VLM_MODEL", "SEEKCAD_VLM_KEY")
    }

    /// `SEEKCAD_EMBED_URL`, `SEEKCAD_EMBED_MODEL`, `SEEKCAD_EMBED_KEY`.
    pub fn embed_from_env() -> Option<Self> {
        Self::from_env("SEEKCAD_EMBED_URL", "SEEKCAD_EMBED_MODEL", "SEEKCAD_EMBED_KEY")
    }

    fn post(&self, path: &str, body: &Value) -> Result<Value, ClientError> {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .http_status_as_error(false)
            .build()
            .new_agent();
        let url = format!("{}/{}", self.base_url.trim_end_matches('/'), path);
        let mut last = ClientError::Transport("no attempt made".into());
        for attempt in 0..self.attempts.max(1) {
            if attempt > 0 {
                std::thread::sleep(self.backoff * 2u32.pow(attempt - 1));
            }
            NETWORK_REQUESTS.fetch_add(1, Ordering::SeqCst);
            let mut req = agent.post(&url);
            if let Some(k) = &self.api_key {
                req = req.header("Authorization", format!("Bearer {k}"));
            }
            match req.send_json(body) {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    let text = resp
                        .body_mut()
                        .read_to_string()
                        .map_err(|e| ClientError::Transport(e.to_string()))?;
                    if (200..300).contains(&status) {
                        return serde_json::from_str(&text).map_err(|e| ClientError::MalformedResponse(e.to_string()));
                    }
                    last = ClientError::Backend {
                        status,
                        message: text.chars().take(500).collect(),
                    };
                    if status < 500 && status != 429 {
                        return Err(last);
                    }
                }
                Err(ureq::Error::Timeout(t)) => last = ClientError::Timeout(t.to_string()),
                Err(e) => last = ClientError::Transport(e.to_string()),
            }
            log::warn!("{url}: attempt {} failed: {last}", attempt + 1);
        }
        Err(last)
    }
}

fn text_at<'a>(v: &'a Value, path: &[&str]) -> Option<&'a str> {
    path.iter().try_fold(v, |v, k| v.get(k))?.as_str()
}

fn first_message(v: &Value) -> Result<&Value, ClientError> {
    v.pointer("/choices/0/message")
        .ok_or_else(|| ClientError::MalformedResponse("no choices[0].message".into()))
}

#[derive(Debug, Clone)]
pub struct HttpLlm {
    pub cfg: HttpConfig,
}

impl LlmClient for HttpLlm {
    fn name(&self) -> String {
        format!("http:{}", self.cfg.model)
    }

    fn send(&self, req: &ChatRequest) -> Result<RawReply, ClientError> {
        let mut messages = vec![json!({"role": "system", "content": req.system})];
        messages.extend(req.messages.iter().map(|m| json!({"role": m.role, "content": m.content})));
        let body = json!({
            "model": self.cfg.model,
            "messages": messages,
            "temperature": req.temperature,
            "top_p": req.top_p,
        });
        let v = self.cfg.post("chat/completions", &body)?;
        let msg = first_message(&v)?;
        let answer = text_at(msg, &["content"])
            .ok_or_else(|| ClientError::MalformedResponse("message has no text content".into()))?;
        let reasoning = text_at(msg, &["reasoning_content"]).or_else(|| text_at(msg, &["reasoning"]));
        let count = |k: &str| v.pointer(&format!("/usage/{k}")).and_then(Value::as_u64).unwrap_or(0) as usize;
        Ok(RawReply {
            answer: answer.to_string(),
            reasoning: reasoning.map(str::to_string),
            usage: TokenUsage {
                prompt_tokens: count("prompt_tokens"),
                completion_tokens: count("completion_tokens"),
            },
        })
    }
}

#[derive(Debug, Clone)]
pub struct HttpVlm {
    pub cfg: HttpConfig,
}

impl VlmClient for HttpVlm {
    fn name(&self) -> String {
        format!("http:{}", self.cfg.model)
    }

    fn send(&self, req: &VlmRequest) -> Result<String, ClientError> {
        let mut content = vec![json!({"type": "text", "text": req.prompt})];
        for img in &req.images {
            let b64 = base64::engine::general_purpose::STANDARD.encode(img.encode_png());
            content.push(json!({"type": "image_url", "image_url": {"url": format!("data:image/png;base64,{b64}")}}));
        }
        let body = json!({
            "model": self.cfg.model,
            "messages": [{"role": "user", "content": content}],
        });
        let v = self.cfg.post("chat/completions", &body)?;
        text_at(first_message(&v)?, &["content"])
            .map(str::to_string)
            .ok_or_else(|| ClientError::MalformedResponse("message has no text content".into()))
    }
}

#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    pub cfg: HttpConfig,
    pub dim: usize,
}

impl HttpEmbedder {
    /// Learns the output dimension from one probe request.
    pub fn connect(cfg: HttpConfig) -> Result<Self, ClientError> {
        let mut e = HttpEmbedder { cfg, dim: 0 };
        e.dim = e.raw("dimension probe")?.len();
        if e.dim == 0 {
            return Err(ClientError::EmbedderFailure("backend returned an empty vector".into()));
        }
        Ok(e)
    }

    fn raw(&self, text: &str) -> Result<Vec<f64>, ClientError> {
        let v = self.cfg.post("embeddings", &json!({"model": self.cfg.model, "input": text}))?;
        v.pointer("/data/0/embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| ClientError::MalformedResponse("no data[0].embedding".into()))?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| ClientError::MalformedResponse("non-numeric embedding".into())))
            .collect()
    }
}

impl EmbeddingClient for HttpEmbedder {
    fn name(&self) -> String {
        format!("http:{}", self.cfg.model)
    }

    fn dimension(&self) -> usize {
        self.dim
    }

    fn embed_text(&self, text: &str) -> Result<Vec<f64>, ClientError> {
        if text.trim().is_empty() {
            return Err(ClientError::EmbedderFailure("empty text".into()));
        }
        let mut v = self.raw(text).map_err(|e| ClientError::EmbedderFailure(e.to_string()))?;
        if v.len() != self.dim {
            return Err(ClientError::EmbedderFailure(format!("expected {} values, got {}", self.dim, v.len())));
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(ClientError::EmbedderFailure("zero or non-finite vector".into()));
        }
        v.iter_mut().for_each(|x| *x /= n);
        Ok(v)
    }
}

//! Chat-completions HTTP adapter.
//!
//! Sends one user message per question with an image content part and a
//! text part, temperature fixed at 0 so responses are greedy and
//! reproducible. Transient failures (transport errors, 429, 5xx) retry with
//! exponential backoff; request pacing goes through a token-spaced rate
//! limiter shared by all workers.

use super::rate_limit::{Clock, RateLimiter, SystemClock};
use super::{Answer, AdapterError, ModelAdapter};
use crate::question::QuestionRecord;
use crate::seed::sha256_hex;
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

/// How the image reaches the endpoint: inlined as a data URL or passed as a
/// plain URL for the endpoint to fetch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageTransport {
    #[default]
    Base64Inline,
    Url,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelEndpointConfig {
    /// Either the full chat-completions URL or its base (e.g.
    /// `https://api.example.com/v1`); `/chat/completions` is appended when
    /// missing.
    pub base_url: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    pub model_name: String,
    /// Must be 0: evaluation requires greedy decoding.
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    /// Requests per second, shared across workers.
    #[serde(default = "default_rate_limit")]
    pub rate_limit: f64,
    #[serde(default)]
    pub image_transport: ImageTransport,
    /// Directory image refs resolve against for base64 transport.
    #[serde(default)]
    pub image_root: Option<PathBuf>,
}

fn default_max_tokens() -> u32 {
    64
}

fn default_timeout_secs() -> u64 {
    60
}

fn default_max_retries() -> u32 {
    3
}

fn default_rate_limit() -> f64 {
    2.0
}

impl ModelEndpointConfig {
    pub fn validate(&self) -> Result<(), AdapterError> {
        if self.temperature != 0.0 {
            return Err(AdapterError::Config(format!(
                "temperature must be 0 (greedy decoding), got {}",
                self.temperature
            )));
        }
        if self.rate_limit <= 0.0 || self.rate_limit.is_nan() {
            return Err(AdapterError::Config(format!(
                "rate_limit must be positive, got {}",
                self.rate_limit
            )));
        }
        if self.max_tokens == 0 {
            return Err(AdapterError::Config("max_tokens must be positive".into()));
        }
        Ok(())
    }

    fn completions_url(&self) -> String {
        if self.base_url.ends_with("/chat/completions") {
            self.base_url.clone()
        } else {
            format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
        }
    }
}

pub struct HttpAdapter {
    cfg: ModelEndpointConfig,
    agent: ureq::Agent,
    api_key: String,
    limiter: RateLimiter,
    clock: Arc<dyn Clock>,
}

impl HttpAdapter {
    pub fn new(cfg: ModelEndpointConfig) -> Result<Self, AdapterError> {
        Self::with_clock(cfg, Arc::new(SystemClock))
    }

    pub fn with_clock(
        cfg: ModelEndpointConfig,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, AdapterError> {
        cfg.validate()?;
        let api_key = std::env::var(&cfg.api_key_env)
            .map_err(|_| AdapterError::MissingApiKey(cfg.api_key_env.clone()))?;
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build();
        let limiter = RateLimiter::with_clock(cfg.rate_limit, clock.clone());
        Ok(Self {
            cfg,
            agent,
            api_key,
            limiter,
            clock,
        })
    }

    fn image_url(&self, image_ref: &str) -> Result<String, AdapterError> {
        match self.cfg.image_transport {
            ImageTransport::Url => Ok(image_ref.to_string()),
            ImageTransport::Base64Inline => {
                let path = match &self.cfg.image_root {
                    Some(root) => root.join(image_ref),
                    None => PathBuf::from(image_ref),
                };
                let bytes = std::fs::read(&path)
                    .map_err(|source| AdapterError::Image { path, source })?;
                let encoded = base64::engine::general_purpose::STANDARD.encode(bytes);
                Ok(format!("data:{};base64,{encoded}", mime_for(image_ref)))
            }
        }
    }

    fn request_body(&self, question: &QuestionRecord) -> Result<serde_json::Value, AdapterError> {
        Ok(json!({
            "model": self.cfg.model_name,
            "temperature": 0,
            "max_tokens": self.cfg.max_tokens,
            "messages": [{
                "role": "user",
                "content": [
                    {"type": "image_url", "image_url": {"url": self.image_url(&question.image_ref)?}},
                    {"type": "text", "text": question.prompt},
                ],
            }],
        }))
    }
}

fn mime_for(image_ref: &str) -> &'static str {
    let lower = image_ref.to_ascii_lowercase();
    if lower.ends_with(".png") {
        "image/png"
    } else if lower.ends_with(".gif") {
        "image/gif"
    } else if lower.ends_with(".webp") {
        "image/webp"
    } else if lower.ends_with(".bmp") {
        "image/bmp"
    } else {
        "image/jpeg"
    }
}

fn retryable_status(status: u16) -> bool {
    status == 429 || (500..=599).contains(&status)
}

fn backoff(attempt: u32) -> Duration {
    let millis = 500u64.saturating_mul(1 << attempt.min(4));
    Duration::from_millis(millis.min(8_000))
}

/// Pull the answer text out of a chat-completions response body.
fn extract_content(body: &serde_json::Value) -> Result<String, AdapterError> {
    let content = body
        .pointer("/choices/0/message/content")
        .ok_or_else(|| AdapterError::Protocol("missing choices[0].message.content".into()))?;
    match content {
        serde_json::Value::String(s) => Ok(s.clone()),
        serde_json::Value::Array(parts) => {
            let text: String = parts
                .iter()
                .filter_map(|p| p.get("text").and_then(|t| t.as_str()))
                .collect();
            Ok(text)
        }
        other => Err(AdapterError::Protocol(format!(
            "unsupported content shape: {other}"
        ))),
    }
}

impl ModelAdapter for HttpAdapter {
    fn name(&self) -> &str {
        &self.cfg.model_name
    }

    fn answer(&self, question: &QuestionRecord) -> Result<Answer, AdapterError> {
        let body = self.request_body(question)?;
        let body_text = body.to_string();
        let request_hash = sha256_hex(body_text.as_bytes())[..16].to_string();
        let url = self.cfg.completions_url();

        let max_attempts = self.cfg.max_retries + 1;
        let mut attempt = 0;
        loop {
            attempt += 1;
            self.limiter.acquire();
            let result = self
                .agent
                .post(&url)
                .set("Authorization", &format!("Bearer {}", self.api_key))
                .set("Content-Type", "application/json")
                .send_string(&body_text);
            match result {
                Ok(response) => {
                    let value: serde_json::Value = response
                        .into_json()
                        .map_err(|e| AdapterError::Protocol(e.to_string()))?;
                    return Ok(Answer {
                        text: extract_content(&value)?,
                        attempts: attempt,
                        request_hash,
                    });
                }
                Err(ureq::Error::Status(status, response)) => {
                    if retryable_status(status) && attempt < max_attempts {
                        self.clock.sleep(backoff(attempt - 1));
                        continue;
                    }
                    let message = response
                        .into_string()
                        .unwrap_or_else(|_| "<unreadable body>".into());
                    return Err(AdapterError::Remote { status, message });
                }
                Err(ureq::Error::Transport(transport)) => {
                    if attempt < max_attempts {
                        self.clock.sleep(backoff(attempt - 1));
                        continue;
                    }
                    return Err(AdapterError::Transport {
                        attempts: attempt,
                        message: transport.to_string(),
                    });
                }
            }
        }
    }
}

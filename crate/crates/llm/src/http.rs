use std::fmt;
use std::time::Duration;

use async_trait::async_trait;
use serde::Serialize;
use serde_json::Value;
use tokio::sync::Semaphore;

use crate::backend::{ChatBackend, CompletionRequest, EndpointConfig, LlmError};
use crnforge_core::prompt::ChatMessage;

/// Replaces every occurrence of `secret` with a marker.
pub fn redact(text: &str, secret: Option<&str>) -> String {
    match secret {
        Some(s) if !s.is_empty() => text.replace(s, "[REDACTED]"),
        _ => text.to_string(),
    }
}

/// Chat-completions client. Cheap to share behind an `Arc`; concurrent calls
/// beyond `max_in_flight` wait for a permit.
pub struct HttpBackend {
    config: EndpointConfig,
    api_key: Option<String>,
    client: reqwest::Client,
    permits: Semaphore,
}

impl fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpBackend")
            .field("config", &self.config)
            .field("api_key", &self.api_key.as_ref().map(|_| "[REDACTED]"))
            .finish()
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_tokens: Option<u32>,
}

impl HttpBackend {
    /// Reads the API key from the configured environment variable.
    pub fn new(config: EndpointConfig) -> Result<Self, LlmError> {
        let key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        Self::with_key(config, key)
    }

    pub fn with_key(config: EndpointConfig, api_key: Option<String>) -> Result<Self, LlmError> {
        config.validate()?;
        if config.require_api_key && api_key.is_none() {
            return Err(LlmError::Config(format!(
                "environment variable {} is not set",
                config.api_key_env
            )));
        }
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(HttpBackend {
            permits: Semaphore::new(config.max_in_flight),
            config,
            api_key,
            client,
        })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    async fn attempt(&self, body: &str) -> Result<String, LlmError> {
        let mut req = self
            .client
            .post(self.url())
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body.to_string());
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().await.map_err(|e| LlmError::Transport(self.scrub(&e.to_string())))?;
        let status = resp.status();
        let text = resp.text().await.map_err(|e| LlmError::Transport(self.scrub(&e.to_string())))?;
        tracing::debug!(status = status.as_u16(), body = %self.scrub(&text), "completion response");
        if !status.is_success() {
            return Err(LlmError::Status {
                status: status.as_u16(),
                body: self.scrub(&text),
            });
        }
        first_choice(&text)
    }

    fn scrub(&self, text: &str) -> String {
        redact(text, self.api_key.as_deref())
    }
}

/// `choices[0].message.content` of a response body.
fn first_choice(body: &str) -> Result<String, LlmError> {
    let v: Value = serde_json::from_str(body).map_err(|e| LlmError::Malformed(e.to_string()))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| LlmError::Malformed("missing choices[0].message.content".into()))
}

#[async_trait]
impl ChatBackend for HttpBackend {
    async fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        request.validate()?;
        let body = serde_json::to_string(&WireRequest {
            model: &self.config.model,
            messages: &request.messages,
            temperature: request.temperature,
            seed: request.seed,
            max_tokens: request.max_tokens,
        })
        .map_err(|e| LlmError::Malformed(e.to_string()))?;
        tracing::debug!(url = %self.url(), body = %self.scrub(&body), "completion request");

        let _permit = self.permits.acquire().await.expect("semaphore never closes");
        let mut retry = 0;
        loop {
            match self.attempt(&body).await {
                Err(e) if e.is_retryable() && retry < self.config.max_retries => {
                    let wait = self.config.backoff(retry);
                    tracing::warn!(error = %e, retry = retry + 1, wait_ms = wait.as_millis() as u64, "retrying completion");
                    tokio::time::sleep(wait).await;
                    retry += 1;
                }
                other => return other,
            }
        }
    }
}

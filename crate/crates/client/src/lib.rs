//! Typed calls to the service's JSON API.

use reqwest::{Method, StatusCode};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crnforge_core::wire::{
    ApiError, CreatedSession, GenerateRequest, GenerateResponse, Health, MaskRequest, MaskResponse, ParseRequest,
    ParseResponse, PostMessage, ScoreRequest, ScoreResponse, SessionSettings, SessionSummary, SessionView,
    SystemPrompts, TranslateRequest, TranslateResponse, TurnResult,
};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("cannot reach service: {0}")]
    Transport(String),
    #[error("service returned {status}: {} ({})", .error.message, .error.kind)]
    Api { status: u16, error: ApiError },
    #[error("unexpected response: {0}")]
    Decode(String),
}

impl ClientError {
    /// The API error kind, when the service answered with one.
    pub fn kind(&self) -> Option<&str> {
        match self {
            ClientError::Api { error, .. } => Some(&error.kind),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Client {
    base_url: String,
    http: reqwest::Client,
}

impl Client {
    /// `base_url` like `http://127.0.0.1:8080`; a trailing slash is ignored.
    pub fn new(base_url: impl Into<String>) -> Client {
        Client {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            http: reqwest::Client::new(),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    async fn call<B: Serialize, T: DeserializeOwned>(&self, method: Method, path: &str, body: Option<&B>) -> Result<T, ClientError> {
        let mut req = self.http.request(method, format!("{}{path}", self.base_url));
        if let Some(body) = body {
            req = req.json(body);
        }
        let res = req.send().await.map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = res.status();
        let bytes = res.bytes().await.map_err(|e| ClientError::Transport(e.to_string()))?;
        if !status.is_success() {
            let error = serde_json::from_slice(&bytes).unwrap_or_else(|_| ApiError {
                kind: "unknown".into(),
                message: String::from_utf8_lossy(&bytes).into_owned(),
            });
            return Err(ClientError::Api {
                status: status.as_u16(),
                error,
            });
        }
        let bytes = if status == StatusCode::NO_CONTENT { &b"null"[..] } else { &bytes[..] };
        serde_json::from_slice(bytes).map_err(|e| ClientError::Decode(e.to_string()))
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        self.call::<(), T>(Method::GET, path, None).await
    }

    async fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, ClientError> {
        self.call(Method::POST, path, Some(body)).await
    }

    pub async fn health(&self) -> Result<Health, ClientError> {
        self.get("/health").await
    }

    pub async fn system_prompts(&self) -> Result<SystemPrompts, ClientError> {
        self.get("/system-prompts").await
    }

    pub async fn create_session(&self, settings: &SessionSettings) -> Result<String, ClientError> {
        let created: CreatedSession = self.post("/sessions", settings).await?;
        Ok(created.id)
    }

    pub async fn list_sessions(&self) -> Result<Vec<SessionSummary>, ClientError> {
        self.get("/sessions").await
    }

    pub async fn session(&self, id: &str) -> Result<SessionView, ClientError> {
        self.get(&format!("/sessions/{id}")).await
    }

    pub async fn delete_session(&self, id: &str) -> Result<(), ClientError> {
        self.call::<(), ()>(Method::DELETE, &format!("/sessions/{id}"), None).await
    }

    pub async fn post_message(&self, id: &str, text: &str) -> Result<TurnResult, ClientError> {
        self.post(&format!("/sessions/{id}/messages"), &PostMessage { text: text.into() }).await
    }

    pub async fn parse(&self, request: &ParseRequest) -> Result<ParseResponse, ClientError> {
        self.post("/dsl/parse", request).await
    }

    pub async fn score(&self, request: &ScoreRequest) -> Result<ScoreResponse, ClientError> {
        self.post("/score", request).await
    }

    pub async fn generate(&self, request: &GenerateRequest) -> Result<GenerateResponse, ClientError> {
        self.post("/datagen/generate", request).await
    }

    pub async fn mask(&self, request: &MaskRequest) -> Result<MaskResponse, ClientError> {
        self.post("/gcd/mask", request).await
    }

    pub async fn translate(&self, request: &TranslateRequest) -> Result<TranslateResponse, ClientError> {
        self.post("/translate", request).await
    }
}

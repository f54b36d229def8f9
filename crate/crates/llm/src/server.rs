//! A chat-completions endpoint served over HTTP by any [`ChatBackend`], for
//! exercising the real client against scripted replies.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tokio::task::JoinHandle;

use crate::backend::{ChatBackend, CompletionRequest, LlmError};
use crnforge_core::prompt::ChatMessage;

#[derive(Deserialize)]
struct WireRequest {
    #[serde(default)]
    model: String,
    messages: Vec<ChatMessage>,
    #[serde(default)]
    temperature: f64,
    seed: Option<u64>,
    max_tokens: Option<u32>,
}

async fn completions(State(backend): State<Arc<dyn ChatBackend>>, Json(req): Json<WireRequest>) -> Response {
    let request = CompletionRequest {
        messages: req.messages,
        temperature: req.temperature,
        seed: req.seed,
        max_tokens: req.max_tokens,
    };
    match backend.complete(&request).await {
        Ok(content) => Json(json!({
            "object": "chat.completion",
            "model": req.model,
            "choices": [{
                "index": 0,
                "message": {"role": "assistant", "content": content},
                "finish_reason": "stop"
            }]
        }))
        .into_response(),
        Err(LlmError::Status { status, body }) => {
            let code = StatusCode::from_u16(status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
            (code, Json(json!({"error": {"message": body}}))).into_response()
        }
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, Json(json!({"error": {"message": e.to_string()}}))).into_response(),
    }
}

/// Routes `POST /v1/chat/completions` to `backend`.
pub fn router(backend: Arc<dyn ChatBackend>) -> Router {
    Router::new()
        .route("/v1/chat/completions", post(completions))
        .with_state(backend)
}

/// A running mock endpoint; aborted on drop.
pub struct MockEndpoint {
    pub addr: SocketAddr,
    handle: JoinHandle<()>,
}

impl MockEndpoint {
    /// Base URL to put into an endpoint configuration.
    pub fn base_url(&self) -> String {
        format!("http://{}/v1", self.addr)
    }
}

impl Drop for MockEndpoint {
    fn drop(&mut self) {
        self.handle.abort();
    }
}

/// Serves `backend` on an ephemeral localhost port.
pub async fn spawn(backend: Arc<dyn ChatBackend>) -> std::io::Result<MockEndpoint> {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let addr = listener.local_addr()?;
    let app = router(backend);
    let handle = tokio::spawn(async move {
        let _ = axum::serve(listener, app).await;
    });
    Ok(MockEndpoint { addr, handle })
}

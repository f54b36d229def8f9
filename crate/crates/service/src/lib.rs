//! HTTP JSON service: interactive modeling sessions against a translation
//! endpoint, plus parse, score, generate and mask operations.

mod error;
mod ops;
mod sessions;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::routing::{get, post};
use axum::Router;
use tower_http::services::ServeDir;

use crnforge_core::prompt::FewShotPair;
use crnforge_llm::ChatBackend;

pub use error::ServiceError;
pub use store::{Store, StoreError};

#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    /// Examples a session may take as its prologue.
    pub few_shot_pool: Vec<FewShotPair>,
    /// Where the event log lives; `None` keeps sessions in memory only.
    pub data_dir: Option<PathBuf>,
    /// Served for any path not claimed by the API.
    pub static_dir: Option<PathBuf>,
    /// Upper bound on messages per request. Older few-shot pairs are left
    /// out first when a session grows past it.
    pub max_history: Option<usize>,
}

pub struct AppState {
    pub backend: Arc<dyn ChatBackend>,
    pub store: Store,
    pub config: ServiceConfig,
}

impl AppState {
    pub fn new(backend: Arc<dyn ChatBackend>, config: ServiceConfig) -> Result<Arc<AppState>, StoreError> {
        let store = match &config.data_dir {
            Some(dir) => Store::open(dir)?,
            None => Store::in_memory(),
        };
        Ok(Arc::new(AppState { backend, store, config }))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let api = Router::new()
        .route("/health", get(ops::health))
        .route("/system-prompts", get(ops::system_prompts))
        .route("/dsl/parse", post(ops::parse))
        .route("/score", post(ops::score))
        .route("/datagen/generate", post(ops::generate))
        .route("/gcd/mask", post(ops::mask))
        .route("/translate", post(ops::translate))
        .route("/sessions", post(sessions::create).get(sessions::list))
        .route("/sessions/{id}", get(sessions::get).delete(sessions::delete))
        .route("/sessions/{id}/messages", post(sessions::post_message))
        .with_state(state.clone());
    match &state.config.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(error::not_found),
    }
}

/// Serves until the listener fails.
pub async fn serve(state: Arc<AppState>, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

/// A service on an ephemeral localhost port; aborted on drop.
pub struct RunningService {
    pub addr: SocketAddr,
    pub state: Arc<AppState>,
    handle: tokio::task::JoinHandle<()>,
}

impl RunningService {
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for RunningService {
    fn drop(&mut self) {
        self.handle.abort();
    }
}

pub async fn spawn(state: Arc<AppState>) -> std::io::Result<RunningService> {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let addr = listener.local_addr()?;
    let app = router(state.clone());
    let handle = tokio::spawn(async move {
        let _ = axum::serve(listener, app).await;
    });
    Ok(RunningService { addr, state, handle })
}

use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::Json;

use crate::error::{ApiResult, ServiceError};
use crate::store::{apply_turn, Event};
use crate::AppState;
use crnforge_core::diff::diff_networks;
use crnforge_core::dsl::extract_candidate_model;
use crnforge_core::gcd::reply_is_grammatical;
use crnforge_core::prompt::{build_turn_messages, ChatMessage, PromptPack, Role, DEFAULT_SYSTEM_PROMPT, INSTRUCTION_PREFIX};
use crnforge_core::wire::{CreatedSession, PostMessage, SessionSettings, SessionSummary, SessionView, TurnResult};
use crnforge_llm::CompletionRequest;

pub(crate) fn prompt_pack(state: &AppState, settings: &SessionSettings) -> Result<PromptPack, ServiceError> {
    let pool = &state.config.few_shot_pool;
    if settings.few_shot > pool.len() {
        return Err(ServiceError::BadRequest(format!(
            "{} few-shot examples requested but the service has {}",
            settings.few_shot,
            pool.len()
        )));
    }
    Ok(PromptPack {
        system_prompt: settings.system_prompt.clone().unwrap_or_else(|| DEFAULT_SYSTEM_PROMPT.into()),
        few_shot: pool[..settings.few_shot].to_vec(),
        strategy: settings.strategy,
        instruction_prefix: INSTRUCTION_PREFIX.into(),
    })
}

/// Messages that precede the first user turn.
fn prologue(pack: &PromptPack) -> Vec<ChatMessage> {
    let mut messages = build_turn_messages(pack, &[], "", false);
    messages.pop();
    messages
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

pub async fn create(State(state): State<Arc<AppState>>, body: Bytes) -> Result<(StatusCode, Json<CreatedSession>), ServiceError> {
    let settings: SessionSettings = if body.iter().all(u8::is_ascii_whitespace) {
        SessionSettings::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ServiceError::BadRequest(format!("invalid settings: {e}")))?
    };
    settings.validate().map_err(ServiceError::BadRequest)?;
    let messages = prologue(&prompt_pack(&state, &settings)?);
    let view = SessionView {
        id: uuid::Uuid::new_v4().simple().to_string(),
        created_at: now_ms(),
        settings,
        prologue_len: messages.len(),
        messages,
        current_network: None,
        turns: Vec::new(),
    };
    let id = view.id.clone();
    state.store.insert(view)?;
    tracing::info!(%id, "session created");
    Ok((StatusCode::CREATED, Json(CreatedSession { id })))
}

pub async fn list(State(state): State<Arc<AppState>>) -> Json<Vec<SessionSummary>> {
    Json(state.store.list())
}

pub async fn get(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<SessionView> {
    let slot = state.store.get(&id).ok_or_else(|| ServiceError::NotFound(format!("session {id}")))?;
    Ok(Json(slot.snapshot()))
}

pub async fn delete(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<StatusCode, ServiceError> {
    if state.store.remove(&id)? {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(ServiceError::NotFound(format!("session {id}")))
    }
}

/// Drops leading few-shot pairs from the prologue until `messages` fits in
/// `max`, or no pairs are left.
fn fit_history(mut messages: Vec<ChatMessage>, prologue_len: usize, max: Option<usize>) -> Vec<ChatMessage> {
    let Some(max) = max else { return messages };
    let start = usize::from(messages.first().is_some_and(|m| m.role == Role::System));
    let mut pairs = (prologue_len - start) / 2;
    while messages.len() > max && pairs > 0 {
        messages.drain(start..start + 2);
        pairs -= 1;
    }
    messages
}

pub async fn post_message(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<PostMessage>, JsonRejection>,
) -> ApiResult<TurnResult> {
    let slot = state.store.get(&id).ok_or_else(|| ServiceError::NotFound(format!("session {id}")))?;
    let Ok(_turn) = slot.turn_lock.try_lock() else {
        return Err(ServiceError::Busy(id));
    };
    let Json(PostMessage { text }) = body?;
    if text.trim().is_empty() {
        return Err(ServiceError::BadRequest("message text is empty".into()));
    }

    let view = slot.snapshot();
    let pack = prompt_pack(&state, &view.settings)?;
    // Only the opening turn carries the instruction prefix and any
    // embedded examples.
    let user_message = if view.turns.is_empty() {
        build_turn_messages(&pack, &[], &text, true).pop().expect("user message")
    } else {
        ChatMessage::user(&text)
    };
    let mut messages = view.messages.clone();
    messages.push(user_message.clone());
    let request = CompletionRequest {
        messages: fit_history(messages, view.prologue_len, state.config.max_history),
        temperature: view.settings.temperature,
        seed: view.settings.seed,
        max_tokens: None,
    };

    let reply = state.backend.complete(&request).await?;

    let extraction = extract_candidate_model(&reply);
    let previous = view.current_network.unwrap_or_default();
    let diff = extraction.network.as_ref().map(|new| diff_networks(&previous, new));
    let turn = TurnResult {
        user_text: text,
        grammar_complete: reply_is_grammatical(&reply),
        assistant_text: reply,
        parsed: extraction.network,
        diagnostics: extraction.diagnostics,
        diff,
    };
    state.store.record(&Event::Turn {
        id: id.clone(),
        user_message: user_message.clone(),
        turn: turn.clone(),
    })?;
    apply_turn(&mut slot.view.write().expect("session lock"), user_message, turn.clone());
    tracing::info!(%id, turns = slot.snapshot().turns.len(), parsed = turn.parsed.is_some(), "turn done");
    Ok(Json(turn))
}

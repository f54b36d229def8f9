use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::Json;

use crate::error::{ApiResult, ServiceError};
use crate::sessions::prompt_pack;
use crate::AppState;
use crnforge_core::datagen::{generate_pair_at, Ingredients};
use crnforge_core::dsl::{extract_candidate_model, parse_with, serialize, ParseOptions};
use crnforge_core::equivalence::score_answer;
use crnforge_core::gcd::{crn_grammar, reply_is_grammatical, RecognizerState, Vocabulary};
use crnforge_core::prompt::{build_messages, DEFAULT_SYSTEM_PROMPT, KINMODGPT_SYSTEM_PROMPT};
use crnforge_core::wire::{
    GenerateRequest, GenerateResponse, Health, MaskRequest, MaskResponse, ParseRequest, ParseResponse, ScoreRequest,
    ScoreResponse, SessionSettings, SystemPrompts, TranslateRequest, TranslateResponse,
};
use crnforge_llm::CompletionRequest;

/// Largest batch one generate call may ask for.
pub const MAX_GENERATE: usize = 10_000;

pub async fn health() -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
    })
}

pub async fn system_prompts() -> Json<SystemPrompts> {
    Json(SystemPrompts {
        default: DEFAULT_SYSTEM_PROMPT.into(),
        kinmodgpt: KINMODGPT_SYSTEM_PROMPT.into(),
    })
}

pub async fn parse(body: Result<Json<ParseRequest>, JsonRejection>) -> ApiResult<ParseResponse> {
    let Json(req) = body?;
    let options = ParseOptions {
        fenced: req.fenced,
        strict: req.strict,
    };
    Ok(Json(match parse_with(&req.text, options) {
        Ok(p) => ParseResponse {
            canonical: Some(serialize(&p.network, false)),
            network: Some(p.network),
            diagnostics: p.warnings,
        },
        Err(e) => ParseResponse {
            network: None,
            diagnostics: e.diagnostics,
            canonical: None,
        },
    }))
}

pub async fn score(body: Result<Json<ScoreRequest>, JsonRejection>) -> ApiResult<ScoreResponse> {
    let Json(req) = body?;
    let gt = extract_candidate_model(&req.ground_truth)
        .network
        .ok_or_else(|| ServiceError::BadRequest("ground truth does not parse".into()))?;
    let report = score_answer(&gt, &req.answer, req.mode);
    Ok(Json(ScoreResponse {
        correct: report.as_ref().is_some_and(|r| r.verdict),
        report,
    }))
}

pub async fn generate(body: Result<Json<GenerateRequest>, JsonRejection>) -> ApiResult<GenerateResponse> {
    let Json(req) = body?;
    if req.count > MAX_GENERATE {
        return Err(ServiceError::BadRequest(format!("count is limited to {MAX_GENERATE}")));
    }
    let pairs = tokio::task::spawn_blocking(move || {
        let ing = Ingredients::default_pack();
        (req.start..req.start + req.count as u64)
            .map(|i| generate_pair_at(&ing, req.seed, req.split, i))
            .collect::<Result<Vec<_>, _>>()
    })
    .await
    .map_err(|e| ServiceError::Internal(e.to_string()))?
    .map_err(|e| ServiceError::Internal(e.to_string()))?;
    Ok(Json(GenerateResponse { pairs }))
}

pub async fn mask(body: Result<Json<MaskRequest>, JsonRejection>) -> ApiResult<MaskResponse> {
    let Json(req) = body?;
    let grammar = crn_grammar();
    let vocab = match req.vocabulary {
        Some(tokens) => Vocabulary::new(tokens).map_err(|e| ServiceError::BadRequest(e.to_string()))?,
        None => Vocabulary::characters(grammar.alphabet()),
    };
    let mut state = RecognizerState::new(grammar);
    let mut viable_len = 0;
    for (offset, c) in req.prefix.char_indices() {
        if !state.feed(c) {
            break;
        }
        viable_len = offset + c.len_utf8();
    }
    let viable = viable_len == req.prefix.len();
    let mask = state.mask(&vocab);
    Ok(Json(MaskResponse {
        viable_len,
        viable,
        complete: viable && mask.end_allowed,
        allowed: mask.allowed.iter().map(|&id| vocab.token(id).to_string()).collect(),
        end_allowed: mask.end_allowed,
        min_completion: state.min_completion_len(),
    }))
}

pub async fn translate(
    State(state): State<Arc<AppState>>,
    body: Result<Json<TranslateRequest>, JsonRejection>,
) -> ApiResult<TranslateResponse> {
    let Json(req) = body?;
    let settings = SessionSettings {
        temperature: req.temperature,
        few_shot: req.few_shot,
        seed: req.seed,
        ..SessionSettings::default()
    };
    settings.validate().map_err(ServiceError::BadRequest)?;
    let pack = prompt_pack(&state, &settings)?;
    let request = CompletionRequest {
        messages: build_messages(&pack, &[], &req.text),
        temperature: req.temperature,
        seed: req.seed,
        max_tokens: None,
    };
    let reply = state.backend.complete(&request).await?;
    let extraction = extract_candidate_model(&reply);
    Ok(Json(TranslateResponse {
        grammar_complete: reply_is_grammatical(&reply),
        canonical: extraction.network.as_ref().map(|n| serialize(n, true)),
        parsed: extraction.network,
        diagnostics: extraction.diagnostics,
        assistant_text: reply,
    }))
}

//! Talking to chat-completions endpoints: request types, an HTTP backend
//! with retries, few-shot packs, and deterministic mock backends for tests.

mod backend;
mod fewshot;
mod http;
pub mod mock;
pub mod server;
mod translator;

pub use backend::{ChatBackend, CompletionRequest, EndpointConfig, LlmError, DEFAULT_API_KEY_ENV};
pub use fewshot::{few_shot_from_jsonl, load_few_shot};
pub use http::{redact, HttpBackend};
pub use translator::Translator;

pub use crnforge_core::prompt::{
    build_messages, build_turn_messages, default_system_prompt, kinmodgpt_system_prompt, ChatMessage, FewShotPair,
    FewShotStrategy, PromptPack, Role,
};

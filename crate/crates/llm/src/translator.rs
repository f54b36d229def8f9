use std::sync::Arc;

use crate::backend::{ChatBackend, CompletionRequest, LlmError};
use crnforge_core::prompt::{build_messages, PromptPack};

/// A backend plus the prompt pack used to phrase every request.
#[derive(Clone)]
pub struct Translator {
    pub backend: Arc<dyn ChatBackend>,
    pub pack: PromptPack,
}

impl Translator {
    pub fn new(backend: Arc<dyn ChatBackend>, pack: PromptPack) -> Self {
        Translator { backend, pack }
    }

    pub fn request(&self, description: &str, temperature: f64, seed: Option<u64>) -> CompletionRequest {
        CompletionRequest {
            messages: build_messages(&self.pack, &[], description),
            temperature,
            seed,
            max_tokens: None,
        }
    }

    /// Raw assistant reply for one description.
    pub async fn translate(&self, description: &str, temperature: f64, seed: Option<u64>) -> Result<String, LlmError> {
        self.backend.complete(&self.request(description, temperature, seed)).await
    }
}

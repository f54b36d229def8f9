//! JSON bodies of the HTTP API, shared by the service and its client.

use serde::{Deserialize, Serialize};

use crate::datagen::{SamplePair, Split};
use crate::diff::NetworkDiff;
use crate::dsl::{Diagnostic, ReactionNetwork};
use crate::equivalence::{MatchMode, MatchReport};
use crate::prompt::{ChatMessage, FewShotStrategy};

pub const MAX_TEMPERATURE: f64 = 2.0;

/// Fixed when a session is created.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionSettings {
    pub temperature: f64,
    /// Number of leading few-shot pairs from the service's pack; 0 turns the
    /// prologue off.
    pub few_shot: usize,
    pub strategy: FewShotStrategy,
    pub mode: MatchMode,
    /// Replaces the default system prompt; an empty string sends none.
    pub system_prompt: Option<String>,
    pub seed: Option<u64>,
}

impl Default for SessionSettings {
    fn default() -> Self {
        SessionSettings {
            temperature: 0.0,
            few_shot: 0,
            strategy: FewShotStrategy::HistoryPrepend,
            mode: MatchMode::PaperLiteral,
            system_prompt: None,
            seed: None,
        }
    }
}

impl SessionSettings {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=MAX_TEMPERATURE).contains(&self.temperature) {
            return Err(format!(
                "temperature must lie in [0, {MAX_TEMPERATURE}], got {}",
                self.temperature
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreatedSession {
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostMessage {
    pub text: String,
}

/// Outcome of one user message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnResult {
    pub user_text: String,
    pub assistant_text: String,
    pub parsed: Option<ReactionNetwork>,
    pub diagnostics: Vec<Diagnostic>,
    /// Whether the extracted fenced block is a complete sentence of the
    /// reaction grammar.
    pub grammar_complete: bool,
    /// Against the previous model, or against an empty one on the first
    /// parsed turn. Absent when this turn did not parse.
    pub diff: Option<NetworkDiff>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    /// Milliseconds since the Unix epoch.
    pub created_at: u64,
    pub settings: SessionSettings,
    pub messages: Vec<ChatMessage>,
    /// Messages before the first turn: system prompt and few-shot pairs.
    pub prologue_len: usize,
    pub current_network: Option<ReactionNetwork>,
    pub turns: Vec<TurnResult>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub id: String,
    pub created_at: u64,
    pub turns: usize,
    pub reactions: Option<usize>,
}

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    /// Machine-readable: not_found, busy, bad_request, upstream, internal.
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseRequest {
    pub text: String,
    #[serde(default)]
    pub fenced: bool,
    #[serde(default)]
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseResponse {
    pub network: Option<ReactionNetwork>,
    pub diagnostics: Vec<Diagnostic>,
    /// Canonical unfenced text when the input parsed.
    pub canonical: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRequest {
    /// Ground truth in the DSL, fenced or not.
    pub ground_truth: String,
    /// Raw answer text; a model is extracted from it.
    pub answer: String,
    #[serde(default)]
    pub mode: MatchMode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub correct: bool,
    /// Absent when no model could be extracted from the answer.
    pub report: Option<MatchReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_split")]
    pub split: Split,
    /// First index; pairs are `start..start + count`.
    #[serde(default)]
    pub start: u64,
}

fn default_split() -> Split {
    Split::Train
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub pairs: Vec<SamplePair>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskRequest {
    pub prefix: String,
    /// Defaults to single characters of the grammar's alphabet.
    #[serde(default)]
    pub vocabulary: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskResponse {
    /// Byte length of the longest viable prefix of `prefix`.
    pub viable_len: usize,
    pub viable: bool,
    pub complete: bool,
    /// Tokens that may follow the viable prefix.
    pub allowed: Vec<String>,
    pub end_allowed: bool,
    pub min_completion: usize,
}

/// One-shot translation without a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslateRequest {
    pub text: String,
    #[serde(default)]
    pub temperature: f64,
    /// Leading few-shot pairs of the service's pack to include.
    #[serde(default)]
    pub few_shot: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslateResponse {
    pub assistant_text: String,
    pub parsed: Option<ReactionNetwork>,
    pub diagnostics: Vec<Diagnostic>,
    pub grammar_complete: bool,
    /// Fenced canonical text of `parsed`.
    pub canonical: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemPrompts {
    pub default: String,
    pub kinmodgpt: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settings_defaults_fill_missing_fields() {
        let s: SessionSettings = serde_json::from_str(r#"{"temperature":0.4}"#).unwrap();
        assert_eq!(s.temperature, 0.4);
        assert_eq!(s.few_shot, 0);
        assert!(s.validate().is_ok());
        let bad = SessionSettings {
            temperature: 3.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn generate_request_defaults() {
        let r: GenerateRequest = serde_json::from_str(r#"{"count":2}"#).unwrap();
        assert_eq!((r.seed, r.split, r.start), (0, Split::Train, 0));
    }
}

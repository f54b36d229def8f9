//! Deterministic stand-ins for a real endpoint.

use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;

use async_trait::async_trait;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::backend::{ChatBackend, CompletionRequest, LlmError};
use crnforge_core::dsl::{serialize, Rate, ReactionNetwork};
use crnforge_core::prompt::INSTRUCTION_PREFIX;

/// Reply used when a mock does not recognise the request.
pub const UNKNOWN_REPLY: &str = "I am not able to translate this description.";

/// Replays a fixed list of replies in order and records every request.
#[derive(Debug, Default)]
pub struct ScriptedBackend {
    script: Mutex<VecDeque<Result<String, LlmError>>>,
    requests: Mutex<Vec<CompletionRequest>>,
}

impl ScriptedBackend {
    pub fn new(script: impl IntoIterator<Item = Result<String, LlmError>>) -> Self {
        ScriptedBackend {
            script: Mutex::new(script.into_iter().collect()),
            requests: Mutex::default(),
        }
    }

    pub fn replies<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> Self {
        Self::new(replies.into_iter().map(|r| Ok(r.into())))
    }

    pub fn push(&self, reply: Result<String, LlmError>) {
        self.script.lock().unwrap().push_back(reply);
    }

    pub fn requests(&self) -> Vec<CompletionRequest> {
        self.requests.lock().unwrap().clone()
    }

    pub fn remaining(&self) -> usize {
        self.script.lock().unwrap().len()
    }
}

#[async_trait]
impl ChatBackend for ScriptedBackend {
    async fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        self.requests.lock().unwrap().push(request.clone());
        self.script
            .lock()
            .unwrap()
            .pop_front()
            .unwrap_or_else(|| Err(LlmError::Status {
                status: 503,
                body: "script exhausted".into(),
            }))
    }
}

/// Always answers with the same text.
#[derive(Debug, Clone)]
pub struct EchoBackend(pub String);

#[async_trait]
impl ChatBackend for EchoBackend {
    async fn complete(&self, _request: &CompletionRequest) -> Result<String, LlmError> {
        Ok(self.0.clone())
    }
}

/// A network that no longer matches `net`: the first reaction's rate is
/// replaced by a different numeric value.
pub fn corrupt(net: &ReactionNetwork) -> ReactionNetwork {
    let mut out = net.clone();
    if let Some(r) = out.reactions.first_mut() {
        let lexeme = match &r.rate {
            Rate::Numeric { value, .. } => format!("{:.2}", value + 11.0),
            Rate::Symbolic(_) => "11.11".to_string(),
        };
        r.rate = Rate::numeric(&lexeme).expect("valid decimal");
    }
    out
}

/// How an [`OracleBackend`] decides to answer wrongly.
#[derive(Debug, Clone, Copy)]
pub enum Corruption {
    None,
    /// Samples whose dataset index is `every - 1` modulo `every`.
    Every(usize),
    /// Correct with probability `p(temperature)`, drawn from the request
    /// seed and the sample index.
    Bernoulli(fn(f64) -> f64),
}

/// Knows the ground truth for every description of a dataset and answers
/// with its fenced model, optionally corrupted.
#[derive(Debug, Clone)]
pub struct OracleBackend {
    by_description: HashMap<String, usize>,
    networks: Vec<ReactionNetwork>,
    corruption: Corruption,
}

impl OracleBackend {
    pub fn new<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a ReactionNetwork)>) -> Self {
        let mut by_description = HashMap::new();
        let mut networks = Vec::new();
        for (i, (d, n)) in pairs.into_iter().enumerate() {
            by_description.entry(d.to_string()).or_insert(i);
            networks.push(n.clone());
        }
        OracleBackend {
            by_description,
            networks,
            corruption: Corruption::None,
        }
    }

    pub fn with_corruption(mut self, corruption: Corruption) -> Self {
        self.corruption = corruption;
        self
    }

    /// Dataset index of the description in the last user message.
    pub fn lookup(&self, user_text: &str) -> Option<usize> {
        let text = user_text.strip_prefix(INSTRUCTION_PREFIX).unwrap_or(user_text);
        if let Some(&i) = self.by_description.get(text) {
            return Some(i);
        }
        // Embedded examples put text before the description.
        self.by_description
            .iter()
            .filter(|(d, _)| text.ends_with(d.as_str()))
            .max_by_key(|(d, _)| d.len())
            .map(|(_, &i)| i)
    }

    fn answer(&self, index: usize, request: &CompletionRequest) -> String {
        let truth = &self.networks[index];
        let wrong = match self.corruption {
            Corruption::None => false,
            Corruption::Every(every) => every > 0 && index % every == every - 1,
            Corruption::Bernoulli(p) => {
                let mut rng = ChaCha8Rng::seed_from_u64(request.seed.unwrap_or(0));
                rng.set_stream(index as u64);
                !rng.random_bool(p(request.temperature).clamp(0.0, 1.0))
            }
        };
        if wrong {
            serialize(&corrupt(truth), true)
        } else {
            serialize(truth, true)
        }
    }
}

#[async_trait]
impl ChatBackend for OracleBackend {
    async fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        Ok(match request.last_user().and_then(|u| self.lookup(u)) {
            Some(i) => self.answer(i, request),
            None => UNKNOWN_REPLY.to_string(),
        })
    }
}

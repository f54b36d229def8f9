//! System prompts, few-shot packs and chat message assembly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dsl::parse;

pub const DEFAULT_SYSTEM_PROMPT: &str = "You are a translator that translates from natural language descriptions to formal reaction system simulation models. Do not generate anything except the formal output. Do not provide any explanation. Closely adhere to the provided example syntax. When mentioning entities in the formal model, try to match their names precisely to their mentions in the textual description.";

/// Rule-table prompt adapted to the reaction DSL.
pub const KINMODGPT_SYSTEM_PROMPT: &str = r#"You are a program that converts biochemical reactions written in natural language into a formal reaction language. First, remember the following conversion rules.

```
# Conversion rules
| Natural language | Antimony language |
| E catalyzes the conversion of X to Y | X + E -> Y + E @ k0; |
| X is converted into Y | X -> Y @ k0; |
| X and Y bind to form Z | X + Y -> Z @ k0; |
| X dissociates into Y and Z | X -> Y + Z @ k0; |
| X is produced (or transcribed) | -> X @ k0; |
| X degrades (or decays) | X -> @ k0; |
```

```
# Examples
"The following describes a reaction system. Please translate to a formal description. RPL35A is produced. It is produced with a rate of 2.42. In addition, GPM1 and RPL35A are removed from the system. RPL35A emerges at a rate of 7.9." is converted to ```
-> RPL35A @ 2.42;
GPM1 -> @ k0;
RPL35A -> @ k1;
-> RPL35A @ 7.9;
```
"The following describes a reaction system. Please translate to a formal description. HSP26 vanishes. It leaves the system at a rate of 9.82. Two ATP are the result of a conversion of TDH3 and TPI1. A chain reaction occurs from TDH3 through HSP26, TPI1, and ATP to GPM1. The complex ATPGPM1 forms from ATP and GPM1." is converted to ```
HSP26 -> @ 9.82;
TDH3 + TPI1 -> 2ATP @ k0;
TDH3 -> HSP26 @ k1;
HSP26 -> TPI1 @ k2;
TPI1 -> ATP @ k3;
ATP -> GPM1 @ k4;
ATP + GPM1 -> ATPGPM1 @ k5;
```
```

Using the conversion rules provided, convert the biochemical reactions listed below into the formal language. After converting each reaction, put them into a code block marked with ```. Inside the code block, show one reaction per line. No need to provide further explanations, just present the model."#;

/// Prepended to every description sent for translation.
pub const INSTRUCTION_PREFIX: &str = "The following describes a reaction system. Please translate to a formal description. ";

pub fn default_system_prompt() -> &'static str {
    DEFAULT_SYSTEM_PROMPT
}

pub fn kinmodgpt_system_prompt() -> &'static str {
    KINMODGPT_SYSTEM_PROMPT
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FewShotStrategy {
    /// Examples become earlier user/assistant turns.
    #[default]
    HistoryPrepend,
    /// Examples are written into the final user message.
    FirstPromptEmbed,
}

impl fmt::Display for FewShotStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FewShotStrategy::HistoryPrepend => "history-prepend",
            FewShotStrategy::FirstPromptEmbed => "first-prompt-embed",
        })
    }
}

impl FromStr for FewShotStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "history-prepend" | "history" => Ok(FewShotStrategy::HistoryPrepend),
            "first-prompt-embed" | "embed" => Ok(FewShotStrategy::FirstPromptEmbed),
            other => Err(format!(
                "unknown few-shot strategy '{other}' (expected history-prepend or first-prompt-embed)"
            )),
        }
    }
}

/// One worked example. `user` is the full user message, prefix included.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotPair {
    pub user: String,
    pub assistant: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptPack {
    /// Sent first when nonempty.
    pub system_prompt: String,
    pub few_shot: Vec<FewShotPair>,
    pub strategy: FewShotStrategy,
    pub instruction_prefix: String,
}

impl Default for PromptPack {
    fn default() -> Self {
        PromptPack {
            system_prompt: DEFAULT_SYSTEM_PROMPT.to_string(),
            few_shot: Vec::new(),
            strategy: FewShotStrategy::HistoryPrepend,
            instruction_prefix: INSTRUCTION_PREFIX.to_string(),
        }
    }
}

impl PromptPack {
    pub fn with_few_shot(mut self, pairs: Vec<FewShotPair>) -> Self {
        self.few_shot = pairs;
        self
    }

    /// Indices and messages of examples whose answer is not a parseable
    /// fenced model.
    pub fn invalid_examples(&self) -> Vec<(usize, String)> {
        self.few_shot
            .iter()
            .enumerate()
            .filter_map(|(i, p)| parse(&p.assistant, true).err().map(|e| (i, e.to_string())))
            .collect()
    }
}

/// Messages for one request: system prompt, examples, history, then the new
/// user text behind the instruction prefix.
pub fn build_messages(pack: &PromptPack, history: &[ChatMessage], user_text: &str) -> Vec<ChatMessage> {
    build_turn_messages(pack, history, user_text, true)
}

/// As [`build_messages`]; `with_prefix` false sends `user_text` unchanged,
/// as for follow-up requests in a conversation.
pub fn build_turn_messages(
    pack: &PromptPack,
    history: &[ChatMessage],
    user_text: &str,
    with_prefix: bool,
) -> Vec<ChatMessage> {
    let mut out = Vec::with_capacity(2 + 2 * pack.few_shot.len() + history.len());
    if !pack.system_prompt.is_empty() {
        out.push(ChatMessage::system(&pack.system_prompt));
    }
    let prefix = if with_prefix { pack.instruction_prefix.as_str() } else { "" };
    match pack.strategy {
        FewShotStrategy::HistoryPrepend => {
            for pair in &pack.few_shot {
                out.push(ChatMessage::user(&pair.user));
                out.push(ChatMessage::assistant(&pair.assistant));
            }
            out.extend_from_slice(history);
            out.push(ChatMessage::user(format!("{prefix}{user_text}")));
        }
        FewShotStrategy::FirstPromptEmbed => {
            out.extend_from_slice(history);
            out.push(ChatMessage::user(format!(
                "{prefix}{}{user_text}",
                examples_block(&pack.few_shot)
            )));
        }
    }
    out
}

fn examples_block(pairs: &[FewShotPair]) -> String {
    if pairs.is_empty() {
        return String::new();
    }
    let mut block = String::from("For example:\n");
    for pair in pairs {
        block.push_str(&format!("\"{}\" is converted to\n{}", pair.user, pair.assistant));
        if !pair.assistant.ends_with('\n') {
            block.push('\n');
        }
    }
    block.push_str("Now translate the following. ");
    block
}

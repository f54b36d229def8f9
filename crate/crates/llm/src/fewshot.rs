use std::path::Path;

use serde_json::Value;

use crate::backend::LlmError;
use crnforge_core::prompt::{FewShotPair, INSTRUCTION_PREFIX};

/// The first `n` records of a dataset file as few-shot pairs. Chat records
/// contribute their first user and assistant messages; plain records are
/// prefixed and fenced.
pub fn few_shot_from_jsonl(text: &str, n: usize) -> Result<Vec<FewShotPair>, LlmError> {
    let mut out = Vec::with_capacity(n);
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        if out.len() == n {
            break;
        }
        let bad = |m: &str| LlmError::Config(format!("few-shot line {}: {m}", i + 1));
        let v: Value = serde_json::from_str(line).map_err(|e| bad(&e.to_string()))?;
        let pair = if let Some(messages) = v.get("messages").and_then(Value::as_array) {
            let first = |role: &str| {
                messages
                    .iter()
                    .find(|m| m.get("role").and_then(Value::as_str) == Some(role))
                    .and_then(|m| m.get("content").and_then(Value::as_str))
                    .map(str::to_string)
                    .ok_or_else(|| bad(&format!("no {role} message")))
            };
            FewShotPair {
                user: first("user")?,
                assistant: first("assistant")?,
            }
        } else {
            let field = |k: &str| {
                v.get(k)
                    .and_then(Value::as_str)
                    .map(str::to_string)
                    .ok_or_else(|| bad(&format!("missing field {k}")))
            };
            FewShotPair {
                user: format!("{INSTRUCTION_PREFIX}{}", field("description")?),
                assistant: format!("```\n{}```\n", field("model")?),
            }
        };
        out.push(pair);
    }
    if out.len() < n {
        return Err(LlmError::Config(format!(
            "asked for {n} few-shot examples but the file holds {}",
            out.len()
        )));
    }
    Ok(out)
}

pub fn load_few_shot(path: &Path, n: usize) -> Result<Vec<FewShotPair>, LlmError> {
    let text = std::fs::read_to_string(path).map_err(|e| LlmError::Config(format!("{}: {e}", path.display())))?;
    few_shot_from_jsonl(&text, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crnforge_core::datagen::{export_jsonl, generate_pair_at, ExportStyle, Ingredients, Split};
    use crnforge_core::prompt::PromptPack;

    #[test]
    fn takes_leading_records_in_order() {
        let ing = Ingredients::default_pack();
        let pairs: Vec<_> = (0..5).map(|i| generate_pair_at(&ing, 0, Split::Train, i).unwrap()).collect();
        for style in [ExportStyle::Chat, ExportStyle::Plain] {
            let text = export_jsonl(&pairs, style);
            let shots = few_shot_from_jsonl(&text, 3).unwrap();
            assert_eq!(shots.len(), 3);
            assert!(shots[1].user.ends_with(&pairs[1].description));
            assert!(PromptPack::default().with_few_shot(shots).invalid_examples().is_empty());
            assert!(few_shot_from_jsonl(&text, 6).is_err());
            assert!(few_shot_from_jsonl(&text, 0).unwrap().is_empty());
        }
    }
}

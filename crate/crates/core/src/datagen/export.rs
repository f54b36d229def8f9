use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{PairMeta, SamplePair};
use crate::dsl::{parse, serialize};
use crate::prompt::{ChatMessage, Role, DEFAULT_SYSTEM_PROMPT, INSTRUCTION_PREFIX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportStyle {
    /// Fine-tuning records: system, user and assistant messages.
    #[default]
    Chat,
    /// Description and unfenced model side by side.
    Plain,
}

impl fmt::Display for ExportStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExportStyle::Chat => "chat",
            ExportStyle::Plain => "plain",
        })
    }
}

impl FromStr for ExportStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chat" => Ok(ExportStyle::Chat),
            "plain" => Ok(ExportStyle::Plain),
            other => Err(format!("unknown export style '{other}' (expected chat or plain)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Serialize, Deserialize)]
struct ChatRecord {
    messages: Vec<ChatMessage>,
    meta: PairMeta,
}

#[derive(Serialize, Deserialize)]
struct PlainRecord {
    description: String,
    model: String,
    meta: PairMeta,
}

fn record_json(pair: &SamplePair, style: ExportStyle) -> String {
    let json = match style {
        ExportStyle::Chat => serde_json::to_string(&ChatRecord {
            messages: vec![
                ChatMessage::system(DEFAULT_SYSTEM_PROMPT),
                ChatMessage::user(format!("{INSTRUCTION_PREFIX}{}", pair.description)),
                ChatMessage::assistant(serialize(&pair.network, true)),
            ],
            meta: pair.meta.clone(),
        }),
        ExportStyle::Plain => serde_json::to_string(&PlainRecord {
            description: pair.description.clone(),
            model: serialize(&pair.network, false),
            meta: pair.meta.clone(),
        }),
    };
    json.expect("records serialize")
}

/// One JSON record per line.
pub fn export_jsonl(pairs: &[SamplePair], style: ExportStyle) -> String {
    pairs.iter().map(|p| record_json(p, style) + "\n").collect()
}

pub fn write_jsonl(path: &Path, pairs: &[SamplePair], style: ExportStyle) -> Result<(), ExportError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for p in pairs {
        writeln!(out, "{}", record_json(p, style))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads records of either style back into pairs. Blank lines are skipped.
pub fn import_jsonl(text: &str) -> Result<Vec<SamplePair>, ExportError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| import_record(l).map_err(|message| ExportError::Record { line: i + 1, message }))
        .collect()
}

fn import_record(line: &str) -> Result<SamplePair, String> {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let (description, model, fenced, meta) = if value.get("messages").is_some() {
        let rec: ChatRecord = serde_json::from_value(value).map_err(|e| e.to_string())?;
        let find = |role: Role| {
            rec.messages
                .iter()
                .rev()
                .find(|m| m.role == role)
                .map(|m| m.content.clone())
                .ok_or_else(|| format!("no {role:?} message"))
        };
        let user = find(Role::User)?;
        let description = user.strip_prefix(INSTRUCTION_PREFIX).unwrap_or(&user).to_string();
        (description, find(Role::Assistant)?, true, rec.meta)
    } else {
        let rec: PlainRecord = serde_json::from_value(value).map_err(|e| e.to_string())?;
        (rec.description, rec.model, false, rec.meta)
    };
    let network = parse(&model, fenced).map_err(|e| e.to_string())?.network;
    Ok(SamplePair {
        description,
        network,
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_pair_at, Ingredients, Split};

    fn pairs() -> Vec<SamplePair> {
        let ing = Ingredients::default_pack();
        (0..25).map(|i| generate_pair_at(&ing, 9, Split::Test, i).unwrap()).collect()
    }

    #[test]
    fn chat_round_trip() {
        let pairs = pairs();
        let text = export_jsonl(&pairs, ExportStyle::Chat);
        assert_eq!(text.lines().count(), pairs.len());
        assert_eq!(import_jsonl(&text).unwrap(), pairs);
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        let msgs = first["messages"].as_array().unwrap();
        assert_eq!(msgs.len(), 3);
        assert_eq!(msgs[0]["role"], "system");
        assert!(msgs[1]["content"].as_str().unwrap().starts_with(INSTRUCTION_PREFIX));
        assert!(msgs[2]["content"].as_str().unwrap().starts_with("```\n"));
    }

    #[test]
    fn plain_round_trip_through_file() {
        let pairs = pairs();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        write_jsonl(&path, &pairs, ExportStyle::Plain).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(!text.contains("```"));
        assert_eq!(import_jsonl(&text).unwrap(), pairs);
    }

    #[test]
    fn bad_records_report_line() {
        let text = format!("{}\n\n{{\"x\":1}}\n", export_jsonl(&pairs()[..1], ExportStyle::Plain).trim());
        match import_jsonl(&text) {
            Err(ExportError::Record { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}

//! In-memory sessions backed by an append-only event log.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

use crnforge_core::prompt::ChatMessage;
use crnforge_core::wire::{SessionSummary, SessionView, TurnResult};

/// Name of the log file inside the data directory.
pub const EVENT_LOG: &str = "sessions.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "lowercase")]
pub enum Event {
    Create {
        session: SessionView,
    },
    Turn {
        id: String,
        /// The user message exactly as sent to the endpoint.
        user_message: ChatMessage,
        turn: TurnResult,
    },
    Delete {
        id: String,
    },
}

/// Applies a successful turn. The assistant message is the raw reply; the
/// current model moves only when the reply parsed.
pub fn apply_turn(view: &mut SessionView, user_message: ChatMessage, turn: TurnResult) {
    view.messages.push(user_message);
    view.messages.push(ChatMessage::assistant(&turn.assistant_text));
    if let Some(net) = &turn.parsed {
        view.current_network = Some(net.clone());
    }
    view.turns.push(turn);
}

pub fn summarize(view: &SessionView) -> SessionSummary {
    SessionSummary {
        id: view.id.clone(),
        created_at: view.created_at,
        turns: view.turns.len(),
        reactions: view.current_network.as_ref().map(|n| n.len()),
    }
}

/// One session. `turn_lock` serializes turns; `view` is read as snapshots.
pub struct Slot {
    pub view: RwLock<SessionView>,
    pub turn_lock: tokio::sync::Mutex<()>,
}

impl Slot {
    fn new(view: SessionView) -> Arc<Slot> {
        Arc::new(Slot {
            view: RwLock::new(view),
            turn_lock: tokio::sync::Mutex::new(()),
        })
    }

    pub fn snapshot(&self) -> SessionView {
        self.view.read().expect("session lock").clone()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("event log {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("event log {path} line {line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
}

pub struct Store {
    sessions: RwLock<HashMap<String, Arc<Slot>>>,
    log: Option<Mutex<(PathBuf, File)>>,
}

impl Store {
    pub fn in_memory() -> Store {
        Store {
            sessions: RwLock::default(),
            log: None,
        }
    }

    /// Replays `dir/sessions.jsonl` and keeps appending to it. A torn final
    /// line, as left by a crash mid-write, is dropped.
    pub fn open(dir: &Path) -> Result<Store, StoreError> {
        let path = dir.join(EVENT_LOG);
        let io = |source| StoreError::Io {
            path: path.clone(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(io)?;
        let mut sessions = HashMap::new();
        let mut valid_len = 0u64;
        if path.exists() {
            let reader = BufReader::new(File::open(&path).map_err(io)?);
            let lines: Vec<String> = reader.lines().collect::<Result<_, _>>().map_err(io)?;
            let last = lines.len();
            for (i, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    valid_len += line.len() as u64 + 1;
                    continue;
                }
                match serde_json::from_str::<Event>(line) {
                    Ok(event) => replay(&mut sessions, event),
                    Err(e) if i + 1 == last => {
                        tracing::warn!(line = i + 1, error = %e, "dropping torn final event");
                        break;
                    }
                    Err(e) => {
                        return Err(StoreError::Corrupt {
                            path: path.clone(),
                            line: i + 1,
                            message: e.to_string(),
                        })
                    }
                }
                valid_len += line.len() as u64 + 1;
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(io)?;
        if file.metadata().map_err(io)?.len() > valid_len {
            file.set_len(valid_len).map_err(io)?;
        }
        tracing::info!(sessions = sessions.len(), path = %path.display(), "event log replayed");
        Ok(Store {
            sessions: RwLock::new(sessions.into_iter().map(|(k, v)| (k, Slot::new(v))).collect()),
            log: Some(Mutex::new((path, file))),
        })
    }

    /// Durably records `event`. Callers change memory only after this
    /// succeeds.
    pub fn record(&self, event: &Event) -> Result<(), StoreError> {
        let Some(log) = &self.log else { return Ok(()) };
        let mut guard = log.lock().expect("log lock");
        let (path, file) = &mut *guard;
        let mut line = serde_json::to_vec(event).expect("events serialize");
        line.push(b'\n');
        file.write_all(&line)
            .and_then(|_| file.sync_data())
            .map_err(|source| StoreError::Io {
                path: path.clone(),
                source,
            })
    }

    pub fn insert(&self, view: SessionView) -> Result<(), StoreError> {
        self.record(&Event::Create { session: view.clone() })?;
        self.sessions.write().expect("store lock").insert(view.id.clone(), Slot::new(view));
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<Arc<Slot>> {
        self.sessions.read().expect("store lock").get(id).cloned()
    }

    /// Sessions ordered by creation time, then id.
    pub fn list(&self) -> Vec<SessionSummary> {
        let mut out: Vec<SessionSummary> = self
            .sessions
            .read()
            .expect("store lock")
            .values()
            .map(|s| summarize(&s.snapshot()))
            .collect();
        out.sort_by(|a, b| (a.created_at, &a.id).cmp(&(b.created_at, &b.id)));
        out
    }

    pub fn remove(&self, id: &str) -> Result<bool, StoreError> {
        if self.get(id).is_none() {
            return Ok(false);
        }
        self.record(&Event::Delete { id: id.to_string() })?;
        Ok(self.sessions.write().expect("store lock").remove(id).is_some())
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn replay(sessions: &mut HashMap<String, SessionView>, event: Event) {
    match event {
        Event::Create { session } => {
            sessions.insert(session.id.clone(), session);
        }
        Event::Turn { id, user_message, turn } => match sessions.get_mut(&id) {
            Some(view) => apply_turn(view, user_message, turn),
            None => tracing::warn!(%id, "turn for unknown session ignored"),
        },
        Event::Delete { id } => {
            sessions.remove(&id);
        }
    }
}

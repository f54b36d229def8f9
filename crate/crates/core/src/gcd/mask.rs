use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::earley::RecognizerState;
use super::grammar::Grammar;

#[derive(Debug, Default, Clone)]
struct TrieNode {
    children: BTreeMap<char, usize>,
    /// Tokens whose text ends exactly here.
    ids: Vec<usize>,
}

/// Token strings indexed by id, with a prefix trie so tokens sharing a
/// prefix share the recognizer work.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<String>,
    trie: Vec<TrieNode>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VocabularyError {
    #[error("token {0} is empty")]
    EmptyToken(usize),
}

impl Vocabulary {
    pub fn new(tokens: Vec<String>) -> Result<Self, VocabularyError> {
        let mut trie = vec![TrieNode::default()];
        for (id, token) in tokens.iter().enumerate() {
            if token.is_empty() {
                return Err(VocabularyError::EmptyToken(id));
            }
            let mut node = 0;
            for c in token.chars() {
                node = match trie[node].children.get(&c) {
                    Some(&child) => child,
                    None => {
                        trie.push(TrieNode::default());
                        let child = trie.len() - 1;
                        trie[node].children.insert(c, child);
                        child
                    }
                };
            }
            trie[node].ids.push(id);
        }
        Ok(Vocabulary { tokens, trie })
    }

    /// One single-character token per character.
    pub fn characters(alphabet: impl IntoIterator<Item = char>) -> Self {
        Vocabulary::new(alphabet.into_iter().map(String::from).collect()).expect("characters are nonempty")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id_of(&self, token: &str) -> Option<usize> {
        self.tokens.iter().position(|t| t == token)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenMask {
    /// Ascending token ids whose text keeps the output viable.
    pub allowed: Vec<usize>,
    /// The current prefix is itself a sentence.
    pub end_allowed: bool,
}

impl TokenMask {
    pub fn allows(&self, id: usize) -> bool {
        self.allowed.binary_search(&id).is_ok()
    }

    pub fn is_dead_end(&self) -> bool {
        self.allowed.is_empty() && !self.end_allowed
    }
}

/// Exact mask for the state's prefix: token `t` is allowed iff
/// prefix + t is a viable prefix.
pub fn allowed_tokens(state: &RecognizerState<'_>, vocab: &Vocabulary) -> TokenMask {
    state.clone().mask(vocab)
}

impl RecognizerState<'_> {
    /// Same as [`allowed_tokens`], trial-advancing in place. The state is
    /// back to where it started on return.
    pub fn mask(&mut self, vocab: &Vocabulary) -> TokenMask {
        let mut allowed = Vec::new();
        descend(self, vocab, 0, &mut allowed);
        allowed.sort_unstable();
        TokenMask {
            allowed,
            end_allowed: self.is_complete(),
        }
    }
}

fn descend(state: &mut RecognizerState<'_>, vocab: &Vocabulary, node: usize, out: &mut Vec<usize>) {
    for (&c, &child) in &vocab.trie[node].children {
        if state.feed(c) {
            out.extend_from_slice(&vocab.trie[child].ids);
            descend(state, vocab, child, out);
            state.truncate(state.len() - 1);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    Token(usize),
    End,
}

/// Picks the next token of a constrained walk.
pub trait Chooser {
    fn choose(&mut self, state: &RecognizerState<'_>, mask: &TokenMask, vocab: &Vocabulary) -> Choice;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkOutcome {
    pub text: String,
    pub tokens: Vec<usize>,
    /// The chooser ended the walk, so `text` is a sentence.
    pub complete: bool,
    /// The token budget ran out first.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WalkError {
    #[error("no token can extend {prefix:?} and it is not a sentence")]
    DeadEnd { prefix: String },
    #[error("chooser picked disallowed token {token} after {prefix:?}")]
    Disallowed { token: usize, prefix: String },
    #[error("chooser ended the walk at {prefix:?}, which is not a sentence")]
    PrematureEnd { prefix: String },
}

/// Builds a string token by token, offering the chooser only the masked
/// tokens. The text is a viable prefix after every step.
pub fn constrained_walk(
    grammar: &Grammar,
    vocab: &Vocabulary,
    chooser: &mut dyn Chooser,
    max_tokens: usize,
) -> Result<WalkOutcome, WalkError> {
    let mut state = RecognizerState::new(grammar);
    let mut tokens = Vec::new();
    loop {
        let mask = state.mask(vocab);
        let prefix = || state.text().to_string();
        if tokens.len() >= max_tokens {
            return Ok(WalkOutcome {
                text: prefix(),
                tokens,
                complete: false,
                truncated: true,
            });
        }
        if mask.is_dead_end() {
            return Err(WalkError::DeadEnd { prefix: prefix() });
        }
        match chooser.choose(&state, &mask, vocab) {
            Choice::End if mask.end_allowed => {
                return Ok(WalkOutcome {
                    text: prefix(),
                    tokens,
                    complete: true,
                    truncated: false,
                })
            }
            Choice::End => return Err(WalkError::PrematureEnd { prefix: prefix() }),
            Choice::Token(id) if mask.allows(id) => {
                let fed = state.feed_str(vocab.token(id));
                debug_assert!(fed, "masked token must extend the prefix");
                tokens.push(id);
            }
            Choice::Token(id) => {
                return Err(WalkError::Disallowed {
                    token: id,
                    prefix: prefix(),
                })
            }
        }
    }
}

/// Steers towards the nearest sentence: ends as soon as possible, otherwise
/// takes the token minimizing its length plus the shortest completion after
/// it (lowest id on ties).
#[derive(Debug, Clone, Copy, Default)]
pub struct ShortestChooser;

impl Chooser for ShortestChooser {
    fn choose(&mut self, state: &RecognizerState<'_>, mask: &TokenMask, vocab: &Vocabulary) -> Choice {
        if mask.end_allowed {
            return Choice::End;
        }
        shortest_candidates(state, mask, vocab)
            .first()
            .map(|&id| Choice::Token(id))
            .unwrap_or(Choice::End)
    }
}

fn shortest_candidates(state: &RecognizerState<'_>, mask: &TokenMask, vocab: &Vocabulary) -> Vec<usize> {
    let mut trial = state.clone();
    let base = trial.len();
    let mut best = usize::MAX;
    let mut ids = Vec::new();
    for &id in &mask.allowed {
        let token = vocab.token(id);
        trial.feed_str(token);
        let cost = token.chars().count() + trial.min_completion_len();
        trial.truncate(base);
        if cost < best {
            best = cost;
            ids.clear();
        }
        if cost == best {
            ids.push(id);
        }
    }
    ids
}

/// Uniform choice among allowed tokens; ends with `end_probability` when a
/// sentence is reached. After `steer_after` tokens it only takes tokens on a
/// shortest path to a sentence, so walks terminate.
#[derive(Debug, Clone)]
pub struct RandomChooser {
    rng: ChaCha8Rng,
    pub end_probability: f64,
    pub steer_after: usize,
    steps: usize,
}

impl RandomChooser {
    pub fn new(seed: u64) -> Self {
        RandomChooser {
            rng: ChaCha8Rng::seed_from_u64(seed),
            end_probability: 0.3,
            steer_after: 200,
            steps: 0,
        }
    }
}

impl Chooser for RandomChooser {
    fn choose(&mut self, state: &RecognizerState<'_>, mask: &TokenMask, vocab: &Vocabulary) -> Choice {
        self.steps += 1;
        let steering = self.steps > self.steer_after;
        if mask.end_allowed && (steering || mask.allowed.is_empty() || self.rng.random_bool(self.end_probability)) {
            return Choice::End;
        }
        let pool = if steering {
            shortest_candidates(state, mask, vocab)
        } else {
            mask.allowed.clone()
        };
        Choice::Token(pool[self.rng.random_range(0..pool.len())])
    }
}

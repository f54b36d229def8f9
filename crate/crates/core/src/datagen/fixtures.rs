use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::dsl::{parse_strict, ReactionNetwork};
use crate::prompt::{ChatMessage, DEFAULT_SYSTEM_PROMPT, INSTRUCTION_PREFIX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FollowUpKind {
    /// One rate changes, nothing else.
    RateChange,
    /// Species are renamed.
    Correction,
    /// Reactions are appended.
    Extension,
}

/// Handwritten two-turn conversation used as validation data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationFixture {
    pub id: String,
    pub kind: FollowUpKind,
    pub description: String,
    /// Fenced model answering the description.
    pub model: String,
    pub follow_up: String,
    /// Fenced model after the follow-up request.
    pub revised_model: String,
}

impl ValidationFixture {
    pub fn network(&self) -> ReactionNetwork {
        parse_strict(&self.model, true).expect("shipped fixture parses").network
    }

    pub fn revised_network(&self) -> ReactionNetwork {
        parse_strict(&self.revised_model, true).expect("shipped fixture parses").network
    }

    /// The full conversation, system prompt first.
    pub fn messages(&self) -> Vec<ChatMessage> {
        vec![
            ChatMessage::system(DEFAULT_SYSTEM_PROMPT),
            ChatMessage::user(format!("{INSTRUCTION_PREFIX}{}", self.description)),
            ChatMessage::assistant(&self.model),
            ChatMessage::user(&self.follow_up),
            ChatMessage::assistant(&self.revised_model),
        ]
    }
}

pub fn validation_fixtures() -> &'static [ValidationFixture] {
    static FIXTURES: OnceLock<Vec<ValidationFixture>> = OnceLock::new();
    FIXTURES.get_or_init(|| {
        serde_json::from_str(include_str!("../../data/validation_fixtures.json")).expect("shipped fixtures are valid JSON")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::unmentioned_species;
    use crate::dsl::Rate;

    #[test]
    fn three_fixtures_with_expected_edits() {
        let fx = validation_fixtures();
        assert_eq!(fx.len(), 3);
        for f in fx {
            let (before, after) = (f.network(), f.revised_network());
            assert!(before.is_strictly_valid() && after.is_strictly_valid());
            assert!(unmentioned_species(&f.description, &before).is_empty(), "{}", f.id);
            assert_ne!(before, after);
            match f.kind {
                FollowUpKind::RateChange => {
                    assert!(f.follow_up.starts_with("Change the rate of"));
                    assert_eq!(before.len(), after.len());
                    let changed: Vec<_> = before.reactions.iter().zip(&after.reactions).filter(|(a, b)| a != b).collect();
                    assert_eq!(changed.len(), 1);
                    let (a, b) = changed[0];
                    assert_eq!((&a.reactants, &a.products), (&b.reactants, &b.products));
                    assert!(matches!(b.rate, Rate::Numeric { .. }));
                }
                FollowUpKind::Correction => {
                    assert!(f.follow_up.starts_with("I was mistaken"));
                    assert_eq!(before.len(), after.len());
                    for (a, b) in before.reactions.iter().zip(&after.reactions) {
                        assert_eq!(a.rate, b.rate);
                    }
                }
                FollowUpKind::Extension => {
                    assert!(after.len() > before.len());
                    assert_eq!(after.reactions[..before.len()], before.reactions[..]);
                }
            }
        }
    }

    #[test]
    fn conversation_shape() {
        let msgs = validation_fixtures()[0].messages();
        assert_eq!(msgs.len(), 5);
        assert!(msgs[1].content.starts_with(INSTRUCTION_PREFIX));
        assert_eq!(msgs[3].content, validation_fixtures()[0].follow_up);
    }
}

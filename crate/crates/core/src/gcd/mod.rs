//! Grammar-constrained decoding: grammar compilation, incremental
//! recognition and token masks.

use std::sync::OnceLock;

mod earley;
mod grammar;
mod mask;

pub use earley::RecognizerState;
pub use grammar::{compile, Grammar, GrammarError, Production, Symbol, Terminal};
pub use mask::{
    allowed_tokens, constrained_walk, Choice, Chooser, RandomChooser, ShortestChooser, TokenMask, Vocabulary,
    VocabularyError, WalkError, WalkOutcome,
};

/// Source of the reaction-network grammar.
pub const CRN_GRAMMAR: &str = include_str!("../../data/crn.gbnf");

/// The compiled reaction-network grammar.
pub fn crn_grammar() -> &'static Grammar {
    static GRAMMAR: OnceLock<Grammar> = OnceLock::new();
    GRAMMAR.get_or_init(|| compile(CRN_GRAMMAR).expect("shipped grammar compiles"))
}

/// Whether the fenced model in an assistant reply is a sentence of the
/// reaction-network grammar. A missing final newline after the closing
/// fence is tolerated.
pub fn reply_is_grammatical(reply: &str) -> bool {
    let Some(mut block) = crate::dsl::extract_candidate_model(reply).fenced_text else {
        return false;
    };
    if !block.ends_with('\n') {
        block.push('\n');
    }
    crn_grammar().is_complete(&block)
}

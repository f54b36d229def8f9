use std::collections::{BTreeMap, BTreeSet};

use crnforge_core::datagen::{generate_pair_at, Ingredients, Split};
use crnforge_core::dsl::{parse, serialize};
use crnforge_core::gcd::{compile, constrained_walk, crn_grammar, RandomChooser, RecognizerState, Vocabulary};
use proptest::prelude::*;

const TOY: &str = r#"
root = item { item } ;
item = "a" | "(" [ root ] ")" ;
"#;
const TOY_ALPHABET: [char; 3] = ['(', ')', 'a'];
const MAX_LEN: usize = 12;

/// Non-empty and balanced, checked by counting.
fn toy_member(s: &[char]) -> bool {
    let mut depth = 0i32;
    for &c in s {
        depth += match c {
            '(' => 1,
            ')' => -1,
            _ => 0,
        };
        if depth < 0 {
            return false;
        }
    }
    !s.is_empty() && depth == 0
}

/// Every sentence up to `MAX_LEN`, by exhaustive enumeration.
fn toy_sentences() -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut layer: Vec<Vec<char>> = vec![Vec::new()];
    for _ in 0..MAX_LEN {
        let mut next = Vec::with_capacity(layer.len() * 3);
        for s in &layer {
            for c in TOY_ALPHABET {
                let mut t = s.clone();
                t.push(c);
                if toy_member(&t) {
                    out.insert(t.iter().collect());
                }
                next.push(t);
            }
        }
        layer = next;
    }
    out
}

/// For each prefix of a bounded sentence: the characters that continue it
/// into some bounded sentence, and whether it is itself one.
fn bounded_masks(sentences: &BTreeSet<String>) -> BTreeMap<String, (BTreeSet<char>, bool)> {
    let mut masks: BTreeMap<String, (BTreeSet<char>, bool)> = BTreeMap::new();
    for s in sentences {
        let chars: Vec<char> = s.chars().collect();
        for cut in 0..=chars.len() {
            let prefix: String = chars[..cut].iter().collect();
            let entry = masks.entry(prefix).or_default();
            match chars.get(cut) {
                Some(&c) => {
                    entry.0.insert(c);
                }
                None => entry.1 = true,
            }
        }
    }
    masks
}

#[test]
fn toy_masks_equal_brute_force_enumeration() {
    let grammar = compile(TOY).unwrap();
    assert_eq!(grammar.alphabet(), TOY_ALPHABET.to_vec());
    let vocab = Vocabulary::characters(TOY_ALPHABET);
    let sentences = toy_sentences();
    let masks = bounded_masks(&sentences);
    assert!(masks.len() > 1000);
    for (prefix, (expected, is_sentence)) in &masks {
        let mut state = RecognizerState::new(&grammar);
        assert!(state.feed_str(prefix), "{prefix:?} rejected");
        let mask = state.mask(&vocab);
        assert_eq!(mask.end_allowed, *is_sentence, "end after {prefix:?}");
        assert_eq!(state.is_complete(), *is_sentence);
        // Restrict the unbounded mask to continuations that still fit.
        let bounded: BTreeSet<char> = mask
            .allowed
            .iter()
            .map(|&id| vocab.token(id).chars().next().unwrap())
            .filter(|&c| {
                let mut next = state.clone();
                next.feed(c);
                prefix.len() + 1 + next.min_completion_len() <= MAX_LEN
            })
            .collect();
        assert_eq!(&bounded, expected, "mask after {prefix:?}");
        // The unbounded mask is exactly the viable one-character extensions.
        let viable: BTreeSet<char> = TOY_ALPHABET
            .into_iter()
            .filter(|c| toy_member_prefix(&format!("{prefix}{c}")))
            .collect();
        let unbounded: BTreeSet<char> = mask.allowed.iter().map(|&id| vocab.token(id).chars().next().unwrap()).collect();
        assert_eq!(unbounded, viable, "unbounded mask after {prefix:?}");
    }
}

/// A prefix of the toy language is any string whose depth never drops
/// below zero; closing all open parentheses (or appending `a`) completes it.
fn toy_member_prefix(s: &str) -> bool {
    let mut depth = 0i32;
    for c in s.chars() {
        depth += match c {
            '(' => 1,
            ')' => -1,
            _ => 0,
        };
        if depth < 0 {
            return false;
        }
    }
    true
}

#[test]
fn toy_multi_character_tokens_follow_character_masks() {
    let grammar = compile(TOY).unwrap();
    let tokens = ["(", ")", "a", "()", "))", "(a", "a)", "aa"];
    let vocab = Vocabulary::new(tokens.iter().map(|t| t.to_string()).collect()).unwrap();
    for prefix in bounded_masks(&toy_sentences()).keys().filter(|p| p.len() <= 8) {
        let mut state = RecognizerState::new(&grammar);
        state.feed_str(prefix);
        let mask = state.mask(&vocab);
        for (id, token) in tokens.iter().enumerate() {
            let expected = grammar.is_viable_prefix(&format!("{prefix}{token}"));
            assert_eq!(mask.allows(id), expected, "{token:?} after {prefix:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn random_constrained_walks_parse(seed in any::<u64>()) {
        let grammar = crn_grammar();
        let vocab = Vocabulary::characters(grammar.alphabet());
        let walk = constrained_walk(grammar, &vocab, &mut RandomChooser::new(seed), 10_000).unwrap();
        prop_assert!(walk.complete);
        prop_assert!(grammar.is_complete(&walk.text));
        prop_assert!(parse(&walk.text, true).is_ok(), "{}", walk.text);
    }

    #[test]
    fn canonical_text_never_leaves_the_mask(seed in any::<u64>(), index in 0u64..100_000) {
        let grammar = crn_grammar();
        let alphabet = grammar.alphabet();
        let net = generate_pair_at(&Ingredients::default_pack(), seed, Split::Train, index).unwrap().network;
        let text = serialize(&net, true);
        let mut state = RecognizerState::new(grammar);
        for (i, c) in text.chars().enumerate() {
            prop_assert!(state.next_chars(&alphabet).contains(&c), "{:?} at {} of {:?}", c, i, text);
            prop_assert!(state.feed(c));
        }
        prop_assert!(state.is_complete());
    }
}

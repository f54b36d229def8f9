use crnforge_core::datagen::{generate_pair_at, Ingredients, Split};
use crnforge_core::dsl::{is_species_name, parse, serialize, Rate, ReactionNetwork};
use crnforge_core::equivalence::{canonicalize_reaction, networks_match, score_answer, MatchMode};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn generated(seed: u64, index: u64) -> ReactionNetwork {
    generate_pair_at(&Ingredients::default_pack(), seed, Split::Train, index)
        .unwrap()
        .network
}

fn flip_case(name: &str, rng: &mut ChaCha8Rng) -> String {
    name.chars()
        .map(|c| {
            if rng.random_bool(0.5) {
                if c.is_ascii_uppercase() {
                    c.to_ascii_lowercase()
                } else {
                    c.to_ascii_uppercase()
                }
            } else {
                c
            }
        })
        .collect()
}

fn shuffle_segments(name: &str, rng: &mut ChaCha8Rng) -> String {
    let mut parts: Vec<&str> = name.split('_').collect();
    parts.shuffle(rng);
    let shuffled = parts.join("_");
    if is_species_name(&shuffled) {
        shuffled
    } else {
        name.to_string()
    }
}

/// Applies every meaning-preserving rewrite at random.
fn disguise(net: &ReactionNetwork, rng: &mut ChaCha8Rng) -> ReactionNetwork {
    let mut out = net.clone();
    out.reactions.shuffle(rng);
    let mut ks: Vec<usize> = (0..out.reactions.len() * 3).collect();
    ks.shuffle(rng);
    for (i, reaction) in out.reactions.iter_mut().enumerate() {
        reaction.reactants.shuffle(rng);
        reaction.products.shuffle(rng);
        for term in reaction.reactants.iter_mut().chain(reaction.products.iter_mut()) {
            let name = shuffle_segments(&term.name, rng);
            term.name = flip_case(&name, rng);
        }
        if let Rate::Symbolic(_) = reaction.rate {
            let prefix = if rng.random_bool(0.5) { "k" } else { "K" };
            reaction.rate = Rate::symbolic(format!("{prefix}{}", ks[i]));
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn disguised_networks_match(seed in any::<u64>(), index in 0u64..100_000, salt in any::<u64>()) {
        let gt = generated(seed, index);
        let mut rng = ChaCha8Rng::seed_from_u64(salt);
        let answer = disguise(&gt, &mut rng);
        let reparsed = parse(&serialize(&answer, true), true).unwrap().network;
        for mode in MatchMode::ALL {
            prop_assert!(networks_match(&gt, &reparsed, mode).verdict);
        }
    }

    #[test]
    fn deleting_a_reaction_never_matches(seed in any::<u64>(), index in 0u64..100_000, pick in any::<prop::sample::Index>()) {
        let gt = generated(seed, index);
        let mut answer = gt.clone();
        answer.reactions.remove(pick.index(gt.len()));
        prop_assert!(!networks_match(&gt, &answer, MatchMode::PaperLiteral).verdict);
    }

    #[test]
    fn coefficient_change_never_matches(seed in any::<u64>(), index in 0u64..100_000, pick in any::<prop::sample::Index>()) {
        let gt = generated(seed, index);
        let mut answer = gt.clone();
        let terms: Vec<(usize, bool, usize)> = gt.reactions.iter().enumerate().flat_map(|(r, reaction)| {
            (0..reaction.reactants.len()).map(move |t| (r, true, t))
                .chain((0..reaction.products.len()).map(move |t| (r, false, t)))
        }).collect();
        let (r, left, t) = terms[pick.index(terms.len())];
        let side = if left { &mut answer.reactions[r].reactants } else { &mut answer.reactions[r].products };
        side[t].coefficient = if side[t].coefficient == 1 { 2 } else { 1 };
        prop_assert!(!networks_match(&gt, &answer, MatchMode::PaperLiteral).verdict);
    }

    #[test]
    fn swapping_sides_never_matches(seed in any::<u64>(), index in 0u64..100_000) {
        let gt = generated(seed, index);
        let asymmetric = gt.reactions.iter().position(|r| {
            let c = canonicalize_reaction(r);
            c.reactants != c.products
        });
        prop_assume!(asymmetric.is_some());
        let mut answer = gt.clone();
        let reaction = &mut answer.reactions[asymmetric.unwrap()];
        std::mem::swap(&mut reaction.reactants, &mut reaction.products);
        prop_assert!(!networks_match(&gt, &answer, MatchMode::PaperLiteral).verdict);
    }

    #[test]
    fn changing_a_numeric_rate_never_matches(seed in any::<u64>(), index in 0u64..100_000) {
        let gt = generated(seed, index);
        let numeric = gt.reactions.iter().position(|r| matches!(r.rate, Rate::Numeric { .. }));
        prop_assume!(numeric.is_some());
        let mut answer = gt.clone();
        let reaction = &mut answer.reactions[numeric.unwrap()];
        let Rate::Numeric { value, .. } = reaction.rate else { unreachable!() };
        reaction.rate = Rate::numeric(&format!("{}", value + 1.0)).unwrap();
        prop_assert!(!networks_match(&gt, &answer, MatchMode::PaperLiteral).verdict);
    }

    #[test]
    fn extra_reactions_only_fail_strict(seed in any::<u64>(), index in 0u64..100_000) {
        let gt = generated(seed, index);
        let mut answer = gt.clone();
        answer.reactions.push(parse("Zz_extra -> @ 9.75;", false).unwrap().network.reactions.remove(0));
        let literal = networks_match(&gt, &answer, MatchMode::PaperLiteral);
        let strict = networks_match(&gt, &answer, MatchMode::Strict);
        prop_assert!(literal.verdict);
        prop_assert!(!strict.verdict);
        prop_assert_eq!(strict.extra_ans.len(), 1);
    }

    #[test]
    fn self_score_is_correct(seed in any::<u64>(), index in 0u64..100_000) {
        let gt = generated(seed, index);
        let report = score_answer(&gt, &serialize(&gt, true), MatchMode::Strict).unwrap();
        prop_assert!(report.verdict);
        prop_assert_eq!(report.matched_pairs.len(), gt.len());
    }
}

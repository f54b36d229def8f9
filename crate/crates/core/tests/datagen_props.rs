use std::collections::{BTreeMap, HashSet};

use crnforge_core::datagen::{
    export_jsonl, generate_dataset, generate_pair_at, import_jsonl, unmentioned_species, DatasetSpec, Domain, ExportStyle,
    Ingredients, SamplePair, Split,
};
use crnforge_core::dsl::{serialize, Reaction};
use crnforge_core::equivalence::{score_answer, MatchMode};
use proptest::prelude::*;

fn check_pair(pair: &SamplePair) -> Result<(), TestCaseError> {
    let net = &pair.network;
    prop_assert!((2..=12).contains(&net.len()), "{} reactions", net.len());
    prop_assert!((2..=4).contains(&pair.meta.concepts.len()));
    prop_assert!((3..=5).contains(&pair.meta.pool.len()), "pool {:?}", pair.meta.pool);
    for r in &net.reactions {
        prop_assert!(r.reactants.len() <= 2, "{}", r);
        prop_assert!(r.products.len() <= 3, "{}", r);
        prop_assert!(!r.is_degenerate());
    }
    prop_assert!(net.is_strictly_valid());
    prop_assert!(unmentioned_species(&pair.description, net).is_empty());
    let report = score_answer(net, &serialize(net, true), MatchMode::Strict).unwrap();
    prop_assert!(report.verdict);
    Ok(())
}

fn species(r: &Reaction) -> impl Iterator<Item = &str> {
    r.reactants.iter().chain(&r.products).map(|t| t.name.as_str())
}

proptest! {
    #[test]
    fn every_pair_holds_the_generator_contract(seed in any::<u64>(), index in 0u64..1_000_000) {
        let pair = generate_pair_at(&Ingredients::default_pack(), seed, Split::Train, index).unwrap();
        check_pair(&pair)?;
        // Each species is a pool member or a complex built from members.
        for r in &pair.network.reactions {
            for name in species(r) {
                prop_assert!(pair.meta.pool.iter().any(|p| name.contains(p.as_str())), "{} not from {:?}", name, pair.meta.pool);
            }
        }
    }

    #[test]
    fn pairs_are_pure_functions_of_their_coordinates(seed in any::<u64>(), index in any::<u64>()) {
        let ing = Ingredients::default_pack();
        let a = generate_pair_at(&ing, seed, Split::Test, index).unwrap();
        let b = generate_pair_at(&ing, seed, Split::Test, index).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!((a.meta.seed, a.meta.index, a.meta.split), (seed, index, Split::Test));
    }

    #[test]
    fn jsonl_export_round_trips(seed in any::<u64>(), chat in any::<bool>()) {
        let ing = Ingredients::default_pack();
        let pairs: Vec<SamplePair> = (0..5).map(|i| generate_pair_at(&ing, seed, Split::Train, i).unwrap()).collect();
        let style = if chat { ExportStyle::Chat } else { ExportStyle::Plain };
        let back = import_jsonl(&export_jsonl(&pairs, style)).unwrap();
        prop_assert_eq!(back, pairs);
    }
}

#[test]
fn domain_and_concept_frequencies() {
    let ing = Ingredients::default_pack();
    let n = 3000;
    let mut domains: BTreeMap<Domain, usize> = BTreeMap::new();
    let mut concept_counts: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..n {
        let pair = generate_pair_at(&ing, 2024, Split::Train, i).unwrap();
        *domains.entry(pair.meta.domain).or_default() += 1;
        *concept_counts.entry(pair.meta.concepts.len()).or_default() += 1;
    }
    for d in Domain::ALL {
        let f = domains[&d] as f64 / n as f64;
        assert!((f - 1.0 / 3.0).abs() < 0.04, "{d}: {f}");
    }
    assert_eq!(concept_counts.keys().copied().collect::<Vec<_>>(), vec![2, 3, 4]);
}

#[test]
fn default_split_is_disjoint() {
    let d = generate_dataset(&Ingredients::default_pack(), &DatasetSpec::default()).unwrap();
    assert_eq!((d.train.len(), d.test.len()), (800, 200));
    let ids = |ing: &Ingredients| ing.templates.iter().map(|t| t.id.clone()).chain(ing.relational.iter().map(|t| t.id.clone())).collect::<HashSet<_>>();
    assert!(ids(&d.train_ingredients).is_disjoint(&ids(&d.test_ingredients)));
    for domain in Domain::ALL {
        let train: HashSet<&String> = d.train_ingredients.species(domain).iter().collect();
        let test: HashSet<&String> = d.test_ingredients.species(domain).iter().collect();
        assert!(train.is_disjoint(&test), "{domain}");
    }
    let test_ids = ids(&d.test_ingredients);
    for pair in &d.train {
        assert!(pair.meta.templates.iter().all(|t| !test_ids.contains(t)));
    }
}

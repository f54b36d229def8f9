use std::collections::{BTreeMap, HashSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::pack::{split_ingredients, SplitError};
use super::verbalize::{finish_sentence, verbalize, with_connective};
use super::{Concept, Dataset, DatasetSpec, Domain, Ingredients, PairMeta, SamplePair, Split, SpeciesClass, Template};
use crate::dsl::{Rate, Reaction, ReactionNetwork, SpeciesTerm};

/// Upper bound on reactions per generated network.
pub const MAX_REACTIONS: usize = 12;

const MIN_CONCEPTS: usize = 2;
const MAX_CONCEPTS: usize = 4;
const MIN_POOL: usize = 3;
const MAX_POOL: usize = 5;
const ATTRIBUTE_PROBABILITY: f64 = 0.5;
const RELATIONAL_PROBABILITY: f64 = 0.5;
const CONNECTIVE_PROBABILITY: f64 = 0.5;
const UNIT_COEFFICIENT_PROBABILITY: f64 = 0.8;
const CONCEPT_ATTEMPTS: usize = 50;
const PAIR_ATTEMPTS: usize = 50;

/// Name segments that the description may leave implicit.
const IMPLICIT_SEGMENTS: [&str; 3] = ["male", "female", "pup"];

/// Placeholder rate that is renumbered once the network is complete.
const UNNUMBERED: &str = "k";

/// A species as it appears in one placeholder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub coefficient: u8,
    /// Name in the model.
    pub name: String,
    /// Words used in the description, without the coefficient.
    pub surface: String,
}

impl Slot {
    fn with_coefficient(&self, coefficient: u8) -> Slot {
        Slot {
            coefficient,
            ..self.clone()
        }
    }

    fn term(&self) -> SpeciesTerm {
        SpeciesTerm::new(self.coefficient, &self.name)
    }

    /// A sex or age variant: "hungry Fox" becomes "male hungry Fox" and
    /// `Fox_hungry_male`.
    fn variant(&self, word: &str) -> Slot {
        Slot {
            coefficient: 1,
            name: format!("{}_{word}", self.name),
            surface: format!("{word} {}", self.surface),
        }
    }
}

/// One concept rendered into sentences and reactions.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptInstance {
    pub concept: Concept,
    pub template_id: String,
    /// Symbolic rates are still unnumbered.
    pub reactions: Vec<Reaction>,
    /// Main sentence, without final punctuation handling.
    pub sentence: String,
    /// Whether the sentence opens with a bare species name.
    pub starts_with_name: bool,
    pub template_text: String,
    /// Follow-up sentence giving the rate, with its template id.
    pub relational: Option<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerateError {
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error("{domain} needs at least {MIN_POOL} species, found {found}")]
    TooFewSpecies { domain: Domain, found: usize },
    #[error("no {domain} template for {concept} fits {budget} reaction(s)")]
    NoTemplate { domain: Domain, concept: Concept, budget: usize },
    #[error("template {template} cannot be filled from a pool of {pool} species")]
    Unsatisfiable { template: String, pool: usize },
    #[error("no valid pair after {0} attempts")]
    Exhausted(usize),
    #[error("species segments {missing:?} are not mentioned in: {description}")]
    Unmentioned { missing: Vec<String>, description: String },
}

/// Random stream for one pair. Pairs of different splits never share a
/// stream.
pub fn pair_rng(seed: u64, split: Split, index: u64) -> ChaCha8Rng {
    let offset: u64 = match split {
        Split::Train => 0,
        Split::Test => 1 << 40,
        Split::Validation => 2 << 40,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(offset + index);
    rng
}

/// Both halves of a dataset, each drawn from its own ingredients.
pub fn generate_dataset(ingredients: &Ingredients, spec: &DatasetSpec) -> Result<Dataset, GenerateError> {
    let (train_ingredients, test_ingredients) = split_ingredients(ingredients, spec.split_ratio, spec.seed)?;
    let draw = |ing: &Ingredients, split: Split, n: usize| {
        (0..n as u64)
            .map(|i| generate_pair_at(ing, spec.seed, split, i))
            .collect::<Result<Vec<_>, _>>()
    };
    Ok(Dataset {
        train: draw(&train_ingredients, Split::Train, spec.train_size)?,
        test: draw(&test_ingredients, Split::Test, spec.test_size)?,
        train_ingredients,
        test_ingredients,
    })
}

/// The pair a dataset with `seed` holds at position `index` of `split`.
pub fn generate_pair_at(
    ingredients: &Ingredients,
    seed: u64,
    split: Split,
    index: u64,
) -> Result<SamplePair, GenerateError> {
    let mut rng = pair_rng(seed, split, index);
    let mut pair = generate_pair(&mut rng, ingredients)?;
    pair.meta.seed = seed;
    pair.meta.index = index;
    pair.meta.split = split;
    Ok(pair)
}

/// Draws one pair. Seed, index and split in the returned metadata are zero
/// and `Train`; [`generate_pair_at`] fills them in.
pub fn generate_pair<R: Rng>(rng: &mut R, ingredients: &Ingredients) -> Result<SamplePair, GenerateError> {
    let domain = *Domain::ALL.choose(rng).expect("nonempty");
    let available = ingredients.species(domain).len();
    if available < MIN_POOL {
        return Err(GenerateError::TooFewSpecies { domain, found: available });
    }
    let mut last_error = GenerateError::Exhausted(PAIR_ATTEMPTS);
    for _ in 0..PAIR_ATTEMPTS {
        match try_pair(rng, ingredients, domain) {
            Ok(pair) => return Ok(pair),
            Err(e @ GenerateError::Unmentioned { .. }) => return Err(e),
            Err(e) => last_error = e,
        }
    }
    Err(match last_error {
        GenerateError::Exhausted(_) | GenerateError::Unsatisfiable { .. } => GenerateError::Exhausted(PAIR_ATTEMPTS),
        other => other,
    })
}

fn try_pair<R: Rng>(rng: &mut R, ingredients: &Ingredients, domain: Domain) -> Result<SamplePair, GenerateError> {
    let pool = draw_pool(rng, ingredients, domain);
    let n_concepts = rng.random_range(MIN_CONCEPTS..=MAX_CONCEPTS);
    let concepts: Vec<Concept> = (0..n_concepts)
        .map(|_| *domain.concepts().choose(rng).expect("nonempty"))
        .collect();

    let mut reactions: Vec<Reaction> = Vec::new();
    let mut sides: HashSet<(Vec<(String, u8)>, Vec<(String, u8)>)> = HashSet::new();
    let mut instances = Vec::with_capacity(n_concepts);
    for (i, &concept) in concepts.iter().enumerate() {
        let budget = MAX_REACTIONS - reactions.len() - (n_concepts - i - 1);
        let instance = (0..CONCEPT_ATTEMPTS)
            .find_map(|_| {
                let inst = instantiate_concept(rng, ingredients, domain, concept, &pool, budget).ok()?;
                let keys: Vec<_> = inst.reactions.iter().map(side_key).collect();
                let fresh = keys.iter().all(|k| !sides.contains(k)) && keys.iter().collect::<HashSet<_>>().len() == keys.len();
                fresh.then(|| {
                    sides.extend(keys);
                    inst
                })
            })
            .ok_or(GenerateError::Exhausted(CONCEPT_ATTEMPTS))?;
        reactions.extend(instance.reactions.iter().cloned());
        instances.push(instance);
    }

    let mut next_k = 0;
    for r in &mut reactions {
        if matches!(&r.rate, Rate::Symbolic(id) if id == UNNUMBERED) {
            r.rate = Rate::k(next_k);
            next_k += 1;
        }
    }

    let mut sentences = Vec::new();
    for (i, inst) in instances.iter().enumerate() {
        let main = if i > 0 && rng.random_bool(CONNECTIVE_PROBABILITY) {
            let connective = ingredients.connectives.choose(rng).expect("validated nonempty");
            finish_sentence(&with_connective(connective, &inst.template_text, &inst.sentence), false)
        } else {
            finish_sentence(&inst.sentence, !inst.starts_with_name)
        };
        sentences.push(main);
        if let Some((_, text)) = &inst.relational {
            sentences.push(finish_sentence(text, true));
        }
    }
    let description = sentences.join(" ");
    let network = ReactionNetwork::new(reactions);

    let missing = unmentioned_species(&description, &network);
    if !missing.is_empty() {
        return Err(GenerateError::Unmentioned { missing, description });
    }
    let templates = instances
        .iter()
        .flat_map(|inst| std::iter::once(inst.template_id.clone()).chain(inst.relational.iter().map(|(id, _)| id.clone())))
        .collect();
    Ok(SamplePair {
        description,
        network,
        meta: PairMeta {
            domain,
            concepts,
            seed: 0,
            index: 0,
            split: Split::Train,
            templates,
            pool: pool.iter().map(|slot| slot.name.clone()).collect(),
        },
    })
}

fn side_key(r: &Reaction) -> (Vec<(String, u8)>, Vec<(String, u8)>) {
    let side = |terms: &[SpeciesTerm]| {
        let mut v: Vec<(String, u8)> = terms.iter().map(|t| (t.name.clone(), t.coefficient)).collect();
        v.sort();
        v
    };
    (side(&r.reactants), side(&r.products))
}

fn draw_pool<R: Rng>(rng: &mut R, ingredients: &Ingredients, domain: Domain) -> Vec<Slot> {
    let names = ingredients.species(domain);
    let size = rng.random_range(MIN_POOL..=MAX_POOL).min(names.len());
    names
        .choose_multiple(rng, size)
        .map(|base| {
            if domain == Domain::Ecology && rng.random_bool(ATTRIBUTE_PROBABILITY) {
                let attr = ingredients.ecology_attributes.choose(rng).expect("validated nonempty");
                Slot {
                    coefficient: 1,
                    name: format!("{base}_{attr}"),
                    surface: format!("{attr} {base}"),
                }
            } else {
                Slot {
                    coefficient: 1,
                    name: base.clone(),
                    surface: base.clone(),
                }
            }
        })
        .collect()
}

/// Smallest number of reactions a template produces.
fn min_reactions(t: &Template) -> usize {
    match (t.concept, t.reactant_class, t.product_class) {
        (Concept::Degradation, SpeciesClass::Plural, _) | (Concept::Production, _, SpeciesClass::Plural) => 2,
        (Concept::Chain, SpeciesClass::Plural, _) => 2,
        _ => 1,
    }
}

fn numeric_rate<R: Rng>(rng: &mut R) -> Rate {
    let cents: u32 = rng.random_range(1..1000);
    let mut text = format!("{}.{:02}", cents / 100, cents % 100);
    while text.ends_with('0') && !text.ends_with(".0") {
        text.pop();
    }
    Rate::numeric(&text).expect("well-formed decimal")
}

fn coefficient<R: Rng>(rng: &mut R) -> u8 {
    if rng.random_bool(UNIT_COEFFICIENT_PROBABILITY) {
        1
    } else {
        rng.random_range(2..=3)
    }
}

fn class_count<R: Rng>(rng: &mut R, class: SpeciesClass, plural_max: usize) -> usize {
    match class {
        SpeciesClass::Zero => 0,
        SpeciesClass::Singular => 1,
        SpeciesClass::Plural => rng.random_range(2..=plural_max),
        SpeciesClass::Any => rng.random_range(1..=plural_max),
    }
}

/// Picks a template of `concept` whose smallest expansion fits `budget`
/// and fills it with species from `pool`.
pub fn instantiate_concept<R: Rng>(
    rng: &mut R,
    ingredients: &Ingredients,
    domain: Domain,
    concept: Concept,
    pool: &[Slot],
    budget: usize,
) -> Result<ConceptInstance, GenerateError> {
    let candidates: Vec<&Template> = ingredients
        .templates_for(domain, concept)
        .filter(|t| min_reactions(t) <= budget)
        .collect();
    let template = *candidates
        .choose(rng)
        .ok_or(GenerateError::NoTemplate { domain, concept, budget })?;
    let unsatisfiable = || GenerateError::Unsatisfiable {
        template: template.id.clone(),
        pool: pool.len(),
    };

    let shared_rate = template.has_rate.then(|| numeric_rate(rng));
    let rate = || shared_rate.clone().unwrap_or_else(|| Rate::symbolic(UNNUMBERED));
    let mut fills: BTreeMap<String, Vec<Slot>> = BTreeMap::new();
    let mut reactions = Vec::new();
    let mut relational = None;

    match concept {
        Concept::Degradation | Concept::Production => {
            let class = if concept == Concept::Degradation {
                template.reactant_class
            } else {
                template.product_class
            };
            let n = class_count(rng, class, 3.min(budget).min(pool.len()).max(2));
            if n > pool.len() || n > budget {
                return Err(unsatisfiable());
            }
            let chosen: Vec<Slot> = pool.choose_multiple(rng, n).cloned().collect();
            let mut lone_rate = None;
            if n == 1 && !template.has_rate && rng.random_bool(RELATIONAL_PROBABILITY) {
                let options: Vec<_> = ingredients.relational_for(domain, concept).collect();
                if let Some(rel) = options.choose(rng) {
                    let r = numeric_rate(rng);
                    relational = Some((rel.id.clone(), rel.text.replace("{rate}", r.lexeme())));
                    lone_rate = Some(r);
                }
            }
            for s in &chosen {
                let r = lone_rate.clone().unwrap_or_else(rate);
                reactions.push(if concept == Concept::Degradation {
                    Reaction::new(vec![s.term()], vec![], r)
                } else {
                    Reaction::new(vec![], vec![s.term()], r)
                });
            }
            let key = if concept == Concept::Degradation { "reactants" } else { "products" };
            fills.insert(key.into(), chosen);
        }
        Concept::Complexation => {
            let pair: Vec<Slot> = pool.choose_multiple(rng, 2).cloned().collect();
            if pair.len() < 2 {
                return Err(unsatisfiable());
            }
            let name = format!("{}{}", pair[0].name, pair[1].name);
            let complex = Slot {
                coefficient: 1,
                surface: name.clone(),
                name,
            };
            reactions.push(Reaction::new(
                pair.iter().map(Slot::term).collect(),
                vec![complex.term()],
                rate(),
            ));
            fills.insert("reactants".into(), pair);
            fills.insert("products".into(), vec![complex]);
        }
        Concept::Catalysis => {
            let three: Vec<Slot> = pool.choose_multiple(rng, 3).cloned().collect();
            if three.len() < 3 {
                return Err(unsatisfiable());
            }
            let (substrate, enzyme, product) = (&three[0], &three[1], &three[2]);
            reactions.push(Reaction::new(
                vec![substrate.term(), enzyme.term()],
                vec![product.term(), enzyme.term()],
                rate(),
            ));
            fills.insert("reactants1".into(), vec![substrate.clone()]);
            fills.insert("reactants2".into(), vec![enzyme.clone()]);
            fills.insert("products".into(), vec![product.clone()]);
        }
        Concept::Chain => {
            let hops = if template.reactant_class == SpeciesClass::Plural {
                let max = 4.min(pool.len().saturating_sub(1)).min(budget);
                if max < 2 {
                    return Err(unsatisfiable());
                }
                rng.random_range(2..=max)
            } else {
                1
            };
            let path: Vec<Slot> = pool.choose_multiple(rng, hops + 1).cloned().collect();
            if path.len() < hops + 1 {
                return Err(unsatisfiable());
            }
            for w in path.windows(2) {
                reactions.push(Reaction::new(vec![w[0].term()], vec![w[1].term()], rate()));
            }
            fills.insert("reactants".into(), vec![path[0].clone()]);
            fills.insert("products".into(), vec![path[hops].clone()]);
            if hops > 1 {
                fills.insert("reactants2".into(), path[1..hops].to_vec());
            }
        }
        Concept::Mating => {
            let parent = pool.choose(rng).ok_or_else(unsatisfiable)?;
            let male = parent.variant("male");
            let female = parent.variant("female");
            let pup = parent.variant("pup");
            reactions.push(Reaction::new(
                vec![male.term(), female.term()],
                vec![pup.term(), female.term(), male.term()],
                rate(),
            ));
            fills.insert("reactants1".into(), vec![male]);
            fills.insert("reactants2".into(), vec![female]);
        }
        Concept::Predation => {
            let two: Vec<Slot> = pool.choose_multiple(rng, 2).cloned().collect();
            if two.len() < 2 {
                return Err(unsatisfiable());
            }
            let (prey, predator) = (&two[0], &two[1]);
            reactions.push(Reaction::new(
                vec![prey.term(), predator.term()],
                vec![predator.term()],
                rate(),
            ));
            fills.insert("reactants1".into(), vec![prey.clone()]);
            fills.insert("reactants2".into(), vec![predator.clone()]);
        }
        Concept::Unspecified => {
            let n_in = class_count(rng, template.reactant_class, 2);
            let room = pool.len().saturating_sub(n_in);
            let min_out = if template.product_class == SpeciesClass::Plural { 2 } else { 1 };
            if room < min_out {
                return Err(unsatisfiable());
            }
            let n_out = class_count(rng, template.product_class, 3.min(room).max(2)).min(room);
            let mut chosen: Vec<Slot> = pool.choose_multiple(rng, n_in + n_out).cloned().collect();
            chosen.shuffle(rng);
            let chosen: Vec<Slot> = chosen.into_iter().map(|s| s.with_coefficient(coefficient(rng))).collect();
            let (ins, outs) = chosen.split_at(n_in);
            reactions.push(Reaction::new(
                ins.iter().map(Slot::term).collect(),
                outs.iter().map(Slot::term).collect(),
                rate(),
            ));
            fills.insert("reactants".into(), ins.to_vec());
            fills.insert("products".into(), outs.to_vec());
        }
    }

    let sentence = verbalize(&template.text, &fills, shared_rate.as_ref().map(Rate::lexeme));
    let starts_with_name = template
        .text
        .strip_prefix('{')
        .and_then(|rest| rest.split_once('}'))
        .and_then(|(first, _)| fills.get(first))
        .and_then(|slots| slots.first())
        .is_some_and(|s| s.coefficient == 1 && !s.surface.contains(' '));
    Ok(ConceptInstance {
        concept,
        template_id: template.id.clone(),
        reactions,
        sentence,
        starts_with_name,
        template_text: template.text.clone(),
        relational,
    })
}

/// Name segments of model species that do not occur as whole words in the
/// description (case-insensitive). Sex and age segments are exempt.
pub fn unmentioned_species(description: &str, network: &ReactionNetwork) -> Vec<String> {
    let words: HashSet<String> = description
        .split(|c: char| !(c.is_alphanumeric() || c == '-' || c == '_'))
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect();
    let mut missing: Vec<String> = network
        .reactions
        .iter()
        .flat_map(|r| r.reactants.iter().chain(&r.products))
        .flat_map(|t| t.name.split('_').map(str::to_string).collect::<Vec<_>>())
        .filter(|seg| !IMPLICIT_SEGMENTS.contains(&seg.as_str()) && !words.contains(&seg.to_lowercase()))
        .collect();
    missing.sort();
    missing.dedup();
    missing
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse, serialize};

    fn ing() -> Ingredients {
        Ingredients::default_pack()
    }

    fn pool(names: &[&str]) -> Vec<Slot> {
        names
            .iter()
            .map(|n| Slot {
                coefficient: 1,
                name: n.to_string(),
                surface: n.to_string(),
            })
            .collect()
    }

    #[test]
    fn rates_have_one_decimal_at_least() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let r = numeric_rate(&mut rng);
            let lex = r.lexeme().to_string();
            let (int, frac) = lex.split_once('.').unwrap();
            assert!(!frac.is_empty() && frac.len() <= 2 && !int.is_empty());
            assert!(frac.len() == 1 || !frac.ends_with('0'), "{lex}");
            let Rate::Numeric { value, .. } = r else { panic!() };
            assert!((0.01..10.0).contains(&value));
        }
    }

    #[test]
    fn pairs_are_reproducible() {
        let a = generate_pair_at(&ing(), 42, Split::Train, 7).unwrap();
        let b = generate_pair_at(&ing(), 42, Split::Train, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_pair_at(&ing(), 42, Split::Test, 7).unwrap();
        assert_ne!(a.description, c.description);
        assert_eq!((a.meta.seed, a.meta.index, a.meta.split), (42, 7, Split::Train));
    }

    #[test]
    fn generated_pairs_hold_invariants() {
        let ing = ing();
        for i in 0..300 {
            let p = generate_pair_at(&ing, 1, Split::Train, i).unwrap();
            let n = p.network.len();
            assert!((1..=MAX_REACTIONS).contains(&n), "{n}");
            assert!((MIN_CONCEPTS..=MAX_CONCEPTS).contains(&p.meta.concepts.len()));
            assert!(p.network.is_strictly_valid(), "{}", serialize(&p.network, true));
            assert!(unmentioned_species(&p.description, &p.network).is_empty());
            let text = serialize(&p.network, true);
            assert_eq!(parse(&text, true).unwrap().network, p.network);
            let ks: Vec<String> = p
                .network
                .reactions
                .iter()
                .filter_map(|r| match &r.rate {
                    Rate::Symbolic(id) => Some(id.clone()),
                    _ => None,
                })
                .collect();
            let expected: Vec<String> = (0..ks.len()).map(|i| format!("k{i}")).collect();
            assert_eq!(ks, expected);
            let keys: HashSet<_> = p.network.reactions.iter().map(side_key).collect();
            assert_eq!(keys.len(), n);
            assert!(p.description.ends_with('.'));
            for c in &p.meta.concepts {
                assert!(p.meta.domain.concepts().contains(c));
            }
        }
    }

    #[test]
    fn complexation_concatenates_names() {
        let ing = ing();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let inst = instantiate_concept(&mut rng, &ing, Domain::Sysbio, Concept::Complexation, &pool(&["A", "B", "C"]), 3).unwrap();
        let r = &inst.reactions[0];
        let joined = format!("{}{}", r.reactants[0].name, r.reactants[1].name);
        assert_eq!(r.products[0].name, joined);
        assert!(inst.sentence.contains(&joined));
    }

    #[test]
    fn catalysis_keeps_enzyme() {
        let ing = ing();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let inst = instantiate_concept(&mut rng, &ing, Domain::Sysbio, Concept::Catalysis, &pool(&["A", "B", "C", "D"]), 5).unwrap();
            let r = &inst.reactions[0];
            assert_eq!(r.reactants.len(), 2);
            assert_eq!(r.reactants[1], r.products[1]);
            assert_ne!(r.reactants[0], r.products[0]);
        }
    }

    #[test]
    fn chains_respect_budget() {
        let ing = ing();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for budget in 1..=5 {
            for _ in 0..30 {
                let inst = instantiate_concept(&mut rng, &ing, Domain::Sysbio, Concept::Chain, &pool(&["A", "B", "C", "D", "E"]), budget).unwrap();
                assert!(inst.reactions.len() <= budget.min(4));
                for w in inst.reactions.windows(2) {
                    assert_eq!(w[0].products, w[1].reactants);
                }
            }
        }
    }

    #[test]
    fn mating_shape() {
        let ing = ing();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let slots = vec![Slot {
            coefficient: 1,
            name: "Fox_hungry".into(),
            surface: "hungry Fox".into(),
        }];
        let inst = instantiate_concept(&mut rng, &ing, Domain::Ecology, Concept::Mating, &slots, 4).unwrap();
        let r = &inst.reactions[0];
        let names = |ts: &[SpeciesTerm]| ts.iter().map(|t| t.name.clone()).collect::<Vec<_>>();
        assert_eq!(names(&r.reactants), ["Fox_hungry_male", "Fox_hungry_female"]);
        assert_eq!(names(&r.products), ["Fox_hungry_pup", "Fox_hungry_female", "Fox_hungry_male"]);
        assert!(inst.sentence.contains("male hungry Fox"));
    }

    #[test]
    fn predation_shape() {
        let ing = ing();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let inst = instantiate_concept(&mut rng, &ing, Domain::Ecology, Concept::Predation, &pool(&["Fox", "Rat"]), 4).unwrap();
        let r = &inst.reactions[0];
        assert_eq!(r.products, vec![r.reactants[1].clone()]);
    }

    #[test]
    fn grouped_templates_need_budget() {
        let ing = ing();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let inst = instantiate_concept(&mut rng, &ing, Domain::Epidemiology, Concept::Degradation, &pool(&["A", "B", "C"]), 1).unwrap();
            assert_eq!(inst.reactions.len(), 1);
        }
    }

    #[test]
    fn unmentioned_detection() {
        let net = parse("Fox_hungry_male + Rat -> @ k0;", false).unwrap().network;
        assert!(unmentioned_species("A hungry male fox eats a rat.", &net).is_empty());
        assert_eq!(unmentioned_species("A hungry Foxes eats Rat.", &net), vec!["Fox".to_string()]);
    }

    #[test]
    fn dataset_uses_disjoint_species() {
        let spec = DatasetSpec {
            train_size: 40,
            test_size: 20,
            seed: 3,
            split_ratio: 0.8,
        };
        let d = generate_dataset(&ing(), &spec).unwrap();
        assert_eq!((d.train.len(), d.test.len()), (40, 20));
        let test_templates: HashSet<&str> = d.test_ingredients.templates.iter().map(|t| t.id.as_str()).collect();
        for p in &d.train {
            for id in &p.meta.templates {
                assert!(!test_templates.contains(id.as_str()));
            }
        }
        for p in &d.test {
            let species = d.test_ingredients.species(p.meta.domain);
            for t in p.network.reactions.iter().flat_map(|r| r.reactants.iter().chain(&r.products)) {
                let base = t.name.split('_').next().unwrap();
                assert!(
                    species.iter().any(|s| s == base) || species.iter().any(|s| base.starts_with(s.as_str())),
                    "{base}"
                );
            }
        }
    }
}

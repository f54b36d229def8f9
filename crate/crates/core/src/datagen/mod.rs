//! Rule-based generation of description/model pairs from a template pack.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dsl::ReactionNetwork;

mod export;
mod fixtures;
mod generate;
mod pack;
mod verbalize;

pub use export::{export_jsonl, import_jsonl, write_jsonl, ExportError, ExportStyle};
pub use fixtures::{validation_fixtures, FollowUpKind, ValidationFixture};
pub use generate::{
    generate_dataset, generate_pair, generate_pair_at, instantiate_concept, pair_rng, unmentioned_species,
    ConceptInstance, GenerateError, Slot, MAX_REACTIONS,
};
pub use pack::{split_ingredients, IngredientsError, PackSources, SplitError, PACK_FILES};
pub use verbalize::{join_list, number_word, render_species, verbalize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Sysbio,
    Ecology,
    Epidemiology,
}

impl Domain {
    pub const ALL: [Domain; 3] = [Domain::Sysbio, Domain::Ecology, Domain::Epidemiology];

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Sysbio => "sysbio",
            Domain::Ecology => "ecology",
            Domain::Epidemiology => "epidemiology",
        }
    }

    /// Concepts that may be instantiated in this domain.
    pub fn concepts(self) -> &'static [Concept] {
        use Concept::*;
        match self {
            Domain::Sysbio => &[Complexation, Catalysis, Chain, Degradation, Production, Unspecified],
            Domain::Ecology => &[Mating, Predation, Degradation, Production, Unspecified],
            Domain::Epidemiology => &[Degradation, Production, Unspecified],
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Domain::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| format!("unknown domain '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Concept {
    Complexation,
    Catalysis,
    Chain,
    Mating,
    Predation,
    Degradation,
    Production,
    Unspecified,
}

impl Concept {
    pub const ALL: [Concept; 8] = [
        Concept::Complexation,
        Concept::Catalysis,
        Concept::Chain,
        Concept::Mating,
        Concept::Predation,
        Concept::Degradation,
        Concept::Production,
        Concept::Unspecified,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Concept::Complexation => "complexation",
            Concept::Catalysis => "catalysis",
            Concept::Chain => "chain",
            Concept::Mating => "mating",
            Concept::Predation => "predation",
            Concept::Degradation => "degradation",
            Concept::Production => "production",
            Concept::Unspecified => "unspecified",
        }
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Concept {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Concept::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown concept '{s}'"))
    }
}

/// How many species a template talks about on one side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpeciesClass {
    Zero,
    Singular,
    Plural,
    Any,
}

impl SpeciesClass {
    pub const ALL: [SpeciesClass; 4] = [
        SpeciesClass::Zero,
        SpeciesClass::Singular,
        SpeciesClass::Plural,
        SpeciesClass::Any,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SpeciesClass::Zero => "zero",
            SpeciesClass::Singular => "singular",
            SpeciesClass::Plural => "plural",
            SpeciesClass::Any => "any",
        }
    }
}

impl FromStr for SpeciesClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SpeciesClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown species class '{s}'"))
    }
}

/// Sentence template. Placeholders: `{reactants}`, `{products}`, `{rate}`,
/// `{reactants1}`, `{reactants2}`.
///
/// Concept specific roles:
/// - catalysis: `{reactants1}` substrate, `{reactants2}` enzyme;
/// - chain: `{reactants}` first and `{products}` last species; a plural
///   reactant class means a multi-step chain whose intermediates fill
///   `{reactants2}`, singular means one direct step;
/// - mating: `{reactants1}` male, `{reactants2}` female;
/// - predation: `{reactants1}` prey, `{reactants2}` predator;
/// - degradation/production: a plural class groups 2-3 species, one
///   reaction each.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Template {
    pub id: String,
    pub domain: Domain,
    pub concept: Concept,
    pub reactant_class: SpeciesClass,
    pub product_class: SpeciesClass,
    pub has_rate: bool,
    pub text: String,
}

/// Follow-up sentence that states the rate of the preceding single-species
/// degradation or production sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationalTemplate {
    pub id: String,
    pub domain: Domain,
    pub concept: Concept,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ingredients {
    pub sysbio_species: Vec<String>,
    pub ecology_species: Vec<String>,
    pub epidemiology_species: Vec<String>,
    pub ecology_attributes: Vec<String>,
    pub templates: Vec<Template>,
    pub relational: Vec<RelationalTemplate>,
    pub connectives: Vec<String>,
}

impl Ingredients {
    pub fn species(&self, domain: Domain) -> &[String] {
        match domain {
            Domain::Sysbio => &self.sysbio_species,
            Domain::Ecology => &self.ecology_species,
            Domain::Epidemiology => &self.epidemiology_species,
        }
    }

    pub(crate) fn species_mut(&mut self, domain: Domain) -> &mut Vec<String> {
        match domain {
            Domain::Sysbio => &mut self.sysbio_species,
            Domain::Ecology => &mut self.ecology_species,
            Domain::Epidemiology => &mut self.epidemiology_species,
        }
    }

    pub fn templates_for(&self, domain: Domain, concept: Concept) -> impl Iterator<Item = &Template> {
        self.templates
            .iter()
            .filter(move |t| t.domain == domain && t.concept == concept)
    }

    pub fn relational_for(&self, domain: Domain, concept: Concept) -> impl Iterator<Item = &RelationalTemplate> {
        self.relational
            .iter()
            .filter(move |t| t.domain == domain && t.concept == concept)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    Validation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMeta {
    pub domain: Domain,
    pub concepts: Vec<Concept>,
    /// Dataset seed; with `split` and `index` it reproduces the pair.
    pub seed: u64,
    pub index: u64,
    pub split: Split,
    pub templates: Vec<String>,
    /// Species drawn for the pair before any concept was instantiated.
    #[serde(default)]
    pub pool: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePair {
    pub description: String,
    pub network: ReactionNetwork,
    pub meta: PairMeta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub train_size: usize,
    pub test_size: usize,
    pub seed: u64,
    /// Fraction of each template group and species list used for training.
    pub split_ratio: f64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            train_size: 800,
            test_size: 200,
            seed: 0,
            split_ratio: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub train: Vec<SamplePair>,
    pub test: Vec<SamplePair>,
    pub train_ingredients: Ingredients,
    pub test_ingredients: Ingredients,
}

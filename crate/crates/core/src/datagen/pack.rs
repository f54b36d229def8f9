use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{Concept, Domain, Ingredients, RelationalTemplate, SpeciesClass, Template};
use crate::dsl::is_species_name;

const TEMPLATE_COLUMNS: [&str; 7] = [
    "id",
    "domain",
    "concept",
    "reactantClass",
    "productClass",
    "hasRate",
    "text",
];
const RELATIONAL_COLUMNS: [&str; 4] = ["id", "domain", "concept", "text"];

/// Smallest species list either side of a split may end up with.
const MIN_SPLIT_SPECIES: usize = 3;

#[derive(Debug, Error)]
pub enum IngredientsError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Malformed { file: String, line: usize, message: String },
    #[error("template {id}: {message}")]
    Template { id: String, message: String },
    #[error("{0} is empty")]
    Missing(String),
    #[error("duplicate entry '{entry}' in {file}")]
    Duplicate { file: String, entry: String },
}

/// Raw text of each pack file.
#[derive(Debug, Clone, Copy)]
pub struct PackSources<'a> {
    pub templates: &'a str,
    pub relational: &'a str,
    pub sysbio_species: &'a str,
    pub ecology_species: &'a str,
    pub epidemiology_species: &'a str,
    pub ecology_attributes: &'a str,
    pub connectives: &'a str,
}

impl PackSources<'static> {
    pub const DEFAULT: PackSources<'static> = PackSources {
        templates: include_str!("../../data/pack/templates.tsv"),
        relational: include_str!("../../data/pack/relational.tsv"),
        sysbio_species: include_str!("../../data/pack/species_sysbio.txt"),
        ecology_species: include_str!("../../data/pack/species_ecology.txt"),
        epidemiology_species: include_str!("../../data/pack/species_epidemiology.txt"),
        ecology_attributes: include_str!("../../data/pack/attributes_ecology.txt"),
        connectives: include_str!("../../data/pack/connectives.txt"),
    };
}

pub const PACK_FILES: [&str; 7] = [
    "templates.tsv",
    "relational.tsv",
    "species_sysbio.txt",
    "species_ecology.txt",
    "species_epidemiology.txt",
    "attributes_ecology.txt",
    "connectives.txt",
];

impl Ingredients {
    /// The pack compiled into the library.
    pub fn default_pack() -> Ingredients {
        Ingredients::from_sources(&PackSources::DEFAULT).expect("shipped pack is valid")
    }

    /// Reads a pack directory holding the files in [`PACK_FILES`].
    pub fn load(dir: &Path) -> Result<Ingredients, IngredientsError> {
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|source| IngredientsError::Io { path, source })
        };
        let files: Vec<String> = PACK_FILES.iter().map(|f| read(f)).collect::<Result<_, _>>()?;
        Ingredients::from_sources(&PackSources {
            templates: &files[0],
            relational: &files[1],
            sysbio_species: &files[2],
            ecology_species: &files[3],
            epidemiology_species: &files[4],
            ecology_attributes: &files[5],
            connectives: &files[6],
        })
    }

    /// Writes the pack files into `dir`, which must exist.
    pub fn save(&self, dir: &Path) -> Result<(), IngredientsError> {
        let mut templates = TEMPLATE_COLUMNS.join("\t") + "\n";
        for t in &self.templates {
            templates.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                t.id,
                t.domain,
                t.concept,
                t.reactant_class.as_str(),
                t.product_class.as_str(),
                t.has_rate,
                t.text
            ));
        }
        let mut relational = RELATIONAL_COLUMNS.join("\t") + "\n";
        for r in &self.relational {
            relational.push_str(&format!("{}\t{}\t{}\t{}\n", r.id, r.domain, r.concept, r.text));
        }
        let lines = |v: &[String]| v.iter().map(|s| format!("{s}\n")).collect::<String>();
        let contents = [
            templates,
            relational,
            lines(&self.sysbio_species),
            lines(&self.ecology_species),
            lines(&self.epidemiology_species),
            lines(&self.ecology_attributes),
            lines(&self.connectives),
        ];
        for (name, body) in PACK_FILES.iter().zip(contents) {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|source| IngredientsError::Io { path, source })?;
        }
        Ok(())
    }

    pub fn from_sources(src: &PackSources<'_>) -> Result<Ingredients, IngredientsError> {
        let templates = parse_table(src.templates, "templates.tsv", &TEMPLATE_COLUMNS)?
            .into_iter()
            .map(|(line, row)| template_row(line, &row))
            .collect::<Result<Vec<_>, _>>()?;
        let relational = parse_table(src.relational, "relational.tsv", &RELATIONAL_COLUMNS)?
            .into_iter()
            .map(|(line, row)| relational_row(line, &row))
            .collect::<Result<Vec<_>, _>>()?;
        let ingredients = Ingredients {
            sysbio_species: parse_list(src.sysbio_species),
            ecology_species: parse_list(src.ecology_species),
            epidemiology_species: parse_list(src.epidemiology_species),
            ecology_attributes: parse_list(src.ecology_attributes),
            templates,
            relational,
            connectives: parse_list(src.connectives),
        };
        ingredients.validate()?;
        Ok(ingredients)
    }

    /// Checks every pack invariant.
    pub fn validate(&self) -> Result<(), IngredientsError> {
        for domain in Domain::ALL {
            let file = format!("species_{domain}.txt");
            check_list(self.species(domain), &file)?;
            for name in self.species(domain) {
                if !is_species_name(name) || name.contains('_') {
                    return Err(IngredientsError::Malformed {
                        file: file.clone(),
                        line: 0,
                        message: format!("'{name}' is not a valid species name"),
                    });
                }
            }
        }
        check_list(&self.ecology_attributes, "attributes_ecology.txt")?;
        for attr in &self.ecology_attributes {
            if attr.is_empty() || !attr.chars().all(|c| c.is_ascii_lowercase()) {
                return Err(IngredientsError::Malformed {
                    file: "attributes_ecology.txt".into(),
                    line: 0,
                    message: format!("attribute '{attr}' must be lowercase letters"),
                });
            }
        }
        check_list(&self.connectives, "connectives.txt")?;
        if self.templates.is_empty() {
            return Err(IngredientsError::Missing("templates.tsv".into()));
        }
        let mut ids = HashSet::new();
        for t in &self.templates {
            if !ids.insert(t.id.as_str()) {
                return Err(IngredientsError::Duplicate {
                    file: "templates.tsv".into(),
                    entry: t.id.clone(),
                });
            }
            check_template(t).map_err(|message| IngredientsError::Template {
                id: t.id.clone(),
                message,
            })?;
        }
        for domain in Domain::ALL {
            for &concept in domain.concepts() {
                if self.templates_for(domain, concept).next().is_none() {
                    return Err(IngredientsError::Missing(format!("template list for {domain}/{concept}")));
                }
            }
        }
        for r in &self.relational {
            if !ids.insert(r.id.as_str()) {
                return Err(IngredientsError::Duplicate {
                    file: "relational.tsv".into(),
                    entry: r.id.clone(),
                });
            }
            check_relational(r).map_err(|message| IngredientsError::Template {
                id: r.id.clone(),
                message,
            })?;
        }
        Ok(())
    }
}

fn check_list(list: &[String], file: &str) -> Result<(), IngredientsError> {
    if list.is_empty() {
        return Err(IngredientsError::Missing(file.to_string()));
    }
    let mut seen = HashSet::new();
    for entry in list {
        if !seen.insert(entry) {
            return Err(IngredientsError::Duplicate {
                file: file.to_string(),
                entry: entry.clone(),
            });
        }
    }
    Ok(())
}

/// Placeholder names in `text`, in order of appearance.
pub(crate) fn placeholders(text: &str) -> Result<Vec<&str>, String> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find(['{', '}']) {
        if rest[open..].starts_with('}') {
            return Err("unmatched '}'".into());
        }
        let after = &rest[open + 1..];
        let close = after.find('}').ok_or("unmatched '{'")?;
        let name = &after[..close];
        if name.contains('{') {
            return Err("nested '{'".into());
        }
        out.push(name);
        rest = &after[close + 1..];
    }
    Ok(out)
}

const SPECIES_PLACEHOLDERS: [&str; 4] = ["reactants", "products", "reactants1", "reactants2"];

/// Species placeholders a template of this shape must use, or an error if
/// the shape is not allowed.
fn required_placeholders(t: &Template) -> Result<Vec<&'static str>, String> {
    use Concept::*;
    use SpeciesClass::*;
    if !t.domain.concepts().contains(&t.concept) {
        return Err(format!("concept {} does not occur in domain {}", t.concept, t.domain));
    }
    let classes = (t.reactant_class, t.product_class);
    let ok = match t.concept {
        Degradation => matches!(classes, (Singular | Plural, Zero)),
        Production => matches!(classes, (Zero, Singular | Plural)),
        Complexation | Predation => classes == (Plural, Singular),
        Catalysis | Mating => classes == (Plural, Plural),
        Chain => matches!(classes, (Singular | Plural, Singular)),
        Unspecified => t.reactant_class != Zero && t.product_class != Zero,
    };
    if !ok {
        return Err(format!(
            "classes {}/{} do not fit concept {}",
            t.reactant_class.as_str(),
            t.product_class.as_str(),
            t.concept
        ));
    }
    Ok(match t.concept {
        Degradation => vec!["reactants"],
        Production => vec!["products"],
        Complexation | Unspecified => vec!["reactants", "products"],
        Catalysis => vec!["reactants1", "reactants2", "products"],
        Chain if t.reactant_class == Plural => vec!["reactants", "products", "reactants2"],
        Chain => vec!["reactants", "products"],
        Mating | Predation => vec!["reactants1", "reactants2"],
    })
}

fn check_template(t: &Template) -> Result<(), String> {
    let required = required_placeholders(t)?;
    let used = placeholders(&t.text)?;
    for name in &used {
        if *name != "rate" && !SPECIES_PLACEHOLDERS.contains(name) {
            return Err(format!("unknown placeholder {{{name}}}"));
        }
        if *name != "rate" && !required.contains(name) {
            return Err(format!("placeholder {{{name}}} does not fit concept {}", t.concept));
        }
    }
    for name in &required {
        if !used.contains(name) {
            return Err(format!("missing placeholder {{{name}}}"));
        }
    }
    match (t.has_rate, used.contains(&"rate")) {
        (true, false) => Err("hasRate is true but the text has no {rate}".into()),
        (false, true) => Err("the text has {rate} but hasRate is false".into()),
        _ => Ok(()),
    }
}

fn check_relational(r: &RelationalTemplate) -> Result<(), String> {
    if !matches!(r.concept, Concept::Degradation | Concept::Production) {
        return Err("relational sentences only exist for degradation and production".into());
    }
    let used = placeholders(&r.text)?;
    if used != ["rate"] {
        return Err("relational text must contain exactly one {rate} and nothing else".into());
    }
    Ok(())
}

fn parse_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn parse_table(text: &str, file: &str, columns: &[&str]) -> Result<Vec<(usize, Vec<String>)>, IngredientsError> {
    let malformed = |line: usize, message: String| IngredientsError::Malformed {
        file: file.to_string(),
        line,
        message,
    };
    let mut rows = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let (header_line, header) = rows.next().ok_or_else(|| IngredientsError::Missing(file.to_string()))?;
    let header: Vec<&str> = header.split('\t').map(str::trim).collect();
    if header != columns {
        return Err(malformed(
            header_line,
            format!("expected header '{}'", columns.join("\\t")),
        ));
    }
    let mut out = Vec::new();
    for (line, row) in rows {
        let cells: Vec<String> = row.split('\t').map(|c| c.trim().to_string()).collect();
        if cells.len() != columns.len() {
            return Err(malformed(
                line,
                format!("expected {} tab-separated fields, found {}", columns.len(), cells.len()),
            ));
        }
        if let Some(i) = cells.iter().position(String::is_empty) {
            return Err(malformed(line, format!("field '{}' is empty", columns[i])));
        }
        out.push((line, cells));
    }
    Ok(out)
}

fn field<T: std::str::FromStr<Err = String>>(file: &str, line: usize, value: &str) -> Result<T, IngredientsError> {
    value.parse().map_err(|message| IngredientsError::Malformed {
        file: file.to_string(),
        line,
        message,
    })
}

fn template_row(line: usize, row: &[String]) -> Result<Template, IngredientsError> {
    const FILE: &str = "templates.tsv";
    let has_rate = match row[5].to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => true,
        "false" | "no" | "0" => false,
        other => {
            return Err(IngredientsError::Malformed {
                file: FILE.into(),
                line,
                message: format!("hasRate must be true or false, found '{other}'"),
            })
        }
    };
    Ok(Template {
        id: row[0].clone(),
        domain: field(FILE, line, &row[1])?,
        concept: field(FILE, line, &row[2])?,
        reactant_class: field(FILE, line, &row[3])?,
        product_class: field(FILE, line, &row[4])?,
        has_rate,
        text: row[6].clone(),
    })
}

fn relational_row(line: usize, row: &[String]) -> Result<RelationalTemplate, IngredientsError> {
    const FILE: &str = "relational.tsv";
    Ok(RelationalTemplate {
        id: row[0].clone(),
        domain: field(FILE, line, &row[1])?,
        concept: field(FILE, line, &row[2])?,
        text: row[3].clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplitError {
    #[error("split ratio {0} is outside (0, 1)")]
    Ratio(f64),
    #[error("template group {group} has {size} template(s); at least 2 are needed to split it")]
    GroupTooSmall { group: String, size: usize },
    #[error("{domain} has {size} species; at least {min} are needed to split them")]
    TooFewSpecies { domain: Domain, size: usize, min: usize },
}

/// Number of items kept for training out of `n`, rounding toward training
/// but leaving at least `keep` on each side.
fn train_count(n: usize, ratio: f64, keep: usize) -> usize {
    let k = (ratio * n as f64 - 1e-9).ceil() as usize;
    k.clamp(keep, n - keep)
}

/// Disjoint train/test ingredients. Templates are split within every
/// (domain, concept, classes, hasRate) group, relational sentences within
/// every (domain, concept) group, species within every domain. Attributes
/// and connectives are shared.
pub fn split_ingredients(
    ingredients: &Ingredients,
    ratio: f64,
    seed: u64,
) -> Result<(Ingredients, Ingredients), SplitError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(SplitError::Ratio(ratio));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);

    let mut groups: BTreeMap<(Domain, Concept, SpeciesClass, SpeciesClass, bool), Vec<&str>> = BTreeMap::new();
    for t in &ingredients.templates {
        groups
            .entry((t.domain, t.concept, t.reactant_class, t.product_class, t.has_rate))
            .or_default()
            .push(&t.id);
    }
    let mut train_ids: BTreeSet<&str> = BTreeSet::new();
    for (key, mut ids) in groups {
        if ids.len() < 2 {
            return Err(SplitError::GroupTooSmall {
                group: format!(
                    "{}/{}/{}/{}/{}",
                    key.0,
                    key.1,
                    key.2.as_str(),
                    key.3.as_str(),
                    if key.4 { "rate" } else { "no-rate" }
                ),
                size: ids.len(),
            });
        }
        ids.shuffle(&mut rng);
        train_ids.extend(&ids[..train_count(ids.len(), ratio, 1)]);
    }

    let mut rel_groups: BTreeMap<(Domain, Concept), Vec<&str>> = BTreeMap::new();
    for r in &ingredients.relational {
        rel_groups.entry((r.domain, r.concept)).or_default().push(&r.id);
    }
    for ((domain, concept), mut ids) in rel_groups {
        if ids.len() < 2 {
            return Err(SplitError::GroupTooSmall {
                group: format!("relational {domain}/{concept}"),
                size: ids.len(),
            });
        }
        ids.shuffle(&mut rng);
        train_ids.extend(&ids[..train_count(ids.len(), ratio, 1)]);
    }

    let mut train = ingredients.clone();
    let mut test = ingredients.clone();
    train.templates.retain(|t| train_ids.contains(t.id.as_str()));
    test.templates.retain(|t| !train_ids.contains(t.id.as_str()));
    train.relational.retain(|t| train_ids.contains(t.id.as_str()));
    test.relational.retain(|t| !train_ids.contains(t.id.as_str()));

    for domain in Domain::ALL {
        let mut names = ingredients.species(domain).to_vec();
        if names.len() < 2 * MIN_SPLIT_SPECIES {
            return Err(SplitError::TooFewSpecies {
                domain,
                size: names.len(),
                min: 2 * MIN_SPLIT_SPECIES,
            });
        }
        names.shuffle(&mut rng);
        let k = train_count(names.len(), ratio, MIN_SPLIT_SPECIES);
        let test_names = names.split_off(k);
        *train.species_mut(domain) = names;
        *test.species_mut(domain) = test_names;
    }
    Ok((train, test))
}

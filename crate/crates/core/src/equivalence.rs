//! Semantic equivalence of reactions and networks, used to score answers
//! against ground truth.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dsl::{extract_candidate_model, Rate, Reaction, ReactionNetwork, SpeciesTerm};

/// A species term reduced to what matters for comparison.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalSpecies {
    pub coefficient: u8,
    /// Sorted; each lowercase and '_'-free.
    pub segments: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RateClass {
    /// Normalized decimal text, e.g. `4.2` for `04.20`.
    Numeric(String),
    SymbolicK,
    SymbolicOther,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalReaction {
    /// Sorted multiset.
    pub reactants: Vec<CanonicalSpecies>,
    /// Sorted multiset.
    pub products: Vec<CanonicalSpecies>,
    pub rate: RateClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchMode {
    /// Every ground-truth reaction has a distinct corresponding answer reaction.
    #[default]
    PaperLiteral,
    /// Additionally no answer reaction is left over.
    Strict,
}

impl MatchMode {
    pub const ALL: [MatchMode; 2] = [MatchMode::PaperLiteral, MatchMode::Strict];

    pub fn as_str(self) -> &'static str {
        match self {
            MatchMode::PaperLiteral => "paper-literal",
            MatchMode::Strict => "strict",
        }
    }
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MatchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper-literal" | "paper_literal" | "literal" => Ok(MatchMode::PaperLiteral),
            "strict" => Ok(MatchMode::Strict),
            other => Err(format!("unknown match mode '{other}' (expected paper-literal or strict)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchReport {
    pub verdict: bool,
    /// (ground-truth index, answer index), ordered by ground-truth index.
    pub matched_pairs: Vec<(usize, usize)>,
    pub missing_gt: Vec<usize>,
    pub extra_ans: Vec<usize>,
    pub mode: MatchMode,
}

impl MatchReport {
    /// Line-oriented rendering: a header line followed by one line per
    /// match, missing and extra entry.
    pub fn to_lines(&self) -> String {
        let mut out = format!(
            "mode {} verdict {} matched {} missing {} extra {}\n",
            self.mode,
            if self.verdict { "correct" } else { "incorrect" },
            self.matched_pairs.len(),
            self.missing_gt.len(),
            self.extra_ans.len()
        );
        for (g, a) in &self.matched_pairs {
            out.push_str(&format!("match {g} {a}\n"));
        }
        for g in &self.missing_gt {
            out.push_str(&format!("missing {g}\n"));
        }
        for a in &self.extra_ans {
            out.push_str(&format!("extra {a}\n"));
        }
        out
    }
}

impl fmt::Display for MatchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_lines())
    }
}

pub fn canonicalize_species(term: &SpeciesTerm) -> CanonicalSpecies {
    let mut segments: Vec<String> = term.name.to_lowercase().split('_').map(str::to_string).collect();
    segments.sort();
    CanonicalSpecies {
        coefficient: term.coefficient,
        segments,
    }
}

fn canonical_side(terms: &[SpeciesTerm]) -> Vec<CanonicalSpecies> {
    let mut side: Vec<CanonicalSpecies> = terms.iter().map(canonicalize_species).collect();
    side.sort();
    side
}

/// Normalizes a decimal literal (`.` or `,` separator) so that equal values
/// have equal text.
pub fn normalize_decimal(lexeme: &str) -> String {
    let lexeme = lexeme.replace(',', ".");
    let (int, frac) = lexeme.split_once('.').unwrap_or((&lexeme, ""));
    let int = int.trim_start_matches('0');
    let frac = frac.trim_end_matches('0');
    let int = if int.is_empty() { "0" } else { int };
    if frac.is_empty() {
        int.to_string()
    } else {
        format!("{int}.{frac}")
    }
}

pub fn rate_class(rate: &Rate) -> RateClass {
    match rate {
        Rate::Numeric { lexeme, .. } => RateClass::Numeric(normalize_decimal(lexeme)),
        Rate::Symbolic(id) if id.to_lowercase().starts_with('k') => RateClass::SymbolicK,
        Rate::Symbolic(_) => RateClass::SymbolicOther,
    }
}

pub fn canonicalize_reaction(reaction: &Reaction) -> CanonicalReaction {
    CanonicalReaction {
        reactants: canonical_side(&reaction.reactants),
        products: canonical_side(&reaction.products),
        rate: rate_class(&reaction.rate),
    }
}

/// Numeric rates must have equal decimal value. A symbolic ground-truth rate
/// accepts any answer identifier starting with 'k' in either case.
pub fn rates_match(gt: &Rate, ans: &Rate) -> bool {
    match (gt, ans) {
        (Rate::Numeric { lexeme: g, .. }, Rate::Numeric { lexeme: a, .. }) => {
            normalize_decimal(g) == normalize_decimal(a)
        }
        (Rate::Symbolic(_), Rate::Symbolic(a)) => a.to_lowercase().starts_with('k'),
        _ => false,
    }
}

pub(crate) fn canonical_correspond(gt: &CanonicalReaction, ans: &CanonicalReaction) -> bool {
    gt.reactants == ans.reactants
        && gt.products == ans.products
        && match (&gt.rate, &ans.rate) {
            (RateClass::Numeric(g), RateClass::Numeric(a)) => g == a,
            (RateClass::Numeric(_), _) | (_, RateClass::Numeric(_)) => false,
            (_, answer) => *answer == RateClass::SymbolicK,
        }
}

pub fn reactions_correspond(gt: &Reaction, ans: &Reaction) -> bool {
    canonical_correspond(&canonicalize_reaction(gt), &canonicalize_reaction(ans))
}

/// Maximum injective matching of ground-truth onto answer reactions.
pub fn networks_match(gt: &ReactionNetwork, ans: &ReactionNetwork, mode: MatchMode) -> MatchReport {
    let gt_c: Vec<CanonicalReaction> = gt.reactions.iter().map(canonicalize_reaction).collect();
    let ans_c: Vec<CanonicalReaction> = ans.reactions.iter().map(canonicalize_reaction).collect();
    let adjacency: Vec<Vec<usize>> = gt_c
        .iter()
        .map(|g| (0..ans_c.len()).filter(|&j| canonical_correspond(g, &ans_c[j])).collect())
        .collect();

    let matched_pairs = maximum_matching(&adjacency, ans_c.len());
    let missing_gt: Vec<usize> = (0..gt_c.len())
        .filter(|i| !matched_pairs.iter().any(|(g, _)| g == i))
        .collect();
    let extra_ans: Vec<usize> = (0..ans_c.len())
        .filter(|j| !matched_pairs.iter().any(|(_, a)| a == j))
        .collect();
    let verdict = match mode {
        MatchMode::PaperLiteral => missing_gt.is_empty(),
        MatchMode::Strict => missing_gt.is_empty() && extra_ans.is_empty(),
    };
    MatchReport {
        verdict,
        matched_pairs,
        missing_gt,
        extra_ans,
        mode,
    }
}

/// Maximum bipartite matching by augmenting paths; `adjacency[i]` lists the
/// right vertices left vertex `i` may take. Pairs come back sorted.
pub(crate) fn maximum_matching(adjacency: &[Vec<usize>], right: usize) -> Vec<(usize, usize)> {
    // owner[j] = left vertex currently matched to right vertex j
    let mut owner: Vec<Option<usize>> = vec![None; right];
    for i in 0..adjacency.len() {
        let mut seen = vec![false; right];
        augment(i, adjacency, &mut owner, &mut seen);
    }
    let mut pairs: Vec<(usize, usize)> = owner
        .iter()
        .enumerate()
        .filter_map(|(j, o)| o.map(|i| (i, j)))
        .collect();
    pairs.sort();
    pairs
}

/// Kuhn's augmenting path step. A free answer is taken before any existing
/// match is disturbed.
fn augment(i: usize, adjacency: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    if let Some(&j) = adjacency[i].iter().find(|&&j| !seen[j] && owner[j].is_none()) {
        seen[j] = true;
        owner[j] = Some(i);
        return true;
    }
    for &j in &adjacency[i] {
        if seen[j] {
            continue;
        }
        seen[j] = true;
        if owner[j].is_none_or(|k| augment(k, adjacency, owner, seen)) {
            owner[j] = Some(i);
            return true;
        }
    }
    false
}

/// Scores one raw answer. `None` means no model could be extracted, which
/// counts as incorrect.
pub fn score_answer(gt: &ReactionNetwork, answer: &str, mode: MatchMode) -> Option<MatchReport> {
    extract_candidate_model(answer)
        .network
        .map(|net| networks_match(gt, &net, mode))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetScore {
    pub correct: usize,
    pub total: usize,
    pub reports: Vec<Option<MatchReport>>,
}

impl DatasetScore {
    /// correct / total; an empty dataset scores 0.
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

/// Scores answers against ground truths aligned by index. Missing answers
/// count as incorrect.
pub fn score_dataset(gts: &[ReactionNetwork], answers: &[String], mode: MatchMode) -> DatasetScore {
    let reports: Vec<Option<MatchReport>> = gts
        .iter()
        .enumerate()
        .map(|(i, gt)| answers.get(i).and_then(|a| score_answer(gt, a, mode)))
        .collect();
    DatasetScore {
        correct: reports.iter().filter(|r| r.as_ref().is_some_and(|r| r.verdict)).count(),
        total: gts.len(),
        reports,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse, serialize};

    fn net(text: &str) -> ReactionNetwork {
        parse(text, false).unwrap().network
    }

    fn reaction(text: &str) -> Reaction {
        net(text).reactions.remove(0)
    }

    #[test]
    fn species_canonical_forms() {
        let c = |k, n: &str| canonicalize_species(&SpeciesTerm::new(k, n));
        assert_eq!(c(1, "Wolf"), c(1, "wolf"));
        assert_eq!(c(1, "male_wolf"), c(1, "wolf_male"));
        assert_ne!(c(2, "wolf"), c(1, "wolf"));
        assert_ne!(c(1, "wolf-male"), c(1, "male-wolf"));
        assert_eq!(c(1, "Rat_poisoned_male").segments, vec!["male", "poisoned", "rat"]);
    }

    #[test]
    fn rate_rules() {
        let n = |s| Rate::numeric(s).unwrap();
        assert!(rates_match(&Rate::k(0), &Rate::symbolic("k_hunt")));
        assert!(rates_match(&Rate::k(0), &Rate::symbolic("K7")));
        assert!(!rates_match(&Rate::k(0), &Rate::symbolic("r1")));
        assert!(rates_match(&n("4.2"), &n("4.2")));
        assert!(!rates_match(&n("4.2"), &n("4.3")));
        assert!(rates_match(&n("4.2"), &n("4.20")));
        assert!(rates_match(&n("1"), &n("1.0")));
        assert!(rates_match(&n("007.5"), &n("7.50")));
        assert!(!rates_match(&n("4.2"), &Rate::k(0)));
        assert!(!rates_match(&Rate::k(0), &n("4.2")));
    }

    #[test]
    fn decimal_normalization() {
        assert_eq!(normalize_decimal("0.50"), "0.5");
        assert_eq!(normalize_decimal("00"), "0");
        assert_eq!(normalize_decimal("1,0"), "1");
        assert_eq!(normalize_decimal("10"), "10");
        assert_eq!(normalize_decimal("10.000"), "10");
    }

    #[test]
    fn reaction_correspondence() {
        assert!(reactions_correspond(
            &reaction("Rat + Fox -> Fox @ k0;"),
            &reaction("Fox + Rat -> Fox @ k3;")
        ));
        assert!(!reactions_correspond(
            &reaction("S + I -> 2I @ k0;"),
            &reaction("S + I -> I @ k0;")
        ));
        assert!(!reactions_correspond(&reaction("A -> B @ 1.5;"), &reaction("B -> A @ 1.5;")));
    }

    #[test]
    fn matching_is_injective() {
        let gt = net("A -> B @ k0; A -> B @ 1.0;");
        let ans = net("A -> B @ k5; A -> B @ k6;");
        let r = networks_match(&gt, &ans, MatchMode::PaperLiteral);
        assert!(!r.verdict);
        let gt = net("A -> B @ k0; A -> B @ k1;");
        let ans = net("A -> B @ k1; a -> b @ K0;");
        let r = networks_match(&gt, &ans, MatchMode::Strict);
        assert!(r.verdict);
        assert_eq!(r.matched_pairs, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn duplicates_are_multisets() {
        let gt = net("A -> B @ k0; A -> B @ k1;");
        let ans = net("A -> B @ k0;");
        let r = networks_match(&gt, &ans, MatchMode::PaperLiteral);
        assert!(!r.verdict);
        assert_eq!(r.missing_gt, vec![1]);
    }

    #[test]
    fn extra_answers_only_fail_strict() {
        let gt = net("P -> @ k0;");
        let ans = net("P -> @ k0; -> P @ 1,0;");
        let lit = networks_match(&gt, &ans, MatchMode::PaperLiteral);
        let strict = networks_match(&gt, &ans, MatchMode::Strict);
        assert!(lit.verdict);
        assert!(!strict.verdict);
        assert_eq!(strict.extra_ans, vec![1]);
        assert_eq!(
            strict.to_lines(),
            "mode strict verdict incorrect matched 1 missing 0 extra 1\nmatch 0 0\nextra 1\n"
        );
    }

    #[test]
    fn dataset_scoring() {
        let gts: Vec<ReactionNetwork> = (0..10).map(|i| net(&format!("A{i} -> B @ {i}.5;"))).collect();
        let mut answers: Vec<String> = gts.iter().map(|g| serialize(g, true)).collect();
        let all = score_dataset(&gts, &answers, MatchMode::Strict);
        assert_eq!(all.accuracy(), 1.0);
        answers[3] = "I cannot help with that.".into();
        let some = score_dataset(&gts, &answers, MatchMode::PaperLiteral);
        assert_eq!((some.correct, some.total), (9, 10));
        assert!(some.reports[3].is_none());
        assert_eq!(score_dataset(&gts, &answers[..5], MatchMode::Strict).correct, 4);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("strict".parse::<MatchMode>().unwrap(), MatchMode::Strict);
        assert_eq!("paper-literal".parse::<MatchMode>().unwrap(), MatchMode::PaperLiteral);
        assert!("fuzzy".parse::<MatchMode>().is_err());
        assert_eq!(serde_json::to_string(&MatchMode::PaperLiteral).unwrap(), "\"paper-literal\"");
    }
}

//! The reaction-network DSL.
//!
//! A model is a list of reactions, one per line:
//!
//! ```text
//! A -> C @ k0;
//! C -> B @ k1;
//! B -> @ 4.2;
//! ```
//!
//! Either side may be empty, written coefficients run from 2 to 9, and the
//! rate is a basic decimal literal or a `k<n>` identifier. A full model is
//! wrapped in a pair of triple-backtick fence lines.

mod extract;
mod parse;
mod serialize;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use extract::{extract_candidate_model, fenced_blocks, Extraction};
pub use parse::{parse, parse_strict, parse_with, ParseError, ParseOptions, Parsed};
pub use serialize::{serialize, serialize_reaction};

/// Largest coefficient the grammar can express.
pub const MAX_COEFFICIENT: u8 = 9;

pub const FENCE: &str = "```";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpeciesTerm {
    #[serde(rename = "coeff")]
    pub coefficient: u8,
    pub name: String,
}

impl SpeciesTerm {
    pub fn new(coefficient: u8, name: impl Into<String>) -> Self {
        SpeciesTerm {
            coefficient,
            name: name.into(),
        }
    }

    pub fn single(name: impl Into<String>) -> Self {
        SpeciesTerm::new(1, name)
    }
}

/// Rate constant of a reaction.
#[derive(Debug, Clone, PartialEq)]
pub enum Rate {
    /// A decimal literal. `lexeme` is the text as written and is what gets
    /// serialized back out.
    Numeric { value: f64, lexeme: String },
    Symbolic(String),
}

impl Rate {
    /// Parses a decimal literal such as `4.2`. Returns `None` for anything
    /// that is not digits with an optional single `.` fraction.
    pub fn numeric(lexeme: &str) -> Option<Rate> {
        if !is_decimal_literal(lexeme) {
            return None;
        }
        let value = lexeme.parse::<f64>().ok()?;
        Some(Rate::Numeric {
            value,
            lexeme: lexeme.to_string(),
        })
    }

    pub fn symbolic(identifier: impl Into<String>) -> Rate {
        Rate::Symbolic(identifier.into())
    }

    /// `k0`, `k1`, ...
    pub fn k(index: usize) -> Rate {
        Rate::Symbolic(format!("k{index}"))
    }

    pub fn lexeme(&self) -> &str {
        match self {
            Rate::Numeric { lexeme, .. } => lexeme,
            Rate::Symbolic(id) => id,
        }
    }

    pub fn is_strict_symbolic(&self) -> bool {
        matches!(self, Rate::Symbolic(id) if is_strict_rate_identifier(id))
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.lexeme())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum RateRepr {
    Numeric { value: f64, lexeme: String },
    Symbolic { value: String },
}

impl Serialize for Rate {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let repr = match self {
            Rate::Numeric { value, lexeme } => RateRepr::Numeric {
                value: *value,
                lexeme: lexeme.clone(),
            },
            Rate::Symbolic(id) => RateRepr::Symbolic { value: id.clone() },
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Rate {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(match RateRepr::deserialize(deserializer)? {
            RateRepr::Numeric { value, lexeme } => Rate::Numeric { value, lexeme },
            RateRepr::Symbolic { value } => Rate::Symbolic(value),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reaction {
    pub reactants: Vec<SpeciesTerm>,
    pub products: Vec<SpeciesTerm>,
    pub rate: Rate,
}

impl Reaction {
    pub fn new(reactants: Vec<SpeciesTerm>, products: Vec<SpeciesTerm>, rate: Rate) -> Self {
        Reaction {
            reactants,
            products,
            rate,
        }
    }

    /// Both sides empty, e.g. `-> @ 0;`. Legal but almost certainly a mistake.
    pub fn is_degenerate(&self) -> bool {
        self.reactants.is_empty() && self.products.is_empty()
    }
}

impl fmt::Display for Reaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let line = serialize_reaction(self);
        f.write_str(line.trim_end_matches('\n'))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReactionNetwork {
    pub reactions: Vec<Reaction>,
}

impl ReactionNetwork {
    pub fn new(reactions: Vec<Reaction>) -> Self {
        ReactionNetwork { reactions }
    }

    pub fn len(&self) -> usize {
        self.reactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reactions.is_empty()
    }

    /// Checks the structural invariants a serializable network must satisfy.
    /// Returns one error diagnostic per violation; positions refer to the
    /// reaction's line in the canonical serialization.
    pub fn check_invariants(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if self.reactions.is_empty() {
            out.push(Diagnostic::error("network has no reactions", 1, 1, ""));
        }
        for (i, reaction) in self.reactions.iter().enumerate() {
            let line = i + 1;
            for term in reaction.reactants.iter().chain(&reaction.products) {
                if !(1..=MAX_COEFFICIENT).contains(&term.coefficient) {
                    out.push(Diagnostic::error(
                        format!("coefficient {} outside 1..=9", term.coefficient),
                        line,
                        1,
                        term.name.clone(),
                    ));
                }
                if !is_species_name(&term.name) {
                    out.push(Diagnostic::error(
                        format!("invalid species name {:?}", term.name),
                        line,
                        1,
                        term.name.clone(),
                    ));
                }
            }
            match &reaction.rate {
                Rate::Numeric { lexeme, .. } => {
                    if !is_decimal_literal(lexeme) && !is_comma_decimal_literal(lexeme) {
                        out.push(Diagnostic::error(
                            format!("invalid numeric rate {lexeme:?}"),
                            line,
                            1,
                            lexeme.clone(),
                        ));
                    }
                }
                Rate::Symbolic(id) => {
                    if !is_rate_identifier(id) {
                        out.push(Diagnostic::error(
                            format!("invalid rate identifier {id:?}"),
                            line,
                            1,
                            id.clone(),
                        ));
                    }
                }
            }
        }
        out
    }

    /// Flags everything the strict grammar would reject but the lenient
    /// parser lets through: non `k<n>` rate names, comma decimals and
    /// reactions with two empty sides.
    pub fn validate_strict(&self) -> Vec<Diagnostic> {
        let mut out = self.check_invariants();
        for (i, reaction) in self.reactions.iter().enumerate() {
            let line = i + 1;
            match &reaction.rate {
                Rate::Symbolic(id) if !is_strict_rate_identifier(id) => {
                    out.push(Diagnostic::warning(
                        format!("rate identifier {id:?} does not match k<number>"),
                        line,
                        1,
                        id.clone(),
                    ));
                }
                Rate::Numeric { lexeme, .. } if !is_decimal_literal(lexeme) => {
                    out.push(Diagnostic::warning(
                        format!("rate literal {lexeme:?} uses a decimal comma"),
                        line,
                        1,
                        lexeme.clone(),
                    ));
                }
                _ => {}
            }
            if reaction.is_degenerate() {
                out.push(Diagnostic::warning(
                    "reaction has neither reactants nor products",
                    line,
                    1,
                    reaction.to_string(),
                ));
            }
        }
        out
    }

    pub fn is_strictly_valid(&self) -> bool {
        self.validate_strict().is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    /// 1-based.
    pub line: usize,
    /// 1-based, counted in characters.
    pub column: usize,
    pub span: String,
}

impl Diagnostic {
    pub fn error(message: impl Into<String>, line: usize, column: usize, span: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            message: message.into(),
            line,
            column,
            span: span.into(),
        }
    }

    pub fn warning(message: impl Into<String>, line: usize, column: usize, span: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            message: message.into(),
            line,
            column,
            span: span.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {kind}: {}", self.line, self.column, self.message)?;
        if !self.span.is_empty() {
            write!(f, " ({:?})", self.span)?;
        }
        Ok(())
    }
}

pub(crate) fn is_name_start(c: char) -> bool {
    c.is_ascii_alphabetic()
}

pub(crate) fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '-' || c == '_'
}

/// One letter followed by letters, digits, `-` or `_`.
pub fn is_species_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if is_name_start(c)) && chars.all(is_name_char)
}

/// Digits with an optional `.` and fractional digits.
pub fn is_decimal_literal(s: &str) -> bool {
    decimal_with_separator(s, '.')
}

pub(crate) fn is_comma_decimal_literal(s: &str) -> bool {
    decimal_with_separator(s, ',')
}

fn decimal_with_separator(s: &str, sep: char) -> bool {
    let (int, frac) = match s.split_once(sep) {
        Some((i, f)) => (i, Some(f)),
        None => (s, None),
    };
    let digits = |p: &str| !p.is_empty() && p.chars().all(|c| c.is_ascii_digit());
    digits(int) && frac.is_none_or(digits)
}

/// Letter-initial identifier of letters, digits and underscores.
pub fn is_rate_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// `k` followed by a whole number.
pub fn is_strict_rate_identifier(s: &str) -> bool {
    s.strip_prefix('k')
        .is_some_and(|n| !n.is_empty() && n.chars().all(|c| c.is_ascii_digit()))
}

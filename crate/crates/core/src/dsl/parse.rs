use std::fmt;

use super::{
    is_name_char, is_name_start, is_strict_rate_identifier, Diagnostic, Rate, Reaction,
    ReactionNetwork, SpeciesTerm, FENCE, MAX_COEFFICIENT,
};

/// How much layout freedom the parser allows.
///
/// Strict mode accepts exactly the canonical layout (`A + 2B -> C @ k0;`
/// with single spaces, one reaction per line, `k<n>` rate names). Lenient
/// mode tolerates extra horizontal whitespace, several reactions per line,
/// letter-initial rate names such as `k_hunt`, a decimal comma, a language
/// tag after the opening fence and a missing newline after the closing one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    pub fenced: bool,
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub network: ReactionNetwork,
    pub warnings: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub diagnostics: Vec<Diagnostic>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.diagnostics.first() {
            Some(d) => d.fmt(f),
            None => f.write_str("parse error"),
        }
    }
}

impl std::error::Error for ParseError {}

/// Lenient parse.
pub fn parse(text: &str, fenced: bool) -> Result<Parsed, ParseError> {
    parse_with(text, ParseOptions { fenced, strict: false })
}

pub fn parse_strict(text: &str, fenced: bool) -> Result<Parsed, ParseError> {
    parse_with(text, ParseOptions { fenced, strict: true })
}

pub fn parse_with(text: &str, options: ParseOptions) -> Result<Parsed, ParseError> {
    let (start, end) = if options.fenced {
        fence_bounds(text, options.strict).map_err(|d| ParseError { diagnostics: vec![d] })?
    } else {
        (0, text.len())
    };
    let mut cursor = Cursor {
        src: text,
        pos: start,
        end,
        strict: options.strict,
        warnings: Vec::new(),
    };
    match cursor.reactions() {
        Ok(reactions) => Ok(Parsed {
            network: ReactionNetwork { reactions },
            warnings: cursor.warnings,
        }),
        Err(d) => Err(ParseError { diagnostics: vec![d] }),
    }
}

/// 1-based line and character column of a byte offset.
pub(crate) fn position(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    let column = before[line_start..].chars().count() + 1;
    (line, column)
}

fn snippet(src: &str, offset: usize) -> String {
    src[offset.min(src.len())..]
        .lines()
        .next()
        .unwrap_or("")
        .chars()
        .take(24)
        .collect()
}

fn diag_at(src: &str, offset: usize, message: impl Into<String>) -> Diagnostic {
    let (line, column) = position(src, offset);
    Diagnostic::error(message, line, column, snippet(src, offset))
}

/// Byte range of the text between the fence lines.
fn fence_bounds(text: &str, strict: bool) -> Result<(usize, usize), Diagnostic> {
    let open = format!("{FENCE}\n");
    if strict {
        if !text.starts_with(&open) {
            return Err(diag_at(text, 0, "expected opening ``` fence line"));
        }
        if text.len() < 2 * open.len() || !text.ends_with(&open) {
            return Err(diag_at(text, text.len(), "expected closing ``` fence line"));
        }
        let end = text.len() - open.len();
        if !text[..end].ends_with('\n') {
            return Err(diag_at(text, end, "closing fence must be on its own line"));
        }
        return Ok((open.len(), end));
    }

    let lead = text.len() - text.trim_start().len();
    let lead = text[..lead].rfind('\n').map_or(0, |i| i + 1);
    let first_line_end = text[lead..].find('\n').map(|i| lead + i);
    let first_line = &text[lead..first_line_end.unwrap_or(text.len())];
    let tag = first_line.trim_start().strip_prefix(FENCE).ok_or_else(|| diag_at(text, lead, "expected opening ``` fence line"))?;
    if !tag.trim().chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        return Err(diag_at(text, lead, "unexpected text after opening fence"));
    }
    let Some(first_line_end) = first_line_end else {
        return Err(diag_at(text, text.len(), "expected closing ``` fence line"));
    };
    let body_start = first_line_end + 1;

    let mut line_start = body_start;
    while line_start <= text.len() {
        let line_end = text[line_start..].find('\n').map_or(text.len(), |i| line_start + i);
        if text[line_start..line_end].trim() == FENCE {
            if !text[line_end..].trim().is_empty() {
                let after = line_end + (text.len() - line_end - text[line_end..].trim_start().len());
                return Err(diag_at(text, after, "unexpected text after closing fence"));
            }
            return Ok((body_start, line_start));
        }
        if line_end == text.len() {
            break;
        }
        line_start = line_end + 1;
    }
    Err(diag_at(text, text.len(), "expected closing ``` fence line"))
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    end: usize,
    strict: bool,
    warnings: Vec<Diagnostic>,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..self.end].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..self.end].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.src[self.pos..self.end].starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), Diagnostic> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.error(format!("expected {s:?}")))
        }
    }

    fn error(&self, message: impl Into<String>) -> Diagnostic {
        diag_at(self.src, self.pos, message)
    }

    fn skip_hspace(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t' | '\r')) {
            self.pos += 1;
        }
    }

    fn skip_space(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn at_term(&self) -> bool {
        self.peek().is_some_and(|c| c.is_ascii_alphanumeric())
    }

    fn reactions(&mut self) -> Result<Vec<Reaction>, Diagnostic> {
        let mut out = Vec::new();
        loop {
            if !self.strict {
                self.skip_space();
            }
            if self.pos >= self.end {
                break;
            }
            let start = self.pos;
            let reaction = self.reaction()?;
            if self.strict {
                self.expect(";\n")?;
            } else {
                self.skip_hspace();
                self.expect(";")?;
            }
            if reaction.is_degenerate() {
                let (line, column) = position(self.src, start);
                self.warnings.push(Diagnostic::warning(
                    "reaction has neither reactants nor products",
                    line,
                    column,
                    snippet(self.src, start),
                ));
            }
            out.push(reaction);
        }
        if out.is_empty() {
            return Err(self.error("expected at least one reaction"));
        }
        Ok(out)
    }

    fn reaction(&mut self) -> Result<Reaction, Diagnostic> {
        let reactants;
        let products;
        if self.strict {
            if self.at_term() {
                reactants = self.side()?;
                self.expect(" -> ")?;
            } else {
                reactants = Vec::new();
                self.expect("-> ")?;
            }
            if self.at_term() {
                products = self.side()?;
                self.expect(" @ ")?;
            } else {
                products = Vec::new();
                self.expect("@ ")?;
            }
        } else {
            reactants = if self.at_term() { self.side()? } else { Vec::new() };
            self.skip_hspace();
            self.expect("->")?;
            self.skip_hspace();
            products = if self.at_term() { self.side()? } else { Vec::new() };
            self.skip_hspace();
            self.expect("@")?;
            self.skip_hspace();
        }
        let rate = self.rate()?;
        Ok(Reaction {
            reactants,
            products,
            rate,
        })
    }

    fn side(&mut self) -> Result<Vec<SpeciesTerm>, Diagnostic> {
        let mut terms = vec![self.term()?];
        loop {
            if self.strict {
                if !self.eat(" + ") {
                    break;
                }
            } else {
                let save = self.pos;
                self.skip_hspace();
                if !self.eat("+") {
                    self.pos = save;
                    break;
                }
                self.skip_hspace();
            }
            terms.push(self.term()?);
        }
        Ok(terms)
    }

    fn term(&mut self) -> Result<SpeciesTerm, Diagnostic> {
        let start = self.pos;
        let mut coefficient = 1;
        if self.peek().is_some_and(|c| c.is_ascii_digit()) {
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            let digits = &self.src[start..self.pos];
            if !self.peek().is_some_and(is_name_start) {
                return Err(self.error("expected species name after coefficient"));
            }
            match digits.parse::<u8>() {
                Ok(c) if (2..=MAX_COEFFICIENT).contains(&c) && digits.len() == 1 => coefficient = c,
                _ => {
                    return Err(diag_at(
                        self.src,
                        start,
                        format!("coefficient {digits} out of range (2..9)"),
                    ))
                }
            }
        }
        let name_start = self.pos;
        if !self.peek().is_some_and(is_name_start) {
            return Err(self.error("expected species name"));
        }
        self.pos += 1;
        while let Some(c) = self.peek() {
            if !is_name_char(c) || (c == '-' && self.peek_at(1) == Some('>')) {
                break;
            }
            self.pos += 1;
        }
        Ok(SpeciesTerm::new(coefficient, &self.src[name_start..self.pos]))
    }

    fn rate(&mut self) -> Result<Rate, Diagnostic> {
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_digit() => {
                self.digits();
                let mut comma = false;
                if let Some(sep @ ('.' | ',')) = self.peek() {
                    if sep == ',' && self.strict {
                        return Err(self.error("malformed rate literal"));
                    }
                    if !self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
                        return Err(diag_at(self.src, start, "malformed rate literal"));
                    }
                    comma = sep == ',';
                    self.pos += 1;
                    self.digits();
                }
                if self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '.' || c == ',') {
                    return Err(diag_at(self.src, start, "malformed rate literal"));
                }
                let lexeme = &self.src[start..self.pos];
                let value = lexeme
                    .replace(',', ".")
                    .parse::<f64>()
                    .map_err(|_| diag_at(self.src, start, "malformed rate literal"))?;
                if comma {
                    let (line, column) = position(self.src, start);
                    self.warnings.push(Diagnostic::warning(
                        "decimal comma in rate literal",
                        line,
                        column,
                        lexeme,
                    ));
                }
                Ok(Rate::Numeric {
                    value,
                    lexeme: lexeme.to_string(),
                })
            }
            Some(c) if c.is_ascii_alphabetic() => {
                while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                    self.pos += 1;
                }
                let id = &self.src[start..self.pos];
                if self.strict && !is_strict_rate_identifier(id) {
                    return Err(diag_at(
                        self.src,
                        start,
                        format!("rate identifier {id:?} must be k followed by a whole number"),
                    ));
                }
                Ok(Rate::Symbolic(id.to_string()))
            }
            _ => Err(self.error("expected rate")),
        }
    }

    fn digits(&mut self) {
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHAIN: &str = "```\nA -> C @ k0;\nC -> B @ k1;\nB -> @ 4.2;\n```\n";

    fn net(text: &str, fenced: bool) -> ReactionNetwork {
        parse(text, fenced).unwrap().network
    }

    #[test]
    fn chain_example() {
        for strict in [false, true] {
            let parsed = parse_with(CHAIN, ParseOptions { fenced: true, strict }).unwrap();
            let n = parsed.network;
            assert_eq!(n.len(), 3);
            assert_eq!(n.reactions[0].reactants, vec![SpeciesTerm::single("A")]);
            assert_eq!(n.reactions[1].rate, Rate::k(1));
            assert!(n.reactions[2].products.is_empty());
            assert_eq!(n.reactions[2].rate, Rate::numeric("4.2").unwrap());
            assert!(parsed.warnings.is_empty());
        }
    }

    #[test]
    fn production_with_empty_reactants() {
        let n = net("```\n-> Sick @ 2.23;\n```\n", true);
        assert_eq!(n.len(), 1);
        assert!(n.reactions[0].reactants.is_empty());
        assert_eq!(n.reactions[0].products, vec![SpeciesTerm::single("Sick")]);
        assert_eq!(n.reactions[0].rate.lexeme(), "2.23");
        assert!(parse_strict("```\n-> Sick @ 2.23;\n```\n", true).is_ok());
    }

    #[test]
    fn missing_rate_clause_is_an_error() {
        let err = parse("```\nA -> B\n```\n", true).unwrap_err();
        assert_eq!(err.diagnostics.len(), 1);
        assert_eq!(err.diagnostics[0].line, 2);
        assert!(parse_strict("```\nA -> B\n```\n", true).is_err());
    }

    #[test]
    fn coefficients() {
        let n = net("2wolf + Sheep -> 3Sheep @ k0;", false);
        assert_eq!(n.reactions[0].reactants[0], SpeciesTerm::new(2, "wolf"));
        assert_eq!(n.reactions[0].products[0], SpeciesTerm::new(3, "Sheep"));

        for bad in ["1A -> B @ k0;", "10A -> B @ k0;", "02A -> B @ k0;"] {
            let err = parse(bad, false).unwrap_err();
            assert!(err.diagnostics[0].message.contains("out of range"), "{bad}");
            assert_eq!(err.diagnostics[0].column, 1);
        }
        // a lone digit is never a species
        assert!(parse("2 -> B @ k0;", false).is_err());
    }

    #[test]
    fn malformed_rates() {
        for bad in ["A -> B @ 4.;", "A -> B @ 1.2.3;", "A -> B @ 3x;", "A -> B @ ;", "A -> B @ .5;"] {
            assert!(parse(bad, false).is_err(), "{bad}");
        }
        assert!(parse_strict("A -> B @ 1,0;\n", false).is_err());
        let parsed = parse("-> P @ 1,0;", false).unwrap();
        assert_eq!(parsed.warnings.len(), 1);
        match &parsed.network.reactions[0].rate {
            Rate::Numeric { value, lexeme } => {
                assert_eq!(*value, 1.0);
                assert_eq!(lexeme, "1,0");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lenient_layout() {
        let n = net("  Wolf+Sheep   ->Wolf @k_hunt ;  Wolf -> @ 1;\n\n", false);
        assert_eq!(n.len(), 2);
        assert_eq!(n.reactions[0].rate, Rate::symbolic("k_hunt"));
        let n = net("A->B@k0;", false);
        assert_eq!(n.reactions[0].reactants[0].name, "A");

        assert!(parse_strict("A  -> B @ k0;\n", false).is_err());
        assert!(parse_strict("A -> B @ k0;", false).is_err());
        assert!(parse_strict("A -> B @ kA;\n", false).is_err());
        assert!(parse_strict("A -> B @ k0;\n", false).is_ok());
    }

    #[test]
    fn fences() {
        let n = net("\n```crn\nA -> B @ k0;\n```", true);
        assert_eq!(n.len(), 1);
        assert!(parse("```\nA -> B @ k0;\n```\ntrailing", true).is_err());
        assert!(parse("```\nA -> B @ k0;\n", true).is_err());
        assert!(parse("A -> B @ k0;\n```\n", true).is_err());
        assert!(parse_strict("```crn\nA -> B @ k0;\n```\n", true).is_err());
        assert!(parse_strict("```\nA -> B @ k0;\n```", true).is_err());
        let err = parse("```\n```\n", true).unwrap_err();
        assert!(err.diagnostics[0].message.contains("at least one"));
    }

    #[test]
    fn degenerate_reaction_warns() {
        let parsed = parse("-> @ 0;\n", false).unwrap();
        assert_eq!(parsed.network.len(), 1);
        assert_eq!(parsed.warnings.len(), 1);
        assert!(!parsed.warnings[0].is_error());
        assert!(parse_strict("-> @ 0;\n", false).is_ok());
    }

    #[test]
    fn species_name_characters() {
        let n = net("Rat_poisoned_male + s32-DnaK -> P_1 @ k0;", false);
        assert_eq!(n.reactions[0].reactants[1].name, "s32-DnaK");
        assert!(parse("A + -> B @ k0;", false).is_err());
        assert!(parse("hunter + prey -> 2hunter + @ k0;", false).is_err());
    }

    #[test]
    fn diagnostic_positions_are_inside_input() {
        let text = "```\nA -> B @ k0;\nC -> D @@ k1;\n```\n";
        let err = parse(text, true).unwrap_err();
        let d = &err.diagnostics[0];
        assert_eq!((d.line, d.column), (3, 9));
        assert_eq!(position("ab\ncd", 4), (2, 2));
    }

    #[test]
    fn deterministic() {
        let a = parse(CHAIN, true);
        let b = parse(CHAIN, true);
        assert_eq!(a, b);
    }
}

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

/// Single-character terminal. Literal strings are expanded into one
/// terminal per character so that recognition is character level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Terminal {
    Char(char),
    /// Inclusive.
    Range(char, char),
    /// ASCII letter.
    Letter,
    /// ASCII digit.
    Digit,
}

impl Terminal {
    pub fn matches(self, c: char) -> bool {
        match self {
            Terminal::Char(x) => c == x,
            Terminal::Range(lo, hi) => lo <= c && c <= hi,
            Terminal::Letter => c.is_ascii_alphabetic(),
            Terminal::Digit => c.is_ascii_digit(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    Nonterminal(u32),
    Terminal(Terminal),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Production {
    pub lhs: u32,
    pub rhs: Vec<Symbol>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("grammar syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("undefined nonterminal '{name}' referenced at {line}:{column}")]
    Undefined { name: String, line: usize, column: usize },
    #[error("grammar defines no rules")]
    NoRules,
    #[error("the language of '{start}' is empty: no derivation terminates")]
    EmptyLanguage { start: String },
}

/// A compiled context-free grammar in plain BNF over single-character
/// terminals. Every remaining production is productive.
#[derive(Debug, Clone)]
pub struct Grammar {
    pub(crate) names: Vec<String>,
    pub(crate) productions: Vec<Production>,
    pub(crate) by_lhs: Vec<Vec<u32>>,
    pub(crate) nullable: Vec<bool>,
    pub(crate) min_len: Vec<usize>,
    pub(crate) start: u32,
    /// Index of the augmented production `<accept> -> start`.
    pub(crate) accept: u32,
    source: String,
}

impl Grammar {
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn start_name(&self) -> &str {
        &self.names[self.start as usize]
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn nonterminal_name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    /// Length of the shortest sentence.
    pub fn min_sentence_len(&self) -> usize {
        self.min_len[self.start as usize]
    }

    pub(crate) fn rest_len(&self, prod: u32, dot: usize) -> usize {
        self.productions[prod as usize].rhs[dot..]
            .iter()
            .map(|s| match s {
                Symbol::Terminal(_) => 1,
                Symbol::Nonterminal(n) => self.min_len[*n as usize],
            })
            .sum()
    }

    /// Every ASCII character some terminal accepts, plus any non-ASCII
    /// literal characters, in ascending order.
    pub fn alphabet(&self) -> Vec<char> {
        let terminals: Vec<Terminal> = self
            .productions
            .iter()
            .flat_map(|p| p.rhs.iter())
            .filter_map(|s| match s {
                Symbol::Terminal(t) => Some(*t),
                Symbol::Nonterminal(_) => None,
            })
            .collect();
        let mut chars: BTreeSet<char> = (0u8..128)
            .map(char::from)
            .filter(|&c| terminals.iter().any(|t| t.matches(c)))
            .collect();
        for t in &terminals {
            match *t {
                Terminal::Char(c) => {
                    chars.insert(c);
                }
                Terminal::Range(lo, hi) if (hi as u32) - (lo as u32) < 256 => chars.extend(lo..=hi),
                _ => {}
            }
        }
        chars.into_iter().collect()
    }
}

/// Compiles grammar text into BNF.
///
/// Syntax: rules `name = body ;` (`::=` is accepted too, and the `;` may be
/// omitted before the next rule), alternation `|`, optional `[ ]`,
/// repetition `{ }`, grouping `( )`, postfix `* + ?`, string literals in
/// double or single quotes with `\n \t \r \\ \" \'` escapes, character
/// ranges `"a".."z"`, the classes `LETTER` and `DIGIT`, commas as optional
/// separators, and `#` or `(* *)` comments. The start symbol is `root` if
/// defined, otherwise the first rule.
pub fn compile(text: &str) -> Result<Grammar, GrammarError> {
    let tokens = lex(text)?;
    let rules = Parser { tokens, pos: 0 }.rules()?;
    if rules.is_empty() {
        return Err(GrammarError::NoRules);
    }
    let mut builder = Builder::default();
    for rule in &rules {
        builder.intern(&rule.name);
    }
    builder.defined = builder.names.len();
    for rule in &rules {
        let lhs = builder.index[&rule.name];
        builder.lower_alternatives(lhs, &rule.body)?;
    }
    let start_name = rules
        .iter()
        .find(|r| r.name == "root")
        .unwrap_or(&rules[0])
        .name
        .clone();
    let start = builder.index[&start_name];
    builder.finish(start, text.to_string())
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Define,
    Bar,
    Semi,
    Comma,
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    DotDot,
    Star,
    Plus,
    Question,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> GrammarError {
    GrammarError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Token>, GrammarError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, c: char| {
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, c);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                let ch = chars[i];
                advance(&mut i, &mut line, &mut col, ch);
            }
            continue;
        }
        if c == '(' && chars.get(i + 1) == Some(&'*') {
            advance(&mut i, &mut line, &mut col, '(');
            advance(&mut i, &mut line, &mut col, '*');
            loop {
                if i >= chars.len() {
                    return Err(syntax(tl, tc, "unterminated comment"));
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&')') {
                    advance(&mut i, &mut line, &mut col, '*');
                    advance(&mut i, &mut line, &mut col, ')');
                    break;
                }
                let ch = chars[i];
                advance(&mut i, &mut line, &mut col, ch);
            }
            continue;
        }
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut name = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '-') {
                name.push(chars[i]);
                let ch = chars[i];
                advance(&mut i, &mut line, &mut col, ch);
            }
            out.push(Token {
                tok: Tok::Ident(name),
                line: tl,
                column: tc,
            });
            continue;
        } else if c == '"' || c == '\'' {
            advance(&mut i, &mut line, &mut col, c);
            let mut value = String::new();
            loop {
                let Some(&d) = chars.get(i) else {
                    return Err(syntax(tl, tc, "unterminated string literal"));
                };
                if d == '\n' {
                    return Err(syntax(tl, tc, "unterminated string literal"));
                }
                advance(&mut i, &mut line, &mut col, d);
                if d == c {
                    break;
                }
                if d == '\\' {
                    let Some(&e) = chars.get(i) else {
                        return Err(syntax(tl, tc, "unterminated string literal"));
                    };
                    value.push(match e {
                        'n' => '\n',
                        't' => '\t',
                        'r' => '\r',
                        '\\' | '"' | '\'' => e,
                        other => return Err(syntax(line, col, format!("unknown escape '\\{other}'"))),
                    });
                    advance(&mut i, &mut line, &mut col, e);
                } else {
                    value.push(d);
                }
            }
            out.push(Token {
                tok: Tok::Str(value),
                line: tl,
                column: tc,
            });
            continue;
        } else if c == ':' && chars.get(i + 1) == Some(&':') && chars.get(i + 2) == Some(&'=') {
            for _ in 0..3 {
                advance(&mut i, &mut line, &mut col, ':');
            }
            Tok::Define
        } else if c == '.' && chars.get(i + 1) == Some(&'.') {
            advance(&mut i, &mut line, &mut col, '.');
            advance(&mut i, &mut line, &mut col, '.');
            Tok::DotDot
        } else {
            let tok = match c {
                '=' => Tok::Define,
                '|' => Tok::Bar,
                ';' => Tok::Semi,
                ',' => Tok::Comma,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '*' => Tok::Star,
                '+' => Tok::Plus,
                '?' => Tok::Question,
                other => return Err(syntax(tl, tc, format!("unexpected character '{other}'"))),
            };
            advance(&mut i, &mut line, &mut col, c);
            tok
        };
        out.push(Token {
            tok,
            line: tl,
            column: tc,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

#[derive(Debug, Clone)]
enum Expr {
    Alt(Vec<Expr>),
    Seq(Vec<Expr>),
    Lit(String),
    Range(char, char),
    Ref { name: String, line: usize, column: usize },
    Opt(Box<Expr>),
    Star(Box<Expr>),
    Plus(Box<Expr>),
}

struct Rule {
    name: String,
    body: Expr,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn at_rule_head(&self) -> bool {
        matches!(self.peek().tok, Tok::Ident(_))
            && self.tokens.get(self.pos + 1).is_some_and(|t| t.tok == Tok::Define)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), GrammarError> {
        let t = self.bump();
        if t.tok == tok {
            Ok(())
        } else {
            Err(syntax(t.line, t.column, format!("expected {what}")))
        }
    }

    fn rules(mut self) -> Result<Vec<Rule>, GrammarError> {
        let mut rules: Vec<Rule> = Vec::new();
        while self.peek().tok != Tok::Eof {
            let t = self.bump();
            let Tok::Ident(name) = t.tok else {
                return Err(syntax(t.line, t.column, "expected rule name"));
            };
            self.expect(Tok::Define, "'=' or '::=' after rule name")?;
            let body = self.alternatives()?;
            if self.peek().tok == Tok::Semi {
                self.bump();
            } else if !(self.peek().tok == Tok::Eof || self.at_rule_head()) {
                let t = self.peek();
                return Err(syntax(t.line, t.column, "expected ';' at end of rule"));
            }
            match rules.iter_mut().find(|r| r.name == name) {
                Some(existing) => {
                    let prev = std::mem::replace(&mut existing.body, Expr::Seq(Vec::new()));
                    existing.body = Expr::Alt(vec![prev, body]);
                }
                None => rules.push(Rule { name, body }),
            }
        }
        Ok(rules)
    }

    fn alternatives(&mut self) -> Result<Expr, GrammarError> {
        let mut alts = vec![self.sequence()?];
        while self.peek().tok == Tok::Bar {
            self.bump();
            alts.push(self.sequence()?);
        }
        Ok(if alts.len() == 1 { alts.pop().unwrap() } else { Expr::Alt(alts) })
    }

    fn sequence(&mut self) -> Result<Expr, GrammarError> {
        let mut items = Vec::new();
        loop {
            while self.peek().tok == Tok::Comma {
                self.bump();
            }
            let ends = matches!(
                self.peek().tok,
                Tok::Bar | Tok::Semi | Tok::RParen | Tok::RBracket | Tok::RBrace | Tok::Eof
            );
            if ends || self.at_rule_head() {
                break;
            }
            items.push(self.item()?);
        }
        Ok(Expr::Seq(items))
    }

    fn item(&mut self) -> Result<Expr, GrammarError> {
        let mut expr = self.primary()?;
        loop {
            expr = match self.peek().tok {
                Tok::Star => Expr::Star(Box::new(expr)),
                Tok::Plus => Expr::Plus(Box::new(expr)),
                Tok::Question => Expr::Opt(Box::new(expr)),
                _ => return Ok(expr),
            };
            self.bump();
        }
    }

    fn primary(&mut self) -> Result<Expr, GrammarError> {
        let t = self.bump();
        match t.tok {
            Tok::Ident(name) => Ok(Expr::Ref {
                name,
                line: t.line,
                column: t.column,
            }),
            Tok::Str(lo) => {
                if self.peek().tok != Tok::DotDot {
                    return Ok(Expr::Lit(lo));
                }
                self.bump();
                let h = self.bump();
                let Tok::Str(hi) = h.tok else {
                    return Err(syntax(h.line, h.column, "expected string after '..'"));
                };
                let single = |s: &str| {
                    let mut it = s.chars();
                    match (it.next(), it.next()) {
                        (Some(c), None) => Some(c),
                        _ => None,
                    }
                };
                match (single(&lo), single(&hi)) {
                    (Some(a), Some(b)) if a <= b => Ok(Expr::Range(a, b)),
                    (Some(_), Some(_)) => Err(syntax(t.line, t.column, "empty character range")),
                    _ => Err(syntax(t.line, t.column, "range bounds must be single characters")),
                }
            }
            Tok::LParen => {
                let e = self.alternatives()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::LBracket => {
                let e = self.alternatives()?;
                self.expect(Tok::RBracket, "']'")?;
                Ok(Expr::Opt(Box::new(e)))
            }
            Tok::LBrace => {
                let e = self.alternatives()?;
                self.expect(Tok::RBrace, "'}'")?;
                Ok(Expr::Star(Box::new(e)))
            }
            _ => Err(syntax(t.line, t.column, "expected a name, string or bracketed group")),
        }
    }
}

#[derive(Default)]
struct Builder {
    names: Vec<String>,
    index: HashMap<String, u32>,
    productions: Vec<Production>,
    /// Ids below this are user rules; the rest are generated.
    defined: usize,
    fresh: usize,
}

impl Builder {
    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    fn fresh(&mut self) -> u32 {
        self.fresh += 1;
        let id = self.names.len() as u32;
        self.names.push(format!("<{}>", self.fresh));
        id
    }

    fn alternatives_of(expr: &Expr) -> Vec<&Expr> {
        match expr {
            Expr::Alt(alts) => alts.iter().flat_map(Self::alternatives_of).collect(),
            other => vec![other],
        }
    }

    fn lower_alternatives(&mut self, lhs: u32, expr: &Expr) -> Result<(), GrammarError> {
        for alt in Self::alternatives_of(expr) {
            let mut rhs = Vec::new();
            self.lower(alt, &mut rhs)?;
            self.productions.push(Production { lhs, rhs });
        }
        Ok(())
    }

    fn lower(&mut self, expr: &Expr, out: &mut Vec<Symbol>) -> Result<(), GrammarError> {
        match expr {
            Expr::Seq(items) => {
                for item in items {
                    self.lower(item, out)?;
                }
            }
            Expr::Lit(s) => out.extend(s.chars().map(|c| Symbol::Terminal(Terminal::Char(c)))),
            Expr::Range(lo, hi) => out.push(Symbol::Terminal(Terminal::Range(*lo, *hi))),
            Expr::Ref { name, line, column } => match self.index.get(name.as_str()) {
                Some(&id) if (id as usize) < self.defined => out.push(Symbol::Nonterminal(id)),
                _ => match name.as_str() {
                    "LETTER" => out.push(Symbol::Terminal(Terminal::Letter)),
                    "DIGIT" => out.push(Symbol::Terminal(Terminal::Digit)),
                    _ => {
                        return Err(GrammarError::Undefined {
                            name: name.clone(),
                            line: *line,
                            column: *column,
                        })
                    }
                },
            },
            Expr::Alt(_) => {
                let n = self.fresh();
                self.lower_alternatives(n, expr)?;
                out.push(Symbol::Nonterminal(n));
            }
            Expr::Opt(inner) => {
                let n = self.fresh();
                self.productions.push(Production { lhs: n, rhs: Vec::new() });
                self.lower_alternatives(n, inner)?;
                out.push(Symbol::Nonterminal(n));
            }
            Expr::Star(inner) => {
                // n -> ε | inner n
                let n = self.fresh();
                self.productions.push(Production { lhs: n, rhs: Vec::new() });
                for alt in Self::alternatives_of(inner) {
                    let mut rhs = Vec::new();
                    self.lower(alt, &mut rhs)?;
                    rhs.push(Symbol::Nonterminal(n));
                    self.productions.push(Production { lhs: n, rhs });
                }
                out.push(Symbol::Nonterminal(n));
            }
            Expr::Plus(inner) => {
                // g -> inner; star -> ε | g star
                let g = self.fresh();
                self.lower_alternatives(g, inner)?;
                let star = self.fresh();
                self.productions.push(Production { lhs: star, rhs: Vec::new() });
                self.productions.push(Production {
                    lhs: star,
                    rhs: vec![Symbol::Nonterminal(g), Symbol::Nonterminal(star)],
                });
                out.push(Symbol::Nonterminal(g));
                out.push(Symbol::Nonterminal(star));
            }
        }
        Ok(())
    }

    fn finish(mut self, start: u32, source: String) -> Result<Grammar, GrammarError> {
        let accept_nt = self.names.len() as u32;
        self.names.push("<accept>".to_string());
        self.productions.push(Production {
            lhs: accept_nt,
            rhs: vec![Symbol::Nonterminal(start)],
        });
        let n = self.names.len();

        // Shortest derivable length per nonterminal; unproductive ones stay None.
        let mut min_len: Vec<Option<usize>> = vec![None; n];
        loop {
            let mut changed = false;
            for p in &self.productions {
                let len = p.rhs.iter().try_fold(0usize, |acc, s| match s {
                    Symbol::Terminal(_) => Some(acc + 1),
                    Symbol::Nonterminal(m) => min_len[*m as usize].map(|l| acc + l),
                });
                if let Some(len) = len {
                    let slot = &mut min_len[p.lhs as usize];
                    if slot.is_none_or(|cur| len < cur) {
                        *slot = Some(len);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if min_len[start as usize].is_none() {
            return Err(GrammarError::EmptyLanguage {
                start: self.names[start as usize].clone(),
            });
        }
        self.productions.retain(|p| {
            p.rhs.iter().all(|s| match s {
                Symbol::Terminal(_) => true,
                Symbol::Nonterminal(m) => min_len[*m as usize].is_some(),
            })
        });
        let accept = self
            .productions
            .iter()
            .position(|p| p.lhs == accept_nt)
            .expect("accept production is productive") as u32;
        let mut by_lhs = vec![Vec::new(); n];
        for (i, p) in self.productions.iter().enumerate() {
            by_lhs[p.lhs as usize].push(i as u32);
        }
        let min_len: Vec<usize> = min_len.into_iter().map(|l| l.unwrap_or(usize::MAX)).collect();
        Ok(Grammar {
            names: self.names,
            productions: self.productions,
            by_lhs,
            nullable: min_len.iter().map(|&l| l == 0).collect(),
            min_len,
            start,
            accept,
            source,
        })
    }
}

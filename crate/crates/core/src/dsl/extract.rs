use super::{parse, Diagnostic, Reaction, ReactionNetwork, FENCE};

/// Result of pulling a model out of free-form assistant output.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub network: Option<ReactionNetwork>,
    pub diagnostics: Vec<Diagnostic>,
    /// The raw fenced block the network came from, fences included, if any.
    pub fenced_text: Option<String>,
}

/// A triple-backtick block found in free text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FencedBlock {
    pub raw: String,
    /// 1-based line number of the first body line.
    pub first_line: usize,
    pub body: Vec<String>,
    pub closed: bool,
}

/// All fenced blocks in order of appearance. An opening fence without a
/// matching close runs to the end of the text.
pub fn fenced_blocks(text: &str) -> Vec<FencedBlock> {
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        if !lines[i].trim_start().starts_with(FENCE) {
            i += 1;
            continue;
        }
        let open = i;
        let mut j = i + 1;
        while j < lines.len() && lines[j].trim() != FENCE {
            j += 1;
        }
        let closed = j < lines.len();
        let end = if closed { j + 1 } else { lines.len() };
        blocks.push(FencedBlock {
            raw: lines[open..end].concat(),
            first_line: open + 2,
            body: lines[open + 1..j.min(lines.len())]
                .iter()
                .map(|l| l.trim_end_matches(['\n', '\r']).to_string())
                .collect(),
            closed,
        });
        i = end;
    }
    blocks
}

/// Salvages a reaction network from arbitrary LLM output.
///
/// Fenced blocks are tried first, in order; the first one with at least one
/// parseable reaction wins. Without such a block every line of the text is
/// tried on its own. Lines that do not parse become warnings. Never fails:
/// `network` is `None` only when nothing could be salvaged.
pub fn extract_candidate_model(text: &str) -> Extraction {
    for block in fenced_blocks(text) {
        let lines = block
            .body
            .iter()
            .enumerate()
            .map(|(k, l)| (block.first_line + k, l.as_str()));
        let (reactions, diagnostics) = salvage(lines);
        if !reactions.is_empty() {
            return Extraction {
                network: Some(ReactionNetwork::new(reactions)),
                diagnostics,
                fenced_text: Some(block.raw),
            };
        }
    }

    let lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim_start().starts_with(FENCE))
        .map(|(k, l)| (k + 1, l));
    let (reactions, mut diagnostics) = salvage(lines);
    if reactions.is_empty() {
        diagnostics.push(Diagnostic::error("no reactions found", 1, 1, ""));
        return Extraction {
            network: None,
            diagnostics,
            fenced_text: None,
        };
    }
    Extraction {
        network: Some(ReactionNetwork::new(reactions)),
        diagnostics,
        fenced_text: None,
    }
}

fn salvage<'a>(lines: impl Iterator<Item = (usize, &'a str)>) -> (Vec<Reaction>, Vec<Diagnostic>) {
    let mut reactions = Vec::new();
    let mut diagnostics = Vec::new();
    for (line_no, line) in lines {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = line[..line.len() - line.trim_start().len()].chars().count();
        let relocate = |mut d: Diagnostic| {
            d.line = line_no;
            d.column += indent;
            d
        };
        match parse(trimmed, false) {
            Ok(parsed) => {
                diagnostics.extend(parsed.warnings.into_iter().map(relocate));
                reactions.extend(parsed.network.reactions);
            }
            Err(err) => {
                let patched = (!trimmed.ends_with(';') && trimmed.contains("->"))
                    .then(|| parse(&format!("{trimmed};"), false).ok())
                    .flatten();
                if let Some(parsed) = patched {
                    diagnostics.push(Diagnostic::warning(
                        "missing ';' after reaction",
                        line_no,
                        indent + trimmed.chars().count() + 1,
                        trimmed,
                    ));
                    diagnostics.extend(parsed.warnings.into_iter().map(relocate));
                    reactions.extend(parsed.network.reactions);
                } else {
                    let cause = err.diagnostics.into_iter().next().map(relocate);
                    let (message, column) = match cause {
                        Some(d) => (format!("skipped unparseable line: {}", d.message), d.column),
                        None => ("skipped unparseable line".to_string(), indent + 1),
                    };
                    diagnostics.push(Diagnostic::warning(message, line_no, column, trimmed));
                }
            }
        }
    }
    (reactions, diagnostics)
}

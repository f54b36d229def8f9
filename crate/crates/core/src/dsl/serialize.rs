use super::{Reaction, ReactionNetwork, SpeciesTerm, FENCE};

/// Canonical text of a network: one `;\n`-terminated reaction per line,
/// optionally wrapped in fence lines. Coefficients of 1 are not written.
pub fn serialize(network: &ReactionNetwork, fenced: bool) -> String {
    let mut out = String::new();
    if fenced {
        out.push_str(FENCE);
        out.push('\n');
    }
    for reaction in &network.reactions {
        out.push_str(&serialize_reaction(reaction));
    }
    if fenced {
        out.push_str(FENCE);
        out.push('\n');
    }
    out
}

/// A single reaction line including the trailing `;\n`.
pub fn serialize_reaction(reaction: &Reaction) -> String {
    let mut out = String::new();
    if !reaction.reactants.is_empty() {
        write_side(&mut out, &reaction.reactants);
        out.push(' ');
    }
    out.push_str("-> ");
    if !reaction.products.is_empty() {
        write_side(&mut out, &reaction.products);
        out.push(' ');
    }
    out.push_str("@ ");
    out.push_str(reaction.rate.lexeme());
    out.push_str(";\n");
    out
}

fn write_side(out: &mut String, terms: &[SpeciesTerm]) {
    for (i, term) in terms.iter().enumerate() {
        if i > 0 {
            out.push_str(" + ");
        }
        if term.coefficient != 1 {
            out.push_str(&term.coefficient.to_string());
        }
        out.push_str(&term.name);
    }
}

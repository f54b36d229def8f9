use std::collections::BTreeMap;

use super::generate::Slot;

/// English word for coefficients 2 through 9.
pub fn number_word(n: u8) -> Option<&'static str> {
    const WORDS: [&str; 8] = ["two", "three", "four", "five", "six", "seven", "eight", "nine"];
    n.checked_sub(2).and_then(|i| WORDS.get(i as usize).copied())
}

/// "A", "A and B", "A, B, and C".
pub fn join_list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [a, b] => format!("{a} and {b}"),
        [rest @ .., last] => format!("{}, and {last}", rest.join(", ")),
    }
}

/// Surface form of one species occurrence, e.g. "two hungry Fox".
pub fn render_species(slot: &Slot) -> String {
    match number_word(slot.coefficient) {
        Some(word) => format!("{word} {}", slot.surface),
        None => slot.surface.clone(),
    }
}

/// Fills the placeholders of `template`. Every placeholder must have an
/// entry in `fills`, except `{rate}`, which takes `rate`.
pub fn verbalize(template: &str, fills: &BTreeMap<String, Vec<Slot>>, rate: Option<&str>) -> String {
    let mut out = String::with_capacity(template.len() + 32);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after.find('}').expect("templates are validated");
        let name = &after[..close];
        if name == "rate" {
            out.push_str(rate.expect("rate placeholder needs a rate"));
        } else {
            let slots = fills.get(name).map(Vec::as_slice).unwrap_or_default();
            let rendered: Vec<String> = slots.iter().map(render_species).collect();
            out.push_str(&join_list(&rendered));
        }
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    out
}

/// Ends the sentence with a period and, when `capitalize`, uppercases its
/// first alphabetic character. Species names never get recased.
pub(crate) fn finish_sentence(text: &str, capitalize: bool) -> String {
    let mut out = String::with_capacity(text.len() + 1);
    let mut done = !capitalize;
    for c in text.trim().chars() {
        if !done && c.is_alphabetic() {
            out.extend(c.to_uppercase());
            done = true;
        } else {
            out.push(c);
        }
    }
    if !out.ends_with(['.', '!', '?']) {
        out.push('.');
    }
    out
}

/// Prefixes a connective. The sentence start is lowercased unless the
/// template begins with a species placeholder, whose case is kept.
pub(crate) fn with_connective(connective: &str, template: &str, sentence: &str) -> String {
    if template.starts_with('{') {
        return format!("{connective}, {sentence}");
    }
    let mut chars = sentence.chars();
    let first = chars.next().map(|c| c.to_lowercase().collect::<String>()).unwrap_or_default();
    format!("{connective}, {first}{}", chars.as_str())
}

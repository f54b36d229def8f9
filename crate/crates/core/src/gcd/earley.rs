use std::collections::{HashMap, HashSet};

use super::grammar::{Grammar, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Item {
    prod: u32,
    dot: u32,
    origin: u32,
}

impl Item {
    fn advance(self) -> Item {
        Item {
            dot: self.dot + 1,
            ..self
        }
    }
}

#[derive(Debug, Clone, Default)]
struct ItemSet {
    items: Vec<Item>,
    seen: HashSet<Item>,
    /// Items whose next symbol is the keyed nonterminal.
    waiting: HashMap<u32, Vec<Item>>,
}

impl ItemSet {
    fn add(&mut self, item: Item) {
        if self.seen.insert(item) {
            self.items.push(item);
        }
    }
}

/// Incremental character-level Earley recognizer.
///
/// Holds one item set per consumed character plus the initial one. Every
/// set is nonempty, so the consumed text is always a viable prefix: a
/// character that would empty the chart is rejected and leaves the state
/// untouched.
#[derive(Debug, Clone)]
pub struct RecognizerState<'g> {
    grammar: &'g Grammar,
    sets: Vec<ItemSet>,
    consumed: String,
}

impl<'g> RecognizerState<'g> {
    pub fn new(grammar: &'g Grammar) -> Self {
        let mut state = RecognizerState {
            grammar,
            sets: vec![ItemSet::default()],
            consumed: String::new(),
        };
        state.sets[0].add(Item {
            prod: grammar.accept,
            dot: 0,
            origin: 0,
        });
        state.closure(0);
        state
    }

    pub fn grammar(&self) -> &'g Grammar {
        self.grammar
    }

    /// Number of characters consumed.
    pub fn len(&self) -> usize {
        self.sets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn text(&self) -> &str {
        &self.consumed
    }

    fn closure(&mut self, k: usize) {
        let g = self.grammar;
        let mut i = 0;
        while i < self.sets[k].items.len() {
            let item = self.sets[k].items[i];
            i += 1;
            let prod = &g.productions[item.prod as usize];
            match prod.rhs.get(item.dot as usize) {
                Some(Symbol::Nonterminal(b)) => {
                    let set = &mut self.sets[k];
                    set.waiting.entry(*b).or_default().push(item);
                    for &p in &g.by_lhs[*b as usize] {
                        set.add(Item {
                            prod: p,
                            dot: 0,
                            origin: k as u32,
                        });
                    }
                    // Aycock-Horspool: step over a nullable nonterminal at
                    // prediction time, which makes same-set completion redundant.
                    if g.nullable[*b as usize] {
                        set.add(item.advance());
                    }
                }
                Some(Symbol::Terminal(_)) => {}
                None => {
                    let origin = item.origin as usize;
                    if origin == k {
                        continue;
                    }
                    let parents = self.sets[origin].waiting.get(&prod.lhs).cloned().unwrap_or_default();
                    for parent in parents {
                        self.sets[k].add(parent.advance());
                    }
                }
            }
        }
    }

    /// Consumes `c` if the result is still a viable prefix.
    pub fn feed(&mut self, c: char) -> bool {
        let g = self.grammar;
        let k = self.sets.len() - 1;
        let mut next = ItemSet::default();
        for item in &self.sets[k].items {
            if let Some(Symbol::Terminal(t)) = g.productions[item.prod as usize].rhs.get(item.dot as usize) {
                if t.matches(c) {
                    next.add(item.advance());
                }
            }
        }
        if next.items.is_empty() {
            return false;
        }
        self.sets.push(next);
        self.closure(k + 1);
        self.consumed.push(c);
        true
    }

    /// Consumes all of `s` or nothing.
    pub fn feed_str(&mut self, s: &str) -> bool {
        let mark = self.len();
        for c in s.chars() {
            if !self.feed(c) {
                self.truncate(mark);
                return false;
            }
        }
        true
    }

    /// Rolls back to the state after `len` characters.
    pub fn truncate(&mut self, len: usize) {
        while self.len() > len {
            self.sets.pop();
            self.consumed.pop();
        }
    }

    /// True iff the consumed text is a sentence of the grammar.
    pub fn is_complete(&self) -> bool {
        let accepted = Item {
            prod: self.grammar.accept,
            dot: 1,
            origin: 0,
        };
        self.sets.last().is_some_and(|s| s.seen.contains(&accepted))
    }

    /// Characters of `alphabet` that may come next, in the given order.
    pub fn next_chars(&self, alphabet: &[char]) -> Vec<char> {
        let mut trial = self.clone();
        alphabet
            .iter()
            .copied()
            .filter(|&c| {
                let ok = trial.feed(c);
                if ok {
                    trial.truncate(trial.len() - 1);
                }
                ok
            })
            .collect()
    }

    /// Length of the shortest string that completes the consumed text into a
    /// sentence (0 when already complete).
    pub fn min_completion_len(&self) -> usize {
        let g = self.grammar;
        let k = self.sets.len() - 1;
        let accept_lhs = g.productions[g.accept as usize].lhs;

        // after[(j, A)] = characters still needed once A, begun at j, is done.
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        let mut index: HashMap<(u32, u32), usize> = HashMap::new();
        let mut stack: Vec<(u32, u32)> = Vec::new();
        let mut visit = |pair: (u32, u32), pairs: &mut Vec<(u32, u32)>, stack: &mut Vec<(u32, u32)>| {
            if !index.contains_key(&pair) {
                index.insert(pair, pairs.len());
                pairs.push(pair);
                stack.push(pair);
            }
        };
        for item in &self.sets[k].items {
            let lhs = g.productions[item.prod as usize].lhs;
            visit((item.origin, lhs), &mut pairs, &mut stack);
        }
        while let Some((j, a)) = stack.pop() {
            if a == accept_lhs {
                continue;
            }
            if let Some(parents) = self.sets[j as usize].waiting.get(&a) {
                for p in parents {
                    let lhs = g.productions[p.prod as usize].lhs;
                    visit((p.origin, lhs), &mut pairs, &mut stack);
                }
            }
        }

        let lookup: HashMap<(u32, u32), usize> = pairs.iter().enumerate().map(|(i, p)| (*p, i)).collect();
        let mut after = vec![usize::MAX; pairs.len()];
        loop {
            let mut changed = false;
            for (i, &(j, a)) in pairs.iter().enumerate() {
                let best = if a == accept_lhs {
                    0
                } else {
                    self.sets[j as usize]
                        .waiting
                        .get(&a)
                        .into_iter()
                        .flatten()
                        .filter_map(|p| {
                            let lhs = g.productions[p.prod as usize].lhs;
                            let up = after[lookup[&(p.origin, lhs)]];
                            (up != usize::MAX).then(|| g.rest_len(p.prod, p.dot as usize + 1) + up)
                        })
                        .min()
                        .unwrap_or(usize::MAX)
                };
                if best < after[i] {
                    after[i] = best;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        self.sets[k]
            .items
            .iter()
            .filter_map(|item| {
                let lhs = g.productions[item.prod as usize].lhs;
                let up = after[lookup[&(item.origin, lhs)]];
                (up != usize::MAX).then(|| g.rest_len(item.prod, item.dot as usize) + up)
            })
            .min()
            .expect("a viable state can always be completed")
    }
}

impl Grammar {
    pub fn is_viable_prefix(&self, text: &str) -> bool {
        RecognizerState::new(self).feed_str(text)
    }

    pub fn is_complete(&self, text: &str) -> bool {
        let mut state = RecognizerState::new(self);
        state.feed_str(text) && state.is_complete()
    }

    /// Byte length of the longest prefix of `text` that is viable.
    pub fn longest_viable_prefix(&self, text: &str) -> usize {
        let mut state = RecognizerState::new(self);
        for (offset, c) in text.char_indices() {
            if !state.feed(c) {
                return offset;
            }
        }
        text.len()
    }
}

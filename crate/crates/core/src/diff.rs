//! Reaction-level differences between two versions of a model.

use serde::{Deserialize, Serialize};

use crate::dsl::{Reaction, ReactionNetwork};
use crate::equivalence::{canonical_correspond, canonicalize_reaction, maximum_matching, CanonicalReaction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateChange {
    pub old: Reaction,
    pub new: Reaction,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NetworkDiff {
    pub added: Vec<Reaction>,
    pub removed: Vec<Reaction>,
    pub rate_changed: Vec<RateChange>,
    /// Reactions of the new network that match an old one exactly.
    pub unchanged: usize,
}

impl NetworkDiff {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty() && self.rate_changed.is_empty()
    }
}

/// Matches equivalent reactions first, then pairs the leftovers that agree
/// on both sides; those are rate changes. Everything else is added or
/// removed.
pub fn diff_networks(old: &ReactionNetwork, new: &ReactionNetwork) -> NetworkDiff {
    let old_c: Vec<CanonicalReaction> = old.reactions.iter().map(canonicalize_reaction).collect();
    let new_c: Vec<CanonicalReaction> = new.reactions.iter().map(canonicalize_reaction).collect();

    let exact: Vec<Vec<usize>> = old_c
        .iter()
        .map(|o| (0..new_c.len()).filter(|&j| canonical_correspond(o, &new_c[j])).collect())
        .collect();
    let unchanged = maximum_matching(&exact, new_c.len());
    let old_free: Vec<usize> = (0..old_c.len()).filter(|i| !unchanged.iter().any(|(o, _)| o == i)).collect();
    let new_free: Vec<usize> = (0..new_c.len()).filter(|j| !unchanged.iter().any(|(_, n)| n == j)).collect();

    let same_sides: Vec<Vec<usize>> = old_free
        .iter()
        .map(|&i| {
            (0..new_free.len())
                .filter(|&k| {
                    let n = &new_c[new_free[k]];
                    old_c[i].reactants == n.reactants && old_c[i].products == n.products
                })
                .collect()
        })
        .collect();
    let changed = maximum_matching(&same_sides, new_free.len());

    NetworkDiff {
        added: (0..new_free.len())
            .filter(|k| !changed.iter().any(|(_, c)| c == k))
            .map(|k| new.reactions[new_free[k]].clone())
            .collect(),
        removed: (0..old_free.len())
            .filter(|k| !changed.iter().any(|(c, _)| c == k))
            .map(|k| old.reactions[old_free[k]].clone())
            .collect(),
        rate_changed: changed
            .iter()
            .map(|&(o, n)| RateChange {
                old: old.reactions[old_free[o]].clone(),
                new: new.reactions[new_free[n]].clone(),
            })
            .collect(),
        unchanged: unchanged.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    fn net(text: &str) -> ReactionNetwork {
        parse(text, false).unwrap().network
    }

    #[test]
    fn from_nothing_everything_is_added() {
        let new = net("A -> C @ k0;\nC -> B @ k1;\nB -> @ 4.2;\n");
        let d = diff_networks(&ReactionNetwork::default(), &new);
        assert_eq!(d.added.len(), 3);
        assert!(d.removed.is_empty() && d.rate_changed.is_empty());
    }

    #[test]
    fn single_rate_change() {
        let old = net("A -> C @ k0;\nC -> B @ k1;\nB -> @ 4.2;\n");
        let new = net("A -> C @ k0;\nC -> B @ k1;\nB -> @ 4.3;\n");
        let d = diff_networks(&old, &new);
        assert!(d.added.is_empty() && d.removed.is_empty());
        assert_eq!(d.rate_changed.len(), 1);
        assert_eq!(d.rate_changed[0].new.rate.lexeme(), "4.3");
        assert_eq!(d.unchanged, 2);
    }

    #[test]
    fn identical_and_disjoint() {
        let a = net("A -> B @ 1.0;\nb_x -> @ k3;\n");
        let a2 = net("x_B -> @ k0;\nA -> B @ 1;\n");
        assert!(diff_networks(&a, &a2).is_empty());
        let b = net("C -> D @ k0;\n");
        let d = diff_networks(&a, &b);
        assert_eq!((d.added.len(), d.removed.len(), d.rate_changed.len()), (1, 2, 0));
    }

    #[test]
    fn conservation() {
        let old = net("A -> B @ 1.0;\nA -> B @ 2.0;\nC -> @ k0;\n");
        let new = net("A -> B @ 2.0;\nA -> B @ 3.0;\nD -> @ k0;\n-> E @ k1;\n");
        let d = diff_networks(&old, &new);
        assert_eq!(old.len(), d.unchanged + d.rate_changed.len() + d.removed.len());
        assert_eq!(new.len(), d.unchanged + d.rate_changed.len() + d.added.len());
        assert_eq!(d.unchanged, 1);
        assert_eq!(d.rate_changed.len(), 1);
    }
}

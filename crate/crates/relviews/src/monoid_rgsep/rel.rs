//! Binary relations over shared worlds, stored modulo the identity.

use std::fmt;
use std::sync::Arc;

/// Non-identity pairs of world ids in adjacency form.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RelSet {
    /// `offsets[s]..offsets[s + 1]` indexes the sorted successors of `s`.
    offsets: Vec<u32>,
    targets: Vec<u32>,
}

impl RelSet {
    fn from_pairs(n: usize, mut pairs: Vec<(u32, u32)>) -> RelSet {
        pairs.retain(|(a, b)| a != b);
        pairs.sort_unstable();
        pairs.dedup();
        let mut offsets = vec![0u32; n + 1];
        for &(a, _) in &pairs {
            offsets[a as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        RelSet { offsets, targets: pairs.into_iter().map(|p| p.1).collect() }
    }

    fn succ(&self, s: u32) -> &[u32] {
        let s = s as usize;
        if s + 1 >= self.offsets.len() {
            return &[];
        }
        &self.targets[self.offsets[s] as usize..self.offsets[s + 1] as usize]
    }

    fn pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.offsets.len().saturating_sub(1)).flat_map(move |s| self.succ(s as u32).iter().map(move |&t| (s as u32, t)))
    }
}

/// A reflexive relation over a universe of `n` shared worlds: either every
/// pair, or the identity plus an explicit set of pairs.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Rel {
    All,
    Set(Arc<RelSet>),
}

impl Rel {
    /// The identity relation (stuttering only).
    pub fn identity(n: usize) -> Rel {
        Rel::from_pairs(n, Vec::new())
    }

    pub fn from_pairs(n: usize, pairs: Vec<(u32, u32)>) -> Rel {
        Rel::Set(Arc::new(RelSet::from_pairs(n, pairs)))
    }

    pub fn contains(&self, a: u32, b: u32) -> bool {
        match self {
            Rel::All => true,
            Rel::Set(r) => a == b || r.succ(a).binary_search(&b).is_ok(),
        }
    }

    /// Non-identity successors; `None` for `All`.
    pub fn succ(&self, s: u32) -> Option<&[u32]> {
        match self {
            Rel::All => None,
            Rel::Set(r) => Some(r.succ(s)),
        }
    }

    /// Non-identity pairs; `None` for `All`.
    pub fn pairs(&self) -> Option<Vec<(u32, u32)>> {
        match self {
            Rel::All => None,
            Rel::Set(r) => Some(r.pairs().collect()),
        }
    }

    pub fn len(&self) -> Option<usize> {
        match self {
            Rel::All => None,
            Rel::Set(r) => Some(r.targets.len()),
        }
    }

    pub fn is_subset(&self, other: &Rel) -> bool {
        match (self, other) {
            (_, Rel::All) => true,
            (Rel::All, Rel::Set(_)) => false,
            (Rel::Set(a), Rel::Set(_)) => a.pairs().all(|(x, y)| other.contains(x, y)),
        }
    }

    pub fn intersect(&self, other: &Rel, n: usize) -> Rel {
        match (self, other) {
            (Rel::All, r) | (r, Rel::All) => r.clone(),
            (Rel::Set(a), Rel::Set(_)) => Rel::from_pairs(n, a.pairs().filter(|&(x, y)| other.contains(x, y)).collect()),
        }
    }

    pub fn union(&self, other: &Rel, n: usize) -> Rel {
        match (self, other) {
            (Rel::All, _) | (_, Rel::All) => Rel::All,
            (Rel::Set(a), Rel::Set(b)) => {
                let mut pairs: Vec<_> = a.pairs().collect();
                pairs.extend(b.pairs());
                Rel::from_pairs(n, pairs)
            }
        }
    }
}

impl fmt::Debug for Rel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rel::All => write!(f, "All"),
            Rel::Set(r) => write!(f, "Rel({} pairs)", r.targets.len()),
        }
    }
}

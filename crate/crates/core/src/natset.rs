//! Subsets of the non-negative integers that are finite or cofinite.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// `A ⊂ ℕ₀`, stored as a finite `base` and a flag: when `complemented`,
/// `A = ℕ₀ \ base`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NatSet {
    base: BTreeSet<usize>,
    complemented: bool,
}

impl NatSet {
    pub fn empty() -> Self {
        NatSet {
            base: BTreeSet::new(),
            complemented: false,
        }
    }

    /// `ℕ₀`.
    pub fn all() -> Self {
        NatSet {
            base: BTreeSet::new(),
            complemented: true,
        }
    }

    pub fn finite(items: impl IntoIterator<Item = usize>) -> Self {
        NatSet {
            base: items.into_iter().collect(),
            complemented: false,
        }
    }

    pub fn cofinite(excluded: impl IntoIterator<Item = usize>) -> Self {
        NatSet {
            base: excluded.into_iter().collect(),
            complemented: true,
        }
    }

    pub fn singleton(k: usize) -> Self {
        Self::finite([k])
    }

    /// `N(n) = {0, …, n}`.
    pub fn up_to(n: usize) -> Self {
        Self::finite(0..=n)
    }

    /// `{n, n+1, …}`.
    pub fn at_least(n: usize) -> Self {
        Self::cofinite(0..n)
    }

    pub fn from_parts(base: impl IntoIterator<Item = usize>, complemented: bool) -> Self {
        NatSet {
            base: base.into_iter().collect(),
            complemented,
        }
    }

    pub fn base(&self) -> &BTreeSet<usize> {
        &self.base
    }

    pub fn is_complemented(&self) -> bool {
        self.complemented
    }

    pub fn is_finite(&self) -> bool {
        !self.complemented
    }

    pub fn contains(&self, k: usize) -> bool {
        self.base.contains(&k) != self.complemented
    }

    pub fn complement(&self) -> Self {
        NatSet {
            base: self.base.clone(),
            complemented: !self.complemented,
        }
    }

    pub fn is_empty(&self) -> bool {
        !self.complemented && self.base.is_empty()
    }

    pub fn is_all(&self) -> bool {
        self.complemented && self.base.is_empty()
    }

    pub fn union(&self, other: &Self) -> Self {
        match (self.complemented, other.complemented) {
            (false, false) => Self::finite(self.base.union(&other.base).copied()),
            (true, true) => Self::cofinite(self.base.intersection(&other.base).copied()),
            (true, false) => Self::cofinite(self.base.difference(&other.base).copied()),
            (false, true) => Self::cofinite(other.base.difference(&self.base).copied()),
        }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.complement().union(&other.complement()).complement()
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.intersection(other).is_empty()
    }

    /// Elements `≤ n`, in increasing order.
    pub fn members_up_to(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        (0..=n).filter(move |&k| self.contains(k))
    }

    /// A bound past which membership is constant.
    pub fn horizon(&self) -> usize {
        self.base.iter().next_back().map_or(0, |m| m + 1)
    }
}

impl fmt::Display for NatSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_all() {
            return write!(f, "N0");
        }
        if self.is_empty() {
            return write!(f, "{{}}");
        }
        let items: Vec<String> = self.base.iter().map(|k| k.to_string()).collect();
        if self.complemented {
            write!(f, "N0\\{{{}}}", items.join(","))
        } else {
            write!(f, "{{{}}}", items.join(","))
        }
    }
}

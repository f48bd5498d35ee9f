//! Dense node identifiers and bitmask node sets.
//!
//! Every graph in this crate has at most [`MAX_NODES`] nodes, so a set of
//! nodes fits in a single `u64`. Iteration is always in ascending index order,
//! which is what makes every enumeration in the crate deterministic.

use std::fmt;
use std::ops::{BitAnd, BitAndAssign, BitOr, BitOrAssign, Sub, SubAssign};

/// Largest supported node count.
pub const MAX_NODES: usize = 64;

/// Index of a node inside one [`DiGraph`](crate::digraph::DiGraph).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i)
    }
}

/// A set of nodes, stored as a bitmask over node indices.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NodeSet(u64);

impl NodeSet {
    pub const EMPTY: NodeSet = NodeSet(0);

    /// The set `{0, 1, ..., n-1}`.
    #[inline]
    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_NODES);
        if n == MAX_NODES {
            NodeSet(u64::MAX)
        } else {
            NodeSet((1u64 << n) - 1)
        }
    }

    #[inline]
    pub const fn from_bits(bits: u64) -> Self {
        NodeSet(bits)
    }

    #[inline]
    pub const fn bits(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn singleton(v: NodeId) -> Self {
        NodeSet(1u64 << v.0)
    }

    #[inline]
    pub fn contains(self, v: NodeId) -> bool {
        v.0 < MAX_NODES && self.0 & (1u64 << v.0) != 0
    }

    #[inline]
    pub fn insert(&mut self, v: NodeId) {
        self.0 |= 1u64 << v.0;
    }

    #[inline]
    pub fn remove(&mut self, v: NodeId) {
        self.0 &= !(1u64 << v.0);
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn is_subset(self, other: NodeSet) -> bool {
        self.0 & !other.0 == 0
    }

    #[inline]
    pub fn is_disjoint(self, other: NodeSet) -> bool {
        self.0 & other.0 == 0
    }

    /// Smallest member, if any.
    #[inline]
    pub fn first(self) -> Option<NodeId> {
        if self.0 == 0 {
            None
        } else {
            Some(NodeId(self.0.trailing_zeros() as usize))
        }
    }

    pub fn iter(self) -> NodeSetIter {
        NodeSetIter(self.0)
    }

    /// The `k` smallest members (all of them when `k >= len`).
    pub fn smallest(self, k: usize) -> NodeSet {
        self.iter().take(k).collect()
    }

    /// Maps bit `i` of `mask` onto the `i`-th smallest member of `self`.
    ///
    /// Used to enumerate subsets of an arbitrary set by counting.
    pub fn select(self, mut mask: u64) -> NodeSet {
        let mut out = 0u64;
        let mut rest = self.0;
        while rest != 0 && mask != 0 {
            let low = rest & rest.wrapping_neg();
            if mask & 1 != 0 {
                out |= low;
            }
            mask >>= 1;
            rest ^= low;
        }
        NodeSet(out)
    }

    pub fn to_vec(self) -> Vec<NodeId> {
        self.iter().collect()
    }
}

impl fmt::Debug for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|v| v.0)).finish()
    }
}

pub struct NodeSetIter(u64);

impl Iterator for NodeSetIter {
    type Item = NodeId;

    #[inline]
    fn next(&mut self) -> Option<NodeId> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(NodeId(i))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for NodeSetIter {}

impl IntoIterator for NodeSet {
    type Item = NodeId;
    type IntoIter = NodeSetIter;

    fn into_iter(self) -> NodeSetIter {
        self.iter()
    }
}

impl FromIterator<NodeId> for NodeSet {
    fn from_iter<I: IntoIterator<Item = NodeId>>(iter: I) -> Self {
        let mut s = NodeSet::EMPTY;
        for v in iter {
            s.insert(v);
        }
        s
    }
}

impl FromIterator<usize> for NodeSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        iter.into_iter().map(NodeId).collect()
    }
}

impl BitOr for NodeSet {
    type Output = NodeSet;
    #[inline]
    fn bitor(self, rhs: NodeSet) -> NodeSet {
        NodeSet(self.0 | rhs.0)
    }
}

impl BitOrAssign for NodeSet {
    #[inline]
    fn bitor_assign(&mut self, rhs: NodeSet) {
        self.0 |= rhs.0;
    }
}

impl BitAnd for NodeSet {
    type Output = NodeSet;
    #[inline]
    fn bitand(self, rhs: NodeSet) -> NodeSet {
        NodeSet(self.0 & rhs.0)
    }
}

impl BitAndAssign for NodeSet {
    #[inline]
    fn bitand_assign(&mut self, rhs: NodeSet) {
        self.0 &= rhs.0;
    }
}

impl Sub for NodeSet {
    type Output = NodeSet;
    #[inline]
    fn sub(self, rhs: NodeSet) -> NodeSet {
        NodeSet(self.0 & !rhs.0)
    }
}

impl SubAssign for NodeSet {
    #[inline]
    fn sub_assign(&mut self, rhs: NodeSet) {
        self.0 &= !rhs.0;
    }
}

/// Iterates over all subsets of `universe` with exactly `k` members, in
/// lexicographic order of their sorted member lists.
pub fn subsets_of_size(universe: NodeSet, k: usize) -> Vec<NodeSet> {
    fn rec(items: &[NodeId], k: usize, start: usize, cur: NodeSet, out: &mut Vec<NodeSet>) {
        if k == 0 {
            out.push(cur);
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k {
                break;
            }
            let mut next = cur;
            next.insert(items[i]);
            rec(items, k - 1, i + 1, next, out);
        }
    }
    let items = universe.to_vec();
    let mut out = Vec::new();
    if k <= items.len() {
        rec(&items, k, 0, NodeSet::EMPTY, &mut out);
    }
    out
}

/// All subsets of `universe` with at most `max` members, ordered by size and
/// then lexicographically.
pub fn subsets_up_to(universe: NodeSet, max: usize) -> Vec<NodeSet> {
    (0..=max.min(universe.len()))
        .flat_map(|k| subsets_of_size(universe, k))
        .collect()
}

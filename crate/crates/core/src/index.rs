//! Finitely supported multi-indices, finite coordinate sets and monotone
//! (downward-closed) index sets.
//!
//! Coordinates are 1-based. The zero index is the empty map, so an
//! [`IndexVector`] over infinitely many variables only stores its support.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IndexError {
    #[error("coordinates are 1-based, got coordinate 0")]
    ZeroCoordinate,
    #[error("coordinate key {0:?} is not a positive integer")]
    BadCoordinate(String),
}

/// A multi-index `j = (j_1, j_2, ...)` with finite support.
///
/// Only nonzero levels are stored. Ordering is the canonical order used for
/// every reduction in the crate: by `|j|_1`, then by support, then by levels.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, u32>", into = "BTreeMap<u32, u32>")]
pub struct IndexVector {
    entries: BTreeMap<u32, u32>,
}

impl IndexVector {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Builds an index from `(coordinate, level)` pairs. Zero levels are dropped;
    /// a repeated coordinate keeps the last level.
    pub fn new<I: IntoIterator<Item = (u32, u32)>>(pairs: I) -> Result<Self, IndexError> {
        let mut entries = BTreeMap::new();
        for (k, level) in pairs {
            if k == 0 {
                return Err(IndexError::ZeroCoordinate);
            }
            if level == 0 {
                entries.remove(&k);
            } else {
                entries.insert(k, level);
            }
        }
        Ok(Self { entries })
    }

    /// Index with a single nonzero entry `level` at coordinate `k`.
    pub fn unit(k: u32, level: u32) -> Self {
        Self::new([(k, level)]).expect("unit index needs k >= 1")
    }

    pub fn level(&self, k: u32) -> u32 {
        self.entries.get(&k).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// `|j|_0`, the support size.
    pub fn l0(&self) -> usize {
        self.entries.len()
    }

    /// `|j|_1`, the sum of levels.
    pub fn l1(&self) -> u64 {
        self.entries.values().map(|&l| l as u64).sum()
    }

    pub fn support(&self) -> SupportSet {
        SupportSet {
            coords: self.entries.keys().copied().collect(),
        }
    }

    /// Largest coordinate with a nonzero level, 0 for the zero index.
    pub fn max_coord(&self) -> u32 {
        self.entries.keys().next_back().copied().unwrap_or(0)
    }

    pub fn max_level(&self) -> u32 {
        self.entries.values().copied().max().unwrap_or(0)
    }

    /// Stored `(coordinate, level)` pairs in increasing coordinate order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.entries.iter().map(|(&k, &l)| (k, l))
    }

    /// Copy of `self` with coordinate `k` set to `level`.
    pub fn with(&self, k: u32, level: u32) -> Self {
        assert!(k >= 1, "coordinates are 1-based");
        let mut entries = self.entries.clone();
        if level == 0 {
            entries.remove(&k);
        } else {
            entries.insert(k, level);
        }
        Self { entries }
    }

    /// Componentwise partial order: `self <= other` iff `self_k <= other_k` for every `k`.
    pub fn leq(&self, other: &IndexVector) -> bool {
        self.entries.iter().all(|(k, &l)| other.level(*k) >= l)
    }

    /// Every `i` with `0 <= i <= self`, in canonical order.
    pub fn lower_set(&self) -> Vec<IndexVector> {
        let mut out = vec![IndexVector::zero()];
        for (k, l) in self.iter() {
            let mut next = Vec::with_capacity(out.len() * (l as usize + 1));
            for base in &out {
                for level in 0..=l {
                    next.push(base.with(k, level));
                }
            }
            out = next;
        }
        out.sort();
        out
    }

    /// Indices obtained by lowering exactly one stored level by one.
    pub fn predecessors(&self) -> impl Iterator<Item = IndexVector> + '_ {
        self.iter().map(move |(k, l)| self.with(k, l - 1))
    }
}

impl TryFrom<BTreeMap<String, u32>> for IndexVector {
    type Error = IndexError;

    fn try_from(map: BTreeMap<String, u32>) -> Result<Self, Self::Error> {
        let mut pairs = Vec::with_capacity(map.len());
        for (k, level) in map {
            let k: u32 = k.trim().parse().map_err(|_| IndexError::BadCoordinate(k.clone()))?;
            pairs.push((k, level));
        }
        IndexVector::new(pairs)
    }
}

impl From<IndexVector> for BTreeMap<u32, u32> {
    fn from(j: IndexVector) -> Self {
        j.entries
    }
}

impl Ord for IndexVector {
    fn cmp(&self, other: &Self) -> Ordering {
        self.l1()
            .cmp(&other.l1())
            .then_with(|| self.l0().cmp(&other.l0()))
            .then_with(|| self.entries.keys().cmp(other.entries.keys()))
            .then_with(|| self.entries.values().cmp(other.entries.values()))
    }
}

impl PartialOrd for IndexVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for IndexVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for IndexVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (n, (k, l)) in self.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}:{l}")?;
        }
        f.write_str(")")
    }
}

/// A finite set of coordinates `omega`.
///
/// Ordered canonically by cardinality, then lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct SupportSet {
    coords: BTreeSet<u32>,
}

impl SupportSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new<I: IntoIterator<Item = u32>>(coords: I) -> Result<Self, IndexError> {
        let coords: BTreeSet<u32> = coords.into_iter().collect();
        if coords.contains(&0) {
            return Err(IndexError::ZeroCoordinate);
        }
        Ok(Self { coords })
    }

    /// `{1, ..., d}`.
    pub fn first(d: u32) -> Self {
        Self {
            coords: (1..=d).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn contains(&self, k: u32) -> bool {
        self.coords.contains(&k)
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = u32> + '_ {
        self.coords.iter().copied()
    }

    pub fn max_coord(&self) -> u32 {
        self.coords.iter().next_back().copied().unwrap_or(0)
    }

    pub fn is_subset(&self, other: &SupportSet) -> bool {
        self.coords.is_subset(&other.coords)
    }

    pub fn insert(&mut self, k: u32) {
        assert!(k >= 1, "coordinates are 1-based");
        self.coords.insert(k);
    }

    pub fn with(&self, k: u32) -> Self {
        let mut s = self.clone();
        s.insert(k);
        s
    }

    pub fn without(&self, k: u32) -> Self {
        let mut s = self.clone();
        s.coords.remove(&k);
        s
    }

    /// All subsets of `self`, in canonical order.
    pub fn subsets(&self) -> Vec<SupportSet> {
        let coords: Vec<u32> = self.iter().collect();
        assert!(coords.len() < 31, "too many coordinates to enumerate subsets");
        let mut out: Vec<SupportSet> = (0u32..(1 << coords.len()))
            .map(|mask| SupportSet {
                coords: coords
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| mask & (1 << b) != 0)
                    .map(|(_, &k)| k)
                    .collect(),
            })
            .collect();
        out.sort();
        out
    }

    /// The index with level 1 on every coordinate of the set.
    pub fn to_index(&self) -> IndexVector {
        IndexVector {
            entries: self.coords.iter().map(|&k| (k, 1)).collect(),
        }
    }
}

impl TryFrom<Vec<u32>> for SupportSet {
    type Error = IndexError;

    fn try_from(v: Vec<u32>) -> Result<Self, Self::Error> {
        SupportSet::new(v)
    }
}

impl From<SupportSet> for Vec<u32> {
    fn from(s: SupportSet) -> Self {
        s.coords.into_iter().collect()
    }
}

impl Ord for SupportSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.coords.iter().cmp(other.coords.iter()))
    }
}

impl PartialOrd for SupportSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for SupportSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for SupportSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (n, k) in self.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}")?;
        }
        f.write_str("}")
    }
}

impl FromIterator<u32> for SupportSet {
    fn from_iter<I: IntoIterator<Item = u32>>(iter: I) -> Self {
        SupportSet::new(iter).expect("coordinates are 1-based")
    }
}

/// Shorthand for `IndexVector::new(pairs).unwrap()` used throughout tests and examples.
pub fn idx<const N: usize>(pairs: [(u32, u32); N]) -> IndexVector {
    IndexVector::new(pairs).expect("coordinates are 1-based")
}

/// A finite set of multi-indices, iterated in canonical order.
#[derive(Default, Serialize, Deserialize)]
#[serde(from = "Vec<IndexVector>", into = "Vec<IndexVector>")]
pub struct IndexSet {
    members: BTreeSet<IndexVector>,
    monotone: OnceLock<bool>,
}

impl IndexSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// All `j` with support in `{1..=max_coord}` and every level `<= max_level`.
    pub fn full_box(max_coord: u32, max_level: u32) -> Self {
        let mut members = vec![IndexVector::zero()];
        for k in 1..=max_coord {
            let mut next = Vec::with_capacity(members.len() * (max_level as usize + 1));
            for base in &members {
                for level in 0..=max_level {
                    next.push(base.with(k, level));
                }
            }
            members = next;
        }
        members.into_iter().collect()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, j: &IndexVector) -> bool {
        self.members.contains(j)
    }

    pub fn iter(&self) -> impl Iterator<Item = &IndexVector> {
        self.members.iter()
    }

    /// Inserts `j`; returns false if it was already present.
    pub fn insert(&mut self, j: IndexVector) -> bool {
        let added = self.members.insert(j);
        if added {
            self.monotone = OnceLock::new();
        }
        added
    }

    pub fn remove(&mut self, j: &IndexVector) -> bool {
        let removed = self.members.remove(j);
        if removed {
            self.monotone = OnceLock::new();
        }
        removed
    }

    /// True iff every index below a member is also a member.
    pub fn is_monotone(&self) -> bool {
        *self.monotone.get_or_init(|| {
            // Closed under single-step predecessors implies closed under <= by induction.
            self.members
                .iter()
                .all(|j| j.predecessors().all(|p| self.members.contains(&p)))
        })
    }

    /// Smallest monotone superset of `self`.
    pub fn downward_closure(&self) -> IndexSet {
        let mut out = BTreeSet::new();
        let mut stack: Vec<IndexVector> = self.members.iter().cloned().collect();
        while let Some(j) = stack.pop() {
            if out.contains(&j) {
                continue;
            }
            stack.extend(j.predecessors().filter(|p| !out.contains(p)));
            out.insert(j);
        }
        let set = IndexSet {
            members: out,
            monotone: OnceLock::new(),
        };
        let _ = set.monotone.set(true);
        set
    }

    /// Largest coordinate used by any member (0 if none).
    pub fn max_coord(&self) -> u32 {
        self.members.iter().map(|j| j.max_coord()).max().unwrap_or(0)
    }

    /// Members whose support lies in `{1..=d}`.
    pub fn restrict(&self, d: u32) -> IndexSet {
        self.members
            .iter()
            .filter(|j| j.max_coord() <= d)
            .cloned()
            .collect()
    }
}

impl Clone for IndexSet {
    fn clone(&self) -> Self {
        Self {
            members: self.members.clone(),
            monotone: self.monotone.clone(),
        }
    }
}

impl PartialEq for IndexSet {
    fn eq(&self, other: &Self) -> bool {
        self.members == other.members
    }
}

impl Eq for IndexSet {}

impl fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.members.iter()).finish()
    }
}

impl FromIterator<IndexVector> for IndexSet {
    fn from_iter<I: IntoIterator<Item = IndexVector>>(iter: I) -> Self {
        IndexSet {
            members: iter.into_iter().collect(),
            monotone: OnceLock::new(),
        }
    }
}

impl From<Vec<IndexVector>> for IndexSet {
    fn from(v: Vec<IndexVector>) -> Self {
        v.into_iter().collect()
    }
}

impl From<IndexSet> for Vec<IndexVector> {
    fn from(s: IndexSet) -> Self {
        s.members.into_iter().collect()
    }
}

impl<'a> IntoIterator for &'a IndexSet {
    type Item = &'a IndexVector;
    type IntoIter = std::collections::btree_set::Iter<'a, IndexVector>;

    fn into_iter(self) -> Self::IntoIter {
        self.members.iter()
    }
}

/// Enumerates support sets in canonical order: every subset of `{1..=d}`.
pub fn all_subsets(d: u32) -> Vec<SupportSet> {
    SupportSet::first(d).subsets()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(items: Vec<IndexVector>) -> IndexSet {
        items.into_iter().collect()
    }

    #[test]
    fn support_examples() {
        assert!(IndexVector::zero().support().is_empty());
        assert_eq!(idx([(1, 2), (3, 1)]).support(), SupportSet::new([1, 3]).unwrap());
        assert_eq!(idx([(5, 7)]).support(), SupportSet::new([5]).unwrap());
    }

    #[test]
    fn zero_levels_are_not_stored() {
        let j = idx([(1, 0), (2, 3)]);
        assert_eq!(j.l0(), 1);
        assert_eq!(j, idx([(2, 3)]));
        assert_eq!(IndexVector::new([(0, 1)]), Err(IndexError::ZeroCoordinate));
    }

    #[test]
    fn leq_examples() {
        assert!(IndexVector::zero().leq(&idx([(1, 3)])));
        assert!(!idx([(1, 2)]).leq(&idx([(1, 1)])));
        assert!(!idx([(1, 1), (2, 1)]).leq(&idx([(1, 2)])));
    }

    #[test]
    fn downward_closure_examples() {
        let c = set(vec![idx([(1, 2)])]).downward_closure();
        assert_eq!(c, set(vec![IndexVector::zero(), idx([(1, 1)]), idx([(1, 2)])]));

        assert!(IndexSet::new().downward_closure().is_empty());

        // brute force: every i in a box with i <= j
        let j = idx([(1, 1), (2, 1)]);
        let brute: IndexSet = IndexSet::full_box(2, 1).iter().filter(|i| i.leq(&j)).cloned().collect();
        let c = set(vec![j.clone()]).downward_closure();
        assert_eq!(c, brute);
        assert_eq!(
            c,
            set(vec![IndexVector::zero(), idx([(1, 1)]), idx([(2, 1)]), j])
        );
    }

    #[test]
    fn monotone_examples() {
        assert!(set(vec![IndexVector::zero()]).is_monotone());
        assert!(!set(vec![idx([(1, 1)])]).is_monotone());
        let c = set(vec![idx([(2, 2), (4, 1)])]).downward_closure();
        assert!(c.is_monotone());
    }

    #[test]
    fn monotone_cache_is_invalidated() {
        let mut s = set(vec![IndexVector::zero()]);
        assert!(s.is_monotone());
        s.insert(idx([(1, 2)]));
        assert!(!s.is_monotone());
        s.insert(idx([(1, 1)]));
        assert!(s.is_monotone());
        s.remove(&IndexVector::zero());
        assert!(!s.is_monotone());
    }

    #[test]
    fn canonical_order() {
        let mut v = vec![idx([(2, 1)]), idx([(1, 2)]), IndexVector::zero(), idx([(1, 1)]), idx([(1, 1), (2, 1)])];
        v.sort();
        assert_eq!(
            v,
            vec![IndexVector::zero(), idx([(1, 1)]), idx([(2, 1)]), idx([(1, 2)]), idx([(1, 1), (2, 1)])]
        );
        let subsets = all_subsets(3);
        assert_eq!(subsets.len(), 8);
        assert_eq!(subsets[0], SupportSet::empty());
        assert_eq!(subsets[3], SupportSet::new([3]).unwrap());
        assert_eq!(subsets[7], SupportSet::first(3));
    }

    #[test]
    fn json_shapes() {
        let j = idx([(1, 2), (3, 1)]);
        assert_eq!(serde_json::to_string(&j).unwrap(), r#"{"1":2,"3":1}"#);
        let back: IndexVector = serde_json::from_str(r#"{"3":1,"1":2}"#).unwrap();
        assert_eq!(back, j);
        assert!(serde_json::from_str::<IndexVector>(r#"{"0":1}"#).is_err());
        let s = SupportSet::new([4, 2]).unwrap();
        assert_eq!(serde_json::to_string(&s).unwrap(), "[2,4]");
    }

    fn small_index() -> impl Strategy<Value = IndexVector> {
        proptest::collection::vec((1u32..4, 0u32..3), 0..4)
            .prop_map(|pairs| IndexVector::new(pairs).unwrap())
    }

    proptest! {
        #[test]
        fn leq_is_a_partial_order(a in small_index(), b in small_index(), c in small_index()) {
            prop_assert!(a.leq(&a));
            if a.leq(&b) && b.leq(&a) {
                prop_assert_eq!(&a, &b);
            }
            if a.leq(&b) && b.leq(&c) {
                prop_assert!(a.leq(&c));
            }
        }

        #[test]
        fn closure_is_idempotent(items in proptest::collection::vec(small_index(), 0..5)) {
            let s: IndexSet = items.into_iter().collect();
            let once = s.downward_closure();
            let twice = once.downward_closure();
            prop_assert!(once.is_monotone());
            prop_assert_eq!(&once, &twice);
            for j in s.iter() {
                prop_assert!(once.contains(j));
            }
        }

        #[test]
        fn l1_dominates_l0(j in small_index()) {
            prop_assert!(j.l1() >= j.l0() as u64);
            prop_assert_eq!(j.l1() == j.l0() as u64, j.iter().all(|(_, l)| l == 1));
        }
    }
}

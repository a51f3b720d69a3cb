//! Variable names, the total order on them, finite sets of variables and
//! their canonical list form, and rewiring permutations.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A variable name: letters, digits and underscores, not starting with a digit.
///
/// Names are ordered by base name first and then by their trailing numeric
/// suffix read as an integer, so `x2` sorts before `x10`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct VarName(String);

impl VarName {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if Self::is_valid(&name) {
            Ok(VarName(name))
        } else {
            Err(Error::InvalidName(name))
        }
    }

    pub fn is_valid(name: &str) -> bool {
        let mut chars = name.chars();
        match chars.next() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return false,
        }
        chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn parts(&self) -> (&str, Option<&str>) {
        let cut = self.0.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        let (base, digits) = self.0.split_at(cut);
        (base, if digits.is_empty() { None } else { Some(digits) })
    }
}

fn cmp_numeric(a: &str, b: &str) -> Ordering {
    let a = a.trim_start_matches('0');
    let b = b.trim_start_matches('0');
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

impl Ord for VarName {
    fn cmp(&self, other: &Self) -> Ordering {
        let (ab, an) = self.parts();
        let (bb, bn) = other.parts();
        ab.cmp(bb)
            .then_with(|| match (an, bn) {
                (None, None) => Ordering::Equal,
                (None, Some(_)) => Ordering::Less,
                (Some(_), None) => Ordering::Greater,
                (Some(a), Some(b)) => cmp_numeric(a, b),
            })
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for VarName {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for VarName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for VarName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for VarName {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for VarName {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        VarName::new(s).map_err(serde::de::Error::custom)
    }
}

/// A finite set of variables, iterated in increasing order.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarSet(BTreeSet<VarName>);

impl VarSet {
    pub fn new() -> Self {
        VarSet(BTreeSet::new())
    }

    /// Builds a set from names.
    ///
    /// # Panics
    /// Panics if a name is not a valid variable name. Use [`VarSet::parse`]
    /// for untrusted input.
    pub fn of(names: &[&str]) -> Self {
        names.iter().map(|n| VarName::new(*n).expect("valid variable name")).collect()
    }

    /// Parses a comma-separated list of names; blank input gives the empty set.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let text = text.strip_prefix('{').and_then(|t| t.strip_suffix('}')).unwrap_or(text);
        if text.trim().is_empty() {
            return Ok(VarSet::new());
        }
        text.split(',').map(|n| VarName::new(n.trim())).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: &VarName) -> bool {
        self.0.contains(v)
    }

    pub fn insert(&mut self, v: VarName) -> bool {
        self.0.insert(v)
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &VarName> + ExactSizeIterator {
        self.0.iter()
    }

    pub fn union(&self, other: &VarSet) -> VarSet {
        VarSet(self.0.union(&other.0).cloned().collect())
    }

    pub fn intersection(&self, other: &VarSet) -> VarSet {
        VarSet(self.0.intersection(&other.0).cloned().collect())
    }

    pub fn difference(&self, other: &VarSet) -> VarSet {
        VarSet(self.0.difference(&other.0).cloned().collect())
    }

    pub fn is_subset(&self, other: &VarSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_disjoint(&self, other: &VarSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    /// The canonical list: strictly increasing, duplicate free.
    pub fn to_list(&self) -> VarList {
        VarList(self.0.iter().cloned().collect())
    }

    /// All subsets, in a fixed order (by bitmask over the sorted elements).
    pub fn subsets(&self) -> Vec<VarSet> {
        let items: Vec<&VarName> = self.0.iter().collect();
        (0..1usize << items.len())
            .map(|mask| {
                items
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, v)| (*v).clone())
                    .collect()
            })
            .collect()
    }
}

impl FromIterator<VarName> for VarSet {
    fn from_iter<I: IntoIterator<Item = VarName>>(iter: I) -> Self {
        VarSet(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a VarSet {
    type Item = &'a VarName;
    type IntoIter = std::collections::btree_set::Iter<'a, VarName>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A finite sequence of variables: an object of the category of variable
/// lists. Duplicates are allowed in general.
#[derive(Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VarList(Vec<VarName>);

impl VarList {
    pub fn new(items: Vec<VarName>) -> Self {
        VarList(items)
    }

    pub fn empty() -> Self {
        VarList(Vec::new())
    }

    /// # Panics
    /// Panics on an invalid name.
    pub fn of(names: &[&str]) -> Self {
        VarList(names.iter().map(|n| VarName::new(*n).expect("valid variable name")).collect())
    }

    pub fn concat(&self, other: &VarList) -> VarList {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        VarList(v)
    }

    pub fn to_set(&self) -> VarSet {
        self.0.iter().cloned().collect()
    }

    pub fn position(&self, v: &VarName) -> Option<usize> {
        self.0.iter().position(|x| x == v)
    }

    pub fn has_duplicates(&self) -> bool {
        self.to_set().len() != self.0.len()
    }

    /// True when strictly increasing, i.e. the canonical list of a set.
    pub fn is_canonical(&self) -> bool {
        self.0.windows(2).all(|w| w[0] < w[1])
    }

    pub fn names(&self) -> Vec<String> {
        self.0.iter().map(|v| v.0.clone()).collect()
    }

    /// For each entry of `dst`, its position in `self` (which must be duplicate free).
    pub fn picks_for(&self, dst: &VarList) -> Result<Vec<usize>> {
        dst.iter()
            .map(|v| {
                self.position(v).ok_or_else(|| Error::NotASubset { sub: dst.to_set(), sup: self.to_set() })
            })
            .collect()
    }
}

impl Deref for VarList {
    type Target = [VarName];
    fn deref(&self) -> &[VarName] {
        &self.0
    }
}

impl FromIterator<VarName> for VarList {
    fn from_iter<I: IntoIterator<Item = VarName>>(iter: I) -> Self {
        VarList(iter.into_iter().collect())
    }
}

impl fmt::Display for VarList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("]")
    }
}

impl fmt::Debug for VarList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub fn set_to_list(s: &VarSet) -> VarList {
    s.to_list()
}

/// Returns `(s ∖ t, s ∩ t, t ∖ s)`.
pub fn split(s: &VarSet, t: &VarSet) -> (VarSet, VarSet, VarSet) {
    (s.difference(t), s.intersection(t), t.difference(s))
}

/// A permutation of positions carrying `src` to `dst`: `dst[perm[i]] == src[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rewiring {
    pub src: VarList,
    pub dst: VarList,
    pub perm: Vec<usize>,
}

impl Rewiring {
    pub fn identity(l: &VarList) -> Self {
        Rewiring { src: l.clone(), dst: l.clone(), perm: (0..l.len()).collect() }
    }

    pub fn inverse(&self) -> Rewiring {
        let mut inv = vec![0; self.perm.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            inv[p] = i;
        }
        Rewiring { src: self.dst.clone(), dst: self.src.clone(), perm: inv }
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Rewiring) -> Result<Rewiring> {
        if self.dst != next.src {
            return Err(Error::EndpointMismatch { left: self.dst.names(), right: next.src.names() });
        }
        let perm = self.perm.iter().map(|&p| next.perm[p]).collect();
        Ok(Rewiring { src: self.src.clone(), dst: next.dst.clone(), perm })
    }

    pub fn apply<T: Clone>(&self, items: &[T]) -> Vec<T> {
        let mut out: Vec<Option<T>> = vec![None; items.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = Some(items[i].clone());
        }
        out.into_iter().map(|x| x.expect("permutation is total")).collect()
    }

    /// For each dst position, the src position feeding it.
    pub fn picks(&self) -> Vec<usize> {
        self.inverse().perm
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }
}

pub fn rewiring_between(src: &VarList, dst: &VarList) -> Result<Rewiring> {
    let mut seen = BTreeSet::new();
    for v in src.iter() {
        if !seen.insert(v) {
            return Err(Error::DuplicateVariable(v.to_string()));
        }
    }
    let mismatch = || Error::NotAPermutation { src: src.names(), dst: dst.names() };
    if src.len() != dst.len() || dst.to_set() != src.to_set() {
        return Err(mismatch());
    }
    let perm = src.iter().map(|v| dst.position(v).ok_or_else(mismatch)).collect::<Result<_>>()?;
    Ok(Rewiring { src: src.clone(), dst: dst.clone(), perm })
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn name() -> impl Strategy<Value = VarName> {
        "[a-c][0-9]{0,2}".prop_map(|s| VarName::new(s).unwrap())
    }

    proptest! {
        #[test]
        fn list_round_trip(names in proptest::collection::vec(name(), 0..8)) {
            let s: VarSet = names.into_iter().collect();
            let l = s.to_list();
            prop_assert!(l.is_canonical());
            prop_assert_eq!(l.to_set().to_list(), l);
        }

        #[test]
        fn split_reassembles(a in proptest::collection::vec(name(), 0..6), b in proptest::collection::vec(name(), 0..6)) {
            let s: VarSet = a.into_iter().collect();
            let t: VarSet = b.into_iter().collect();
            let (only_s, both, only_t) = split(&s, &t);
            prop_assert!(only_s.is_disjoint(&both) && both.is_disjoint(&only_t) && only_s.is_disjoint(&only_t));
            prop_assert_eq!(only_s.union(&both), s);
            prop_assert_eq!(only_t.union(&both), t);
        }

        #[test]
        fn self_rewiring_is_identity(names in proptest::collection::vec(name(), 0..6)) {
            let l = names.into_iter().collect::<VarSet>().to_list();
            prop_assert!(rewiring_between(&l, &l).unwrap().is_identity());
        }

        #[test]
        fn order_is_total_and_transitive(a in name(), b in name(), c in name()) {
            prop_assert_eq!(a.cmp(&b), b.cmp(&a).reverse());
            prop_assert_eq!(a.cmp(&b) == Ordering::Equal, a == b);
            if a <= b && b <= c { prop_assert!(a <= c); }
        }
    }
}

//! Named feature vectors and subsets of a feature universe.

use std::fmt;
use std::sync::Arc;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Shared, ordered list of feature names.
pub type FeatureNames = Arc<[String]>;

pub fn feature_names<I, S>(names: I) -> FeatureNames
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    names.into_iter().map(Into::into).collect::<Vec<_>>().into()
}

pub(crate) fn check_unique(names: &[String]) -> Result<()> {
    for (i, a) in names.iter().enumerate() {
        if names[..i].contains(a) {
            return Err(Error::Construction(format!("duplicate feature name `{a}`")));
        }
    }
    Ok(())
}

/// An explicand, baseline or data row: finite values keyed by feature name
/// in a fixed order.
#[derive(Clone, PartialEq)]
pub struct FeatureVector<T> {
    names: FeatureNames,
    values: Vec<T>,
}

impl<T: Scalar> FeatureVector<T> {
    pub fn new(names: FeatureNames, values: Vec<T>) -> Result<Self> {
        if names.len() != values.len() {
            return Err(Error::Construction(format!("{} names but {} values", names.len(), values.len())));
        }
        check_unique(&names)?;
        if let Some((n, v)) = names.iter().zip(&values).find(|(_, v)| !v.is_finite()) {
            return Err(Error::Construction(format!("feature `{n}` has non-finite value {v}")));
        }
        Ok(Self { names, values })
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, T)>) -> Result<Self> {
        let (names, values): (Vec<String>, Vec<T>) = pairs.into_iter().map(|(n, v)| (n.into(), v)).unzip();
        Self::new(names.into(), values)
    }

    /// Same names, all values zero.
    pub fn zeros(names: FeatureNames) -> Self {
        let values = vec![T::zero(); names.len()];
        Self { names, values }
    }

    pub(crate) fn from_parts_unchecked(names: FeatureNames, values: Vec<T>) -> Self {
        debug_assert_eq!(names.len(), values.len());
        Self { names, values }
    }

    pub fn names(&self) -> &FeatureNames {
        &self.names
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, name: &str) -> Option<T> {
        self.index_of(name).map(|i| self.values[i])
    }

    pub fn value(&self, name: &str) -> Result<T> {
        self.get(name).ok_or_else(|| Error::MissingFeature(name.to_string()))
    }

    pub fn at(&self, index: usize) -> T {
        self.values[index]
    }

    pub fn set_at(&mut self, index: usize, value: T) {
        self.values[index] = value;
    }

    pub fn with(&self, name: &str, value: T) -> Result<Self> {
        let i = self.index_of(name).ok_or_else(|| Error::MissingFeature(name.to_string()))?;
        let mut out = self.clone();
        out.values[i] = value;
        Ok(out)
    }

    pub fn same_features(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.names, &other.names) || self.names == other.names
    }

    /// `x_S ; x'_{N∖S}`: members of `subset` from `self`, the rest from `other`.
    pub fn mix(&self, other: &Self, subset: &Coalition) -> Self {
        let values =
            (0..self.len()).map(|i| if subset.contains(i) { self.values[i] } else { other.values[i] }).collect();
        Self { names: self.names.clone(), values }
    }

    /// Re-key onto another ordering of a superset of names.
    pub fn reorder(&self, names: &FeatureNames) -> Result<Self> {
        let values = names.iter().map(|n| self.value(n)).collect::<Result<Vec<_>>>()?;
        Ok(Self { names: names.clone(), values })
    }

    pub fn cast<U: Scalar>(&self) -> FeatureVector<U> {
        FeatureVector { names: self.names.clone(), values: self.values.iter().map(|v| U::lit(v.as_f64())).collect() }
    }
}

impl<T: fmt::Debug> fmt::Debug for FeatureVector<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.names.iter().zip(&self.values)).finish()
    }
}

impl<T: Scalar> fmt::Display for FeatureVector<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, (n, v)) in self.names.iter().zip(&self.values).enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{n}={v}")?;
        }
        write!(f, ")")
    }
}

impl<T: Scalar> Serialize for FeatureVector<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.len()))?;
        for (n, v) in self.names.iter().zip(&self.values) {
            map.serialize_entry(n, v)?;
        }
        map.end()
    }
}

impl<'de, T: Scalar> Deserialize<'de> for FeatureVector<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct OrderedMap<T>(std::marker::PhantomData<T>);

        impl<'de, T: Scalar> Visitor<'de> for OrderedMap<T> {
            type Value = FeatureVector<T>;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map from feature name to number")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> std::result::Result<Self::Value, A::Error> {
                let mut pairs: Vec<(String, T)> = Vec::new();
                while let Some((k, v)) = access.next_entry::<String, T>()? {
                    pairs.push((k, v));
                }
                FeatureVector::from_pairs(pairs).map_err(serde::de::Error::custom)
            }
        }

        deserializer.deserialize_map(OrderedMap(std::marker::PhantomData))
    }
}

/// Bitset over the players `0..len` of a game.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Coalition {
    words: Vec<u64>,
    len: usize,
}

impl Coalition {
    pub fn empty(len: usize) -> Self {
        Self { words: vec![0; len.div_ceil(64).max(1)], len }
    }

    pub fn full(len: usize) -> Self {
        let mut c = Self::empty(len);
        for i in 0..len {
            c.insert(i);
        }
        c
    }

    /// Players given by the low `len` bits of `mask`; requires `len <= 64`.
    pub fn from_mask(len: usize, mask: u64) -> Self {
        assert!(len <= 64, "mask form needs at most 64 players");
        Self { words: vec![mask], len }
    }

    pub fn from_members(len: usize, members: impl IntoIterator<Item = usize>) -> Self {
        let mut c = Self::empty(len);
        for i in members {
            c.insert(i);
        }
        c
    }

    pub fn universe_len(&self) -> usize {
        self.len
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.len, "player {i} outside universe of {}", self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        if i < self.len {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn with(&self, i: usize) -> Self {
        let mut c = self.clone();
        c.insert(i);
        c
    }

    pub fn without(&self, i: usize) -> Self {
        let mut c = self.clone();
        c.remove(i);
        c
    }

    pub fn union(&self, other: &Self) -> Self {
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect();
        Self { words, len: self.len }
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Number of members in `lo..hi`.
    pub fn count_range(&self, lo: usize, hi: usize) -> usize {
        let mut total = 0;
        let mut i = lo;
        while i < hi {
            let w = i / 64;
            let start = i % 64;
            let end = (hi - w * 64).min(64);
            let width = end - start;
            let mask = if width == 64 { u64::MAX } else { ((1u64 << width) - 1) << start };
            total += (self.words[w] & mask).count_ones() as usize;
            i = w * 64 + end;
        }
        total
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.contains(i))
    }

    pub fn complement(&self) -> Self {
        let mut c = Self::empty(self.len);
        for i in (0..self.len).filter(|&i| !self.contains(i)) {
            c.insert(i);
        }
        c
    }

    pub fn as_mask(&self) -> Option<u64> {
        (self.len <= 64).then(|| self.words[0])
    }

    /// Render with player names, e.g. `{x, y}`.
    pub fn describe(&self, names: &[String]) -> String {
        let members: Vec<&str> = self.members().map(|i| names[i].as_str()).collect();
        format!("{{{}}}", members.join(", "))
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.members()).finish()
    }
}

/// A named subset `S ⊆ N` of a feature universe.
#[derive(Clone, PartialEq)]
pub struct FeatureSubset {
    universe: FeatureNames,
    members: Coalition,
}

impl FeatureSubset {
    pub fn new<S: AsRef<str>>(universe: FeatureNames, members: &[S]) -> Result<Self> {
        let mut set = Coalition::empty(universe.len());
        for m in members {
            let i = universe
                .iter()
                .position(|n| n == m.as_ref())
                .ok_or_else(|| Error::MissingFeature(m.as_ref().to_string()))?;
            set.insert(i);
        }
        Ok(Self { universe, members: set })
    }

    pub fn from_coalition(universe: FeatureNames, members: Coalition) -> Self {
        assert_eq!(universe.len(), members.universe_len());
        Self { universe, members }
    }

    pub fn empty(universe: FeatureNames) -> Self {
        let members = Coalition::empty(universe.len());
        Self { universe, members }
    }

    pub fn all(universe: FeatureNames) -> Self {
        let members = Coalition::full(universe.len());
        Self { universe, members }
    }

    pub fn universe(&self) -> &FeatureNames {
        &self.universe
    }

    pub fn coalition(&self) -> &Coalition {
        &self.members
    }

    pub fn contains(&self, name: &str) -> bool {
        self.universe.iter().position(|n| n == name).is_some_and(|i| self.members.contains(i))
    }

    pub fn names(&self) -> Vec<&str> {
        self.members.members().map(|i| self.universe[i].as_str()).collect()
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.universe == other.universe && self.members.is_subset_of(&other.members)
    }
}

impl fmt::Display for FeatureSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.members.describe(&self.universe))
    }
}

impl fmt::Debug for FeatureSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coalition_range_counts_cross_word_boundaries() {
        let c = Coalition::from_members(130, [0, 63, 64, 65, 127, 128]);
        assert_eq!(c.count(), 6);
        assert_eq!(c.count_range(0, 64), 2);
        assert_eq!(c.count_range(63, 66), 3);
        assert_eq!(c.count_range(64, 130), 4);
        assert_eq!(c.count_range(66, 127), 0);
    }

    #[test]
    fn mix_takes_members_from_explicand() {
        let names = feature_names(["a", "b", "c"]);
        let x = FeatureVector::new(names.clone(), vec![1.0, 2.0, 3.0]).unwrap();
        let b = FeatureVector::zeros(names);
        let m = x.mix(&b, &Coalition::from_members(3, [0, 2]));
        assert_eq!(m.values(), &[1.0, 0.0, 3.0]);
    }

    #[test]
    fn rejects_duplicates_and_non_finite() {
        assert!(FeatureVector::from_pairs([("a", 1.0), ("a", 2.0)]).is_err());
        assert!(FeatureVector::from_pairs([("a", f64::NAN)]).is_err());
    }

    #[test]
    fn json_keeps_document_order() {
        let v: FeatureVector<f64> = serde_json::from_str(r#"{"z": 1, "a": 2}"#).unwrap();
        assert_eq!(&v.names()[..], &["z".to_string(), "a".to_string()]);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"{"z":1.0,"a":2.0}"#);
    }

    #[test]
    fn subset_lookup_by_name() {
        let names = feature_names(["x", "y"]);
        let s = FeatureSubset::new(names.clone(), &["y"]).unwrap();
        assert!(s.contains("y") && !s.contains("x"));
        assert!(FeatureSubset::new(names, &["w"]).is_err());
    }
}

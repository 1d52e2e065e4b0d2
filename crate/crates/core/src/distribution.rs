//! Finite feature distributions and exact conditional expectations.

use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::features::{check_unique, Coalition, FeatureNames, FeatureSubset, FeatureVector};
use crate::model::Model;
use crate::scalar::Scalar;

/// Largest joint support an independent distribution will materialize.
pub const DEFAULT_JOINT_CAP: usize = 1_000_000;

const MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    Explicit,
    Empirical,
    Independent,
    ProductOfMarginals,
    TwoPointEpsilon,
}

/// One feature's marginal: distinct values with their probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal<T> {
    pub values: Vec<T>,
    pub probs: Vec<T>,
}

impl<T: Scalar> Marginal<T> {
    fn from_pairs(pairs: impl IntoIterator<Item = (T, T)>) -> Self {
        let mut values: Vec<T> = Vec::new();
        let mut probs: Vec<T> = Vec::new();
        for (v, p) in pairs {
            match values.iter().position(|u| *u == v) {
                Some(i) => probs[i] = probs[i] + p,
                None => {
                    values.push(v);
                    probs.push(p);
                }
            }
        }
        Self { values, probs }
    }

    pub fn prob_of(&self, v: T) -> T {
        self.values.iter().position(|u| *u == v).map_or(T::zero(), |i| self.probs[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Joint<T> {
    atoms: Vec<Vec<T>>,
    probs: Vec<T>,
}

#[derive(Debug)]
enum Repr<T> {
    Joint(Joint<T>),
    Independent { marginals: Vec<Marginal<T>>, joint: OnceLock<Joint<T>> },
}

impl<T: Clone> Clone for Repr<T> {
    fn clone(&self) -> Self {
        match self {
            Repr::Joint(j) => Repr::Joint(j.clone()),
            Repr::Independent { marginals, joint } => Repr::Independent {
                marginals: marginals.clone(),
                joint: joint.get().cloned().map(OnceLock::from).unwrap_or_default(),
            },
        }
    }
}

/// A weighted finite support over feature vectors.
///
/// Independent distributions keep their per-feature marginals and only
/// materialize the product support on first use, refusing when it would
/// exceed the joint cap.
#[derive(Debug, Clone)]
pub struct DiscreteDistribution<T> {
    names: FeatureNames,
    kind: DistributionKind,
    repr: Repr<T>,
    joint_cap: usize,
}

fn check_probs<T: Scalar>(probs: &[T], what: &str) -> Result<T> {
    if probs.iter().any(|p| *p < T::zero() || !p.is_finite()) {
        return Err(Error::Construction(format!("{what}: probabilities must be finite and nonnegative")));
    }
    let total: T = probs.iter().copied().sum();
    if (total - T::one()).abs().as_f64() > MASS_TOLERANCE {
        return Err(Error::Construction(format!("{what}: probabilities sum to {total}, not 1")));
    }
    Ok(total)
}

fn row_key<T: Scalar>(row: &[T]) -> Vec<u64> {
    row.iter().map(|v| v.exact_key()).collect()
}

fn merge_rows<T: Scalar>(rows: impl IntoIterator<Item = (Vec<T>, T)>) -> Joint<T> {
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut atoms = Vec::new();
    let mut probs: Vec<T> = Vec::new();
    for (row, p) in rows {
        match index.get(&row_key(&row)) {
            Some(&i) => probs[i] = probs[i] + p,
            None => {
                index.insert(row_key(&row), atoms.len());
                atoms.push(row);
                probs.push(p);
            }
        }
    }
    Joint { atoms, probs }
}

impl<T: Scalar> DiscreteDistribution<T> {
    /// Explicit atoms `(row, probability)`; duplicate rows are merged and the
    /// masses renormalized after checking they sum to one.
    pub fn explicit(names: FeatureNames, rows: Vec<(Vec<T>, T)>) -> Result<Self> {
        check_unique(&names)?;
        if rows.is_empty() {
            return Err(Error::Construction("distribution needs at least one atom".into()));
        }
        if let Some((r, _)) = rows.iter().find(|(r, _)| r.len() != names.len()) {
            return Err(Error::Construction(format!("atom has {} values for {} features", r.len(), names.len())));
        }
        let probs: Vec<T> = rows.iter().map(|(_, p)| *p).collect();
        let total = check_probs(&probs, "explicit distribution")?;
        let joint = merge_rows(rows.into_iter().map(|(r, p)| (r, p / total)));
        Ok(Self::from_joint(names, DistributionKind::Explicit, joint))
    }

    /// `D̂`: every distinct row with mass proportional to its (weighted)
    /// multiplicity.
    pub fn empirical(data: &Dataset<T>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Construction("empirical distribution of an empty dataset".into()));
        }
        let total: T = (0..data.len()).map(|k| data.weight(k)).sum();
        let joint = merge_rows(data.rows().iter().enumerate().map(|(k, r)| (r.clone(), data.weight(k) / total)));
        Ok(Self::from_joint(data.names().clone(), DistributionKind::Empirical, joint))
    }

    /// Features drawn independently from the given marginals `(value, prob)`.
    pub fn independent(names: FeatureNames, marginals: Vec<Vec<(T, T)>>) -> Result<Self> {
        check_unique(&names)?;
        if marginals.len() != names.len() {
            return Err(Error::Construction("one marginal per feature required".into()));
        }
        let mut out = Vec::with_capacity(marginals.len());
        for (n, m) in names.iter().zip(marginals) {
            if m.is_empty() {
                return Err(Error::Construction(format!("marginal of `{n}` is empty")));
            }
            let probs: Vec<T> = m.iter().map(|(_, p)| *p).collect();
            let total = check_probs(&probs, &format!("marginal of `{n}`"))?;
            if let Some((v, _)) = m.iter().find(|(v, _)| !v.is_finite()) {
                return Err(Error::Construction(format!("marginal of `{n}` has non-finite value {v}")));
            }
            out.push(Marginal::from_pairs(m.into_iter().map(|(v, p)| (v, p / total))));
        }
        Ok(Self::from_marginals(names, DistributionKind::Independent, out))
    }

    /// Per feature, mass `ε` on the explicand value and `1-ε` on the baseline
    /// value, independently across features.
    pub fn two_point_epsilon(x: &FeatureVector<T>, baseline: &FeatureVector<T>, epsilon: T) -> Result<Self> {
        if !(epsilon > T::zero() && epsilon < T::one()) {
            return Err(Error::Argument(format!("ε must lie in (0, 1), got {epsilon}")));
        }
        if !x.same_features(baseline) {
            return Err(Error::Argument("explicand and baseline have different features".into()));
        }
        let marginals = x
            .values()
            .iter()
            .zip(baseline.values())
            .map(|(&xi, &bi)| Marginal::from_pairs([(xi, epsilon), (bi, T::one() - epsilon)]))
            .collect();
        Ok(Self::from_marginals(x.names().clone(), DistributionKind::TwoPointEpsilon, marginals))
    }

    /// Point mass at one vector.
    pub fn point(x: &FeatureVector<T>) -> Self {
        Self::from_joint(
            x.names().clone(),
            DistributionKind::Explicit,
            Joint { atoms: vec![x.values().to_vec()], probs: vec![T::one()] },
        )
    }

    fn from_joint(names: FeatureNames, kind: DistributionKind, joint: Joint<T>) -> Self {
        Self { names, kind, repr: Repr::Joint(joint), joint_cap: DEFAULT_JOINT_CAP }
    }

    fn from_marginals(names: FeatureNames, kind: DistributionKind, marginals: Vec<Marginal<T>>) -> Self {
        Self {
            names,
            kind,
            repr: Repr::Independent { marginals, joint: OnceLock::new() },
            joint_cap: DEFAULT_JOINT_CAP,
        }
    }

    pub fn with_joint_cap(mut self, cap: usize) -> Self {
        self.joint_cap = cap;
        self
    }

    /// `Π(D)`: independent distribution with the same per-feature marginals.
    pub fn product_of_marginals(&self) -> Result<Self> {
        let out = Self::from_marginals(self.names.clone(), DistributionKind::ProductOfMarginals, self.marginals())
            .with_joint_cap(self.joint_cap);
        let size = out.support_size();
        if size > self.joint_cap {
            return Err(Error::Size { what: "product-of-marginals support".into(), actual: size, cap: self.joint_cap });
        }
        Ok(out)
    }

    pub fn names(&self) -> &FeatureNames {
        &self.names
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn is_independent(&self) -> bool {
        matches!(self.repr, Repr::Independent { .. })
    }

    pub fn marginals(&self) -> Vec<Marginal<T>> {
        match &self.repr {
            Repr::Independent { marginals, .. } => marginals.clone(),
            Repr::Joint(j) => (0..self.names.len())
                .map(|i| Marginal::from_pairs(j.atoms.iter().zip(&j.probs).map(|(a, p)| (a[i], *p))))
                .collect(),
        }
    }

    /// Number of atoms in the joint support (saturating).
    pub fn support_size(&self) -> usize {
        match &self.repr {
            Repr::Joint(j) => j.atoms.len(),
            Repr::Independent { marginals, .. } => {
                marginals.iter().fold(1usize, |acc, m| acc.saturating_mul(m.values.len()))
            }
        }
    }

    fn joint(&self) -> Result<&Joint<T>> {
        match &self.repr {
            Repr::Joint(j) => Ok(j),
            Repr::Independent { marginals, joint } => {
                if let Some(j) = joint.get() {
                    return Ok(j);
                }
                let size = self.support_size();
                if size > self.joint_cap {
                    return Err(Error::Size { what: "joint support".into(), actual: size, cap: self.joint_cap });
                }
                let mut atoms: Vec<Vec<T>> = vec![Vec::new()];
                let mut probs = vec![T::one()];
                for m in marginals {
                    let mut next_atoms = Vec::with_capacity(atoms.len() * m.values.len());
                    let mut next_probs = Vec::with_capacity(atoms.len() * m.values.len());
                    for (a, p) in atoms.iter().zip(&probs) {
                        for (v, q) in m.values.iter().zip(&m.probs) {
                            let mut row = a.clone();
                            row.push(*v);
                            next_atoms.push(row);
                            next_probs.push(*p * *q);
                        }
                    }
                    atoms = next_atoms;
                    probs = next_probs;
                }
                Ok(joint.get_or_init(|| Joint { atoms, probs }))
            }
        }
    }

    /// Materialized support as `(vector, probability)` pairs.
    pub fn atoms(&self) -> Result<Vec<(FeatureVector<T>, T)>> {
        let j = self.joint()?;
        Ok(j.atoms
            .iter()
            .zip(&j.probs)
            .map(|(a, p)| (FeatureVector::from_parts_unchecked(self.names.clone(), a.clone()), *p))
            .collect())
    }

    pub fn total_mass(&self) -> Result<T> {
        Ok(self.joint()?.probs.iter().copied().sum())
    }

    /// `E_D[f]`.
    pub fn expectation(&self, f: &Model<T>) -> Result<T> {
        let j = self.joint()?;
        let mut acc = T::zero();
        for (a, p) in j.atoms.iter().zip(&j.probs) {
            acc = acc + *p * self.eval_atom(f, a)?;
        }
        Ok(acc)
    }

    fn eval_atom(&self, f: &Model<T>, atom: &[T]) -> Result<T> {
        let lookup = |n: &str| -> Result<T> {
            self.names.iter().position(|m| m == n).map(|i| atom[i]).ok_or_else(|| Error::MissingFeature(n.to_string()))
        };
        f.eval_with(&lookup)
    }

    /// Precompute `f` and the agreement pattern with `x` at every atom, so
    /// that `E[f | x_S]` for many `S` costs one pass over the support each.
    pub fn conditioned(&self, f: &Model<T>, x: &FeatureVector<T>) -> Result<ConditionalTable<T>> {
        let x = x.reorder(&self.names)?;
        let j = self.joint()?;
        let mut entries = Vec::with_capacity(j.atoms.len());
        for (a, p) in j.atoms.iter().zip(&j.probs) {
            if *p == T::zero() {
                continue;
            }
            let mut agree = Coalition::empty(self.names.len());
            for (i, (u, v)) in a.iter().zip(x.values()).enumerate() {
                if u == v {
                    agree.insert(i);
                }
            }
            entries.push(ConditionedAtom { prob: *p, value: self.eval_atom(f, a)?, agree });
        }
        Ok(ConditionalTable { names: self.names.clone(), entries })
    }

    /// `E_D[f(x') | x'_S = x_S]`.
    pub fn conditional_expectation(&self, f: &Model<T>, x: &FeatureVector<T>, subset: &FeatureSubset) -> Result<T> {
        if subset.universe()[..] != self.names[..] {
            return Err(Error::Argument("subset universe differs from distribution features".into()));
        }
        self.conditioned(f, x)?.expectation(subset.coalition())
    }

    /// Marginal distribution of a subset of the features.
    pub fn marginalize(&self, names: &FeatureNames) -> Result<Self> {
        let idx = names
            .iter()
            .map(|n| self.names.iter().position(|m| m == n).ok_or_else(|| Error::MissingFeature(n.clone())))
            .collect::<Result<Vec<_>>>()?;
        Ok(match &self.repr {
            Repr::Independent { marginals, .. } => {
                Self::from_marginals(names.clone(), self.kind, idx.iter().map(|&i| marginals[i].clone()).collect())
            }
            Repr::Joint(j) => {
                let joint =
                    merge_rows(j.atoms.iter().zip(&j.probs).map(|(a, p)| (idx.iter().map(|&i| a[i]).collect(), *p)));
                Self::from_joint(names.clone(), self.kind, joint)
            }
        }
        .with_joint_cap(self.joint_cap))
    }

    /// Push every atom's `feature` value through `map` (used for affine
    /// reparameterizations).
    pub fn map_feature(&self, feature: &str, map: impl Fn(T) -> T) -> Result<Self> {
        let i =
            self.names.iter().position(|m| m == feature).ok_or_else(|| Error::MissingFeature(feature.to_string()))?;
        Ok(match &self.repr {
            Repr::Independent { marginals, .. } => {
                let mut ms = marginals.clone();
                ms[i] = Marginal::from_pairs(ms[i].values.iter().zip(&ms[i].probs).map(|(v, p)| (map(*v), *p)));
                Self::from_marginals(self.names.clone(), self.kind, ms)
            }
            Repr::Joint(j) => {
                let joint = merge_rows(j.atoms.iter().zip(&j.probs).map(|(a, p)| {
                    let mut a = a.clone();
                    a[i] = map(a[i]);
                    (a, *p)
                }));
                Self::from_joint(self.names.clone(), self.kind, joint)
            }
        }
        .with_joint_cap(self.joint_cap))
    }

    pub fn to_spec(&self) -> DistributionSpec {
        match &self.repr {
            Repr::Independent { marginals, .. } => DistributionSpec::Independent {
                marginals: self
                    .names
                    .iter()
                    .zip(marginals)
                    .map(|(n, m)| {
                        let atoms = m
                            .values
                            .iter()
                            .zip(&m.probs)
                            .map(|(v, p)| ValueProb { value: v.as_f64(), prob: p.as_f64() })
                            .collect();
                        (n.clone(), atoms)
                    })
                    .collect(),
            },
            Repr::Joint(j) => DistributionSpec::Explicit {
                rows: j
                    .atoms
                    .iter()
                    .zip(&j.probs)
                    .map(|(a, p)| ExplicitRow {
                        values: FeatureVector::from_parts_unchecked(
                            self.names.clone(),
                            a.iter().map(|v| v.as_f64()).collect(),
                        ),
                        prob: p.as_f64(),
                    })
                    .collect(),
            },
        }
    }

    pub fn from_spec(spec: DistributionSpec) -> Result<Self> {
        match spec {
            DistributionSpec::Explicit { rows } => {
                let first =
                    rows.first().ok_or_else(|| Error::Construction("distribution needs at least one atom".into()))?;
                let names = first.values.names().clone();
                let rows = rows
                    .iter()
                    .map(|r| {
                        let v = r.values.reorder(&names)?;
                        Ok((v.values().iter().map(|u| T::lit(*u)).collect(), T::lit(r.prob)))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::explicit(names, rows)
            }
            DistributionSpec::Independent { marginals } => {
                let names: Vec<String> = marginals.iter().map(|(n, _)| n.clone()).collect();
                let ms = marginals
                    .into_iter()
                    .map(|(_, m)| m.into_iter().map(|a| (T::lit(a.value), T::lit(a.prob))).collect())
                    .collect();
                Self::independent(names.into(), ms)
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: DistributionSpec = serde_json::from_str(text).map_err(|e| Error::Parse {
            position: e.column(),
            message: format!("distribution json line {}: {e}", e.line()),
        })?;
        Self::from_spec(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_spec()).expect("distributions serialize")
    }
}

#[derive(Debug, Clone)]
struct ConditionedAtom<T> {
    prob: T,
    value: T,
    agree: Coalition,
}

/// `f` tabulated over a distribution's support, ready for conditioning on any
/// subset of features.
#[derive(Debug, Clone)]
pub struct ConditionalTable<T> {
    names: FeatureNames,
    entries: Vec<ConditionedAtom<T>>,
}

impl<T: Scalar> ConditionalTable<T> {
    pub fn expectation(&self, subset: &Coalition) -> Result<T> {
        let mut mass = T::zero();
        let mut acc = T::zero();
        for e in &self.entries {
            if subset.is_subset_of(&e.agree) {
                mass = mass + e.prob;
                acc = acc + e.prob * e.value;
            }
        }
        if mass == T::zero() {
            return Err(Error::Conditioning { subset: subset.describe(&self.names) });
        }
        Ok(acc / mass)
    }

    /// `P(x'_S = x_S)`.
    pub fn mass(&self, subset: &Coalition) -> T {
        self.entries.iter().filter(|e| subset.is_subset_of(&e.agree)).map(|e| e.prob).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueProb {
    pub value: f64,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplicitRow {
    pub values: FeatureVector<f64>,
    pub prob: f64,
}

/// JSON form of a distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DistributionSpec {
    Explicit {
        rows: Vec<ExplicitRow>,
    },
    Independent {
        #[serde(with = "ordered_marginals")]
        marginals: Vec<(String, Vec<ValueProb>)>,
    },
}

mod ordered_marginals {
    use std::fmt;

    use serde::de::{MapAccess, Visitor};
    use serde::ser::SerializeMap;
    use serde::{Deserializer, Serializer};

    use super::ValueProb;

    pub fn serialize<S: Serializer>(m: &[(String, Vec<ValueProb>)], s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(m.len()))?;
        for (k, v) in m {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(String, Vec<ValueProb>)>, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Vec<(String, Vec<ValueProb>)>;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map from feature to marginal atoms")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut a: A) -> Result<Self::Value, A::Error> {
                let mut out = Vec::new();
                while let Some(e) = a.next_entry()? {
                    out.push(e);
                }
                Ok(out)
            }
        }
        d.deserialize_map(V)
    }
}

//! Possible-marginals Shapley: baseline attribution when some mixed
//! explicand/baseline vectors cannot occur.
//!
//! A mixed vector the possibility rule rejects has value `⊥`. Walking an
//! ordering, features whose addition lands on `⊥` wait in a pending set `Z`
//! until adding the next feature reaches a possible vector again; that
//! marginal is credited whole to the arriving feature when nothing was
//! pending, otherwise half to it and half to the first pending feature.

use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attribution::{Attribution, Provenance};
use crate::error::{Error, Result};
use crate::features::{Coalition, FeatureNames, FeatureVector};
use crate::game::{SetFunction, SetFunctionTable, TABLE_CAP};
use crate::methods::baseline::align;
use crate::model::{Expression, Model};
use crate::scalar::Scalar;
use crate::shapley::{next_permutation, random_order, EngineMode, EngineOptions, CHUNK};

/// Orderings are enumerated exhaustively up to this many features.
pub const PMS_ENUMERATION_CAP: usize = 8;

/// Orderings drawn when the caller asked for an exact answer past the
/// enumeration cap.
pub const DEFAULT_PMS_PERMUTATIONS: usize = 4096;

/// Memo states grow as `3^|N|`.
pub const ESTIMATE_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", bound = "T: Scalar")]
pub enum PossibilityPredicate<T> {
    Always,
    /// Possible iff the expression evaluates to a nonzero value.
    Expression(Expression<T>),
    /// Possible iff the vector equals one of the rows.
    AllowedRows {
        rows: Vec<FeatureVector<T>>,
    },
}

impl<T: Scalar> PossibilityPredicate<T> {
    pub fn expression(source: &str) -> Result<Self> {
        Ok(Self::Expression(Expression::parse(source)?))
    }

    pub fn allowed_rows(rows: Vec<FeatureVector<T>>) -> Self {
        Self::AllowedRows { rows }
    }

    pub fn is_possible(&self, v: &FeatureVector<T>) -> Result<bool> {
        match self {
            Self::Always => Ok(true),
            Self::Expression(e) => Ok(e.ast().eval(&|n: &str| v.value(n))? != T::zero()),
            Self::AllowedRows { rows } => {
                for r in rows {
                    if r.len() == v.len() && r.reorder(v.names()).is_ok_and(|r| r.values() == v.values()) {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            position: e.column(),
            message: format!("possibility json line {}: {e}", e.line()),
        })
    }
}

/// `v(S) = f(x_S; x'_{N∖S})` when that vector is possible, else `⊥`.
pub struct PossibleGame<'a, T> {
    model: &'a Model<T>,
    predicate: &'a PossibilityPredicate<T>,
    explicand: FeatureVector<T>,
    baseline: FeatureVector<T>,
}

impl<'a, T: Scalar> PossibleGame<'a, T> {
    pub fn new(
        model: &'a Model<T>,
        x: &FeatureVector<T>,
        baseline: &FeatureVector<T>,
        predicate: &'a PossibilityPredicate<T>,
    ) -> Result<Self> {
        let baseline = align(x, baseline, "baseline")?;
        if !predicate.is_possible(x)? {
            return Err(Error::Precondition(format!("explicand {x} is impossible")));
        }
        if !predicate.is_possible(&baseline)? {
            return Err(Error::Precondition(format!("baseline {baseline} is impossible")));
        }
        Ok(Self { model, predicate, explicand: x.clone(), baseline })
    }
}

impl<T: Scalar> SetFunction<T> for PossibleGame<'_, T> {
    fn players(&self) -> &FeatureNames {
        self.explicand.names()
    }

    fn value(&self, coalition: &Coalition) -> Result<Option<T>> {
        let mixed = self.explicand.mix(&self.baseline, coalition);
        if self.predicate.is_possible(&mixed)? {
            self.model.eval(&mixed).map(Some)
        } else {
            Ok(None)
        }
    }
}

/// One ordering's credits, added into `acc`.
fn walk<T: Scalar>(table: &SetFunctionTable<T>, order: &[usize], acc: &mut [T]) -> Result<()> {
    let value = |mask: u64| table.get(mask);
    let mut accepted = 0u64;
    let mut pending: Vec<usize> = Vec::new();
    let mut current = value(0).ok_or_else(|| Error::Precondition("empty coalition is impossible".into()))?;
    let half = T::lit(0.5);
    for &i in order {
        pending.push(i);
        let mask = pending.iter().fold(accepted, |m, &p| m | 1 << p);
        if let Some(next) = value(mask) {
            let marginal = next - current;
            if pending.len() == 1 {
                acc[i] = acc[i] + marginal;
            } else {
                acc[i] = acc[i] + half * marginal;
                acc[pending[0]] = acc[pending[0]] + half * marginal;
            }
            accepted = mask;
            current = next;
            pending.clear();
        }
    }
    if !pending.is_empty() {
        return Err(Error::Precondition("full coalition is impossible".into()));
    }
    Ok(())
}

/// PMS over an arbitrary set function with possible `v(∅)` and `v(N)`.
pub fn pms_game<T: Scalar, G: SetFunction<T> + ?Sized>(v: &G, opts: &EngineOptions) -> Result<Attribution<T>> {
    let n = v.len();
    let table = SetFunctionTable::tabulate(v, TABLE_CAP)?;
    let empty = table.get(0).ok_or_else(|| Error::Precondition("empty coalition is impossible".into()))?;
    let full = table.get((1u64 << n) - 1).ok_or_else(|| Error::Precondition("full coalition is impossible".into()))?;
    let (sampling, note) = match opts.mode {
        EngineMode::Sampled { permutations, seed } => (Some((permutations, seed)), None),
        _ if n <= PMS_ENUMERATION_CAP => (None, None),
        _ => (
            Some((DEFAULT_PMS_PERMUTATIONS, 0)),
            Some(format!("{n} features exceed the enumeration cap; sampled instead")),
        ),
    };
    let mut acc = vec![T::zero(); n];
    let count = match sampling {
        None => {
            let mut order: Vec<usize> = (0..n).collect();
            let mut count = 0usize;
            loop {
                walk(&table, &order, &mut acc)?;
                count += 1;
                if !next_permutation(&mut order) {
                    break count;
                }
            }
        }
        Some((permutations, seed)) => {
            if permutations == 0 {
                return Err(Error::Argument("need at least one permutation".into()));
            }
            let partial = (0..permutations.div_ceil(CHUNK))
                .into_par_iter()
                .map(|c| {
                    let mut part = vec![T::zero(); n];
                    for k in c * CHUNK..((c + 1) * CHUNK).min(permutations) {
                        walk(&table, &random_order(n, seed, k), &mut part)?;
                    }
                    Ok(part)
                })
                .collect::<Result<Vec<_>>>()?;
            for part in partial {
                for (a, p) in acc.iter_mut().zip(part) {
                    *a = *a + p;
                }
            }
            permutations
        }
    };
    let c = T::from_count(count);
    let scores = acc.into_iter().map(|s| s / c).collect();
    let mut a = Attribution::new(v.players().clone(), scores, "pms", empty, full)?.with_provenance(Provenance {
        permutations: Some(count),
        seed: sampling.map(|(_, s)| s),
        ..Default::default()
    });
    if let Some(note) = note {
        a = a.note(note);
    }
    Ok(a)
}

pub fn pms<T: Scalar>(
    f: &Model<T>,
    x: &FeatureVector<T>,
    baseline: &FeatureVector<T>,
    predicate: &PossibilityPredicate<T>,
    opts: &EngineOptions,
) -> Result<Attribution<T>> {
    let game = PossibleGame::new(f, x, baseline, predicate)?;
    let a = pms_game(&game, opts)?;
    let mut provenance = a.provenance.clone();
    provenance.baseline = Some(game.baseline.cast());
    Ok(a.with_provenance(provenance))
}

/// Memoized marginal estimates over a fixed set function.
pub struct MarginalEstimator<'a, T, G: ?Sized> {
    v: &'a G,
    memo: Mutex<HashMap<(Coalition, Coalition), T>>,
}

impl<'a, T: Scalar, G: SetFunction<T> + ?Sized> MarginalEstimator<'a, T, G> {
    pub fn new(v: &'a G) -> Result<Self> {
        if v.len() > ESTIMATE_CAP {
            return Err(Error::Size {
                what: "marginal estimation universe".into(),
                actual: v.len(),
                cap: ESTIMATE_CAP,
            });
        }
        if v.value(&Coalition::empty(v.len()))?.is_none() {
            return Err(Error::Precondition("empty coalition is impossible".into()));
        }
        Ok(Self { v, memo: Mutex::new(HashMap::new()) })
    }

    /// Estimated marginal of adding `pending` to `accepted`:
    /// both ends possible gives the plain difference, both impossible gives
    /// zero; an impossible start averages over dropping one accepted member,
    /// an impossible end averages over widening the pending set by one, and
    /// either recursive case halves the result.
    pub fn estimate(&self, accepted: &Coalition, pending: &Coalition) -> Result<T> {
        if !accepted.is_disjoint(pending) {
            return Err(Error::Argument("accepted and pending sets overlap".into()));
        }
        let key = (accepted.clone(), pending.clone());
        if let Some(v) = self.memo.lock().expect("memo lock").get(&key) {
            return Ok(*v);
        }
        let union = accepted.union(pending);
        let result = match (self.v.value(accepted)?, self.v.value(&union)?) {
            (Some(start), Some(end)) => end - start,
            (None, None) => T::zero(),
            (None, Some(_)) => {
                let members: Vec<usize> = accepted.members().collect();
                let mut acc = T::zero();
                for &i in &members {
                    acc = acc + self.estimate(&accepted.without(i), pending)?;
                }
                acc / T::from_count(members.len()) / T::lit(2.0)
            }
            (Some(_), None) => {
                let free: Vec<usize> = union.complement().members().collect();
                assert!(!free.is_empty(), "full coalition is impossible");
                let mut acc = T::zero();
                for &i in &free {
                    acc = acc + self.estimate(accepted, &pending.with(i))?;
                }
                acc / T::from_count(free.len()) / T::lit(2.0)
            }
        };
        self.memo.lock().expect("memo lock").insert(key, result);
        Ok(result)
    }
}

pub fn estimate_marginal<T: Scalar, G: SetFunction<T> + ?Sized>(
    accepted: &Coalition,
    pending: &Coalition,
    v: &G,
) -> Result<T> {
    MarginalEstimator::new(v)?.estimate(accepted, pending)
}

/// `v'`: equal to `v` where possible; an impossible `S` takes the mean of
/// `v'(S∖i)` over its members, filled from the smallest sets upward.
pub fn completed_set_function<T: Scalar, G: SetFunction<T> + ?Sized>(v: &G) -> Result<SetFunctionTable<T>> {
    let n = v.len();
    let table = SetFunctionTable::tabulate(v, TABLE_CAP)?;
    if table.get(0).is_none() {
        return Err(Error::Precondition("empty coalition is impossible".into()));
    }
    let mut masks: Vec<u64> = (0..1u64 << n).collect();
    masks.sort_by_key(|m| m.count_ones());
    let mut values: Vec<Option<T>> = table.values().to_vec();
    for mask in masks {
        if values[mask as usize].is_none() {
            let members: Vec<u64> = (0..n as u64).filter(|i| mask >> i & 1 == 1).collect();
            let total: T = members
                .iter()
                .map(|i| values[(mask & !(1 << i)) as usize].expect("smaller sets are filled first"))
                .sum();
            values[mask as usize] = Some(total / T::from_count(members.len()));
        }
    }
    SetFunctionTable::from_values(v.players().clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::feature_names;
    use crate::game::FnSetFunction;

    fn game(n: usize, possible: impl Fn(u64) -> bool + Sync) -> impl SetFunction<f64> {
        let names = feature_names((0..n).map(|i| format!("x{}", i + 1)));
        FnSetFunction::new(names, move |s: &Coalition| {
            let m = s.as_mask().unwrap();
            Ok(possible(m).then(|| (m * m) as f64 + 1.0))
        })
    }

    #[test]
    fn estimate_cases() {
        let v = game(2, |m| m == 0 || m == 3);
        let e = MarginalEstimator::new(&v).unwrap();
        let empty = Coalition::empty(2);
        let one = Coalition::from_members(2, [0]);
        assert_eq!(e.estimate(&empty, &one).unwrap(), (10.0 - 1.0) / 2.0);
        let all = game(2, |_| true);
        let e = MarginalEstimator::new(&all).unwrap();
        assert_eq!(e.estimate(&empty, &one).unwrap(), 2.0 - 1.0);
        let v = game(3, |m| m != 1 && m != 3);
        let e = MarginalEstimator::new(&v).unwrap();
        assert_eq!(e.estimate(&one, &Coalition::from_members(3, [1])).unwrap(), 0.0);
    }

    #[test]
    fn completion_fills_from_below() {
        let v = game(2, |m| m != 1);
        let c = completed_set_function(&v).unwrap();
        assert_eq!(c.get(1), c.get(0));
        let v = game(2, |m| m == 0 || m == 3);
        let c = completed_set_function(&v).unwrap();
        assert_eq!(c.get(1), Some(1.0));
        assert_eq!(c.get(2), Some(1.0));
    }

    #[test]
    fn pending_credit_goes_to_first_and_last() {
        let v = game(3, |m| m == 0 || m == 7);
        let a = pms_game(&v, &EngineOptions::exact()).unwrap();
        for s in a.values() {
            assert!((s - 49.0 / 3.0).abs() < 1e-12);
        }
    }
}

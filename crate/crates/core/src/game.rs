//! Set functions `v: 2^N → R ∪ {⊥}`, the single input of the Shapley engine.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{Coalition, FeatureNames};
use crate::scalar::Scalar;

/// Largest universe that may be tabulated over all `2^|N|` coalitions.
pub const TABLE_CAP: usize = 24;

/// A cooperative game over named players. `Ok(None)` is the invalid marker
/// `⊥`; only possibility-aware constructors produce it.
pub trait SetFunction<T: Scalar>: Sync {
    fn players(&self) -> &FeatureNames;

    fn value(&self, coalition: &Coalition) -> Result<Option<T>>;

    fn len(&self) -> usize {
        self.players().len()
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `v(S)`, treating `⊥` as an error.
    fn real_value(&self, coalition: &Coalition) -> Result<T> {
        self.value(coalition)?.ok_or_else(|| Error::InvalidSetFunction { subset: coalition.describe(self.players()) })
    }
}

impl<T: Scalar, G: SetFunction<T> + ?Sized> SetFunction<T> for &G {
    fn players(&self) -> &FeatureNames {
        (**self).players()
    }

    fn value(&self, coalition: &Coalition) -> Result<Option<T>> {
        (**self).value(coalition)
    }
}

impl<T: Scalar, G: SetFunction<T> + ?Sized + Send> SetFunction<T> for Box<G> {
    fn players(&self) -> &FeatureNames {
        (**self).players()
    }

    fn value(&self, coalition: &Coalition) -> Result<Option<T>> {
        (**self).value(coalition)
    }
}

/// Set function backed by a closure.
pub struct FnSetFunction<F> {
    players: FeatureNames,
    f: F,
}

impl<F> FnSetFunction<F> {
    pub fn new(players: FeatureNames, f: F) -> Self {
        Self { players, f }
    }
}

impl<T, F> SetFunction<T> for FnSetFunction<F>
where
    T: Scalar,
    F: Fn(&Coalition) -> Result<Option<T>> + Sync,
{
    fn players(&self) -> &FeatureNames {
        &self.players
    }

    fn value(&self, coalition: &Coalition) -> Result<Option<T>> {
        (self.f)(coalition)
    }
}

/// Every coalition's value, indexed by its bitmask.
#[derive(Debug, Clone, PartialEq)]
pub struct SetFunctionTable<T> {
    players: FeatureNames,
    values: Vec<Option<T>>,
}

impl<T: Scalar> SetFunctionTable<T> {
    /// Evaluate `v` on all `2^|N|` coalitions (in parallel). The table holds
    /// the same values a fresh evaluation would return.
    pub fn tabulate<G: SetFunction<T> + ?Sized>(v: &G, cap: usize) -> Result<Self> {
        let n = v.len();
        let cap = cap.min(TABLE_CAP);
        if n > cap {
            return Err(Error::Size { what: "set-function universe".into(), actual: n, cap });
        }
        let values = (0..1u64 << n)
            .into_par_iter()
            .map(|mask| v.value(&Coalition::from_mask(n, mask)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { players: v.players().clone(), values })
    }

    pub fn from_values(players: FeatureNames, values: Vec<Option<T>>) -> Result<Self> {
        if players.len() > TABLE_CAP || values.len() != 1usize << players.len() {
            return Err(Error::Argument(format!(
                "{} values do not cover the subsets of {} players",
                values.len(),
                players.len()
            )));
        }
        Ok(Self { players, values })
    }

    pub fn from_fn(players: FeatureNames, f: impl Fn(u64) -> Option<T>) -> Self {
        let values = (0..1u64 << players.len()).map(f).collect();
        Self { players, values }
    }

    pub fn get(&self, mask: u64) -> Option<T> {
        self.values[mask as usize]
    }

    pub fn values(&self) -> &[Option<T>] {
        &self.values
    }

    /// All values, or the first `⊥` coalition as an error.
    pub fn reals(&self) -> Result<Vec<T>> {
        self.values
            .iter()
            .enumerate()
            .map(|(mask, v)| {
                v.ok_or_else(|| Error::InvalidSetFunction {
                    subset: Coalition::from_mask(self.players.len(), mask as u64).describe(&self.players),
                })
            })
            .collect()
    }

    /// `a·self + b·other` over the same players; `⊥` is absorbing.
    pub fn combine(&self, a: T, other: &Self, b: T) -> Result<Self> {
        if self.players != other.players {
            return Err(Error::Argument("combined set functions need the same players".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(u, w)| Some(a * (*u)? + b * (*w)?)).collect();
        Ok(Self { players: self.players.clone(), values })
    }
}

impl<T: Scalar> SetFunction<T> for SetFunctionTable<T> {
    fn players(&self) -> &FeatureNames {
        &self.players
    }

    fn value(&self, coalition: &Coalition) -> Result<Option<T>> {
        let mask = coalition.as_mask().ok_or_else(|| Error::Argument("coalition wider than table".into()))?;
        Ok(self.values[mask as usize])
    }
}

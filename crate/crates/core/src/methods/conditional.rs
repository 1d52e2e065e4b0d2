//! Conditional expectation Shapley: `v(S) = E_D[f | x_S]` over an explicit
//! distribution, or over training rows with optional smoothing.

use serde::{Deserialize, Serialize};

use crate::attribution::Attribution;
use crate::dataset::{Closeness, Dataset, Tolerances};
use crate::distribution::{ConditionalTable, DiscreteDistribution};
use crate::error::{Error, Result};
use crate::features::{Coalition, FeatureNames, FeatureVector};
use crate::game::SetFunction;
use crate::model::Model;
use crate::scalar::Scalar;
use crate::shapley::{shapley, EngineOptions};

/// Position of each of `x`'s features among `names`.
fn positions(x: &FeatureVector<impl Scalar>, names: &FeatureNames) -> Result<Vec<usize>> {
    if x.len() != names.len() {
        return Err(Error::Argument(format!("explicand has {} features, the distribution {}", x.len(), names.len())));
    }
    x.names()
        .iter()
        .map(|n| {
            names
                .iter()
                .position(|m| m == n)
                .ok_or_else(|| Error::Argument(format!("distribution lacks feature `{n}`")))
        })
        .collect()
}

fn remap(coalition: &Coalition, to: &[usize]) -> Coalition {
    Coalition::from_members(to.len(), coalition.members().map(|i| to[i]))
}

pub struct ConditionalGame<T> {
    players: FeatureNames,
    table: ConditionalTable<T>,
    to_dist: Vec<usize>,
}

impl<T: Scalar> ConditionalGame<T> {
    pub fn new(f: &Model<T>, x: &FeatureVector<T>, dist: &DiscreteDistribution<T>) -> Result<Self> {
        let to_dist = positions(x, dist.names())?;
        Ok(Self { players: x.names().clone(), table: dist.conditioned(f, x)?, to_dist })
    }
}

impl<T: Scalar> SetFunction<T> for ConditionalGame<T> {
    fn players(&self) -> &FeatureNames {
        &self.players
    }

    fn value(&self, coalition: &Coalition) -> Result<Option<T>> {
        self.table.expectation(&remap(coalition, &self.to_dist)).map(Some).map_err(|e| match e {
            Error::Conditioning { .. } => Error::Conditioning { subset: coalition.describe(&self.players) },
            other => other,
        })
    }
}

pub fn ces<T: Scalar>(
    f: &Model<T>,
    x: &FeatureVector<T>,
    dist: &DiscreteDistribution<T>,
    opts: &EngineOptions,
) -> Result<Attribution<T>> {
    let game = ConditionalGame::new(f, x, dist)?;
    let a = shapley(&game, opts)?;
    let mut provenance = a.provenance.clone();
    provenance.distribution = Some(format!("{:?} over {} atoms", dist.kind(), dist.support_size()));
    Ok(a.with_method("ces").with_provenance(provenance))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalOptions {
    /// `τ`: a row agrees with the explicand on feature `i` when
    /// `|x^t_i - x_i| <= τ·σ_i`. Zero means exact equality.
    #[serde(default)]
    pub smoothing: f64,
    /// Add the explicand as one more row unless some row already agrees with
    /// it on every feature.
    #[serde(default = "yes")]
    pub append_explicand: bool,
}

fn yes() -> bool {
    true
}

impl Default for EmpiricalOptions {
    fn default() -> Self {
        Self { smoothing: 0.0, append_explicand: true }
    }
}

impl EmpiricalOptions {
    pub fn smoothed(smoothing: f64) -> Self {
        Self { smoothing, ..Self::default() }
    }

    pub fn closeness(&self) -> Closeness {
        if self.smoothing == 0.0 {
            Closeness::Exact
        } else {
            Closeness::StdFraction(self.smoothing)
        }
    }
}

struct Row<T> {
    weight: T,
    value: T,
    agree: Coalition,
}

/// `v(S)`: weighted mean of `f` over the rows agreeing with `x` on `S`.
pub struct EmpiricalGame<T> {
    players: FeatureNames,
    rows: Vec<Row<T>>,
    appended: bool,
}

impl<T: Scalar> EmpiricalGame<T> {
    pub fn new(f: &Model<T>, x: &FeatureVector<T>, data: &Dataset<T>, opts: EmpiricalOptions) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Construction("empirical conditioning needs at least one row".into()));
        }
        let to_data = positions(x, data.names())?;
        let x_data = x.reorder(data.names())?;
        // spread is measured on the training rows alone
        let tol: Tolerances<T> = data.tolerances(opts.closeness())?;
        let mut rows = Vec::with_capacity(data.len() + 1);
        let mut seen_self = false;
        for (k, r) in data.rows().iter().enumerate() {
            let agree = tol.agreement(r, x_data.values());
            seen_self |= agree.count() == x.len();
            let agree = Coalition::from_members(x.len(), (0..x.len()).filter(|&i| agree.contains(to_data[i])));
            let row = FeatureVector::from_parts_unchecked(data.names().clone(), r.clone());
            rows.push(Row { weight: data.weight(k), value: f.eval(&row)?, agree });
        }
        let appended = opts.append_explicand && !seen_self;
        if appended {
            rows.push(Row { weight: T::one(), value: f.eval(x)?, agree: Coalition::full(x.len()) });
        }
        Ok(Self { players: x.names().clone(), rows, appended })
    }

    pub fn appended_explicand(&self) -> bool {
        self.appended
    }

    /// Number of rows agreeing on `S` (the support size of `T_S`).
    pub fn support(&self, coalition: &Coalition) -> usize {
        self.rows.iter().filter(|r| coalition.is_subset_of(&r.agree)).count()
    }
}

impl<T: Scalar> SetFunction<T> for EmpiricalGame<T> {
    fn players(&self) -> &FeatureNames {
        &self.players
    }

    fn value(&self, coalition: &Coalition) -> Result<Option<T>> {
        let mut mass = T::zero();
        let mut acc = T::zero();
        for r in &self.rows {
            if coalition.is_subset_of(&r.agree) {
                mass = mass + r.weight;
                acc = acc + r.weight * r.value;
            }
        }
        if mass == T::zero() {
            return Err(Error::Conditioning { subset: coalition.describe(&self.players) });
        }
        Ok(Some(acc / mass))
    }
}

pub fn ces_empirical<T: Scalar>(
    f: &Model<T>,
    x: &FeatureVector<T>,
    data: &Dataset<T>,
    opts: EmpiricalOptions,
    engine: &EngineOptions,
) -> Result<Attribution<T>> {
    let game = EmpiricalGame::new(f, x, data, opts)?;
    let a = shapley(&game, engine)?;
    let mut provenance = a.provenance.clone();
    provenance.distribution = Some(format!("empirical over {} rows", data.len()));
    provenance.notes.push(format!("smoothing {}", opts.smoothing));
    if game.appended {
        provenance.notes.push("explicand appended as one row".into());
    }
    Ok(a.with_method(if opts.smoothing == 0.0 {
        "ces_empirical".to_string()
    } else {
        format!("ces_empirical_{}", opts.smoothing)
    })
    .with_provenance(provenance))
}

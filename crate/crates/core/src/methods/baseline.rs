//! Methods that model absence with a baseline: BShap, its randomized
//! average RBShap, and the micro-feature refinement.

use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attribution::{Attribution, Provenance};
use crate::distribution::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::features::{feature_names, Coalition, FeatureNames, FeatureVector};
use crate::game::SetFunction;
use crate::model::Model;
use crate::scalar::Scalar;
use crate::shapley::{shapley, EngineMode, EngineOptions};

/// `other` rearranged into `x`'s feature order, or an argument error when
/// the two do not cover the same features.
pub fn align<T: Scalar>(x: &FeatureVector<T>, other: &FeatureVector<T>, what: &str) -> Result<FeatureVector<T>> {
    if x.len() != other.len() {
        return Err(Error::Argument(format!("{what} has {} features but the explicand has {}", other.len(), x.len())));
    }
    other
        .reorder(x.names())
        .map_err(|e| Error::Argument(format!("{what} does not match the explicand's features: {e}")))
}

/// `v(S) = f(x_S; x'_{N∖S})`.
pub struct BaselineGame<'a, T> {
    pub model: &'a Model<T>,
    pub explicand: FeatureVector<T>,
    pub baseline: FeatureVector<T>,
}

impl<'a, T: Scalar> BaselineGame<'a, T> {
    pub fn new(model: &'a Model<T>, x: &FeatureVector<T>, baseline: &FeatureVector<T>) -> Result<Self> {
        Ok(Self { model, explicand: x.clone(), baseline: align(x, baseline, "baseline")? })
    }
}

impl<T: Scalar> SetFunction<T> for BaselineGame<'_, T> {
    fn players(&self) -> &FeatureNames {
        self.explicand.names()
    }

    fn value(&self, coalition: &Coalition) -> Result<Option<T>> {
        self.model.eval(&self.explicand.mix(&self.baseline, coalition)).map(Some)
    }
}

pub fn bshap<T: Scalar>(
    f: &Model<T>,
    x: &FeatureVector<T>,
    baseline: &FeatureVector<T>,
    opts: &EngineOptions,
) -> Result<Attribution<T>> {
    let game = BaselineGame::new(f, x, baseline)?;
    let a = shapley(&game, opts)?;
    let provenance = Provenance { baseline: Some(game.baseline.cast()), ..a.provenance.clone() };
    Ok(a.with_method("bshap").with_provenance(provenance))
}

/// `v(S) = Σ_b p_b · f(x_S; b_{N∖S})` over weighted baselines. Its Shapley
/// value is the weighted average of the per-baseline BShap vectors.
pub struct AveragedBaselineGame<'a, T> {
    model: &'a Model<T>,
    explicand: FeatureVector<T>,
    baselines: Vec<(FeatureVector<T>, T)>,
}

impl<T: Scalar> SetFunction<T> for AveragedBaselineGame<'_, T> {
    fn players(&self) -> &FeatureNames {
        self.explicand.names()
    }

    fn value(&self, coalition: &Coalition) -> Result<Option<T>> {
        let mut acc = T::zero();
        for (b, p) in &self.baselines {
            acc = acc + *p * self.model.eval(&self.explicand.mix(b, coalition))?;
        }
        Ok(Some(acc))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BaselineDraw {
    /// Every support atom, weighted by its probability.
    Exact,
    /// `baselines` i.i.d. draws from the distribution.
    Sampled { baselines: usize, seed: u64 },
}

pub fn rbshap<T: Scalar>(
    f: &Model<T>,
    x: &FeatureVector<T>,
    dist: &DiscreteDistribution<T>,
    draw: BaselineDraw,
    opts: &EngineOptions,
) -> Result<Attribution<T>> {
    let atoms = dist.atoms()?;
    let baselines = match draw {
        BaselineDraw::Exact => atoms
            .iter()
            .filter(|(_, p)| *p > T::zero())
            .map(|(b, p)| Ok((align(x, b, "distribution atom")?, *p)))
            .collect::<Result<Vec<_>>>()?,
        BaselineDraw::Sampled { baselines, seed } => {
            if baselines == 0 {
                return Err(Error::Argument("need at least one sampled baseline".into()));
            }
            let weights: Vec<f64> = atoms.iter().map(|(_, p)| p.as_f64()).collect();
            let index = WeightedIndex::new(&weights).map_err(|e| Error::Argument(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = T::one() / T::from_count(baselines);
            (0..baselines)
                .map(|_| Ok((align(x, &atoms[index.sample(&mut rng)].0, "distribution atom")?, w)))
                .collect::<Result<Vec<_>>>()?
        }
    };
    let game = AveragedBaselineGame { model: f, explicand: x.clone(), baselines };
    let a = shapley(&game, opts)?;
    let mut provenance = a.provenance.clone();
    provenance.distribution = Some(format!("{:?} over {} atoms", dist.kind(), atoms.len()));
    if let BaselineDraw::Sampled { baselines, seed } = draw {
        provenance.notes.push(format!("{baselines} baselines drawn with seed {seed}"));
    }
    Ok(a.with_method("rbshap").with_provenance(provenance))
}

/// Largest lattice the micro-feature walk dynamic program will visit.
pub const MICRO_LATTICE_CAP: usize = 4_000_000;

/// Each feature split into `m` equal micro-features; `v` evaluates `f` at
/// `x' + (k_i/m)(x - x')` with `k_i` the number of feature `i`'s micro
/// players present. Micro players of feature `i` occupy `i·m .. (i+1)·m`.
pub struct MicroGame<'a, T> {
    model: &'a Model<T>,
    explicand: FeatureVector<T>,
    baseline: FeatureVector<T>,
    m: usize,
    players: FeatureNames,
}

impl<'a, T: Scalar> MicroGame<'a, T> {
    pub fn new(model: &'a Model<T>, x: &FeatureVector<T>, baseline: &FeatureVector<T>, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Argument("micro-feature count must be at least 1".into()));
        }
        let players = feature_names(x.names().iter().flat_map(|n| (0..m).map(move |k| format!("{n}#{k}"))));
        Ok(Self { model, explicand: x.clone(), baseline: align(x, baseline, "baseline")?, m, players })
    }

    pub fn at_counts(&self, counts: &[usize]) -> Result<T> {
        let m = T::from_count(self.m);
        let values = counts
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                let (a, b) = (self.baseline.at(i), self.explicand.at(i));
                if k == self.m {
                    b
                } else {
                    a + T::from_count(k) / m * (b - a)
                }
            })
            .collect();
        self.model.eval(&FeatureVector::from_parts_unchecked(self.explicand.names().clone(), values))
    }

    fn fold(&self, micro: &Attribution<T>) -> Result<Attribution<T>> {
        let scores = (0..self.explicand.len())
            .map(|i| micro.values()[i * self.m..(i + 1) * self.m].iter().copied().sum())
            .collect();
        Ok(Attribution::new(
            self.explicand.names().clone(),
            scores,
            "micro_shapley",
            micro.reference,
            micro.prediction,
        )?
        .with_provenance(micro.provenance.clone()))
    }
}

impl<T: Scalar> SetFunction<T> for MicroGame<'_, T> {
    fn players(&self) -> &FeatureNames {
        &self.players
    }

    fn value(&self, coalition: &Coalition) -> Result<Option<T>> {
        let counts: Vec<usize> =
            (0..self.explicand.len()).map(|i| coalition.count_range(i * self.m, (i + 1) * self.m)).collect();
        self.at_counts(&counts).map(Some)
    }
}

/// Exact micro-feature Shapley through the count lattice. Under a uniformly
/// random ordering of the `n·m` micro players, the counts vector performs a
/// walk from `0` to `(m,..,m)` that steps along feature `i` from `k` with
/// probability `(m - k_i) / (n·m - |k|)`; a step credits that feature with
/// `v(k + e_i) - v(k)`.
fn micro_lattice<T: Scalar>(game: &MicroGame<'_, T>) -> Result<Attribution<T>> {
    let n = game.explicand.len();
    let side = game.m + 1;
    let states = (0..n).try_fold(1usize, |acc, _| acc.checked_mul(side)).unwrap_or(usize::MAX);
    if states > MICRO_LATTICE_CAP {
        return Err(Error::Size { what: "micro-feature lattice".into(), actual: states, cap: MICRO_LATTICE_CAP });
    }
    let decode = |mut idx: usize| -> Vec<usize> {
        (0..n)
            .map(|_| {
                let k = idx % side;
                idx /= side;
                k
            })
            .collect()
    };
    let stride: Vec<usize> = (0..n).map(|i| side.pow(i as u32)).collect();
    let values = {
        use rayon::prelude::*;
        (0..states).into_par_iter().map(|s| game.at_counts(&decode(s))).collect::<Result<Vec<T>>>()?
    };
    // visit states in order of total count so every predecessor is final
    let mut order: Vec<usize> = (0..states).collect();
    order.sort_by_key(|&s| decode(s).iter().sum::<usize>());
    let mut reach = vec![0.0f64; states];
    reach[0] = 1.0;
    let total = n * game.m;
    let mut scores = vec![T::zero(); n];
    for s in order {
        let p = reach[s];
        if p == 0.0 {
            continue;
        }
        let k = decode(s);
        let remaining = total - k.iter().sum::<usize>();
        for i in 0..n {
            if k[i] < game.m {
                let step = p * (game.m - k[i]) as f64 / remaining as f64;
                let next = s + stride[i];
                reach[next] += step;
                scores[i] = scores[i] + T::lit(step) * (values[next] - values[s]);
            }
        }
    }
    Attribution::new(game.explicand.names().clone(), scores, "micro_shapley", values[0], values[states - 1])
}

pub fn micro_shapley<T: Scalar>(
    f: &Model<T>,
    x: &FeatureVector<T>,
    baseline: &FeatureVector<T>,
    m: usize,
    opts: &EngineOptions,
) -> Result<Attribution<T>> {
    let game = MicroGame::new(f, x, baseline, m)?;
    let players = x.len() * m;
    let a = match opts.mode {
        EngineMode::Exact if players > opts.exact_cap => micro_lattice(&game)?.note("count-lattice walk"),
        _ => game.fold(&shapley(&game, opts)?)?,
    };
    let mut provenance = a.provenance.clone();
    provenance.baseline = Some(game.baseline.cast());
    provenance.notes.push(format!("{m} micro-features per feature"));
    Ok(a.with_provenance(provenance))
}

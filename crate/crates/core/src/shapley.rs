//! Shapley values of arbitrary finite set functions.
//!
//! The exact path evaluates the subset form
//! `s_i = Σ_{S ⊆ N∖i} |S|!(|N|-|S|-1)!/|N|! · (v(S∪i) - v(S))`
//! over a memo table of all `2^|N|` coalitions. The sampled path averages
//! marginal vectors of random orderings; ordering `k` is drawn from its own
//! ChaCha stream `(seed, k)`, and partial sums are merged in a fixed order,
//! so results do not depend on the number of worker threads.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attribution::{Attribution, Provenance};
use crate::error::{Error, Result};
use crate::features::{Coalition, FeatureNames};
use crate::game::{SetFunction, SetFunctionTable};
use crate::scalar::Scalar;

pub const DEFAULT_EXACT_CAP: usize = 20;

/// Permutation enumeration is refused beyond this many players.
pub const ENUMERATION_CAP: usize = 10;

pub(crate) const CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EngineMode {
    /// Subset form over a memo table.
    Exact,
    /// Average over every one of the `|N|!` orderings exactly once.
    Enumerate,
    Sampled {
        permutations: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineOptions {
    #[serde(flatten)]
    pub mode: EngineMode,
    #[serde(default = "default_cap")]
    pub exact_cap: usize,
}

fn default_cap() -> usize {
    DEFAULT_EXACT_CAP
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self { mode: EngineMode::Exact, exact_cap: DEFAULT_EXACT_CAP }
    }
}

impl EngineOptions {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn enumerate() -> Self {
        Self { mode: EngineMode::Enumerate, ..Self::default() }
    }

    pub fn sampled(permutations: usize, seed: u64) -> Self {
        Self { mode: EngineMode::Sampled { permutations, seed }, ..Self::default() }
    }
}

/// Dispatch on the engine mode.
pub fn shapley<T: Scalar, G: SetFunction<T> + ?Sized>(v: &G, opts: &EngineOptions) -> Result<Attribution<T>> {
    match opts.mode {
        EngineMode::Exact => shapley_exact(v, opts.exact_cap),
        EngineMode::Enumerate => shapley_enumerated(v),
        EngineMode::Sampled { permutations, seed } => shapley_sampled(v, permutations, seed),
    }
}

/// `|S|!(n-|S|-1)!/n!` for `|S| = 0..n`, in log space past 18 players.
pub fn subset_weights(n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    if n <= 18 {
        let fact: Vec<f64> = (0..=n)
            .scan(1.0, |acc, k| {
                if k > 0 {
                    *acc *= k as f64;
                }
                Some(*acc)
            })
            .collect();
        (0..n).map(|k| fact[k] * fact[n - k - 1] / fact[n]).collect()
    } else {
        let ln_fact: Vec<f64> = (0..=n)
            .scan(0.0, |acc, k| {
                if k > 0 {
                    *acc += (k as f64).ln();
                }
                Some(*acc)
            })
            .collect();
        (0..n).map(|k| (ln_fact[k] + ln_fact[n - k - 1] - ln_fact[n]).exp()).collect()
    }
}

/// Exact Shapley values by the subset formula.
pub fn shapley_exact<T: Scalar, G: SetFunction<T> + ?Sized>(v: &G, cap: usize) -> Result<Attribution<T>> {
    let n = v.len();
    if n > cap {
        return Err(Error::Size { what: "exact Shapley universe".into(), actual: n, cap });
    }
    let table = SetFunctionTable::tabulate(v, cap)?;
    shapley_from_table(&table)
}

pub fn shapley_from_table<T: Scalar>(table: &SetFunctionTable<T>) -> Result<Attribution<T>> {
    let players = table.players().clone();
    let n = players.len();
    let values = table.reals()?;
    let weights: Vec<T> = subset_weights(n).into_iter().map(T::lit).collect();
    let scores: Vec<T> = (0..n)
        .into_par_iter()
        .map(|i| {
            let bit = 1u64 << i;
            let mut acc = T::zero();
            for mask in 0..(1u64 << n) {
                if mask & bit == 0 {
                    let k = mask.count_ones() as usize;
                    acc = acc + weights[k] * (values[(mask | bit) as usize] - values[mask as usize]);
                }
            }
            acc
        })
        .collect();
    let full = values[(1usize << n) - 1];
    Attribution::new(players, scores, "shapley_exact", values[0], full)
}

/// Walk one ordering, crediting each player its marginal contribution.
fn walk<T: Scalar, G: SetFunction<T> + ?Sized>(v: &G, order: &[usize], empty: T, acc: &mut [T]) -> Result<()> {
    let mut coalition = Coalition::empty(v.len());
    let mut prev = empty;
    for &p in order {
        coalition.insert(p);
        let cur = v.real_value(&coalition)?;
        acc[p] = acc[p] + (cur - prev);
        prev = cur;
    }
    Ok(())
}

pub(crate) fn random_order(n: usize, seed: u64, index: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

/// Monte-Carlo Shapley values over `permutations` seeded random orderings.
pub fn shapley_sampled<T: Scalar, G: SetFunction<T> + ?Sized>(
    v: &G,
    permutations: usize,
    seed: u64,
) -> Result<Attribution<T>> {
    if permutations == 0 {
        return Err(Error::Argument("need at least one permutation".into()));
    }
    let n = v.len();
    // a memo table pays off once the walks would evaluate more coalitions than it holds
    let table = if n <= 16 && permutations.saturating_mul(n) > (1usize << n) {
        Some(SetFunctionTable::tabulate(v, 16)?)
    } else {
        None
    };
    let game: &(dyn SetFunction<T> + '_) = match &table {
        Some(t) => t,
        None => &Borrowed(v),
    };
    let empty = game.real_value(&Coalition::empty(n))?;
    let full = game.real_value(&Coalition::full(n))?;
    let chunks = permutations.div_ceil(CHUNK);
    let partial = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![T::zero(); n];
            for k in c * CHUNK..((c + 1) * CHUNK).min(permutations) {
                walk(game, &random_order(n, seed, k), empty, &mut acc)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = vec![T::zero(); n];
    for acc in partial {
        for (t, a) in total.iter_mut().zip(acc) {
            *t = *t + a;
        }
    }
    let count = T::from_count(permutations);
    let scores = total.into_iter().map(|s| s / count).collect();
    Ok(Attribution::new(v.players().clone(), scores, "shapley_sampled", empty, full)?.with_provenance(Provenance {
        permutations: Some(permutations),
        seed: Some(seed),
        ..Default::default()
    }))
}

struct Borrowed<'a, G: ?Sized>(&'a G);

impl<T: Scalar, G: SetFunction<T> + ?Sized> SetFunction<T> for Borrowed<'_, G> {
    fn players(&self) -> &FeatureNames {
        self.0.players()
    }

    fn value(&self, coalition: &Coalition) -> Result<Option<T>> {
        self.0.value(coalition)
    }
}

/// Rearrange into the next lexicographic permutation; false after the last.
pub fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let Some(i) = (0..p.len() - 1).rev().find(|&i| p[i] < p[i + 1]) else {
        return false;
    };
    let j = (i + 1..p.len()).rev().find(|&j| p[j] > p[i]).expect("successor exists");
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

/// Average of marginal vectors over all `|N|!` orderings.
pub fn shapley_enumerated<T: Scalar, G: SetFunction<T> + ?Sized>(v: &G) -> Result<Attribution<T>> {
    let n = v.len();
    if n > ENUMERATION_CAP {
        return Err(Error::Size { what: "permutation enumeration universe".into(), actual: n, cap: ENUMERATION_CAP });
    }
    let table = SetFunctionTable::tabulate(v, ENUMERATION_CAP)?;
    let values = table.reals()?;
    let mut acc = vec![T::zero(); n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut count = 0usize;
    loop {
        let mut mask = 0u64;
        for &p in &order {
            let next = mask | 1 << p;
            acc[p] = acc[p] + (values[next as usize] - values[mask as usize]);
            mask = next;
        }
        count += 1;
        if !next_permutation(&mut order) {
            break;
        }
    }
    let c = T::from_count(count);
    let scores = acc.into_iter().map(|s| s / c).collect();
    let full = values[(1usize << n) - 1];
    Ok(Attribution::new(table.players().clone(), scores, "shapley_enumerated", values[0], full)?
        .with_provenance(Provenance { permutations: Some(count), ..Default::default() }))
}

/// Marginals of a single fixed ordering `σ`: `s_{σ_i} = v({σ_1..σ_i}) - v({σ_1..σ_{i-1}})`.
pub fn fixed_permutation_marginals<T: Scalar, G: SetFunction<T> + ?Sized, S: AsRef<str>>(
    v: &G,
    order: &[S],
) -> Result<Attribution<T>> {
    let players = v.players();
    let n = players.len();
    let mut idx = Vec::with_capacity(order.len());
    for name in order {
        let i = players
            .iter()
            .position(|p| p == name.as_ref())
            .ok_or_else(|| Error::Argument(format!("`{}` is not a player", name.as_ref())))?;
        if idx.contains(&i) {
            return Err(Error::Argument(format!("`{}` appears twice in the ordering", name.as_ref())));
        }
        idx.push(i);
    }
    if idx.len() != n {
        return Err(Error::Argument(format!("ordering names {} of {} players", idx.len(), n)));
    }
    let empty = v.real_value(&Coalition::empty(n))?;
    let mut acc = vec![T::zero(); n];
    walk(v, &idx, empty, &mut acc)?;
    let full = v.real_value(&Coalition::full(n))?;
    let label: Vec<&str> = order.iter().map(AsRef::as_ref).collect();
    Ok(Attribution::new(players.clone(), acc, "fixed_permutation", empty, full)?
        .note(format!("ordering {}", label.join(" -> "))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::feature_names;
    use crate::game::FnSetFunction;

    fn additive(c: &[f64]) -> impl SetFunction<f64> + '_ {
        let names = feature_names((0..c.len()).map(|i| format!("p{i}")));
        FnSetFunction::new(names, move |s: &Coalition| Ok(Some(s.members().map(|i| c[i]).sum())))
    }

    #[test]
    fn additive_game_returns_its_coefficients() {
        let c = [1.5, -2.0, 0.25, 7.0];
        let v = additive(&c);
        for opts in [EngineOptions::exact(), EngineOptions::enumerate(), EngineOptions::sampled(50, 3)] {
            let a = shapley(&v, &opts).unwrap();
            for (s, e) in a.values().iter().zip(&c) {
                assert!((s - e).abs() < 1e-12, "{opts:?}: {s} vs {e}");
            }
        }
    }

    #[test]
    fn weights_sum_to_one_over_subsets() {
        for n in [1, 2, 5, 18, 19, 20] {
            let w = subset_weights(n);
            let total: f64 = (0..n)
                .map(|k| {
                    let binom = (0..k).fold(1.0, |acc, j| acc * (n - 1 - j) as f64 / (j + 1) as f64);
                    binom * w[k]
                })
                .sum();
            assert!((total - 1.0).abs() < 1e-9, "n={n}: {total}");
        }
    }

    #[test]
    fn cap_and_invalid_marker_errors() {
        let names = feature_names((0..3).map(|i| format!("p{i}")));
        let v = FnSetFunction::new(names.clone(), |_: &Coalition| Ok(Some(0.0)));
        assert!(matches!(shapley_exact(&v, 2), Err(Error::Size { .. })));
        let bad = FnSetFunction::new(names, |s: &Coalition| Ok(if s.count() == 1 { None } else { Some(1.0) }));
        assert!(matches!(shapley_exact(&bad, 20), Err(Error::InvalidSetFunction { .. })));
        assert!(matches!(shapley_sampled(&bad, 4, 1), Err(Error::InvalidSetFunction { .. })));
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let names = feature_names((0..5).map(|i| format!("p{i}")));
        let v = FnSetFunction::new(names, |s: &Coalition| {
            let m = s.as_mask().unwrap() as f64;
            Ok(Some((m * 0.37).sin() * 10.0))
        });
        let a = shapley_sampled(&v, 500, 42).unwrap();
        let b = shapley_sampled(&v, 500, 42).unwrap();
        assert_eq!(a, b);
        let c = shapley_sampled(&v, 500, 43).unwrap();
        assert_ne!(a.values(), c.values());
        assert!(a.efficiency_gap() < 1e-9);
    }

    #[test]
    fn fixed_permutation_validates_ordering() {
        let v = additive(&[1.0, 2.0]);
        assert!(fixed_permutation_marginals(&v, &["p0"]).is_err());
        assert!(fixed_permutation_marginals(&v, &["p0", "p0"]).is_err());
        assert!(fixed_permutation_marginals(&v, &["p0", "zz"]).is_err());
        let a = fixed_permutation_marginals(&v, &["p1", "p0"]).unwrap();
        assert_eq!(a.values(), &[1.0, 2.0]);
    }

    #[test]
    fn next_permutation_visits_all() {
        let mut p = vec![0, 1, 2, 3];
        let mut count = 1;
        while next_permutation(&mut p) {
            count += 1;
        }
        assert_eq!(count, 24);
    }
}

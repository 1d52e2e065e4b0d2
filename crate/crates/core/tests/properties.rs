mod common;

use common::{assert_close, permutation_oracle};
use manyshap::pms::{pms_game, PossibilityPredicate};
use manyshap::SetFunctionTable;
use manyshap::{
    bshap, ces, feature_names, pms, rbshap, shapley, shapley_exact, shapley_sampled, BaselineDraw, Coalition, Dataset,
    DiscreteDistribution, EngineOptions, FeatureSubset, FeatureVector, Model, SetFunction,
};
use proptest::prelude::*;

fn names(n: usize) -> manyshap::FeatureNames {
    feature_names((1..=n).map(|i| format!("x{i}")))
}

fn table(values: &[f64], n: usize) -> SetFunctionTable {
    SetFunctionTable::from_values(names(n), values.iter().map(|v| Some(*v)).collect()).unwrap()
}

fn game() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1usize..=6).prop_flat_map(|n| (Just(n), prop::collection::vec(-10.0f64..10.0, 1 << n)))
}

/// Random polynomial of degree at most three over `x1..xn`.
fn polynomial(n: usize) -> impl Strategy<Value = String> {
    let term = (-3i32..=3, prop::collection::vec(0..n, 0..=3));
    prop::collection::vec(term, 1..5).prop_map(|terms| {
        terms
            .into_iter()
            .map(|(c, vars)| {
                let mut t = format!("({c})");
                for v in vars {
                    t.push_str(&format!("*x{}", v + 1));
                }
                t
            })
            .collect::<Vec<_>>()
            .join(" + ")
    })
}

fn vector(n: usize, values: Vec<f64>) -> FeatureVector {
    FeatureVector::new(names(n), values).unwrap()
}

fn small_values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-4i32..=4).prop_map(|k| k as f64 * 0.5), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_matches_permutation_oracle((n, values) in game()) {
        let a = shapley_exact(&table(&values, n), 20).unwrap();
        assert_close(a.values(), &permutation_oracle(n, |m| values[m as usize]), 1e-9);
        let e = shapley(&table(&values, n), &EngineOptions::enumerate()).unwrap();
        assert_close(a.values(), e.values(), 1e-12);
        prop_assert!((a.total() - (values[(1 << n) - 1] - values[0])).abs() < 1e-9);
    }

    #[test]
    fn sampled_is_efficient((n, values) in game(), seed in any::<u64>()) {
        let a = shapley_sampled(&table(&values, n), 37, seed).unwrap();
        prop_assert!(a.efficiency_gap() < 1e-9);
    }

    #[test]
    fn linearity_in_the_game((n, u) in game(), w in prop::collection::vec(-10.0f64..10.0, 64), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let w = &w[..1 << n];
        let (tu, tw) = (table(&u, n), table(w, n));
        let mixed = tu.combine(a, &tw, b).unwrap();
        let lhs = shapley_exact(&mixed, 20).unwrap();
        let su = shapley_exact(&tu, 20).unwrap();
        let sw = shapley_exact(&tw, 20).unwrap();
        let rhs: Vec<f64> = su.values().iter().zip(sw.values()).map(|(p, q)| a * p + b * q).collect();
        assert_close(lhs.values(), &rhs, 1e-9);
    }

    #[test]
    fn dummy_and_symmetric_players(n in 2usize..=6, base in prop::collection::vec(-10.0f64..10.0, 64)) {
        // player 0 is a dummy; players n-1 and n-2 are interchangeable
        let v = |m: u64| {
            let m = m & !1;
            let hi = (m >> (n - 1)) & 1;
            let lo = if n >= 3 { (m >> (n - 2)) & 1 } else { 0 };
            let canon = if n >= 3 && hi + lo == 1 { (m & !(1 << (n - 1))) | 1 << (n - 2) } else { m };
            base[canon as usize]
        };
        let t = SetFunctionTable::from_fn(names(n), |m| Some(v(m)));
        let a = shapley_exact(&t, 20).unwrap();
        prop_assert!(a.values()[0].abs() < 1e-12);
        if n >= 3 {
            prop_assert!((a.values()[n - 1] - a.values()[n - 2]).abs() < 1e-9);
        }
    }

    #[test]
    fn bshap_is_efficient(src in polynomial(4), x in small_values(4), b in small_values(4)) {
        let f = Model::expression(&src).unwrap();
        let (x, b) = (vector(4, x), vector(4, b));
        let a = bshap(&f, &x, &b, &EngineOptions::exact()).unwrap();
        prop_assert!((a.total() - (f.eval(&x).unwrap() - f.eval(&b).unwrap())).abs() < 1e-9);
    }

    #[test]
    fn total_expectation(rows in prop::collection::vec((prop::collection::vec(0i32..3, 3), 1u32..5), 1..12), mask in 0u64..8) {
        let n = 3;
        let weights: f64 = rows.iter().map(|r| r.1 as f64).sum();
        let d = DiscreteDistribution::explicit(
            names(n),
            rows.iter().map(|(r, w)| (r.iter().map(|v| *v as f64).collect(), *w as f64 / weights)).collect(),
        ).unwrap();
        let f = Model::expression("x1*x2 - x3^2 + x1").unwrap();
        let mean = d.expectation(&f).unwrap();
        let subset = FeatureSubset::from_coalition(names(n), Coalition::from_mask(n, mask));
        let mut acc = 0.0;
        let mut seen = std::collections::HashSet::new();
        for (atom, _) in d.atoms().unwrap() {
            let key: Vec<u64> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| atom.at(i).to_bits()).collect();
            if !seen.insert(key) {
                continue;
            }
            let table = d.conditioned(&f, &atom).unwrap();
            acc += table.mass(subset.coalition()) * d.conditional_expectation(&f, &atom, &subset).unwrap();
        }
        prop_assert!((acc - mean).abs() < 1e-9);
    }

    #[test]
    fn independent_conditioning_marginalizes(ms in prop::collection::vec(prop::collection::vec(1u32..5, 1..4), 3), mask in 0u64..8, xs in prop::collection::vec(0usize..3, 3)) {
        let marginals: Vec<Vec<(f64, f64)>> = ms
            .iter()
            .map(|w| {
                let t: f64 = w.iter().map(|v| *v as f64).sum();
                w.iter().enumerate().map(|(k, v)| (k as f64, *v as f64 / t)).collect()
            })
            .collect();
        let d = DiscreteDistribution::independent(names(3), marginals.clone()).unwrap();
        let x = vector(3, xs.iter().zip(&ms).map(|(k, w)| (*k % w.len()) as f64).collect());
        let f = Model::expression("x1*x2 + x3*x1 - x2").unwrap();
        let subset = FeatureSubset::from_coalition(names(3), Coalition::from_mask(3, mask));
        let joint = d.conditional_expectation(&f, &x, &subset).unwrap();
        // fix conditioned features, average the rest feature by feature
        let mut acc = 0.0;
        let choices: Vec<Vec<(f64, f64)>> = (0..3)
            .map(|i| if mask >> i & 1 == 1 { vec![(x.at(i), 1.0)] } else { marginals[i].clone() })
            .collect();
        for a in &choices[0] {
            for b in &choices[1] {
                for c in &choices[2] {
                    acc += a.1 * b.1 * c.1 * f.eval(&vector(3, vec![a.0, b.0, c.0])).unwrap();
                }
            }
        }
        prop_assert!((joint - acc).abs() < 1e-9);
    }

    #[test]
    fn rbshap_equals_ces_when_independent(n in 1usize..=4, src in polynomial(4), seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let marginals: Vec<Vec<(f64, f64)>> = (0..n)
            .map(|_| {
                let k = rng.gen_range(1..=3);
                let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
                let t: f64 = w.iter().sum();
                w.iter().enumerate().map(|(j, p)| (j as f64 - 1.0, p / t)).collect()
            })
            .collect();
        let d = DiscreteDistribution::independent(names(n), marginals.clone()).unwrap();
        let x = vector(n, marginals.iter().map(|m| m[rng.gen_range(0..m.len())].0).collect());
        let src = src.replace("x4", "x1").replace("x3", if n >= 3 { "x3" } else { "x1" }).replace("x2", if n >= 2 { "x2" } else { "x1" });
        let f = Model::expression(&src).unwrap();
        let r = rbshap(&f, &x, &d, BaselineDraw::Exact, &EngineOptions::exact()).unwrap();
        let c = ces(&f, &x, &d, &EngineOptions::exact()).unwrap();
        assert_close(r.values(), c.values(), 1e-9);
    }

    #[test]
    fn pms_degenerates_to_bshap(src in polynomial(3), x in small_values(3), b in small_values(3)) {
        let f = Model::expression(&src).unwrap();
        let (x, b) = (vector(3, x), vector(3, b));
        let p = pms(&f, &x, &b, &PossibilityPredicate::Always, &EngineOptions::exact()).unwrap();
        let s = bshap(&f, &x, &b, &EngineOptions::exact()).unwrap();
        assert_close(p.values(), s.values(), 1e-12);
    }

    #[test]
    fn pms_is_efficient(n in 2usize..=5, possible in prop::collection::vec(any::<bool>(), 32), values in prop::collection::vec(-5.0f64..5.0, 32)) {
        let full = (1u64 << n) - 1;
        let t = SetFunctionTable::from_fn(names(n), |m| (m == 0 || m == full || possible[m as usize]).then(|| values[m as usize]));
        let a = pms_game(&t, &EngineOptions::exact()).unwrap();
        prop_assert!((a.total() - (values[full as usize] - values[0])).abs() < 1e-12);
    }

    #[test]
    fn pms_relabeling(possible in prop::collection::vec(any::<bool>(), 8), values in prop::collection::vec(-5.0f64..5.0, 8)) {
        let t = SetFunctionTable::from_fn(names(3), |m| (m == 0 || m == 7 || possible[m as usize]).then(|| values[m as usize]));
        // swap players 0 and 2
        let swap = |m: u64| (m & 2) | (m & 1) << 2 | (m >> 2) & 1;
        let u = SetFunctionTable::from_fn(names(3), |m| t.get(swap(m)));
        let a = pms_game(&t, &EngineOptions::exact()).unwrap();
        let b = pms_game(&u, &EngineOptions::exact()).unwrap();
        let (a, b) = (a.values(), b.values());
        assert_close(&[a[0], a[1], a[2]], &[b[2], b[1], b[0]], 1e-12);
    }

    #[test]
    fn downward_closure(rows in prop::collection::vec(prop::collection::vec(0i32..3, 3), 1..15), x in prop::collection::vec(0i32..3, 3), small in 0u64..8, extra in 0u64..8) {
        let data = Dataset::new(names(3), rows.iter().map(|r| r.iter().map(|v| *v as f64).collect()).collect(), None).unwrap();
        let x = vector(3, x.iter().map(|v| *v as f64).collect());
        let s = FeatureSubset::from_coalition(names(3), Coalition::from_mask(3, small));
        let bigger = FeatureSubset::from_coalition(names(3), Coalition::from_mask(3, small | extra));
        let tol = data.tolerances(manyshap::Closeness::StdFraction(0.3)).unwrap();
        let ts = data.restrict_with(&x, &s, &tol).unwrap();
        let tb = data.restrict_with(&x, &bigger, &tol).unwrap();
        prop_assert!(tb.rows().iter().all(|r| ts.rows().contains(r)));
        prop_assert!(tb.len() <= ts.len());
    }
}

#[test]
fn sampling_error_shrinks_with_more_permutations() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let n = 5;
    let values: Vec<f64> = (0..1 << n).map(|_| rng.gen_range(-10.0..10.0)).collect();
    let t = table(&values, n);
    let exact = shapley_exact(&t, 20).unwrap();
    let median_error = |perms: usize| {
        let mut errs: Vec<f64> = (0..31)
            .map(|seed| {
                let a = shapley_sampled(&t, perms, seed).unwrap();
                let sq: f64 = a.values().iter().zip(exact.values()).map(|(p, q)| (p - q).powi(2)).sum();
                (sq / n as f64).sqrt()
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        errs[errs.len() / 2]
    };
    let errors: Vec<f64> = [50, 100, 200, 400].into_iter().map(median_error).collect();
    assert!(errors.windows(2).all(|w| w[1] <= w[0]), "{errors:?}");
}

#[test]
fn two_point_epsilon_approaches_bshap() {
    let f = Model::expression("x1*x2^2 - 3*x3 + x2*x3").unwrap();
    let x = vector(3, vec![1.5, -2.0, 0.5]);
    let b = vector(3, vec![0.0, 1.0, -1.0]);
    let target = bshap(&f, &x, &b, &EngineOptions::exact()).unwrap();
    let mut last = f64::INFINITY;
    for eps in [1e-2, 1e-3, 1e-4] {
        let d = DiscreteDistribution::two_point_epsilon(&x, &b, eps).unwrap();
        let c = ces(&f, &x, &d, &EngineOptions::exact()).unwrap();
        let dev = c.max_abs_diff(&target).unwrap();
        assert!(dev < last);
        last = dev;
    }
    assert!(last < 1e-2 * target.values().iter().fold(0.0f64, |m, v| m.max(v.abs())));
}

#[test]
fn single_precision_smoke() {
    let f = manyshap::model::Model::<f32>::expression("(x1 + x2)^3").unwrap();
    let x = manyshap::features::FeatureVector::<f32>::from_pairs([("x1", 5.0f32), ("x2", 1.0)]).unwrap();
    let zero = manyshap::features::FeatureVector::<f32>::from_pairs([("x1", 0.0f32), ("x2", 0.0)]).unwrap();
    let a = bshap(&f, &x, &zero, &EngineOptions::exact()).unwrap();
    assert!((a.values()[0] - 170.0).abs() < 1e-3);
    let g = manyshap::ig(&f, &x, &zero, manyshap::IgOptions::default()).unwrap();
    assert!((g.values()[0] - 180.0).abs() < 0.1);
    assert!(a.values().iter().all(|v: &f32| v.is_finite()));
    let t = manyshap::game::SetFunctionTable::<f32>::from_fn(names(2), |m| Some(m as f32));
    assert_eq!(t.players().len(), 2);
}

mod common;

use common::{assert_close, expr, fv, permutation_oracle};
use manyshap::methods::conditional::EmpiricalGame;
use manyshap::{
    bshap, ces, ces_empirical, compositional_bshap, feature_names, fixed_permutation_marginals, ig, micro_shapley,
    rbshap, reduce_to_cost_sharing, shapley_exact, shapley_sampled, BaselineDraw, Coalition, Dataset,
    DiscreteDistribution, EmpiricalOptions, EngineOptions, Error, GradientMode, IgOptions, Model, ReductionOptions,
    SetFunction,
};

fn exact() -> EngineOptions {
    EngineOptions::exact()
}

fn two(name_a: &str, a: f64, name_b: &str, b: f64) -> manyshap::FeatureVector {
    fv(&[(name_a, a), (name_b, b)])
}

#[test]
fn cube_bshap_and_ig() {
    let f = expr("(x1 + x2)^3");
    let x = two("x1", 5.0, "x2", 1.0);
    let zero = two("x1", 0.0, "x2", 0.0);
    let b = bshap(&f, &x, &zero, &exact()).unwrap();
    assert_close(b.values(), &[170.0, 46.0], 1e-9);
    let oracle = permutation_oracle(2, |m| {
        let s = if m & 1 != 0 { 5.0 } else { 0.0 } + if m & 2 != 0 { 1.0 } else { 0.0 };
        s * s * s
    });
    assert_close(b.values(), &oracle, 1e-12);
    let g = ig(&f, &x, &zero, IgOptions::default()).unwrap();
    assert_close(g.values(), &[180.0, 36.0], 1e-3);
    let s = shapley_sampled(&manyshap::methods::BaselineGame::new(&f, &x, &zero).unwrap(), 10_000, 7).unwrap();
    assert!((s.values()[0] - 170.0).abs() < 0.02 * 170.0);
    assert!((s.values()[1] - 46.0).abs() < 0.02 * 46.0);
}

#[test]
fn min_function_methods() {
    let f = expr("min(x1, x2)");
    let x = two("x1", 5.0, "x2", 1.0);
    let zero = two("x1", 0.0, "x2", 0.0);
    assert_close(ig(&f, &x, &zero, IgOptions::default()).unwrap().values(), &[0.0, 1.0], 1e-9);
    assert_close(bshap(&f, &x, &zero, &exact()).unwrap().values(), &[0.5, 0.5], 1e-12);
}

#[test]
fn bshap_trivial_cases() {
    let f = expr("x1 * x2 + x3");
    let x = fv(&[("x1", 2.0), ("x2", 3.0), ("x3", 4.0)]);
    assert_close(bshap(&f, &x, &x, &exact()).unwrap().values(), &[0.0; 3], 0.0);
    let other = fv(&[("x1", 1.0), ("zz", 0.0), ("x3", 4.0)]);
    assert!(matches!(bshap(&f, &x, &other, &exact()), Err(Error::Argument(_))));
    let reordered = fv(&[("x3", 0.0), ("x2", 0.0), ("x1", 0.0)]);
    let a = bshap(&f, &x, &reordered, &exact()).unwrap();
    assert!((a.total() - 10.0).abs() < 1e-12);
}

#[test]
fn rbshap_marginal_remark() {
    let names = feature_names(["x1", "x2"]);
    let d = DiscreteDistribution::explicit(names, vec![(vec![0.0, 0.0], 0.5), (vec![1.0, 1.0], 0.5)]).unwrap();
    let f = expr("x1 * x2");
    let x = two("x1", 1.0, "x2", 1.0);
    let a = rbshap(&f, &x, &d, BaselineDraw::Exact, &exact()).unwrap();
    assert!((a.total() - 0.5).abs() < 1e-12);
    let pi = rbshap(&f, &x, &d.product_of_marginals().unwrap(), BaselineDraw::Exact, &exact()).unwrap();
    assert!((pi.total() - 0.75).abs() < 1e-12);
    let sampled = rbshap(&f, &x, &d, BaselineDraw::Sampled { baselines: 50, seed: 3 }, &exact()).unwrap();
    assert_eq!(sampled, rbshap(&f, &x, &d, BaselineDraw::Sampled { baselines: 50, seed: 3 }, &exact()).unwrap());
}

#[test]
fn rbshap_point_mass_is_bshap() {
    let f = expr("x1^2 * x2 - x2");
    let x = two("x1", 3.0, "x2", -1.0);
    let b = two("x1", 0.5, "x2", 2.0);
    let r = rbshap(&f, &x, &DiscreteDistribution::point(&b), BaselineDraw::Exact, &exact()).unwrap();
    assert_close(r.values(), bshap(&f, &x, &b, &exact()).unwrap().values(), 1e-12);
}

fn dummy_failure_distribution(eps: f64) -> DiscreteDistribution {
    DiscreteDistribution::explicit(
        feature_names(["x", "y"]),
        vec![(vec![5.0, 5.0], eps), (vec![1.0, 1.0], (1.0 - eps) / 2.0), (vec![1.0, 2.0], (1.0 - eps) / 2.0)],
    )
    .unwrap()
}

#[test]
fn ces_dummy_failure() {
    let eps = 1e-6;
    let a = ces(&expr("y^2"), &two("x", 5.0, "y", 5.0), &dummy_failure_distribution(eps), &exact()).unwrap();
    let expect = (25.0 - (25.0 * eps + 2.5 * (1.0 - eps))) / 2.0;
    assert_close(a.values(), &[expect, expect], 1e-12);
    assert_close(a.values(), &[11.25, 11.25], 1e-3);
}

#[test]
fn ces_symmetry_failure() {
    let (p, q) = (0.3, 0.6);
    let d = DiscreteDistribution::independent(
        feature_names(["x", "y"]),
        vec![vec![(1.0, 1.0 - p), (2.0, p)], vec![(1.0, 1.0 - q), (2.0, q)]],
    )
    .unwrap();
    let a = ces(&expr("x + y"), &two("x", 2.0, "y", 2.0), &d, &exact()).unwrap();
    assert_close(a.values(), &[0.7, 0.4], 1e-12);
}

#[test]
fn ces_strong_monotonicity_failure() {
    let d = DiscreteDistribution::independent(
        feature_names(["x", "y"]),
        vec![vec![(1.0, 1.0 / 3.0), (2.0, 1.0 / 3.0), (3.0, 1.0 / 3.0)], vec![(1.0, 0.5), (2.0, 0.5)]],
    )
    .unwrap();
    let x = two("x", 2.0, "y", 2.0);
    let f1 = ces(&expr("sqrt(x) + y"), &x, &d, &exact()).unwrap();
    let expect = (2.0 * 2f64.sqrt() - 1.0 - 3f64.sqrt()) / 3.0;
    assert!((f1.values()[0] - expect).abs() < 1e-9);
    let f2 = ces(&expr("x + y"), &x, &d, &exact()).unwrap();
    assert!(f2.values()[0].abs() < 1e-12);
}

fn demand_failure_data() -> Dataset {
    Dataset::new(feature_names(["x", "y"]), vec![vec![1.0, 1.0], vec![1.0, 0.0], vec![0.0, 1.0]], None).unwrap()
}

#[test]
fn ces_empirical_demand_monotonicity_failure() {
    let f = expr("100*x + y");
    let low =
        ces_empirical(&f, &two("x", 1.0, "y", 0.0), &demand_failure_data(), EmpiricalOptions::default(), &exact())
            .unwrap();
    let high =
        ces_empirical(&f, &two("x", 1.0, "y", 1.0), &demand_failure_data(), EmpiricalOptions::default(), &exact())
            .unwrap();
    // v over the three rows, written out per subset
    let at = |y: f64| {
        let fy = |r: (f64, f64)| 100.0 * r.0 + r.1;
        let rows = [(1.0, 1.0), (1.0, 0.0), (0.0, 1.0)];
        move |m: u64| {
            let keep: Vec<f64> = rows
                .iter()
                .filter(|r| (m & 1 == 0 || r.0 == 1.0) && (m & 2 == 0 || r.1 == y))
                .map(|r| fy(*r))
                .collect();
            keep.iter().sum::<f64>() / keep.len() as f64
        }
    };
    assert_close(low.values(), &permutation_oracle(2, at(0.0)), 1e-12);
    assert_close(high.values(), &permutation_oracle(2, at(1.0)), 1e-12);
    assert!((low.values()[1] - 16.083333333333333).abs() < 1e-9);
    assert!((high.values()[1] + 7.916666666666667).abs() < 1e-9);
}

#[test]
fn ces_empirical_matches_ces_on_empirical_distribution() {
    let data = demand_failure_data();
    let f = expr("100*x + y");
    let x = two("x", 1.0, "y", 0.0);
    let a = ces_empirical(&f, &x, &data, EmpiricalOptions::default(), &exact()).unwrap();
    let b = ces(&f, &x, &DiscreteDistribution::empirical(&data).unwrap(), &exact()).unwrap();
    assert_close(a.values(), b.values(), 1e-12);
}

#[test]
fn unique_explicand_splits_equally() {
    let data = demand_failure_data();
    let f = expr("3*x - y");
    let x = two("x", 0.37, "y", 0.91);
    let game = EmpiricalGame::new(&f, &x, &data, EmpiricalOptions::default()).unwrap();
    assert!(game.appended_explicand());
    let a = ces_empirical(&f, &x, &data, EmpiricalOptions::default(), &exact()).unwrap();
    assert_eq!(a.values()[0], a.values()[1]);
    let no_append = EmpiricalOptions { append_explicand: false, ..EmpiricalOptions::default() };
    match ces_empirical(&f, &x, &data, no_append, &exact()) {
        Err(Error::Conditioning { subset }) => assert!(subset.starts_with('{')),
        other => panic!("expected conditioning error, got {other:?}"),
    }
}

#[test]
fn smoothing_widens_agreement() {
    let data = Dataset::new(feature_names(["a", "b"]), (0..20).map(|k| vec![k as f64, (k % 4) as f64]).collect(), None)
        .unwrap();
    let f = expr("a + 2*b");
    let x = two("a", 7.2, "b", 1.0);
    let exact_game = EmpiricalGame::new(&f, &x, &data, EmpiricalOptions::default()).unwrap();
    let smooth = EmpiricalGame::new(&f, &x, &data, EmpiricalOptions::smoothed(0.2)).unwrap();
    let only_a = Coalition::from_members(2, [0]);
    assert_eq!(exact_game.support(&only_a), 1);
    assert!(smooth.support(&only_a) > 1);
}

#[test]
fn ig_linear_exact_and_capability_error() {
    let f = Model::linear(1.0, [("a", 2.0), ("b", -3.0)]).unwrap();
    let x = two("a", 1.0, "b", 2.0);
    let b = two("a", -1.0, "b", 0.5);
    let g = ig(&f, &x, &b, IgOptions { steps: 7, gradient: GradientMode::Analytic }).unwrap();
    assert_close(g.values(), &[4.0, -4.5], 1e-12);
    let tree = Model::tree_ensemble(vec![manyshap::model::Tree::stump("a", 0.0, 0.0, 1.0)], None).unwrap();
    assert!(matches!(ig(&tree, &x, &b, IgOptions::default()), Err(Error::Capability(_))));
}

#[test]
fn micro_shapley_cases() {
    let f = expr("(x1 + x2)^3 - x1*x2");
    let x = two("x1", 2.0, "x2", -1.5);
    let b = two("x1", 0.5, "x2", 0.25);
    let one = micro_shapley(&f, &x, &b, 1, &exact()).unwrap();
    assert_close(one.values(), bshap(&f, &x, &b, &exact()).unwrap().values(), 1e-12);
    let lin = Model::linear(0.0, [("x1", 2.0), ("x2", 5.0)]).unwrap();
    for m in [1, 3, 16] {
        let a = micro_shapley(&lin, &x, &b, m, &exact()).unwrap();
        assert_close(a.values(), &[3.0, -8.75], 1e-9);
    }
    // the engine path and the lattice walk agree where both apply
    let cube = expr("(x1 + x2)^3");
    let x = two("x1", 5.0, "x2", 1.0);
    let zero = two("x1", 0.0, "x2", 0.0);
    let via_engine = micro_shapley(&cube, &x, &zero, 4, &exact()).unwrap();
    let small_cap = EngineOptions { exact_cap: 4, ..exact() };
    let via_lattice = micro_shapley(&cube, &x, &zero, 4, &small_cap).unwrap();
    assert_close(via_engine.values(), via_lattice.values(), 1e-9);
    let fine = micro_shapley(&cube, &x, &zero, 64, &exact()).unwrap();
    assert_close(fine.values(), &[180.0, 36.0], 0.01 * 180.0);
    let sampled = micro_shapley(&cube, &x, &zero, 8, &EngineOptions::sampled(2000, 5)).unwrap();
    assert!((sampled.total() - 216.0).abs() < 1e-9);
}

#[test]
fn reduction_examples() {
    let f = Model::linear(0.0, [("x1", -1.0), ("x2", 1.0)]).unwrap();
    let x = two("x1", 1.0, "x2", 1.0);
    let zero = two("x1", 0.0, "x2", 0.0);
    let r = reduce_to_cost_sharing(&f, &x, &zero, &ReductionOptions::default()).unwrap();
    assert_eq!(r.lower_bound, -1.0);
    for probe in [two("x1", 0.3, "x2", 0.8), two("x1", 1.0, "x2", 0.0)] {
        assert!((r.f2.eval(&probe).unwrap() - (probe.at(0) + probe.at(1))).abs() < 1e-12);
        assert!((r.f1.eval(&probe).unwrap() - 2.0 * probe.at(1)).abs() < 1e-12);
    }
    let g = expr("100*x + y");
    let r =
        reduce_to_cost_sharing(&g, &two("x", 1.0, "y", 1.0), &two("x", 0.0, "y", 0.0), &ReductionOptions::default())
            .unwrap();
    assert!((r.lower_bound - 1.0).abs() < 1e-9);
    assert_eq!(r.f2.eval(&two("x", 1.0, "y", 1.0)).unwrap(), 0.0);
}

#[test]
fn reduction_round_trip_on_a_nonmonotone_expression() {
    let f = expr("x1*x2 - x3^2 + 2*x1");
    let x = fv(&[("x1", -1.0), ("x2", 2.0), ("x3", 0.5)]);
    let b = fv(&[("x1", 1.0), ("x2", -1.0), ("x3", 1.5)]);
    let r = reduce_to_cost_sharing(&f, &x, &b, &ReductionOptions::default()).unwrap();
    assert!(r.explicand.values().iter().all(|v| *v >= 0.0));
    assert_close(r.transform(&b).unwrap().values(), &[0.0; 3], 1e-12);
    let direct = bshap(&f, &x, &b, &exact()).unwrap();
    let one = bshap(&r.f1, &r.explicand, &r.baseline(), &exact()).unwrap();
    let two_ = bshap(&r.f2, &r.explicand, &r.baseline(), &exact()).unwrap();
    let diff: Vec<f64> = one.values().iter().zip(two_.values()).map(|(a, b)| a - b).collect();
    assert_close(direct.values(), &diff, 1e-9);
}

#[test]
fn compositional_orders() {
    let x = fv(&[("x1", 1.0), ("x2", 1.0), ("x3", 1.0)]);
    let zero = fv(&[("x1", 0.0), ("x2", 0.0), ("x3", 0.0)]);
    let left = Model::layered(expr("h * x3"), [("h", expr("x1 * x2")), ("x3", expr("x3"))]).unwrap();
    let right = Model::layered(expr("x1 * h"), [("x1", expr("x1")), ("h", expr("x2 * x3"))]).unwrap();
    let a = compositional_bshap(&left, &x, &zero, &exact()).unwrap();
    assert_close(a.values(), &[0.25, 0.25, 0.5], 1e-15);
    let b = compositional_bshap(&right, &x, &zero, &exact()).unwrap();
    assert_close(b.values(), &[0.5, 0.25, 0.25], 1e-15);
    let end_to_end = bshap(&left, &x, &zero, &exact()).unwrap();
    assert_close(end_to_end.values(), &[1.0 / 3.0; 3], 1e-12);
    let passthrough =
        Model::layered(expr("x1 * x2 + x3"), [("x1", expr("x1")), ("x2", expr("x2")), ("x3", expr("x3"))]).unwrap();
    let flat = expr("x1 * x2 + x3");
    let x = fv(&[("x1", 2.0), ("x2", -1.0), ("x3", 3.0)]);
    assert_close(
        compositional_bshap(&passthrough, &x, &zero, &exact()).unwrap().values(),
        bshap(&flat, &x, &zero, &exact()).unwrap().values(),
        1e-12,
    );
    assert!(matches!(compositional_bshap(&flat, &x, &zero, &exact()), Err(Error::Argument(_))));
}

#[test]
fn young_fixed_permutation() {
    let eps = 1e-3;
    let d = DiscreteDistribution::independent(
        feature_names(["x1", "x2", "x3"]),
        vec![vec![(0.0, 1.0 - eps), (1.0, eps)]; 3],
    )
    .unwrap();
    let f = expr("x1 * x2 * x3");
    let x = fv(&[("x1", 1.0), ("x2", 1.0), ("x3", 1.0)]);
    let game = manyshap::methods::ConditionalGame::new(&f, &x, &d).unwrap();
    let fixed = fixed_permutation_marginals(&game, &["x1", "x2", "x3"]).unwrap();
    assert_close(fixed.values(), &[0.0, 0.0, 1.0], 5e-3);
    assert_close(fixed.values(), &[eps * eps - eps.powi(3), eps - eps * eps, 1.0 - eps], 1e-12);
    let reversed = fixed_permutation_marginals(&game, &["x3", "x2", "x1"]).unwrap();
    assert_close(reversed.values(), &[1.0, 0.0, 0.0], 5e-3);
    let sym = shapley_exact(&game, 20).unwrap();
    assert_close(sym.values(), &[(1.0 - eps.powi(3)) / 3.0; 3], 1e-12);
    assert_eq!(game.players().len(), 3);
}

//! Every worked example as a named, deterministic scenario whose computed
//! values are compared against the golden file.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use manyshap::methods::conditional::EmpiricalGame;
use manyshap::methods::{BaselineGame, ConditionalGame};
use manyshap::pms::PossibleGame;
use manyshap::shapley::shapley_from_table;
use manyshap::{
    bshap, ces, ces_empirical, completed_set_function, compositional_bshap, estimate_marginal, feature_names,
    fixed_permutation_marginals, ig, micro_shapley, pms, rbshap, reduce_to_cost_sharing, shapley_exact,
    shapley_sampled, Attribution, BaselineDraw, Coalition, DiscreteDistribution, EmpiricalOptions, EngineOptions,
    Error, FeatureVector, IgOptions, PossibilityPredicate, ReductionOptions, Result, SetFunction,
};

use crate::axioms::{
    verify_dominance, verify_dummy, verify_nondecreasing, verify_nondecreasing_grid, verify_symmetric,
};
use crate::golden::{GoldenFile, Source};
use crate::instances::*;
use crate::oracle;

pub const SCENARIOS: [&str; 19] = [
    "dummy-failure",
    "linearity-failure",
    "demand-monotonicity-failure",
    "symmetry-failure",
    "strong-monotonicity-failure",
    "marginal-sum-remark",
    "min-remark",
    "cube-remark",
    "young-counterexample",
    "deepshap-order",
    "kahneman",
    "pms-impossible-everywhere",
    "pms-boolean-3",
    "pms-boolean-n",
    "sparsity-equal-split",
    "bshap-as-ces-epsilon",
    "rbshap-equals-ces-independent",
    "micro-convergence",
    "reduction-roundtrip",
];

pub const CUBE_SAMPLES: (usize, u64) = (10_000, 7);
pub const EPSILONS: [f64; 3] = [1e-2, 1e-3, 1e-4];
pub const MICRO_STEPS: [usize; 4] = [1, 4, 16, 64];

/// Values a scenario computed, in the order it computed them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Computed {
    pub values: Vec<(String, f64)>,
    pub notes: Vec<String>,
}

impl Computed {
    fn put(&mut self, key: impl Into<String>, value: f64) {
        self.values.push((key.into(), value));
    }

    fn flag(&mut self, key: impl Into<String>, value: bool) {
        self.put(key, if value { 1.0 } else { 0.0 });
    }

    fn scores(&mut self, prefix: &str, a: &Attribution) {
        for (n, v) in a.names().iter().zip(a.values()) {
            self.put(format!("{prefix}.{n}"), *v);
        }
    }

    fn total(&mut self, prefix: &str, a: &Attribution) {
        self.put(format!("{prefix}.total"), a.total());
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub key: String,
    pub computed: Option<f64>,
    pub expected: f64,
    pub tolerance: f64,
    pub source: Source,
    pub gating: bool,
    pub deviation: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub name: String,
    pub checks: Vec<Check>,
    /// Computed values with no expectation attached.
    pub informational: Vec<(String, f64)>,
    pub notes: Vec<String>,
}

impl ScenarioResult {
    /// All gating expectations hold.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass || !c.gating)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.gating && !c.pass)
    }

    pub fn value(&self, key: &str) -> Option<f64> {
        self.checks
            .iter()
            .find(|c| c.key == key)
            .and_then(|c| c.computed)
            .or_else(|| self.informational.iter().find(|(k, _)| k == key).map(|(_, v)| *v))
    }
}

pub fn lookup(name: &str) -> Result<&'static str> {
    SCENARIOS
        .iter()
        .copied()
        .find(|s| *s == name)
        .ok_or_else(|| Error::LookupMiss(format!("unknown scenario `{name}`; registered: {}", SCENARIOS.join(", "))))
}

pub fn run_scenario(name: &str, golden: &GoldenFile) -> Result<ScenarioResult> {
    let name = lookup(name)?;
    let computed = compute(name)?;
    let mut checks = Vec::new();
    for e in golden.for_scenario(name) {
        let value = computed.get(&e.key);
        let deviation = value.map(|v| (v - e.expected).abs());
        checks.push(Check {
            key: e.key.clone(),
            computed: value,
            expected: e.expected,
            tolerance: e.tolerance,
            source: e.source,
            gating: e.gating,
            deviation,
            pass: deviation.is_some_and(|d| d <= e.tolerance),
        });
    }
    let informational = computed.values.iter().filter(|(k, _)| !checks.iter().any(|c| &c.key == k)).cloned().collect();
    Ok(ScenarioResult { name: name.to_string(), checks, informational, notes: computed.notes })
}

/// Every registered scenario, run in parallel and returned in registry order.
pub fn run_all(golden: &GoldenFile) -> Result<Vec<ScenarioResult>> {
    SCENARIOS.par_iter().map(|n| run_scenario(n, golden)).collect()
}

/// Plain-text table of every check.
pub fn render_text(results: &[ScenarioResult]) -> String {
    let mut out = String::new();
    for r in results {
        let status = if r.passed() { "ok" } else { "FAILED" };
        let _ = writeln!(out, "== {} [{status}]", r.name);
        let _ = writeln!(
            out,
            "  {:<34} {:>16} {:>16} {:>10} {:<12} result",
            "key", "computed", "expected", "tol", "source"
        );
        for c in &r.checks {
            let computed = c.computed.map_or("missing".to_string(), |v| format!("{v:.10}"));
            let result = match (c.pass, c.gating) {
                (true, _) => "pass",
                (false, true) => "FAIL",
                (false, false) => "differs (advisory)",
            };
            let source = format!("{:?}", c.source).to_lowercase();
            let _ = writeln!(
                out,
                "  {:<34} {:>16} {:>16.10} {:>10.1e} {:<12} {result}",
                c.key, computed, c.expected, c.tolerance, source
            );
        }
        for (k, v) in &r.informational {
            let _ = writeln!(out, "  {k:<34} {v:>16.10}");
        }
        for n in &r.notes {
            let _ = writeln!(out, "  note: {n}");
        }
    }
    out
}

pub fn compute(name: &str) -> Result<Computed> {
    let mut c = Computed::default();
    let exact = EngineOptions::exact();
    match lookup(name)? {
        "dummy-failure" => {
            let d = dummy_failure_distribution(DUMMY_FAILURE_EPSILON)?;
            let (f, x) = (expr("y^2"), dummy_failure_explicand());
            let cols = vec![vec![1.0, 5.0], vec![1.0, 2.0, 5.0]];
            c.flag("antecedent.x_is_dummy", verify_dummy(&f, &x, "x", &cols)?);
            c.scores("ces", &ces(&f, &x, &d, &exact)?);
            c.scores("bshap", &bshap(&f, &x, &vector(&[("x", 1.0), ("y", 1.0)]), &exact)?);
        }
        "linearity-failure" => {
            let d = dummy_failure_distribution(DUMMY_FAILURE_EPSILON)?;
            let x = dummy_failure_explicand();
            let joint = ces(&expr("y^2 + x"), &x, &d, &exact)?;
            c.scores("joint", &joint);
            let y = feature_names(["y"]);
            let f1 = ces(&expr("y^2"), &x.reorder(&y)?, &d.marginalize(&y)?, &exact)?;
            let only_x = feature_names(["x"]);
            let f2 = ces(&expr("x"), &x.reorder(&only_x)?, &d.marginalize(&only_x)?, &exact)?;
            c.put("f1_alone.y", f1.score("y")?);
            c.put("f2_alone.x", f2.score("x")?);
            c.put("gap.y", f1.score("y")? - joint.score("y")?);
            c.notes.push("each component is attributed over the single feature it reads".into());
        }
        "demand-monotonicity-failure" => {
            let (data, f) = (demand_failure_data(), expr("100*x + y"));
            let cols = vec![vec![0.0, 1.0], vec![0.0, 1.0]];
            c.flag("antecedent.y_nondecreasing", verify_nondecreasing(&f, &dummy_failure_explicand(), "y", &cols)?);
            for (label, y) in [("low", 0.0), ("high", 1.0)] {
                let x = vector(&[("x", 1.0), ("y", y)]);
                let a = ces_empirical(&f, &x, &data, EmpiricalOptions::default(), &exact)?;
                c.scores(&format!("ces_empirical_{label}"), &a);
                c.put(format!("sign.ces_empirical_{label}.y"), a.score("y")?.signum());
            }
        }
        "symmetry-failure" => {
            let (p, q) = SYMMETRY_PQ;
            let (f, x) = (expr("x + y"), vector(&[("x", 2.0), ("y", 2.0)]));
            c.flag("antecedent.symmetric", verify_symmetric(&f, &x, "x", "y", &[vec![1.0, 2.0], vec![1.0, 2.0]])?);
            c.scores("ces", &ces(&f, &x, &symmetry_failure_distribution(p, q)?, &exact)?);
        }
        "strong-monotonicity-failure" => {
            let d = strong_failure_distribution()?;
            let x = vector(&[("x", 2.0), ("y", 2.0)]);
            let (f1, f2) = (expr("sqrt(x) + y"), expr("x + y"));
            let region = (vec![1.0, 1.0], vec![3.0, 2.0]);
            c.flag("antecedent.dominates", verify_dominance(&f2, &f1, &x, "x", &region)?);
            c.scores("f1", &ces(&f1, &x, &d, &exact)?);
            c.scores("f2", &ces(&f2, &x, &d, &exact)?);
            c.notes.push("the second model has the larger x-derivative everywhere yet the smaller x-score".into());
        }
        "marginal-sum-remark" => {
            let names = feature_names(["x1", "x2"]);
            let d = DiscreteDistribution::explicit(names, vec![(vec![0.0, 0.0], 0.5), (vec![1.0, 1.0], 0.5)])?;
            let (f, x) = (expr("x1 * x2"), vector(&[("x1", 1.0), ("x2", 1.0)]));
            let joint = rbshap(&f, &x, &d, BaselineDraw::Exact, &exact)?;
            let product = rbshap(&f, &x, &d.product_of_marginals()?, BaselineDraw::Exact, &exact)?;
            c.scores("rbshap_joint", &joint);
            c.total("rbshap_joint", &joint);
            c.scores("rbshap_product", &product);
            c.total("rbshap_product", &product);
        }
        "min-remark" => {
            let f = expr("min(x1, x2)");
            let x = vector(&[("x1", 5.0), ("x2", 1.0)]);
            let zero = constant(&["x1", "x2"], 0.0);
            c.scores("ig", &ig(&f, &x, &zero, IgOptions::default())?);
            c.scores("bshap", &bshap(&f, &x, &zero, &exact)?);
            // coalition worth is the min over its members' explicand values
            let restricted = manyshap::FnSetFunction::new(x.names().clone(), |s: &Coalition| {
                Ok(Some(s.members().map(|i| x.at(i)).reduce(f64::min).unwrap_or(0.0)))
            });
            c.scores("restricted", &shapley_exact(&restricted, 20)?);
            c.notes.push("baseline-mixed and restricted-game set functions are both reported".into());
        }
        "cube-remark" => {
            let f = expr("(x1 + x2)^3");
            let x = vector(&[("x1", 5.0), ("x2", 1.0)]);
            let zero = constant(&["x1", "x2"], 0.0);
            c.scores("ig", &ig(&f, &x, &zero, IgOptions::default())?);
            c.scores("bshap", &bshap(&f, &x, &zero, &exact)?);
            let (perms, seed) = CUBE_SAMPLES;
            c.scores("sampled_bshap", &shapley_sampled(&BaselineGame::new(&f, &x, &zero)?, perms, seed)?);
        }
        "young-counterexample" => {
            let d = young(YOUNG_EPSILON)?;
            let f = expr("x1 * x2 * x3");
            let x = numbered_vector(&[1.0; 3]);
            let game = ConditionalGame::new(&f, &x, &d)?;
            c.scores("fixed", &fixed_permutation_marginals(&game, &["x1", "x2", "x3"])?);
            c.scores("reversed", &fixed_permutation_marginals(&game, &["x3", "x2", "x1"])?);
            c.scores("shapley", &shapley_exact(&game, 20)?);
        }
        "deepshap-order" => {
            let x = numbered_vector(&[1.0; 3]);
            let zero = numbered_vector(&[0.0; 3]);
            c.scores("left", &compositional_bshap(&deepshap_left()?, &x, &zero, &exact)?);
            c.scores("right", &compositional_bshap(&deepshap_right()?, &x, &zero, &exact)?);
            c.scores("end_to_end", &bshap(&deepshap_left()?, &x, &zero, &exact)?);
        }
        "kahneman" => {
            let (e1, e2) = KAHNEMAN_EPSILONS;
            let x = kahneman_explicand();
            let views = [
                ("patient", kahneman_pain(), kahneman_household(e1, e2)?),
                ("spouse", kahneman_spouse_pain(), kahneman_household(e1, e2)?),
                ("doctor", kahneman_pain(), kahneman_doctor(e1, e2)?),
            ];
            for (who, f, d) in views {
                let a = ces(&f, &x, &d, &exact)?;
                c.scores(who, &a);
                let top = (0..a.values().len())
                    .max_by(|&i, &j| a.values()[i].abs().total_cmp(&a.values()[j].abs()))
                    .expect("three features");
                c.put(format!("argmax.{who}"), top as f64);
                c.notes.push(format!("{who} blames {}", a.names()[top]));
            }
        }
        "pms-impossible-everywhere" => {
            for n in 2..=4 {
                let (f, xs, bs) = oracle::everywhere_instance(n);
                let (x, b) = (numbered_vector(&xs), numbered_vector(&bs));
                let ends = PossibilityPredicate::allowed_rows(vec![x.clone(), b.clone()]);
                c.scores(&format!("n{n}"), &pms(&f, &x, &b, &ends, &exact)?);
                if n == 2 {
                    let game = PossibleGame::new(&f, &x, &b, &ends)?;
                    c.put(
                        "estimate.n2",
                        estimate_marginal(&Coalition::empty(2), &Coalition::from_members(2, [0]), &game)?,
                    );
                    let completed = completed_set_function(&game)?;
                    c.put("completion.n2.x1", completed.get(0b01).expect("total"));
                    c.put("completion.n2.x2", completed.get(0b10).expect("total"));
                }
                if n == 3 {
                    let always = pms(&f, &x, &b, &PossibilityPredicate::Always, &exact)?;
                    c.put("always_possible.max_diff", always.max_abs_diff(&bshap(&f, &x, &b, &exact)?)?);
                }
            }
        }
        "pms-boolean-3" => boolean_case(&mut c, 3, "!(x1 == 0 && x2 == 1)")?,
        "pms-boolean-n" => boolean_case(&mut c, 4, "x1 == x2")?,
        "sparsity-equal-split" => {
            let (f, rows, xs) = oracle::sparsity_instance();
            let data = manyshap::Dataset::new(feature_names(["a", "b", "c"]), rows, None)?;
            let x = FeatureVector::new(data.names().clone(), xs)?;
            let game = EmpiricalGame::new(&f, &x, &data, EmpiricalOptions::default())?;
            c.flag("appended", game.appended_explicand());
            let a = ces_empirical(&f, &x, &data, EmpiricalOptions::default(), &exact)?;
            c.scores("ces_empirical", &a);
            let (lo, hi) =
                a.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
            c.put("spread", hi - lo);
        }
        "bshap-as-ces-epsilon" => {
            let (f, xs, bs) = oracle::epsilon_instance();
            let (x, b) = (numbered_vector(&xs), numbered_vector(&bs));
            let reference = bshap(&f, &x, &b, &exact)?;
            c.scores("bshap", &reference);
            let scale = reference.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut previous = f64::INFINITY;
            let mut shrinking = true;
            for eps in EPSILONS {
                let a = ces(&f, &x, &DiscreteDistribution::two_point_epsilon(&x, &b, eps)?, &exact)?;
                let dev = a.max_abs_diff(&reference)? / scale;
                c.put(format!("relative_deviation@{eps:e}"), dev);
                shrinking &= dev < previous;
                previous = dev;
            }
            c.flag("shrinking", shrinking);
        }
        "rbshap-equals-ces-independent" => {
            let (f, d, xs) = oracle::independent_instance();
            let x = numbered_vector(&xs);
            let r = rbshap(&f, &x, &d, BaselineDraw::Exact, &exact)?;
            let e = ces(&f, &x, &d, &exact)?;
            c.scores("rbshap", &r);
            c.scores("ces", &e);
            c.put("max_diff", r.max_abs_diff(&e)?);
        }
        "micro-convergence" => {
            let f = expr("(x1 + x2)^3");
            let x = vector(&[("x1", 5.0), ("x2", 1.0)]);
            let zero = constant(&["x1", "x2"], 0.0);
            let path = ig(&f, &x, &zero, IgOptions::default())?;
            let scale = path.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut previous = f64::INFINITY;
            let mut decreasing = true;
            for m in MICRO_STEPS {
                let a = micro_shapley(&f, &x, &zero, m, &exact)?;
                if m == 4 {
                    c.scores("micro4", &a);
                }
                let err = a.max_abs_diff(&path)?;
                c.put(format!("error@{m}"), err);
                decreasing &= err < previous;
                previous = err;
            }
            c.flag("strictly_decreasing", decreasing);
            c.put("relative_error@64", previous / scale);
        }
        "reduction-roundtrip" => {
            let (f, xs, bs) = oracle::reduction_instance();
            let (x, b) = (numbered_vector(&xs), numbered_vector(&bs));
            let direct = bshap(&f, &x, &b, &exact)?;
            c.scores("bshap", &direct);
            let pair = reduce_to_cost_sharing(&f, &x, &b, &ReductionOptions::default())?;
            let zero = pair.baseline();
            let one = bshap(&pair.f1, &pair.explicand, &zero, &exact)?;
            let two = bshap(&pair.f2, &pair.explicand, &zero, &exact)?;
            let residual = (0..x.len())
                .map(|i| (direct.values()[i] - (one.values()[i] - two.values()[i])).abs())
                .fold(0.0, f64::max);
            c.put("residual", residual);
            c.put("lower_bound", pair.lower_bound);
            c.flag("f1_nondecreasing", verify_nondecreasing_grid(&pair.f1, &pair.explicand)?);
            c.flag("f2_nondecreasing", verify_nondecreasing_grid(&pair.f2, &pair.explicand)?);
            c.flag("baseline_at_zero", pair.transform(&b)?.values().iter().all(|v| v.abs() < 1e-12));
        }
        _ => unreachable!("registry and dispatch disagree"),
    }
    Ok(c)
}

fn boolean_case(c: &mut Computed, n: usize, rule: &str) -> Result<()> {
    let exact = EngineOptions::exact();
    let (f, xs, bs) = oracle::boolean_instance(n);
    let (x, b) = (numbered_vector(&xs), numbered_vector(&bs));
    let predicate = PossibilityPredicate::expression(rule)?;
    let a = pms(&f, &x, &b, &predicate, &exact)?;
    c.scores("pms", &a);
    c.put("efficiency_gap", a.efficiency_gap());
    let game = PossibleGame::new(&f, &x, &b, &predicate)?;
    let completed = shapley_from_table(&completed_set_function(&game)?)?;
    c.scores("completed", &completed);
    let diff = a.max_abs_diff(&completed)?;
    c.put("completion_diff", diff);
    c.notes.push(if diff <= 1e-12 {
        "possible-marginals scores equal the Shapley value of the completed set function".into()
    } else {
        format!("possible-marginals scores differ from the completed set function's Shapley value by {diff:.6}")
    });
    let impossible =
        (0..1u64 << n).filter(|m| game.value(&Coalition::from_mask(n, *m)).is_ok_and(|v| v.is_none())).count();
    c.put("impossible_coalitions", impossible as f64);
    Ok(())
}

//! Brute-force reference values. Nothing here touches the Shapley engine,
//! the set-function types or the conditioning code: every value is an
//! average over all `|N|!` orderings of marginals computed from scratch.

use manyshap::{FeatureVector, Model};

use crate::golden::{GoldenEntry, Source};
use crate::instances::{self, *};

/// Every ordering of `0..n` (Heap's algorithm).
pub fn orderings(n: usize) -> Vec<Vec<usize>> {
    let mut p: Vec<usize> = (0..n).collect();
    let mut out = vec![p.clone()];
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                p.swap(0, i);
            } else {
                p.swap(c[i], i);
            }
            out.push(p.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Mean marginal vector over all orderings of `v` given on membership flags.
pub fn permutation_average(n: usize, v: &dyn Fn(&[bool]) -> f64) -> Vec<f64> {
    let all = orderings(n);
    let mut scores = vec![0.0; n];
    for order in &all {
        let mut present = vec![false; n];
        let mut before = v(&present);
        for &i in order {
            present[i] = true;
            let after = v(&present);
            scores[i] += after - before;
            before = after;
        }
    }
    scores.iter().map(|s| s / all.len() as f64).collect()
}

fn eval(f: &Model, names: &[String], values: Vec<f64>) -> f64 {
    let x = FeatureVector::new(names.to_vec().into(), values).expect("finite");
    f.eval(&x).expect("model evaluates")
}

fn mixed(x: &[f64], b: &[f64], present: &[bool]) -> Vec<f64> {
    (0..x.len()).map(|i| if present[i] { x[i] } else { b[i] }).collect()
}

pub fn baseline_shapley(f: &Model, names: &[String], x: &[f64], b: &[f64]) -> Vec<f64> {
    permutation_average(x.len(), &|s| eval(f, names, mixed(x, b, s)))
}

/// `E[f | agree with x on S]` by scanning the weighted rows.
pub fn conditional_value(f: &Model, names: &[String], rows: &[(Vec<f64>, f64)], x: &[f64], present: &[bool]) -> f64 {
    let mut mass = 0.0;
    let mut acc = 0.0;
    for (r, p) in rows {
        if (0..x.len()).all(|i| !present[i] || r[i] == x[i]) {
            mass += p;
            acc += p * eval(f, names, r.clone());
        }
    }
    assert!(mass > 0.0, "conditioning on a null event");
    acc / mass
}

pub fn conditional_shapley(f: &Model, names: &[String], rows: &[(Vec<f64>, f64)], x: &[f64]) -> Vec<f64> {
    permutation_average(x.len(), &|s| conditional_value(f, names, rows, x, s))
}

/// Weighted rows of the empirical distribution, with the explicand added as
/// one more row when no row equals it.
pub fn empirical_rows(rows: &[Vec<f64>], x: &[f64]) -> Vec<(Vec<f64>, f64)> {
    let mut out: Vec<(Vec<f64>, f64)> = rows.iter().map(|r| (r.clone(), 1.0)).collect();
    if !rows.iter().any(|r| r.as_slice() == x) {
        out.push((x.to_vec(), 1.0));
    }
    out
}

pub fn random_baseline_shapley(f: &Model, names: &[String], rows: &[(Vec<f64>, f64)], x: &[f64]) -> Vec<f64> {
    let mut total = vec![0.0; x.len()];
    for (b, p) in rows {
        for (t, s) in total.iter_mut().zip(baseline_shapley(f, names, x, b)) {
            *t += p * s;
        }
    }
    total
}

/// The pending-set walk over every ordering, straight from its description.
pub fn possible_marginals(
    f: &Model,
    names: &[String],
    x: &[f64],
    b: &[f64],
    possible: &dyn Fn(&[f64]) -> bool,
) -> Vec<f64> {
    let n = x.len();
    let all = orderings(n);
    let mut scores = vec![0.0; n];
    for order in &all {
        let mut accepted = vec![false; n];
        let mut pending: Vec<usize> = Vec::new();
        let mut current = eval(f, names, b.to_vec());
        for &i in order {
            pending.push(i);
            let mut trial = accepted.clone();
            for &z in &pending {
                trial[z] = true;
            }
            let point = mixed(x, b, &trial);
            if possible(&point) {
                let next = eval(f, names, point);
                if pending.len() == 1 {
                    scores[i] += next - current;
                } else {
                    scores[i] += (next - current) / 2.0;
                    scores[pending[0]] += (next - current) / 2.0;
                }
                accepted = trial;
                current = next;
                pending.clear();
            }
        }
    }
    scores.iter().map(|s| s / all.len() as f64).collect()
}

/// Shapley value of the completion that replaces each impossible coalition
/// by the mean over its one-smaller subsets, smallest first.
pub fn completed_shapley(
    f: &Model,
    names: &[String],
    x: &[f64],
    b: &[f64],
    possible: &dyn Fn(&[f64]) -> bool,
) -> Vec<f64> {
    let n = x.len();
    let flags = |mask: usize| (0..n).map(|i| mask >> i & 1 == 1).collect::<Vec<bool>>();
    let mut by_size: Vec<usize> = (0..1 << n).collect();
    by_size.sort_by_key(|m| m.count_ones());
    let mut value = vec![0.0; 1 << n];
    for mask in by_size {
        let point = mixed(x, b, &flags(mask));
        value[mask] = if possible(&point) {
            eval(f, names, point)
        } else {
            let members: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            members.iter().map(|i| value[mask & !(1 << i)]).sum::<f64>() / members.len() as f64
        };
    }
    permutation_average(n, &|s| {
        let mask = s.iter().enumerate().filter(|(_, p)| **p).map(|(i, _)| 1 << i).sum::<usize>();
        value[mask]
    })
}

/// Brute-force micro-feature Shapley with `m` micro players per feature.
pub fn micro_features(f: &Model, names: &[String], x: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    let micro = permutation_average(n * m, &|s| {
        let values = (0..n)
            .map(|i| {
                let k = s[i * m..(i + 1) * m].iter().filter(|p| **p).count();
                if k == m {
                    x[i]
                } else {
                    b[i] + k as f64 / m as f64 * (x[i] - b[i])
                }
            })
            .collect();
        eval(f, names, values)
    });
    (0..n).map(|i| micro[i * m..(i + 1) * m].iter().sum()).collect()
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn atoms(d: &manyshap::DiscreteDistribution) -> Vec<(Vec<f64>, f64)> {
    d.atoms().expect("small support").into_iter().map(|(a, p)| (a.values().to_vec(), p)).collect()
}

struct Sink {
    scenario: &'static str,
    entries: Vec<GoldenEntry>,
}

impl Sink {
    fn put(&mut self, key: impl Into<String>, value: f64, tolerance: f64) {
        self.entries.push(GoldenEntry {
            scenario: self.scenario.to_string(),
            key: key.into(),
            expected: value,
            tolerance,
            source: Source::Enumerated,
            gating: true,
        });
    }

    fn scores(&mut self, prefix: &str, features: &[String], values: &[f64], tolerance: f64) {
        for (n, v) in features.iter().zip(values) {
            self.put(format!("{prefix}.{n}"), *v, tolerance);
        }
    }

    fn advisory(&mut self, prefix: &str, features: &[String], values: &[f64], tolerance: f64) {
        let start = self.entries.len();
        self.scores(prefix, features, values, tolerance);
        for e in &mut self.entries[start..] {
            e.gating = false;
        }
    }
}

/// Every enumerated golden value, recomputed from scratch.
pub fn enumerated_entries() -> Vec<GoldenEntry> {
    let mut out = Vec::new();
    let mut scenario = |name: &'static str, fill: &dyn Fn(&mut Sink)| {
        let mut sink = Sink { scenario: name, entries: Vec::new() };
        fill(&mut sink);
        out.extend(sink.entries);
    };
    let xy = names(&["x", "y"]);

    scenario("dummy-failure", &|s| {
        let rows = atoms(&dummy_failure_distribution(DUMMY_FAILURE_EPSILON).unwrap());
        s.scores("ces", &xy, &conditional_shapley(&expr("y^2"), &xy, &rows, &[5.0, 5.0]), 1e-9);
        s.scores("bshap", &xy, &baseline_shapley(&expr("y^2"), &xy, &[5.0, 5.0], &[1.0, 1.0]), 1e-12);
    });

    scenario("linearity-failure", &|s| {
        let rows = atoms(&dummy_failure_distribution(DUMMY_FAILURE_EPSILON).unwrap());
        let joint = conditional_shapley(&expr("y^2 + x"), &xy, &rows, &[5.0, 5.0]);
        s.scores("joint", &xy, &joint, 1e-9);
        let y_only: Vec<(Vec<f64>, f64)> = rows.iter().map(|(r, p)| (vec![r[1]], *p)).collect();
        let x_only: Vec<(Vec<f64>, f64)> = rows.iter().map(|(r, p)| (vec![r[0]], *p)).collect();
        let f1 = conditional_shapley(&expr("y^2"), &names(&["y"]), &merge(y_only), &[5.0]);
        let f2 = conditional_shapley(&expr("x"), &names(&["x"]), &merge(x_only), &[5.0]);
        s.put("f1_alone.y", f1[0], 1e-9);
        s.put("f2_alone.x", f2[0], 1e-9);
        s.put("gap.y", f1[0] - joint[1], 1e-9);
    });

    scenario("demand-monotonicity-failure", &|s| {
        let data: Vec<Vec<f64>> = demand_failure_data().rows().to_vec();
        let f = expr("100*x + y");
        for (label, x) in [("low", [1.0, 0.0]), ("high", [1.0, 1.0])] {
            let rows = empirical_rows(&data, &x);
            s.scores(&format!("ces_empirical_{label}"), &xy, &conditional_shapley(&f, &xy, &rows, &x), 1e-9);
        }
    });

    scenario("symmetry-failure", &|s| {
        let (p, q) = SYMMETRY_PQ;
        let rows = atoms(&symmetry_failure_distribution(p, q).unwrap());
        s.scores("ces", &xy, &conditional_shapley(&expr("x + y"), &xy, &rows, &[2.0, 2.0]), 1e-12);
    });

    scenario("strong-monotonicity-failure", &|s| {
        let rows = atoms(&strong_failure_distribution().unwrap());
        s.scores("f1", &xy, &conditional_shapley(&expr("sqrt(x) + y"), &xy, &rows, &[2.0, 2.0]), 1e-12);
        s.scores("f2", &xy, &conditional_shapley(&expr("x + y"), &xy, &rows, &[2.0, 2.0]), 1e-12);
    });

    scenario("marginal-sum-remark", &|s| {
        let x12 = names(&["x1", "x2"]);
        let joint = vec![(vec![0.0, 0.0], 0.5), (vec![1.0, 1.0], 0.5)];
        let product =
            vec![(vec![0.0, 0.0], 0.25), (vec![0.0, 1.0], 0.25), (vec![1.0, 0.0], 0.25), (vec![1.0, 1.0], 0.25)];
        let f = expr("x1 * x2");
        s.scores("rbshap_joint", &x12, &random_baseline_shapley(&f, &x12, &joint, &[1.0, 1.0]), 1e-12);
        s.scores("rbshap_product", &x12, &random_baseline_shapley(&f, &x12, &product, &[1.0, 1.0]), 1e-12);
    });

    scenario("min-remark", &|s| {
        let x12 = names(&["x1", "x2"]);
        s.scores("bshap", &x12, &baseline_shapley(&expr("min(x1, x2)"), &x12, &[5.0, 1.0], &[0.0, 0.0]), 1e-12);
        // worth of a coalition: min of its members' explicand values, zero when empty
        let restricted = permutation_average(2, &|p| match (p[0], p[1]) {
            (false, false) => 0.0,
            (true, false) => 5.0,
            (false, true) => 1.0,
            (true, true) => 1.0,
        });
        s.scores("restricted", &x12, &restricted, 1e-12);
    });

    scenario("cube-remark", &|s| {
        let x12 = names(&["x1", "x2"]);
        s.scores("bshap", &x12, &baseline_shapley(&expr("(x1 + x2)^3"), &x12, &[5.0, 1.0], &[0.0, 0.0]), 1e-9);
    });

    scenario("young-counterexample", &|s| {
        let x3 = numbered(3);
        let rows = atoms(&young(YOUNG_EPSILON).unwrap());
        let f = expr("x1 * x2 * x3");
        let x = [1.0; 3];
        let v = |members: &[usize]| {
            let present: Vec<bool> = (0..3).map(|i| members.contains(&i)).collect();
            conditional_value(&f, &x3, &rows, &x, &present)
        };
        let forward = [v(&[0]) - v(&[]), v(&[0, 1]) - v(&[0]), v(&[0, 1, 2]) - v(&[0, 1])];
        s.scores("fixed", &x3, &forward, 1e-12);
        let backward = [v(&[2, 1, 0]) - v(&[2, 1]), v(&[2, 1]) - v(&[2]), v(&[2]) - v(&[])];
        s.scores("reversed", &x3, &backward, 1e-12);
        s.scores("shapley", &x3, &conditional_shapley(&f, &x3, &rows, &x), 1e-12);
    });

    scenario("deepshap-order", &|s| {
        let x3 = numbered(3);
        s.scores("end_to_end", &x3, &baseline_shapley(&expr("x1 * x2 * x3"), &x3, &[1.0; 3], &[0.0; 3]), 1e-12);
    });

    scenario("kahneman", &|s| {
        let k = names(&KAHNEMAN_FEATURES);
        let (e1, e2) = KAHNEMAN_EPSILONS;
        let x = [1.0, 1.0, 0.0];
        let household = atoms(&kahneman_household(e1, e2).unwrap());
        let doctor = atoms(&kahneman_doctor(e1, e2).unwrap());
        s.scores("patient", &k, &conditional_shapley(&kahneman_pain(), &k, &household, &x), 1e-12);
        s.scores("spouse", &k, &conditional_shapley(&kahneman_spouse_pain(), &k, &household, &x), 1e-12);
        s.scores("doctor", &k, &conditional_shapley(&kahneman_pain(), &k, &doctor, &x), 1e-12);
    });

    scenario("pms-impossible-everywhere", &|s| {
        for n in 2..=4 {
            let (f, x, b) = everywhere_instance(n);
            let only_ends = |p: &[f64]| p == x.as_slice() || p == b.as_slice();
            let scores = possible_marginals(&f, &numbered(n), &x, &b, &only_ends);
            s.scores(&format!("n{n}"), &numbered(n), &scores, 1e-12);
        }
    });

    scenario("pms-boolean-3", &|s| {
        let (f, x, b) = boolean_instance(3);
        let rule = |p: &[f64]| !(p[0] == 0.0 && p[1] == 1.0);
        s.scores("pms", &numbered(3), &possible_marginals(&f, &numbered(3), &x, &b, &rule), 1e-12);
        s.advisory("completed", &numbered(3), &completed_shapley(&f, &numbered(3), &x, &b, &rule), 1e-12);
    });

    scenario("pms-boolean-n", &|s| {
        let (f, x, b) = boolean_instance(4);
        let rule = |p: &[f64]| p[0] == p[1];
        s.scores("pms", &numbered(4), &possible_marginals(&f, &numbered(4), &x, &b, &rule), 1e-12);
        s.advisory("completed", &numbered(4), &completed_shapley(&f, &numbered(4), &x, &b, &rule), 1e-12);
    });

    scenario("sparsity-equal-split", &|s| {
        let (f, data, x) = sparsity_instance();
        let n = names(&["a", "b", "c"]);
        let rows = empirical_rows(&data, &x);
        s.scores("ces_empirical", &n, &conditional_shapley(&f, &n, &rows, &x), 1e-12);
    });

    scenario("bshap-as-ces-epsilon", &|s| {
        let (f, x, b) = epsilon_instance();
        s.scores("bshap", &numbered(3), &baseline_shapley(&f, &numbered(3), &x, &b), 1e-9);
    });

    scenario("rbshap-equals-ces-independent", &|s| {
        let (f, dist, x) = independent_instance();
        let rows = atoms(&dist);
        s.scores("rbshap", &numbered(3), &random_baseline_shapley(&f, &numbered(3), &rows, &x), 1e-9);
        s.scores("ces", &numbered(3), &conditional_shapley(&f, &numbered(3), &rows, &x), 1e-9);
    });

    scenario("micro-convergence", &|s| {
        let x12 = names(&["x1", "x2"]);
        let f = expr("(x1 + x2)^3");
        s.scores("micro4", &x12, &micro_features(&f, &x12, &[5.0, 1.0], &[0.0, 0.0], 4), 1e-9);
    });

    scenario("reduction-roundtrip", &|s| {
        let (f, x, b) = reduction_instance();
        s.scores("bshap", &numbered(3), &baseline_shapley(&f, &numbered(3), &x, &b), 1e-9);
    });

    out
}

fn merge(rows: Vec<(Vec<f64>, f64)>) -> Vec<(Vec<f64>, f64)> {
    let mut out: Vec<(Vec<f64>, f64)> = Vec::new();
    for (r, p) in rows {
        match out.iter_mut().find(|(q, _)| *q == r) {
            Some(e) => e.1 += p,
            None => out.push((r, p)),
        }
    }
    out
}

/// `f = Σ i·x_i + Π x_i`, explicand all ones, baseline all zeros.
pub fn everywhere_instance(n: usize) -> (Model, Vec<f64>, Vec<f64>) {
    let linear: Vec<String> = (1..=n).map(|i| format!("{i}*x{i}")).collect();
    let product: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let f = instances::expr(&format!("{} + {}", linear.join(" + "), product.join("*")));
    (f, vec![1.0; n], vec![0.0; n])
}

/// `f = x3`, explicand all ones, baseline all zeros.
pub fn boolean_instance(n: usize) -> (Model, Vec<f64>, Vec<f64>) {
    (instances::expr("x3"), vec![1.0; n], vec![0.0; n])
}

/// Rows on a coarse grid and an explicand off the grid in every feature.
pub fn sparsity_instance() -> (Model, Vec<Vec<f64>>, Vec<f64>) {
    let mut rows = Vec::new();
    for a in 0..3 {
        for b in 0..2 {
            rows.push(vec![a as f64, b as f64, (a + b) as f64 % 2.0]);
        }
    }
    (instances::expr("4*a - b + 2*c*a"), rows, vec![1.25, 0.5, 0.75])
}

pub fn epsilon_instance() -> (Model, Vec<f64>, Vec<f64>) {
    (instances::expr("x1*x2^2 - 3*x3 + x2*x3"), vec![1.5, -2.0, 0.5], vec![0.0, 1.0, -1.0])
}

pub fn independent_instance() -> (Model, manyshap::DiscreteDistribution, Vec<f64>) {
    let d = manyshap::DiscreteDistribution::independent(
        manyshap::feature_names(numbered(3)),
        vec![vec![(0.0, 0.2), (1.0, 0.5), (2.0, 0.3)], vec![(-1.0, 0.6), (1.0, 0.4)], vec![(0.5, 0.1), (1.5, 0.9)]],
    )
    .expect("valid marginals");
    (instances::expr("x1*x2 + x3^2 - x1*x3"), d, vec![2.0, -1.0, 0.5])
}

pub fn reduction_instance() -> (Model, Vec<f64>, Vec<f64>) {
    (instances::expr("x1*x2 - x3^2 + 2*x1"), vec![-1.0, 2.0, 0.5], vec![1.0, -1.0, 1.5])
}

//! Seeded random instances for the randomized acceptance checks.

use rand::seq::SliceRandom;
use rand::Rng;

use manyshap::{feature_names, Dataset, DiscreteDistribution, FeatureVector, Model, PossibilityPredicate};

use crate::instances::{numbered, numbered_vector};

/// A polynomial as `(coefficient, [(feature, power)])` terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub constant: i64,
    pub terms: Vec<(i64, Vec<(usize, u32)>)>,
}

impl Poly {
    pub fn random(rng: &mut impl Rng, features: &[usize], terms: usize) -> Self {
        let terms = (0..terms)
            .map(|_| {
                let coef = *[-3, -2, -1, 1, 2, 3].choose(rng).expect("nonempty");
                let factors = (0..rng.gen_range(1..=2))
                    .map(|_| (*features.choose(rng).expect("some feature"), rng.gen_range(1..=2)))
                    .collect();
                (coef, factors)
            })
            .collect();
        Self { constant: rng.gen_range(-3..=3), terms }
    }

    /// Render with feature `k` written as `names[k]`.
    pub fn render(&self, names: &[String]) -> String {
        let mut s = self.constant.to_string();
        for (c, factors) in &self.terms {
            s.push_str(&format!(" + {c}"));
            for (f, p) in factors {
                s.push_str(&format!("*{}^{p}", names[*f]));
            }
        }
        s
    }

    pub fn model(&self, names: &[String]) -> Model {
        Model::expression(&self.render(names)).expect("rendered polynomial parses")
    }
}

pub fn small_value(rng: &mut impl Rng) -> f64 {
    rng.gen_range(-4..=4) as f64 / 2.0
}

/// Explicand and baseline that differ in every coordinate.
pub fn distinct_pair(rng: &mut impl Rng, n: usize) -> (FeatureVector, FeatureVector) {
    let x: Vec<f64> = (0..n).map(|_| small_value(rng)).collect();
    let b: Vec<f64> = x.iter().map(|v| v + [-1.5, -1.0, -0.5, 0.5, 1.0, 1.5].choose(rng).expect("nonempty")).collect();
    (numbered_vector(&x), numbered_vector(&b))
}

pub fn polynomial(rng: &mut impl Rng, n: usize) -> Model {
    let all: Vec<usize> = (0..n).collect();
    let terms = rng.gen_range(1..=4);
    Poly::random(rng, &all, terms).model(&numbered(n))
}

/// Independent features with one to three support points each, the
/// explicand drawn from the support.
pub fn independent_instance(rng: &mut impl Rng) -> (Model, DiscreteDistribution, FeatureVector) {
    let n = rng.gen_range(2..=4);
    let mut marginals = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    for _ in 0..n {
        let mut values: Vec<f64> = (-3..=3).map(f64::from).collect();
        values.shuffle(rng);
        values.truncate(rng.gen_range(1..=3));
        let weights: Vec<f64> = values.iter().map(|_| rng.gen_range(1..=5) as f64).collect();
        let total: f64 = weights.iter().sum();
        x.push(*values.choose(rng).expect("nonempty"));
        marginals.push(values.into_iter().zip(weights.iter().map(|w| w / total)).collect());
    }
    let d = DiscreteDistribution::independent(feature_names(numbered(n)), marginals).expect("valid marginals");
    (polynomial(rng, n), d, numbered_vector(&x))
}

/// A few rows on a small grid with the explicand among them.
pub fn dataset_with_explicand(rng: &mut impl Rng) -> (Model, Dataset, FeatureVector) {
    let n = rng.gen_range(2..=4);
    let rows: Vec<Vec<f64>> =
        (0..rng.gen_range(3..=9)).map(|_| (0..n).map(|_| rng.gen_range(0..=2) as f64).collect()).collect();
    let x = rows.choose(rng).expect("nonempty").clone();
    let data = Dataset::new(feature_names(numbered(n)), rows, None).expect("well-formed rows");
    (polynomial(rng, n), data, numbered_vector(&x))
}

/// Allowed-row predicate over the mixed vectors of `x` and `b`, always
/// admitting both endpoints.
pub fn allowed_mixtures(rng: &mut impl Rng, x: &FeatureVector, b: &FeatureVector) -> PossibilityPredicate {
    let n = x.len();
    let keep = rng.gen_range(0.1..0.9);
    let rows = (0..1u64 << n)
        .filter(|m| *m == 0 || *m == (1 << n) - 1 || rng.gen_bool(keep))
        .map(|m| x.mix(b, &manyshap::Coalition::from_mask(n, m)))
        .collect();
    PossibilityPredicate::allowed_rows(rows)
}

/// A model that never reads `dummy`.
pub fn without_feature(rng: &mut impl Rng, n: usize, dummy: usize) -> Model {
    let others: Vec<usize> = (0..n).filter(|i| *i != dummy).collect();
    let terms = rng.gen_range(1..=4);
    Poly::random(rng, &others, terms).model(&numbered(n))
}

/// A model symmetric in the first two features: `p(x1, rest) + p(x2, rest) + k·x1·x2`.
pub fn symmetric_in_first_two(rng: &mut impl Rng, n: usize) -> Model {
    let features: Vec<usize> = (std::iter::once(0)).chain(2..n).collect();
    let terms = rng.gen_range(1..=3);
    let p = Poly::random(rng, &features, terms);
    let names = numbered(n);
    let mut swapped = names.clone();
    swapped.swap(0, 1);
    let k = rng.gen_range(-2..=2);
    Model::expression(&format!("{} + {} + {k}*x1*x2", p.render(&names), p.render(&swapped))).expect("parses")
}

/// A model nondecreasing in `feature`: positive odd powers of it plus terms
/// that do not read it.
pub fn nondecreasing_in(rng: &mut impl Rng, n: usize, feature: usize) -> Model {
    let others: Vec<usize> = (0..n).filter(|i| *i != feature).collect();
    let names = numbered(n);
    let rest = if others.is_empty() {
        "0".to_string()
    } else {
        let terms = rng.gen_range(1..=3);
        Poly::random(rng, &others, terms).render(&names)
    };
    let (a, c) = (rng.gen_range(0..=3), rng.gen_range(1..=3));
    Model::expression(&format!("{rest} + {a}*{0} + {c}*{0}^3", names[feature])).expect("parses")
}

/// `g(Σ x_i)` for a random polynomial `g`.
pub fn function_of_sum(rng: &mut impl Rng, n: usize) -> Model {
    let sum = format!("({})", numbered(n).join(" + "));
    let (a, b, c) = (rng.gen_range(-3..=3), rng.gen_range(-3..=3), rng.gen_range(1..=3));
    Model::expression(&format!("{a}*{sum} + {b}*{sum}^2 + {c}*{sum}^3")).expect("parses")
}

pub fn positive_vector(rng: &mut impl Rng, n: usize) -> FeatureVector {
    numbered_vector(&(0..n).map(|_| rng.gen_range(1..=8) as f64 / 4.0).collect::<Vec<_>>())
}

//! The worked examples, as ready-to-run inputs.

use manyshap::{feature_names, Dataset, DiscreteDistribution, FeatureVector, Model, Result};

pub const DUMMY_FAILURE_EPSILON: f64 = 1e-6;
pub const YOUNG_EPSILON: f64 = 1e-3;
pub const KAHNEMAN_EPSILONS: (f64, f64) = (0.01, 0.01);
pub const SYMMETRY_PQ: (f64, f64) = (0.3, 0.6);

pub const DIABETES_CSV: &str = include_str!("../data/diabetes.csv");
pub const DIABETES_MODEL: &str = include_str!("../data/diabetes_linear.json");

pub fn vector(pairs: &[(&str, f64)]) -> FeatureVector {
    FeatureVector::from_pairs(pairs.iter().map(|(n, v)| (n.to_string(), *v))).expect("well-formed vector")
}

pub fn expr(src: &str) -> Model {
    Model::expression(src).expect("well-formed expression")
}

pub fn constant(names: &[&str], value: f64) -> FeatureVector {
    vector(&names.iter().map(|n| (*n, value)).collect::<Vec<_>>())
}

/// Three atoms: the explicand (5,5) with mass ε and two common rows.
pub fn dummy_failure_distribution(eps: f64) -> Result<DiscreteDistribution> {
    DiscreteDistribution::explicit(
        feature_names(["x", "y"]),
        vec![(vec![5.0, 5.0], eps), (vec![1.0, 1.0], (1.0 - eps) / 2.0), (vec![1.0, 2.0], (1.0 - eps) / 2.0)],
    )
}

pub fn dummy_failure_explicand() -> FeatureVector {
    vector(&[("x", 5.0), ("y", 5.0)])
}

/// Three equally likely rows for `f = 100x + y`.
pub fn demand_failure_data() -> Dataset {
    Dataset::new(feature_names(["x", "y"]), vec![vec![1.0, 1.0], vec![1.0, 0.0], vec![0.0, 1.0]], None)
        .expect("well-formed rows")
}

/// Independent `x ∈ {1,2}` with `P(2) = p` and `y ∈ {1,2}` with `P(2) = q`.
pub fn symmetry_failure_distribution(p: f64, q: f64) -> Result<DiscreteDistribution> {
    DiscreteDistribution::independent(
        feature_names(["x", "y"]),
        vec![vec![(1.0, 1.0 - p), (2.0, p)], vec![(1.0, 1.0 - q), (2.0, q)]],
    )
}

/// Independent uniform `x ∈ {1,2,3}` and `y ∈ {1,2}`.
pub fn strong_failure_distribution() -> Result<DiscreteDistribution> {
    let third = 1.0 / 3.0;
    DiscreteDistribution::independent(
        feature_names(["x", "y"]),
        vec![vec![(1.0, third), (2.0, third), (3.0, third)], vec![(1.0, 0.5), (2.0, 0.5)]],
    )
}

pub fn young(eps: f64) -> Result<DiscreteDistribution> {
    DiscreteDistribution::independent(feature_names(["x1", "x2", "x3"]), vec![vec![(0.0, 1.0 - eps), (1.0, eps)]; 3])
}

pub fn deepshap_left() -> Result<Model> {
    Model::layered(expr("h * x3"), [("h", expr("x1 * x2")), ("x3", expr("x3"))])
}

pub fn deepshap_right() -> Result<Model> {
    Model::layered(expr("x1 * h"), [("x1", expr("x1")), ("h", expr("x2 * x3"))])
}

pub const KAHNEMAN_FEATURES: [&str; 3] = ["turnip", "ulcer", "medicine"];

/// Pain as the doctor and the patient model it.
pub fn kahneman_pain() -> Model {
    expr("ulcer * (1 - medicine)")
}

/// Pain as the spouse models it.
pub fn kahneman_spouse_pain() -> Model {
    expr("turnip * ulcer")
}

/// The doctor believes the medicine is never taken.
pub fn kahneman_doctor(e1: f64, e2: f64) -> Result<DiscreteDistribution> {
    DiscreteDistribution::explicit(
        feature_names(KAHNEMAN_FEATURES),
        vec![
            (vec![1.0, 1.0, 0.0], e1 * e2),
            (vec![1.0, 0.0, 0.0], e1 * (1.0 - e2)),
            (vec![0.0, 0.0, 0.0], (1.0 - e1) * (1.0 - e2)),
            (vec![0.0, 1.0, 0.0], (1.0 - e1) * e2),
        ],
    )
}

/// Spouse and patient believe the ulcer is always present.
pub fn kahneman_household(e1: f64, e2: f64) -> Result<DiscreteDistribution> {
    DiscreteDistribution::explicit(
        feature_names(KAHNEMAN_FEATURES),
        vec![
            (vec![1.0, 1.0, 0.0], e1 * e2),
            (vec![1.0, 1.0, 1.0], e1 * (1.0 - e2)),
            (vec![0.0, 1.0, 1.0], (1.0 - e1) * (1.0 - e2)),
            (vec![0.0, 1.0, 0.0], (1.0 - e1) * e2),
        ],
    )
}

pub fn kahneman_explicand() -> FeatureVector {
    vector(&[("turnip", 1.0), ("ulcer", 1.0), ("medicine", 0.0)])
}

pub fn diabetes_data() -> Dataset {
    Dataset::read_csv(DIABETES_CSV.as_bytes()).expect("bundled diabetes data parses")
}

pub fn diabetes_model() -> Model {
    Model::from_json(DIABETES_MODEL).expect("bundled diabetes model parses")
}

/// Features with a zero coefficient in the bundled diabetes model.
pub fn diabetes_dummies() -> Vec<String> {
    match diabetes_model() {
        Model::Linear(l) => l
            .coefficients
            .names()
            .iter()
            .zip(l.coefficients.values())
            .filter(|(_, c)| **c == 0.0)
            .map(|(n, _)| n.clone())
            .collect(),
        _ => Vec::new(),
    }
}

/// Names `x1..xn`.
pub fn numbered(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

pub fn numbered_vector(values: &[f64]) -> FeatureVector {
    FeatureVector::new(feature_names(numbered(values.len())), values.to_vec()).expect("finite values")
}

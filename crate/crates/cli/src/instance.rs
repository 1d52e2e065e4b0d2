//! The JSON file read by `manyshap check`.
//!
//! ```json
//! {
//!   "models": ["y^2"],
//!   "explicands": [{"x": 5, "y": 5}],
//!   "distribution": {"type": "explicit", "rows": [{"values": {"x": 5, "y": 5}, "prob": 0.5}, ...]},
//!   "feature": "x"
//! }
//! ```
//!
//! Models are expression strings or model objects. `data` is a CSV path,
//! resolved against the instance file's directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use manyshap::{DiscreteDistribution, Error, FeatureVector, Model, PossibilityPredicate, Result};
use manyshap_harness::axioms::{Context, Instance};

#[derive(Deserialize)]
#[serde(untagged)]
enum ModelSpec {
    Expression(String),
    Model(Model),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    models: Vec<ModelSpec>,
    explicands: Vec<FeatureVector>,
    #[serde(default)]
    baseline: Option<FeatureVector>,
    #[serde(default)]
    distribution: Option<serde_json::Value>,
    #[serde(default)]
    data: Option<PathBuf>,
    /// Possibility predicate as an expression; nonzero means possible.
    #[serde(default)]
    possible: Option<String>,
    #[serde(default)]
    weights: Option<(f64, f64)>,
    #[serde(default)]
    component_features: Option<Vec<Vec<String>>>,
    #[serde(default)]
    feature: Option<String>,
    #[serde(default)]
    pair: Option<(String, String)>,
    #[serde(default)]
    transform: Option<(f64, f64)>,
    #[serde(default)]
    domain: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    region: Option<(Vec<f64>, Vec<f64>)>,
    #[serde(default)]
    asserted: bool,
}

pub fn load(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?;
    let file: InstanceFile = serde_json::from_str(&text)
        .map_err(|e| Error::Parse { position: e.line(), message: format!("{}: {e}", path.display()) })?;
    let models = file
        .models
        .into_iter()
        .map(|m| match m {
            ModelSpec::Expression(s) => Model::expression(&s),
            ModelSpec::Model(m) => Ok(m),
        })
        .collect::<Result<Vec<_>>>()?;
    let distribution = file.distribution.map(|v| DiscreteDistribution::from_json(&v.to_string())).transpose()?;
    let base = path.parent().unwrap_or(Path::new("."));
    let data = file.data.map(|p| manyshap::Dataset::from_csv_path(base.join(p))).transpose()?;
    let possibility = file.possible.map(|s| PossibilityPredicate::expression(&s)).transpose()?;
    Ok(Instance {
        models,
        weights: file.weights,
        component_features: file.component_features,
        explicands: file.explicands,
        context: Context { baseline: file.baseline, distribution, data, possibility },
        feature: file.feature,
        pair: file.pair,
        transform: file.transform,
        domain: file.domain,
        region: file.region,
        asserted: file.asserted,
    })
}

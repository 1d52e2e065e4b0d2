//! Reading models, data and vectors from files and flag values.

use std::path::Path;

use manyshap::{Dataset, DiscreteDistribution, Error, FeatureNames, FeatureVector, Model, Result};

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })
}

pub fn model(path: &Path) -> Result<Model> {
    Model::from_json(&read(path)?)
}

pub fn distribution(path: &Path) -> Result<DiscreteDistribution> {
    DiscreteDistribution::from_json(&read(path)?)
}

pub fn dataset(path: &Path) -> Result<Dataset> {
    Dataset::from_csv_path(path)
}

fn number(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Argument(format!("`{s}` is not a number")))
}

pub fn numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(number).collect()
}

/// `5,1` in feature order, `a=5,b=1` by name, or `row:N` from the data.
pub fn vector(spec: &str, names: &FeatureNames, data: Option<&Dataset>) -> Result<FeatureVector> {
    if let Some(row) = spec.strip_prefix("row:") {
        let data = data.ok_or_else(|| Error::Argument("`row:N` needs --data".into()))?;
        let k: usize = row.trim().parse().map_err(|_| Error::Argument(format!("bad row index `{row}`")))?;
        if k >= data.len() {
            return Err(Error::Argument(format!("row {k} is out of range for {} rows", data.len())));
        }
        return data.row(k).reorder(names);
    }
    if spec.contains('=') {
        let pairs = spec
            .split(',')
            .map(|kv| {
                let (k, v) =
                    kv.split_once('=').ok_or_else(|| Error::Argument(format!("expected name=value, got `{kv}`")))?;
                Ok((k.trim().to_string(), number(v)?))
            })
            .collect::<Result<Vec<_>>>()?;
        return FeatureVector::from_pairs(pairs)?.reorder(names);
    }
    let values = numbers(spec)?;
    if values.len() != names.len() {
        return Err(Error::Argument(format!(
            "{} values given for {} features ({})",
            values.len(),
            names.len(),
            names.join(", ")
        )));
    }
    FeatureVector::new(names.clone(), values)
}

/// `zeros`, `mean` (of the data), or explicit values as for [`vector`].
pub fn baseline(spec: &str, names: &FeatureNames, data: Option<&Dataset>) -> Result<FeatureVector> {
    match spec {
        "zeros" => Ok(FeatureVector::zeros(names.clone())),
        "mean" => {
            data.ok_or_else(|| Error::Argument("`--baseline mean` needs --data".into()))?.mean_vector()?.reorder(names)
        }
        other => vector(other, names, data),
    }
}

//! Attribution distributions over a cohort of explicands drawn from a dataset.

use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use manyshap::{
    Dataset, DiscreteDistribution, EngineOptions, Error, FeatureVector, Model, PossibilityPredicate, Result,
};

use crate::axioms::{Context, MethodUnderTest};
use crate::instances;

pub const DEFAULT_SEED: u64 = 20;
pub const DEFAULT_EXPLICANDS: usize = 20;
pub const SMOOTHING_SWEEP: [f64; 3] = [0.0, 0.1, 0.2];
pub const COHORT_METHODS: [&str; 7] =
    ["bshap", "ces_empirical", "ces_empirical_0.1", "ces_empirical_0.2", "rbshap", "ig", "pms"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    Rows(Vec<usize>),
    Sample { count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineChoice {
    Mean,
    Zeros,
    Values(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Csv, Format::Json, Format::Svg];

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "svg" => Ok(Self::Svg),
            other => Err(Error::LookupMiss(format!("unknown format `{other}`; known: csv, json, svg"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Linear or other model JSON; the bundled diabetes model when absent.
    pub model_path: Option<PathBuf>,
    /// CSV rows; the bundled diabetes data when absent.
    pub data_path: Option<PathBuf>,
    /// Distribution JSON for `rbshap`; the empirical distribution of the data when absent.
    pub distribution_path: Option<PathBuf>,
    pub explicands: Selection,
    pub methods: Vec<String>,
    pub engine: EngineOptions,
    pub seed: u64,
    pub baseline: BaselineChoice,
    /// Shift every explicand value by a distinct amount of this order so no
    /// row agrees with it on any feature.
    pub noise: Option<f64>,
    pub out_dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model_path: None,
            data_path: None,
            distribution_path: None,
            explicands: Selection::Sample { count: DEFAULT_EXPLICANDS },
            methods: COHORT_METHODS.iter().map(|s| s.to_string()).collect(),
            engine: EngineOptions::exact(),
            seed: DEFAULT_SEED,
            baseline: BaselineChoice::Mean,
            noise: None,
            out_dir: PathBuf::from("."),
            formats: Format::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellError {
    pub explicand: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub feature: String,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodScores {
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing: Option<f64>,
    /// One row per explicand; `None` where that cell failed.
    pub scores: Vec<Option<Vec<f64>>>,
    pub errors: Vec<CellError>,
    pub summary: Vec<FeatureSummary>,
}

impl MethodScores {
    /// Scores of one feature over every explicand that succeeded.
    pub fn column(&self, feature: usize) -> Vec<f64> {
        self.scores.iter().flatten().map(|row| row[feature]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortReport {
    pub features: Vec<String>,
    pub seed: u64,
    pub rows: Vec<usize>,
    pub explicands: Vec<Vec<f64>>,
    pub baseline: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    pub methods: Vec<MethodScores>,
}

impl CohortReport {
    pub fn method(&self, name: &str) -> Option<&MethodScores> {
        self.methods.iter().find(|m| m.method == name)
    }
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    Dataset::from_csv_path(path)
}

fn load_model(path: &Path) -> Result<Model> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?;
    Model::from_json(&text)
}

fn load_distribution(path: &Path) -> Result<DiscreteDistribution> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?;
    DiscreteDistribution::from_json(&text)
}

/// Row indices chosen by the selection, in ascending order for samples.
pub fn select_rows(selection: &Selection, len: usize, seed: u64) -> Result<Vec<usize>> {
    match selection {
        Selection::Rows(rows) => {
            if let Some(bad) = rows.iter().find(|r| **r >= len) {
                return Err(Error::Argument(format!("row {bad} is out of range for {len} rows")));
            }
            Ok(rows.clone())
        }
        Selection::Sample { count } => {
            if *count > len {
                return Err(Error::Argument(format!("cannot sample {count} of {len} rows")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rows = sample(&mut rng, len, *count).into_vec();
            rows.sort_unstable();
            Ok(rows)
        }
    }
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn summarize(feature: &str, values: &[f64]) -> FeatureSummary {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return FeatureSummary {
            feature: feature.into(),
            min: f64::NAN,
            q1: f64::NAN,
            median: f64::NAN,
            q3: f64::NAN,
            max: f64::NAN,
        };
    }
    FeatureSummary {
        feature: feature.into(),
        min: v[0],
        q1: quantile(&v, 0.25),
        median: quantile(&v, 0.5),
        q3: quantile(&v, 0.75),
        max: v[v.len() - 1],
    }
}

pub fn attribute_cohort(config: &RunConfig) -> Result<CohortReport> {
    let model = match &config.model_path {
        Some(p) => load_model(p)?,
        None => instances::diabetes_model(),
    };
    let data = match &config.data_path {
        Some(p) => load_dataset(p)?,
        None => instances::diabetes_data(),
    };
    let distribution = match &config.distribution_path {
        Some(p) => load_distribution(p)?,
        None => DiscreteDistribution::empirical(&data)?,
    };
    let methods = config.methods.iter().map(|m| MethodUnderTest::parse(m)).collect::<Result<Vec<_>>>()?;
    let names = data.names().clone();
    let baseline = match &config.baseline {
        BaselineChoice::Mean => data.mean_vector()?,
        BaselineChoice::Zeros => FeatureVector::zeros(names.clone()),
        BaselineChoice::Values(v) => FeatureVector::new(names.clone(), v.clone())?,
    };
    let rows = select_rows(&config.explicands, data.len(), config.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let explicands: Vec<FeatureVector> = rows
        .iter()
        .map(|r| {
            let mut x = data.row(*r);
            if let Some(scale) = config.noise {
                for i in 0..x.len() {
                    let shift = scale * (1.0 + rng.gen::<f64>());
                    x.set_at(i, x.at(i) + shift);
                }
            }
            x
        })
        .collect();
    let ctx = Context {
        baseline: Some(baseline.clone()),
        distribution: Some(distribution),
        data: Some(data),
        possibility: Some(PossibilityPredicate::Always),
    };
    let cells: Vec<(usize, usize)> =
        (0..methods.len()).flat_map(|m| (0..explicands.len()).map(move |e| (m, e))).collect();
    let results: Vec<Result<Vec<f64>>> = cells
        .par_iter()
        .map(|&(m, e)| Ok(methods[m].attribute_with(&model, &explicands[e], &ctx, &config.engine)?.values().to_vec()))
        .collect();
    let mut out = Vec::with_capacity(methods.len());
    for (m, method) in methods.iter().enumerate() {
        let mut scores = Vec::with_capacity(explicands.len());
        let mut errors = Vec::new();
        for (e, result) in results[m * explicands.len()..(m + 1) * explicands.len()].iter().enumerate() {
            match result {
                Ok(s) => scores.push(Some(s.clone())),
                Err(err) => {
                    scores.push(None);
                    errors.push(CellError { explicand: e, message: err.to_string() });
                }
            }
        }
        let mut ms = MethodScores {
            method: method.name(),
            smoothing: match method {
                MethodUnderTest::CesEmpirical { smoothing } => Some(*smoothing),
                _ => None,
            },
            scores,
            errors,
            summary: Vec::new(),
        };
        ms.summary = names.iter().enumerate().map(|(i, n)| summarize(n, &ms.column(i))).collect();
        out.push(ms);
    }
    Ok(CohortReport {
        features: names.to_vec(),
        seed: config.seed,
        rows,
        explicands: explicands.iter().map(|x| x.values().to_vec()).collect(),
        baseline: baseline.values().to_vec(),
        noise: config.noise,
        methods: out,
    })
}

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureNames, FeatureVector};
use crate::scalar::Scalar;

/// Where an attribution came from: enough to rerun it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<FeatureVector<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Per-feature scores covering exactly the feature universe.
#[derive(Debug, Clone, PartialEq)]
pub struct Attribution<T> {
    pub scores: FeatureVector<T>,
    pub method: String,
    /// `v(∅)`: `f(x')`, `E_D[f]`, or the empty coalition's worth.
    pub reference: T,
    /// `v(N)`: usually `f(x)`.
    pub prediction: T,
    pub provenance: Provenance,
}

impl<T: Scalar> Attribution<T> {
    pub fn new(
        names: FeatureNames,
        scores: Vec<T>,
        method: impl Into<String>,
        reference: T,
        prediction: T,
    ) -> Result<Self> {
        if names.len() != scores.len() {
            return Err(Error::Argument("one score per feature required".into()));
        }
        Ok(Self {
            scores: FeatureVector::from_parts_unchecked(names, scores),
            method: method.into(),
            reference,
            prediction,
            provenance: Provenance::default(),
        })
    }

    pub fn names(&self) -> &FeatureNames {
        self.scores.names()
    }

    pub fn values(&self) -> &[T] {
        self.scores.values()
    }

    pub fn score(&self, feature: &str) -> Result<T> {
        self.scores.value(feature)
    }

    pub fn total(&self) -> T {
        self.values().iter().copied().sum()
    }

    /// `|Σ s_i - (v(N) - v(∅))|`.
    pub fn efficiency_gap(&self) -> T {
        (self.total() - (self.prediction - self.reference)).abs()
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        let other = other.scores.reorder(self.names())?;
        Ok(self.values().iter().zip(other.values()).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs())))
    }

    pub fn with_method(mut self, method: impl Into<String>) -> Self {
        self.method = method.into();
        self
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.provenance.notes.push(note.into());
        self
    }

    pub fn to_report(&self) -> AttributionReport {
        AttributionReport {
            scores: self.scores.cast(),
            method: self.method.clone(),
            metadata: Metadata {
                reference: self.reference.as_f64(),
                prediction: self.prediction.as_f64(),
                provenance: self.provenance.clone(),
            },
        }
    }
}

impl<T: Scalar> fmt::Display for Attribution<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.method, self.scores)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub reference: f64,
    pub prediction: f64,
    #[serde(flatten)]
    pub provenance: Provenance,
}

/// JSON form: `{"scores": {feature: score}, "method": ..., "metadata": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionReport {
    pub scores: FeatureVector<f64>,
    pub method: String,
    pub metadata: Metadata,
}

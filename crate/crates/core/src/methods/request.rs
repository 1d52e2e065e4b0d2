//! One request type covering every attribution method.

use serde::{Deserialize, Serialize};

use crate::attribution::Attribution;
use crate::dataset::Dataset;
use crate::distribution::{DiscreteDistribution, DistributionSpec};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::methods::baseline::{bshap, micro_shapley, rbshap, BaselineDraw};
use crate::methods::compositional::compositional_bshap;
use crate::methods::conditional::{ces, ces_empirical, EmpiricalOptions};
use crate::methods::gradient::{ig, IgOptions};
use crate::model::Model;
use crate::pms::{pms, PossibilityPredicate};
use crate::scalar::Scalar;
use crate::shapley::EngineOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Bshap,
    Rbshap,
    Ces,
    CesEmpirical,
    Ig,
    MicroShapley,
    CompositionalBshap,
    Pms,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Bshap,
        Method::Rbshap,
        Method::Ces,
        Method::CesEmpirical,
        Method::Ig,
        Method::MicroShapley,
        Method::CompositionalBshap,
        Method::Pms,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Bshap => "bshap",
            Method::Rbshap => "rbshap",
            Method::Ces => "ces",
            Method::CesEmpirical => "ces_empirical",
            Method::Ig => "ig",
            Method::MicroShapley => "micro_shapley",
            Method::CompositionalBshap => "compositional_bshap",
            Method::Pms => "pms",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name).ok_or_else(|| {
            let known: Vec<&str> = Self::ALL.iter().map(|m| m.name()).collect();
            Error::LookupMiss(format!("unknown method `{name}`; known: {}", known.join(", ")))
        })
    }

    pub fn needs_baseline(self) -> bool {
        matches!(self, Method::Bshap | Method::Ig | Method::MicroShapley | Method::CompositionalBshap | Method::Pms)
    }

    pub fn needs_distribution(self) -> bool {
        matches!(self, Method::Rbshap | Method::Ces)
    }

    pub fn needs_data(self) -> bool {
        matches!(self, Method::CesEmpirical)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AttributionRequest<T> {
    pub model: Model<T>,
    pub explicand: FeatureVector<T>,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<FeatureVector<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistributionSpec>,
    /// Training rows for empirical conditioning.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Vec<FeatureVector<T>>>,
    #[serde(default)]
    pub engine: EngineOptions,
    #[serde(default)]
    pub ig: IgOptions,
    #[serde(default)]
    pub empirical: EmpiricalOptions,
    #[serde(default = "one")]
    pub micro_features: usize,
    #[serde(default = "exact_draw")]
    pub baseline_draw: BaselineDraw,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub possibility: Option<PossibilityPredicate<T>>,
}

fn one() -> usize {
    1
}

fn exact_draw() -> BaselineDraw {
    BaselineDraw::Exact
}

impl<T: Scalar> AttributionRequest<T> {
    pub fn new(model: Model<T>, explicand: FeatureVector<T>, method: Method) -> Self {
        Self {
            model,
            explicand,
            method,
            baseline: None,
            distribution: None,
            data: None,
            engine: EngineOptions::default(),
            ig: IgOptions::default(),
            empirical: EmpiricalOptions::default(),
            micro_features: 1,
            baseline_draw: BaselineDraw::Exact,
            possibility: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Parse { position: e.column(), message: format!("request json line {}: {e}", e.line()) })
    }

    fn baseline(&self) -> Result<&FeatureVector<T>> {
        self.baseline.as_ref().ok_or_else(|| Error::Argument(format!("{} needs a baseline", self.method.name())))
    }

    fn distribution(&self) -> Result<DiscreteDistribution<T>> {
        let spec = self
            .distribution
            .clone()
            .ok_or_else(|| Error::Argument(format!("{} needs a distribution", self.method.name())))?;
        DiscreteDistribution::from_spec(spec)
    }

    fn dataset(&self) -> Result<Dataset<T>> {
        let rows =
            self.data.as_ref().ok_or_else(|| Error::Argument(format!("{} needs data rows", self.method.name())))?;
        Dataset::from_vectors(rows)
    }

    pub fn run(&self) -> Result<Attribution<T>> {
        let (f, x) = (&self.model, &self.explicand);
        match self.method {
            Method::Bshap => bshap(f, x, self.baseline()?, &self.engine),
            Method::Rbshap => rbshap(f, x, &self.distribution()?, self.baseline_draw, &self.engine),
            Method::Ces => ces(f, x, &self.distribution()?, &self.engine),
            Method::CesEmpirical => ces_empirical(f, x, &self.dataset()?, self.empirical, &self.engine),
            Method::Ig => ig(f, x, self.baseline()?, self.ig),
            Method::MicroShapley => micro_shapley(f, x, self.baseline()?, self.micro_features, &self.engine),
            Method::CompositionalBshap => compositional_bshap(f, x, self.baseline()?, &self.engine),
            Method::Pms => {
                let always = PossibilityPredicate::Always;
                pms(f, x, self.baseline()?, self.possibility.as_ref().unwrap_or(&always), &self.engine)
            }
        }
    }
}

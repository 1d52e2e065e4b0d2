//! Shapley-value feature attribution: exact and sampled Shapley values of
//! set functions, the baseline, conditional-expectation and path methods
//! built on them, and possibility-aware variants.
//!
//! Everything is generic over the scalar type; the aliases at the crate root
//! fix it to `f64`.
//!
//! ```
//! use manyshap::{bshap, EngineOptions, FeatureVector, Model};
//!
//! let f = Model::expression("(x1 + x2)^3").unwrap();
//! let x = FeatureVector::from_pairs([("x1", 5.0), ("x2", 1.0)]).unwrap();
//! let zero = FeatureVector::from_pairs([("x1", 0.0), ("x2", 0.0)]).unwrap();
//! let a = bshap(&f, &x, &zero, &EngineOptions::exact()).unwrap();
//! assert_eq!(a.values(), &[170.0, 46.0]);
//! ```

pub mod attribution;
pub mod dataset;
pub mod distribution;
pub mod error;
pub mod expr;
pub mod features;
pub mod game;
pub mod methods;
pub mod model;
pub mod pms;
pub mod scalar;
pub mod shapley;

pub use dataset::{Closeness, Tolerances};
pub use distribution::{DistributionKind, DistributionSpec};
pub use error::{Error, Result};
pub use features::{feature_names, Coalition, FeatureNames, FeatureSubset};
pub use game::{FnSetFunction, SetFunction};
pub use methods::{
    bshap, ces, ces_empirical, compositional_bshap, ig, micro_shapley, rbshap, reduce_to_cost_sharing, BaselineDraw,
    EmpiricalOptions, IgOptions, Method, ReductionOptions,
};
pub use model::GradientMode;
pub use pms::{completed_set_function, estimate_marginal, pms};
pub use scalar::Scalar;
pub use shapley::{fixed_permutation_marginals, shapley, shapley_exact, shapley_sampled, EngineMode, EngineOptions};

pub type FeatureVector = features::FeatureVector<f64>;
pub type Model = model::Model<f64>;
pub type Dataset = dataset::Dataset<f64>;
pub type DiscreteDistribution = distribution::DiscreteDistribution<f64>;
pub type Attribution = attribution::Attribution<f64>;
pub type SetFunctionTable = game::SetFunctionTable<f64>;
pub type PossibilityPredicate = pms::PossibilityPredicate<f64>;
pub type AttributionRequest = methods::AttributionRequest<f64>;
pub type CostSharingPair = methods::CostSharingPair<f64>;

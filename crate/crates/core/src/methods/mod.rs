//! Attribution methods, each a set-function constructor fed to the Shapley
//! engine, plus integrated gradients and the cost-sharing reduction.

pub mod baseline;
pub mod compositional;
pub mod conditional;
pub mod gradient;
pub mod reduction;
pub mod request;

pub use baseline::{bshap, micro_shapley, rbshap, BaselineDraw, BaselineGame};
pub use compositional::compositional_bshap;
pub use conditional::{ces, ces_empirical, ConditionalGame, EmpiricalGame, EmpiricalOptions};
pub use gradient::{ig, IgOptions};
pub use reduction::{reduce_to_cost_sharing, CostSharingPair, ReductionOptions};
pub use request::{AttributionRequest, Method};

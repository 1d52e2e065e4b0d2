//! Layer-by-layer BShap: attribute the outer model to its intermediate
//! nodes, then pass each node's score down to the base features.

use crate::attribution::Attribution;
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::methods::baseline::{align, bshap};
use crate::model::Model;
use crate::scalar::Scalar;
use crate::shapley::EngineOptions;

/// A node's score is shared among base features in proportion to the
/// magnitude of their inner BShap scores; a node whose inner scores are all
/// zero splits equally across the base features.
pub fn compositional_bshap<T: Scalar>(
    f: &Model<T>,
    x: &FeatureVector<T>,
    baseline: &FeatureVector<T>,
    opts: &EngineOptions,
) -> Result<Attribution<T>> {
    let Model::Layered(layered) = f else {
        return Err(Error::Argument(format!("compositional BShap needs a layered model, got {}", f.kind())));
    };
    let baseline = align(x, baseline, "baseline")?;
    let node_x = f.node_values(x)?;
    let node_b = f.node_values(&baseline)?;
    let outer = bshap(&layered.outer, &node_x, &node_b, opts)?;
    let n = x.len();
    let mut scores = vec![T::zero(); n];
    for (node, share) in layered.nodes.iter().zip(outer.values()) {
        let inner = bshap(&node.model, x, &baseline, opts)?;
        let mass: T = inner.values().iter().map(|s| s.abs()).sum();
        for (i, s) in inner.values().iter().enumerate() {
            let w = if mass == T::zero() { T::one() / T::from_count(n) } else { s.abs() / mass };
            scores[i] = scores[i] + *share * w;
        }
    }
    Ok(Attribution::new(x.names().clone(), scores, "compositional_bshap", f.eval(&baseline)?, f.eval(x)?)?
        .note("node scores shared in proportion to |inner score|; all-zero inner scores split equally"))
}

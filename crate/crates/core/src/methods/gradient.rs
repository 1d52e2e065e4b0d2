//! Integrated gradients along the straight line from the baseline.

use serde::{Deserialize, Serialize};

use crate::attribution::{Attribution, Provenance};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::methods::baseline::align;
use crate::model::{GradientMode, Model};
use crate::scalar::Scalar;

pub const DEFAULT_STEPS: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IgOptions {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_gradient")]
    pub gradient: GradientMode,
}

fn default_steps() -> usize {
    DEFAULT_STEPS
}

fn default_gradient() -> GradientMode {
    GradientMode::Analytic
}

impl Default for IgOptions {
    fn default() -> Self {
        Self { steps: DEFAULT_STEPS, gradient: GradientMode::Analytic }
    }
}

/// Midpoint rule: `IG_i = (x_i - x'_i) · mean_k ∂_i f(x' + ((k - ½)/steps)(x - x'))`.
pub fn ig<T: Scalar>(
    f: &Model<T>,
    x: &FeatureVector<T>,
    baseline: &FeatureVector<T>,
    opts: IgOptions,
) -> Result<Attribution<T>> {
    if opts.steps == 0 {
        return Err(Error::Argument("integrated gradients needs at least one step".into()));
    }
    let baseline = align(x, baseline, "baseline")?;
    let n = x.len();
    let steps = T::from_count(opts.steps);
    let half = T::lit(0.5);
    let mut sums = vec![T::zero(); n];
    let mut point = baseline.clone();
    for k in 1..=opts.steps {
        let alpha = (T::from_count(k) - half) / steps;
        for i in 0..n {
            point.set_at(i, baseline.at(i) + alpha * (x.at(i) - baseline.at(i)));
        }
        for (s, g) in sums.iter_mut().zip(f.gradient(&point, opts.gradient)?) {
            *s = *s + g;
        }
    }
    let scores = (0..n).map(|i| (x.at(i) - baseline.at(i)) * sums[i] / steps).collect();
    Ok(Attribution::new(x.names().clone(), scores, "ig", f.eval(&baseline)?, f.eval(x)?)?.with_provenance(Provenance {
        baseline: Some(baseline.cast()),
        notes: vec![format!("{} midpoint steps, {:?} gradients", opts.steps, opts.gradient)],
        ..Default::default()
    }))
}

//! Rewriting an attribution problem as the difference of two cost-sharing
//! problems: nondecreasing functions with a zero baseline and a nonnegative
//! explicand.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::methods::baseline::align;
use crate::model::{GradientMode, Model};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionOptions {
    /// Grid points per axis when the derivative lower bound is searched.
    pub grid_points: usize,
    /// A negative grid minimum is pushed down by this fraction of its magnitude.
    pub margin: f64,
    /// Refuse grids with more points than this.
    pub max_grid: usize,
    /// Used for models without analytic derivatives.
    pub fallback_step: f64,
}

impl Default for ReductionOptions {
    fn default() -> Self {
        Self { grid_points: 33, margin: 0.1, max_grid: 1 << 21, fallback_step: 1e-5 }
    }
}

/// `x^n_i = c_i·x_i + d_i` for one feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureTransform<T> {
    pub scale: T,
    pub shift: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostSharingPair<T> {
    pub transforms: Vec<(String, FeatureTransform<T>)>,
    /// The transformed explicand; the transformed baseline is all zeros.
    pub explicand: FeatureVector<T>,
    /// `f` rewritten over the transformed features.
    pub transformed: Model<T>,
    /// A lower bound on every partial derivative of `transformed` over the box.
    pub lower_bound: T,
    pub f1: Model<T>,
    pub f2: Model<T>,
}

impl<T: Scalar> CostSharingPair<T> {
    pub fn baseline(&self) -> FeatureVector<T> {
        FeatureVector::zeros(self.explicand.names().clone())
    }

    /// Map an original-space vector into the transformed space.
    pub fn transform(&self, v: &FeatureVector<T>) -> Result<FeatureVector<T>> {
        let v = align(&self.explicand, v, "vector")?;
        let values = self.transforms.iter().zip(v.values()).map(|((_, t), x)| t.scale * *x + t.shift).collect();
        FeatureVector::new(self.explicand.names().clone(), values)
    }
}

fn grid<T: Scalar>(upper: &FeatureVector<T>, points: usize, cap: usize) -> Result<Vec<FeatureVector<T>>> {
    let n = upper.len();
    let total = (0..n).try_fold(1usize, |acc, _| acc.checked_mul(points)).unwrap_or(usize::MAX);
    if total > cap {
        return Err(Error::Size { what: "derivative search grid".into(), actual: total, cap });
    }
    let denom = T::from_count(points.max(2) - 1);
    Ok((0..total)
        .map(|mut idx| {
            let values = (0..n)
                .map(|i| {
                    let k = idx % points;
                    idx /= points;
                    if points == 1 {
                        upper.at(i)
                    } else {
                        upper.at(i) * T::from_count(k) / denom
                    }
                })
                .collect();
            FeatureVector::from_parts_unchecked(upper.names().clone(), values)
        })
        .collect())
}

/// Smallest partial derivative of `f` over `[0, upper]`, sampled on a grid.
pub fn grid_min_partial<T: Scalar>(f: &Model<T>, upper: &FeatureVector<T>, opts: &ReductionOptions) -> Result<T> {
    let mode = if f.supports_analytic_gradient() {
        GradientMode::Analytic
    } else {
        GradientMode::CentralDifference { h: opts.fallback_step }
    };
    let mut lowest = T::infinity();
    for point in grid(upper, opts.grid_points, opts.max_grid)? {
        for g in f.gradient(&point, mode).map_err(|e| Error::Reduction(format!("derivative unavailable: {e}")))? {
            if !g.is_finite() {
                return Err(Error::Reduction(format!("unbounded derivative near {point}")));
            }
            lowest = lowest.min(g);
        }
    }
    Ok(lowest)
}

pub fn reduce_to_cost_sharing<T: Scalar>(
    f: &Model<T>,
    x: &FeatureVector<T>,
    baseline: &FeatureVector<T>,
    opts: &ReductionOptions,
) -> Result<CostSharingPair<T>> {
    let baseline = align(x, baseline, "baseline")?;
    let mut transforms = Vec::with_capacity(x.len());
    let mut transformed = f.clone();
    let mut explicand = Vec::with_capacity(x.len());
    for (i, name) in x.names().iter().enumerate() {
        let scale = if x.at(i) >= baseline.at(i) { T::one() } else { -T::one() };
        let shift = -scale * baseline.at(i);
        transformed = Model::affine_reparam(transformed, name, scale, shift)?;
        explicand.push((x.at(i) - baseline.at(i)).abs());
        transforms.push((name.clone(), FeatureTransform { scale, shift }));
    }
    let explicand = FeatureVector::new(x.names().clone(), explicand)?;
    let lower_bound = match f {
        Model::Linear(l) => transforms
            .iter()
            .map(|(n, t)| t.scale * l.coefficients.get(n).unwrap_or_else(T::zero))
            .fold(T::infinity(), T::min),
        _ => {
            let p = grid_min_partial(&transformed, &explicand, opts)?;
            // a nonnegative bound leaves f2 at zero however far it is lowered
            if p < T::zero() {
                p - T::lit(opts.margin) * p.abs()
            } else {
                p
            }
        }
    };
    if !lower_bound.is_finite() {
        return Err(Error::Reduction("derivative lower bound is not finite".into()));
    }
    let slope = if lower_bound < T::zero() { -lower_bound } else { T::zero() };
    let f2 = Model::linear(T::zero(), x.names().iter().map(|n| (n.clone(), slope)))?;
    let f1 = Model::sum([(T::one(), transformed.clone()), (T::one(), f2.clone())]);
    Ok(CostSharingPair { transforms, explicand, transformed, lower_bound, f1, f2 })
}

//! The model abstraction: real-valued functions over named features.
//!
//! All variants are immutable once built and evaluation is pure, so a model
//! can be shared across worker threads freely.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::features::{FeatureNames, FeatureVector};
use crate::scalar::Scalar;

type Lookup<'a, T> = &'a dyn Fn(&str) -> Result<T>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", bound = "T: Scalar")]
pub enum Model<T> {
    Linear(Linear<T>),
    Expression(Expression<T>),
    TreeEnsemble(TreeEnsemble<T>),
    Table(LookupTable<T>),
    Sum(Sum<T>),
    AffineReparam(AffineReparam<T>),
    Layered(Layered<T>),
}

/// `intercept + Σ coefficient_i · x_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Linear<T> {
    pub intercept: T,
    pub coefficients: FeatureVector<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExpressionSpec", into = "ExpressionSpec", bound = "T: Scalar")]
pub struct Expression<T> {
    source: String,
    ast: Expr<T>,
    features: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct ExpressionSpec {
    expr: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    features: Option<Vec<String>>,
}

impl<T: Scalar> TryFrom<ExpressionSpec> for Expression<T> {
    type Error = Error;

    fn try_from(spec: ExpressionSpec) -> Result<Self> {
        let mut e = Expression::parse(&spec.expr)?;
        if let Some(order) = spec.features {
            if let Some(missing) = e.features.iter().find(|f| !order.contains(f)) {
                return Err(Error::Construction(format!(
                    "expression references `{missing}` which is not in its feature list"
                )));
            }
            crate::features::check_unique(&order)?;
            e.features = order;
        }
        Ok(e)
    }
}

impl<T: Scalar> From<Expression<T>> for ExpressionSpec {
    fn from(e: Expression<T>) -> Self {
        let declared = e.ast.variables() != e.features;
        ExpressionSpec { expr: e.source, features: declared.then_some(e.features) }
    }
}

impl<T: Scalar> Expression<T> {
    pub fn parse(source: &str) -> Result<Self> {
        let ast = Expr::parse(source)?;
        let features = ast.variables();
        Ok(Self { source: source.to_string(), ast, features })
    }

    pub fn from_ast(ast: Expr<T>) -> Self {
        let features = ast.variables();
        Self { source: ast.to_string(), ast, features }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &Expr<T> {
        &self.ast
    }
}

/// Axis-aligned binary decision tree. Node 0 is the root; a split sends
/// `x[feature] < threshold` left and everything else (ties included) right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TreeSpec<T>", into = "TreeSpec<T>", bound = "T: Scalar")]
pub struct Tree<T> {
    nodes: Vec<Node<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, bound = "T: Scalar")]
pub enum Node<T> {
    Split { feature: String, threshold: T, left: usize, right: usize },
    Leaf { value: T },
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct TreeSpec<T> {
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> TryFrom<TreeSpec<T>> for Tree<T> {
    type Error = Error;

    fn try_from(spec: TreeSpec<T>) -> Result<Self> {
        Tree::new(spec.nodes)
    }
}

impl<T: Scalar> From<Tree<T>> for TreeSpec<T> {
    fn from(t: Tree<T>) -> Self {
        TreeSpec { nodes: t.nodes }
    }
}

impl<T: Scalar> Tree<T> {
    /// Children must have larger indices than their parent, which rules out cycles.
    pub fn new(nodes: Vec<Node<T>>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Construction("tree has no nodes".into()));
        }
        for (i, n) in nodes.iter().enumerate() {
            if let Node::Split { left, right, threshold, .. } = n {
                if *left <= i || *right <= i || *left >= nodes.len() || *right >= nodes.len() {
                    return Err(Error::Construction(format!("node {i} has invalid children")));
                }
                if !threshold.is_finite() {
                    return Err(Error::Construction(format!("node {i} has non-finite threshold")));
                }
            }
        }
        Ok(Self { nodes })
    }

    pub fn leaf(value: T) -> Self {
        Self { nodes: vec![Node::Leaf { value }] }
    }

    pub fn stump(feature: &str, threshold: T, below: T, at_or_above: T) -> Self {
        Self {
            nodes: vec![
                Node::Split { feature: feature.into(), threshold, left: 1, right: 2 },
                Node::Leaf { value: below },
                Node::Leaf { value: at_or_above },
            ],
        }
    }

    fn eval(&self, lookup: Lookup<'_, T>) -> Result<T> {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return Ok(*value),
                Node::Split { feature, threshold, left, right } => {
                    i = if lookup(feature)? < *threshold { *left } else { *right };
                }
            }
        }
    }

    fn features(&self, out: &mut Vec<String>) {
        for n in &self.nodes {
            if let Node::Split { feature, .. } = n {
                push_unique(out, feature);
            }
        }
    }
}

/// Uniform mean of the trees, or a weighted average when weights are given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TreeEnsemble<T> {
    pub trees: Vec<Tree<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TableRow<T> {
    pub values: FeatureVector<T>,
    pub output: T,
}

/// Exact-match lookup over enumerated inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LookupTable<T> {
    pub rows: Vec<TableRow<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Term<T> {
    pub weight: T,
    pub model: Model<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Sum<T> {
    pub terms: Vec<Term<T>>,
}

/// Evaluates `model` with `feature` replaced by `(x_feature - shift) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AffineReparam<T> {
    pub model: Box<Model<T>>,
    pub feature: String,
    pub scale: T,
    pub shift: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LayerNode<T> {
    pub name: String,
    pub model: Model<T>,
}

/// An outer model over named intermediate nodes, each an inner model over
/// the base features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Layered<T> {
    pub outer: Box<Model<T>>,
    pub nodes: Vec<LayerNode<T>>,
}

/// How `partial_derivative` obtains a gradient component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    Analytic,
    /// Symmetric two-point difference with step `h · max(1, |x_i|)`.
    CentralDifference {
        h: f64,
    },
}

fn push_unique(out: &mut Vec<String>, name: &str) {
    if !out.iter().any(|n| n == name) {
        out.push(name.to_string());
    }
}

impl<T: Scalar> Model<T> {
    pub fn linear<S: Into<String>>(intercept: T, coefficients: impl IntoIterator<Item = (S, T)>) -> Result<Self> {
        Ok(Model::Linear(Linear { intercept, coefficients: FeatureVector::from_pairs(coefficients)? }))
    }

    pub fn expression(source: &str) -> Result<Self> {
        Ok(Model::Expression(Expression::parse(source)?))
    }

    pub fn tree_ensemble(trees: Vec<Tree<T>>, weights: Option<Vec<T>>) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::Construction("ensemble has no trees".into()));
        }
        if let Some(w) = &weights {
            if w.len() != trees.len() {
                return Err(Error::Construction("one weight per tree required".into()));
            }
            let total: T = w.iter().copied().sum();
            if w.iter().any(|v| *v < T::zero()) || total <= T::zero() {
                return Err(Error::Construction("tree weights must be nonnegative with positive sum".into()));
            }
        }
        Ok(Model::TreeEnsemble(TreeEnsemble { trees, weights }))
    }

    pub fn table(rows: Vec<(FeatureVector<T>, T)>, default: Option<T>) -> Self {
        Model::Table(LookupTable {
            rows: rows.into_iter().map(|(values, output)| TableRow { values, output }).collect(),
            default,
        })
    }

    pub fn sum(terms: impl IntoIterator<Item = (T, Model<T>)>) -> Self {
        Model::Sum(Sum { terms: terms.into_iter().map(|(weight, model)| Term { weight, model }).collect() })
    }

    pub fn affine_reparam(model: Model<T>, feature: &str, scale: T, shift: T) -> Result<Self> {
        if scale == T::zero() || !scale.is_finite() || !shift.is_finite() {
            return Err(Error::Construction("affine reparameterization needs finite c != 0 and finite d".into()));
        }
        Ok(Model::AffineReparam(AffineReparam { model: Box::new(model), feature: feature.to_string(), scale, shift }))
    }

    pub fn layered<S: Into<String>>(outer: Model<T>, nodes: impl IntoIterator<Item = (S, Model<T>)>) -> Result<Self> {
        let nodes: Vec<LayerNode<T>> =
            nodes.into_iter().map(|(n, model)| LayerNode { name: n.into(), model }).collect();
        let names: Vec<String> = nodes.iter().map(|n| n.name.clone()).collect();
        crate::features::check_unique(&names)?;
        if let Some(missing) = outer.features().into_iter().find(|f| !names.contains(f)) {
            return Err(Error::Construction(format!("outer model reads `{missing}` which is not a node")));
        }
        Ok(Model::Layered(Layered { outer: Box::new(outer), nodes }))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Model::Linear(_) => "linear",
            Model::Expression(_) => "expression",
            Model::TreeEnsemble(_) => "tree_ensemble",
            Model::Table(_) => "table",
            Model::Sum(_) => "sum",
            Model::AffineReparam(_) => "affine_reparam",
            Model::Layered(_) => "layered",
        }
    }

    /// Base features the model reads, in a stable order.
    pub fn features(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_features(&mut out);
        out
    }

    fn collect_features(&self, out: &mut Vec<String>) {
        match self {
            Model::Linear(l) => l.coefficients.names().iter().for_each(|n| push_unique(out, n)),
            Model::Expression(e) => e.features.iter().for_each(|n| push_unique(out, n)),
            Model::TreeEnsemble(te) => te.trees.iter().for_each(|t| t.features(out)),
            Model::Table(t) => {
                for r in &t.rows {
                    r.values.names().iter().for_each(|n| push_unique(out, n));
                }
            }
            Model::Sum(s) => s.terms.iter().for_each(|t| t.model.collect_features(out)),
            Model::AffineReparam(a) => {
                a.model.collect_features(out);
                push_unique(out, &a.feature);
            }
            Model::Layered(l) => l.nodes.iter().for_each(|n| n.model.collect_features(out)),
        }
    }

    pub fn feature_names(&self) -> FeatureNames {
        self.features().into()
    }

    /// `f(x)`.
    pub fn eval(&self, x: &FeatureVector<T>) -> Result<T> {
        self.eval_with(&|n: &str| x.value(n))
    }

    pub fn eval_with(&self, lookup: Lookup<'_, T>) -> Result<T> {
        match self {
            Model::Linear(l) => {
                let mut acc = l.intercept;
                for (n, c) in l.coefficients.names().iter().zip(l.coefficients.values()) {
                    acc = acc + *c * lookup(n)?;
                }
                Ok(acc)
            }
            Model::Expression(e) => e.ast.eval(&lookup),
            Model::TreeEnsemble(te) => {
                let mut acc = T::zero();
                let mut total = T::zero();
                for (k, tree) in te.trees.iter().enumerate() {
                    let w = te.weights.as_ref().map_or(T::one(), |w| w[k]);
                    acc = acc + w * tree.eval(lookup)?;
                    total = total + w;
                }
                Ok(acc / total)
            }
            Model::Table(t) => {
                'rows: for row in &t.rows {
                    for (n, v) in row.values.names().iter().zip(row.values.values()) {
                        if lookup(n)? != *v {
                            continue 'rows;
                        }
                    }
                    return Ok(row.output);
                }
                match t.default {
                    Some(d) => Ok(d),
                    None => {
                        let probe = t.rows.first().map(|r| {
                            let vals: Vec<String> = r
                                .values
                                .names()
                                .iter()
                                .map(|n| format!("{n}={}", lookup(n).map_or("?".into(), |v| v.to_string())))
                                .collect();
                            format!("({})", vals.join(", "))
                        });
                        Err(Error::LookupMiss(format!(
                            "table has no row for {} and no default value",
                            probe.unwrap_or_else(|| "input".into())
                        )))
                    }
                }
            }
            Model::Sum(s) => {
                let mut acc = T::zero();
                for t in &s.terms {
                    acc = acc + t.weight * t.model.eval_with(lookup)?;
                }
                Ok(acc)
            }
            Model::AffineReparam(a) => {
                let inner = |n: &str| -> Result<T> {
                    let v = lookup(n)?;
                    Ok(if n == a.feature { (v - a.shift) / a.scale } else { v })
                };
                a.model.eval_with(&inner)
            }
            Model::Layered(l) => {
                let values = l.nodes.iter().map(|n| n.model.eval_with(lookup)).collect::<Result<Vec<T>>>()?;
                let node_lookup = |name: &str| -> Result<T> {
                    l.nodes
                        .iter()
                        .position(|n| n.name == name)
                        .map(|i| values[i])
                        .ok_or_else(|| Error::MissingFeature(name.to_string()))
                };
                l.outer.eval_with(&node_lookup)
            }
        }
    }

    /// Values of the intermediate nodes of a layered model.
    pub fn node_values(&self, x: &FeatureVector<T>) -> Result<FeatureVector<T>> {
        let Model::Layered(l) = self else {
            return Err(Error::Argument("node values requested on a non-layered model".into()));
        };
        let pairs = l.nodes.iter().map(|n| Ok((n.name.clone(), n.model.eval(x)?))).collect::<Result<Vec<_>>>()?;
        FeatureVector::from_pairs(pairs)
    }

    pub fn supports_analytic_gradient(&self) -> bool {
        match self {
            Model::Linear(_) | Model::Expression(_) => true,
            Model::TreeEnsemble(_) | Model::Table(_) => false,
            Model::Sum(s) => s.terms.iter().all(|t| t.model.supports_analytic_gradient()),
            Model::AffineReparam(a) => a.model.supports_analytic_gradient(),
            Model::Layered(l) => {
                l.outer.supports_analytic_gradient() && l.nodes.iter().all(|n| n.model.supports_analytic_gradient())
            }
        }
    }

    fn analytic_partial(&self, lookup: Lookup<'_, T>, var: &str) -> Result<T> {
        match self {
            Model::Linear(l) => Ok(l.coefficients.get(var).unwrap_or_else(T::zero)),
            Model::Expression(e) => e.ast.partial(&lookup, var),
            Model::TreeEnsemble(_) | Model::Table(_) => Err(Error::Capability(format!(
                "analytic derivative unavailable for {} models; use central-difference mode, \
                 or avoid gradient methods on piecewise-constant models",
                self.kind()
            ))),
            Model::Sum(s) => {
                let mut acc = T::zero();
                for t in &s.terms {
                    acc = acc + t.weight * t.model.analytic_partial(lookup, var)?;
                }
                Ok(acc)
            }
            Model::AffineReparam(a) => {
                let inner = |n: &str| -> Result<T> {
                    let v = lookup(n)?;
                    Ok(if n == a.feature { (v - a.shift) / a.scale } else { v })
                };
                let d = a.model.analytic_partial(&inner, var)?;
                Ok(if var == a.feature { d / a.scale } else { d })
            }
            Model::Layered(l) => {
                let values = l.nodes.iter().map(|n| n.model.eval_with(lookup)).collect::<Result<Vec<T>>>()?;
                let node_lookup = |name: &str| -> Result<T> {
                    l.nodes
                        .iter()
                        .position(|n| n.name == name)
                        .map(|i| values[i])
                        .ok_or_else(|| Error::MissingFeature(name.to_string()))
                };
                let mut acc = T::zero();
                for n in &l.nodes {
                    let outer = l.outer.analytic_partial(&node_lookup, &n.name)?;
                    if outer != T::zero() {
                        acc = acc + outer * n.model.analytic_partial(lookup, var)?;
                    }
                }
                Ok(acc)
            }
        }
    }

    /// `∂f/∂x_i` at `x`.
    pub fn partial_derivative(&self, x: &FeatureVector<T>, feature: &str, mode: GradientMode) -> Result<T> {
        let i = x.index_of(feature).ok_or_else(|| Error::MissingFeature(feature.to_string()))?;
        match mode {
            GradientMode::Analytic => self.analytic_partial(&|n: &str| x.value(n), feature),
            GradientMode::CentralDifference { h } => {
                if h <= 0.0 || !h.is_finite() {
                    return Err(Error::Argument(format!("finite-difference step must be positive, got {h}")));
                }
                let xi = x.at(i);
                let step = T::lit(h) * xi.abs().max(T::one());
                let mut hi = x.clone();
                hi.set_at(i, xi + step);
                let mut lo = x.clone();
                lo.set_at(i, xi - step);
                let d = (self.eval(&hi)? - self.eval(&lo)?) / ((xi + step) - (xi - step));
                if !d.is_finite() {
                    return Err(Error::Domain(format!("finite-difference derivative for `{feature}` is not finite")));
                }
                Ok(d)
            }
        }
    }

    pub fn gradient(&self, x: &FeatureVector<T>, mode: GradientMode) -> Result<Vec<T>> {
        x.names().iter().map(|n| self.partial_derivative(x, n, mode)).collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Parse { position: e.column(), message: format!("model json line {}: {e}", e.line()) })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("models serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::feature_names;

    fn fv(pairs: &[(&str, f64)]) -> FeatureVector<f64> {
        FeatureVector::from_pairs(pairs.iter().map(|(n, v)| (*n, *v))).unwrap()
    }

    fn diabetes() -> Model<f64> {
        let names = ["age", "sex", "bmi", "bp", "s1", "s2", "s3", "s4", "s5", "s6"];
        let coef = |n: &str| match n {
            "bmi" => 399.0,
            "bp" => 4.9,
            "s5" => 291.0,
            _ => 0.0,
        };
        Model::linear(154.15, names.iter().map(|n| (*n, coef(n)))).unwrap()
    }

    #[test]
    fn linear_intercept_at_origin() {
        let m = diabetes();
        let x = FeatureVector::zeros(m.feature_names());
        assert_eq!(m.eval(&x).unwrap(), 154.15);
    }

    #[test]
    fn missing_feature_is_named() {
        let m = Model::<f64>::expression("a + b").unwrap();
        assert_eq!(m.eval(&fv(&[("a", 1.0)])), Err(Error::MissingFeature("b".into())));
    }

    #[test]
    fn derivative_modes() {
        let m = diabetes();
        let x = fv(&[
            ("age", 0.3),
            ("sex", 1.0),
            ("bmi", 0.2),
            ("bp", 0.0),
            ("s1", 0.0),
            ("s2", 0.0),
            ("s3", 0.0),
            ("s4", 0.0),
            ("s5", 0.1),
            ("s6", 0.0),
        ]);
        assert_eq!(m.partial_derivative(&x, "bmi", GradientMode::Analytic).unwrap(), 399.0);

        let cube = Model::<f64>::expression("(x1 + x2)^3").unwrap();
        let p = fv(&[("x1", 5.0), ("x2", 1.0)]);
        assert_eq!(cube.partial_derivative(&p, "x1", GradientMode::Analytic).unwrap(), 108.0);

        let min = Model::<f64>::expression("min(x1, x2)").unwrap();
        let d = min.partial_derivative(&p, "x2", GradientMode::CentralDifference { h: 1e-6 }).unwrap();
        assert!((d - 1.0).abs() < 1e-6, "{d}");
        assert!(min.partial_derivative(&p, "x2", GradientMode::CentralDifference { h: 0.0 }).is_err());
    }

    #[test]
    fn trees_split_ties_right_and_refuse_analytic_gradients() {
        let t = Tree::stump("x", 1.0, -1.0, 1.0);
        let m = Model::tree_ensemble(vec![t, Tree::leaf(3.0)], Some(vec![1.0, 3.0])).unwrap();
        assert_eq!(m.eval(&fv(&[("x", 0.5)])).unwrap(), (-1.0 + 9.0) / 4.0);
        assert_eq!(m.eval(&fv(&[("x", 1.0)])).unwrap(), (1.0 + 9.0) / 4.0);
        let err = m.partial_derivative(&fv(&[("x", 0.5)]), "x", GradientMode::Analytic);
        assert!(matches!(err, Err(Error::Capability(_))));
        assert!(Tree::new(vec![Node::Split { feature: "x".into(), threshold: 0.0, left: 0, right: 1 }]).is_err());
    }

    #[test]
    fn table_lookup_and_miss() {
        let m = Model::table(vec![(fv(&[("a", 1.0), ("b", 0.0)]), 7.0)], None);
        assert_eq!(m.eval(&fv(&[("a", 1.0), ("b", 0.0)])).unwrap(), 7.0);
        assert!(matches!(m.eval(&fv(&[("a", 0.0), ("b", 0.0)])), Err(Error::LookupMiss(_))));
        let with_default = Model::table(vec![(fv(&[("a", 1.0)]), 7.0)], Some(-1.0));
        assert_eq!(with_default.eval(&fv(&[("a", 2.0)])).unwrap(), -1.0);
    }

    #[test]
    fn affine_reparam_matches_transformed_input() {
        let f = Model::<f64>::expression("x^2 + 3*y").unwrap();
        let g = Model::affine_reparam(f.clone(), "x", -2.5, 4.0).unwrap();
        let v = 1.75;
        let lhs = g.eval(&fv(&[("x", -2.5 * v + 4.0), ("y", 2.0)])).unwrap();
        let rhs = f.eval(&fv(&[("x", v), ("y", 2.0)])).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
        let dg = g.partial_derivative(&fv(&[("x", -2.5 * v + 4.0), ("y", 2.0)]), "x", GradientMode::Analytic).unwrap();
        assert!((dg - 2.0 * v / -2.5).abs() < 1e-12);
        assert!(Model::affine_reparam(f, "x", 0.0, 1.0).is_err());
    }

    #[test]
    fn layered_evaluates_through_nodes() {
        let inner = Model::<f64>::expression("x1 * x2").unwrap();
        let m = Model::layered(
            Model::expression("a * b").unwrap(),
            [("a", inner), ("b", Model::expression("x3").unwrap())],
        )
        .unwrap();
        let x = fv(&[("x1", 2.0), ("x2", 3.0), ("x3", 4.0)]);
        assert_eq!(m.eval(&x).unwrap(), 24.0);
        assert_eq!(m.partial_derivative(&x, "x1", GradientMode::Analytic).unwrap(), 12.0);
        assert!(Model::layered(Model::<f64>::expression("a * c").unwrap(), [("a", Model::expression("x").unwrap())])
            .is_err());
    }

    #[test]
    fn json_round_trip_all_variants() {
        let names = feature_names(["x", "y"]);
        let row = FeatureVector::new(names, vec![1.0, 2.0]).unwrap();
        let m = Model::sum([
            (2.0, Model::linear(1.0, [("x", 3.0)]).unwrap()),
            (1.0, Model::affine_reparam(Model::expression("min(x, y)").unwrap(), "y", 2.0, 1.0).unwrap()),
            (1.0, Model::tree_ensemble(vec![Tree::stump("y", 0.5, 0.0, 1.0)], None).unwrap()),
            (1.0, Model::table(vec![(row, 1.0)], Some(0.0))),
            (
                1.0,
                Model::layered(Model::expression("n").unwrap(), [("n", Model::expression("x * y").unwrap())]).unwrap(),
            ),
        ]);
        let text = m.to_json();
        let back = Model::<f64>::from_json(&text).unwrap();
        assert_eq!(m, back);
        assert!(text.contains(r#""type": "affine_reparam""#));
    }

    #[test]
    fn expression_json_accepts_feature_order() {
        let m = Model::<f64>::from_json(r#"{"type":"expression","expr":"x2 + x1","features":["x1","x2"]}"#).unwrap();
        assert_eq!(m.features(), vec!["x1", "x2"]);
        assert!(Model::<f64>::from_json(r#"{"type":"expression","expr":"x2 + x1","features":["x1"]}"#).is_err());
    }
}

//! Axiom conformance checks that run against any attribution method.
//!
//! Each check first verifies the axiom's antecedent on the instance by brute
//! force over a finite domain (or accepts an explicit assertion), then
//! measures how far the method's scores are from the axiom's conclusion.

use serde::{Deserialize, Serialize};

use manyshap::methods::gradient::DEFAULT_STEPS;
use manyshap::methods::reduction::grid_min_partial;
use manyshap::{
    bshap, ces, ces_empirical, feature_names, ig, pms, rbshap, Attribution, BaselineDraw, Dataset,
    DiscreteDistribution, EmpiricalOptions, EngineOptions, Error, FeatureVector, GradientMode, IgOptions, Model,
    PossibilityPredicate, ReductionOptions, Result,
};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const GRADIENT_TOLERANCE: f64 = 1e-3;
pub const DOMAIN_CAP: usize = 200_000;
pub const DOMINANCE_GRID: usize = 33;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    Dummy,
    Efficiency,
    Linearity,
    Symmetry,
    Asi,
    DemandMonotonicity,
    Proportionality,
    StrongMonotonicity,
}

impl Axiom {
    pub const ALL: [Axiom; 8] = [
        Axiom::Dummy,
        Axiom::Efficiency,
        Axiom::Linearity,
        Axiom::Symmetry,
        Axiom::Asi,
        Axiom::DemandMonotonicity,
        Axiom::Proportionality,
        Axiom::StrongMonotonicity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axiom::Dummy => "dummy",
            Axiom::Efficiency => "efficiency",
            Axiom::Linearity => "linearity",
            Axiom::Symmetry => "symmetry",
            Axiom::Asi => "asi",
            Axiom::DemandMonotonicity => "demand_monotonicity",
            Axiom::Proportionality => "proportionality",
            Axiom::StrongMonotonicity => "strong_monotonicity",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        let name = name.replace('-', "_");
        Self::ALL.into_iter().find(|a| a.name() == name).ok_or_else(|| {
            let known: Vec<&str> = Self::ALL.iter().map(|a| a.name()).collect();
            Error::LookupMiss(format!("unknown axiom `{name}`; known: {}", known.join(", ")))
        })
    }
}

/// The attribution method a check runs against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MethodUnderTest {
    Bshap,
    Ces,
    CesEmpirical { smoothing: f64 },
    Rbshap,
    Ig { steps: usize },
    Pms,
}

impl MethodUnderTest {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "bshap" => Self::Bshap,
            "ces" => Self::Ces,
            "ces_empirical" => Self::CesEmpirical { smoothing: 0.0 },
            "rbshap" => Self::Rbshap,
            "ig" => Self::Ig { steps: DEFAULT_STEPS },
            "pms" => Self::Pms,
            other => match other.strip_prefix("ces_empirical_").and_then(|t| t.parse::<f64>().ok()) {
                Some(smoothing) => Self::CesEmpirical { smoothing },
                None => {
                    return Err(Error::LookupMiss(format!(
                        "unknown method `{other}`; known: bshap, ces, ces_empirical[_τ], rbshap, ig, pms"
                    )))
                }
            },
        })
    }

    pub fn name(&self) -> String {
        match self {
            Self::Bshap => "bshap".into(),
            Self::Ces => "ces".into(),
            Self::CesEmpirical { smoothing } if *smoothing == 0.0 => "ces_empirical".into(),
            Self::CesEmpirical { smoothing } => format!("ces_empirical_{smoothing}"),
            Self::Rbshap => "rbshap".into(),
            Self::Ig { .. } => "ig".into(),
            Self::Pms => "pms".into(),
        }
    }

    pub fn default_tolerance(&self) -> f64 {
        match self {
            Self::Ig { .. } => GRADIENT_TOLERANCE,
            _ => DEFAULT_TOLERANCE,
        }
    }

    pub fn attribute(&self, f: &Model, x: &FeatureVector, ctx: &Context) -> Result<Attribution> {
        self.attribute_with(f, x, ctx, &EngineOptions::exact())
    }

    pub fn attribute_with(
        &self,
        f: &Model,
        x: &FeatureVector,
        ctx: &Context,
        engine: &EngineOptions,
    ) -> Result<Attribution> {
        let need = |what: &str| Error::Argument(format!("{} needs {what}", self.name()));
        match self {
            Self::Bshap => bshap(f, x, ctx.baseline.as_ref().ok_or_else(|| need("a baseline"))?, engine),
            Self::Ig { steps } => ig(
                f,
                x,
                ctx.baseline.as_ref().ok_or_else(|| need("a baseline"))?,
                IgOptions { steps: *steps, gradient: GradientMode::Analytic },
            ),
            Self::Pms => pms(
                f,
                x,
                ctx.baseline.as_ref().ok_or_else(|| need("a baseline"))?,
                ctx.possibility.as_ref().unwrap_or(&PossibilityPredicate::Always),
                engine,
            ),
            Self::Ces => ces(f, x, ctx.distribution.as_ref().ok_or_else(|| need("a distribution"))?, engine),
            Self::Rbshap => rbshap(
                f,
                x,
                ctx.distribution.as_ref().ok_or_else(|| need("a distribution"))?,
                BaselineDraw::Exact,
                engine,
            ),
            Self::CesEmpirical { smoothing } => ces_empirical(
                f,
                x,
                ctx.data.as_ref().ok_or_else(|| need("data"))?,
                EmpiricalOptions::smoothed(*smoothing),
                engine,
            ),
        }
    }
}

/// What absence is measured against.
#[derive(Debug, Clone, Default)]
pub struct Context {
    pub baseline: Option<FeatureVector>,
    pub distribution: Option<DiscreteDistribution>,
    pub data: Option<Dataset>,
    pub possibility: Option<PossibilityPredicate>,
}

impl Context {
    pub fn baseline(b: FeatureVector) -> Self {
        Self { baseline: Some(b), ..Self::default() }
    }

    pub fn distribution(d: DiscreteDistribution) -> Self {
        Self { distribution: Some(d), ..Self::default() }
    }

    pub fn data(d: Dataset) -> Self {
        Self { data: Some(d), ..Self::default() }
    }

    /// The same context seen through a subset of the features.
    fn restrict(&self, names: &[String]) -> Result<Self> {
        let keep = feature_names(names.iter().cloned());
        Ok(Self {
            baseline: self.baseline.as_ref().map(|b| b.reorder(&keep)).transpose()?,
            distribution: self.distribution.as_ref().map(|d| d.marginalize(&keep)).transpose()?,
            data: self.data.as_ref().map(|d| d.select(&keep)).transpose()?,
            possibility: self.possibility.clone(),
        })
    }

    /// Apply `v ↦ c·v + d` to one feature everywhere it appears.
    fn map_feature(&self, feature: &str, c: f64, d: f64) -> Result<Self> {
        let map = |v: &FeatureVector| -> Result<FeatureVector> { v.with(feature, c * v.value(feature)? + d) };
        let data = match &self.data {
            Some(ds) => {
                let rows = ds.iter().map(|r| map(&r)).collect::<Result<Vec<_>>>()?;
                let weights = ds.weights().map(<[f64]>::to_vec);
                Some(Dataset::new(ds.names().clone(), rows.iter().map(|r| r.values().to_vec()).collect(), weights)?)
            }
            None => None,
        };
        if self.possibility.is_some() {
            return Err(Error::Argument("affine checks do not transform possibility predicates".into()));
        }
        Ok(Self {
            baseline: self.baseline.as_ref().map(map).transpose()?,
            distribution: self
                .distribution
                .as_ref()
                .map(|dist| dist.map_feature(feature, |v| c * v + d))
                .transpose()?,
            data,
            possibility: None,
        })
    }
}

/// Inputs for one axiom check. Only the fields the axiom reads need to be set.
#[derive(Debug, Clone, Default)]
pub struct Instance {
    /// One model, or the two components for linearity and strong monotonicity.
    pub models: Vec<Model>,
    /// Linearity coefficients `(a, b)` of `a·f1 + b·f2`.
    pub weights: Option<(f64, f64)>,
    /// Linearity: the features each component is attributed over; the
    /// combination always uses the union.
    pub component_features: Option<Vec<Vec<String>>>,
    /// One explicand, or `(lower, raised)` for demand monotonicity.
    pub explicands: Vec<FeatureVector>,
    pub context: Context,
    pub feature: Option<String>,
    pub pair: Option<(String, String)>,
    /// ASI parameters `(c, d)`.
    pub transform: Option<(f64, f64)>,
    /// Per-feature values over which antecedents are enumerated, in the
    /// explicand's feature order.
    pub domain: Option<Vec<Vec<f64>>>,
    /// Box `[lower, upper]` for the derivative-dominance grid.
    pub region: Option<(Vec<f64>, Vec<f64>)>,
    /// Take the antecedent as given instead of verifying it.
    pub asserted: bool,
}

#[derive(Debug, Clone)]
pub struct AxiomCheck {
    pub axiom: Axiom,
    pub method: MethodUnderTest,
    pub instance: Instance,
    pub tolerance: f64,
}

impl AxiomCheck {
    pub fn new(axiom: Axiom, method: MethodUnderTest, instance: Instance) -> Self {
        let tolerance = method.default_tolerance();
        Self { axiom, method, instance, tolerance }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Inputs and scores that reproduce a failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub models: Vec<String>,
    pub explicands: Vec<FeatureVector>,
    pub scores: Vec<FeatureVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub axiom: Axiom,
    pub method: String,
    pub verdict: Verdict,
    pub deviation: f64,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

fn unverifiable(what: impl Into<String>) -> Error {
    Error::Precondition(format!("antecedent not verifiable: {}", what.into()))
}

fn model(inst: &Instance, k: usize) -> Result<&Model> {
    inst.models.get(k).ok_or_else(|| Error::Argument(format!("instance needs model #{}", k + 1)))
}

fn explicand(inst: &Instance, k: usize) -> Result<&FeatureVector> {
    inst.explicands.get(k).ok_or_else(|| Error::Argument(format!("instance needs explicand #{}", k + 1)))
}

fn feature(inst: &Instance) -> Result<&str> {
    inst.feature.as_deref().ok_or_else(|| Error::Argument("instance needs a feature".into()))
}

/// Candidate values per feature: declared, else read off the distribution,
/// the data or the baseline, always including every explicand.
fn domain(inst: &Instance, x: &FeatureVector) -> Result<Vec<Vec<f64>>> {
    let n = x.len();
    let mut cols: Vec<Vec<f64>> = match &inst.domain {
        Some(d) => d.clone(),
        None => {
            let mut cols = vec![Vec::new(); n];
            if let Some(dist) = &inst.context.distribution {
                let dist = dist.marginalize(x.names())?;
                for (c, m) in cols.iter_mut().zip(dist.marginals()) {
                    c.extend(m.values);
                }
            }
            if let Some(data) = &inst.context.data {
                let data = data.select(x.names())?;
                for r in data.rows() {
                    for (c, v) in cols.iter_mut().zip(r) {
                        c.push(*v);
                    }
                }
            }
            if let Some(b) = &inst.context.baseline {
                for (c, v) in cols.iter_mut().zip(b.reorder(x.names())?.values()) {
                    c.push(*v);
                }
            }
            cols
        }
    };
    if cols.len() != n {
        return Err(Error::Argument("domain needs one value list per feature".into()));
    }
    for e in &inst.explicands {
        for (c, v) in cols.iter_mut().zip(e.reorder(x.names())?.values()) {
            c.push(*v);
        }
    }
    for c in &mut cols {
        c.sort_by(f64::total_cmp);
        c.dedup();
    }
    let size = cols.iter().try_fold(1usize, |acc, c| acc.checked_mul(c.len())).unwrap_or(usize::MAX);
    if size > DOMAIN_CAP {
        return Err(unverifiable(format!("domain of {size} points exceeds {DOMAIN_CAP}")));
    }
    Ok(cols)
}

fn points(cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for c in cols {
        out = out.into_iter().flat_map(|p| c.iter().map(move |v| [p.clone(), vec![*v]].concat())).collect();
    }
    out
}

fn at(f: &Model, x: &FeatureVector, values: &[f64]) -> Result<f64> {
    f.eval(&FeatureVector::new(x.names().clone(), values.to_vec())?)
}

fn index(x: &FeatureVector, name: &str) -> Result<usize> {
    x.index_of(name).ok_or_else(|| Error::MissingFeature(name.to_string()))
}

/// `f` ignores `feature` everywhere on the domain.
pub fn verify_dummy(f: &Model, x: &FeatureVector, feature: &str, cols: &[Vec<f64>]) -> Result<bool> {
    let i = index(x, feature)?;
    for p in points(cols) {
        let here = at(f, x, &p)?;
        for v in &cols[i] {
            let mut q = p.clone();
            q[i] = *v;
            if at(f, x, &q)? != here {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `f` is unchanged by swapping the two features on the domain.
pub fn verify_symmetric(f: &Model, x: &FeatureVector, a: &str, b: &str, cols: &[Vec<f64>]) -> Result<bool> {
    let (i, j) = (index(x, a)?, index(x, b)?);
    let mut merged = cols.to_vec();
    let both: Vec<f64> = cols[i].iter().chain(&cols[j]).copied().collect();
    merged[i] = both.clone();
    merged[j] = both;
    for c in &mut merged {
        c.sort_by(f64::total_cmp);
        c.dedup();
    }
    for p in points(&merged) {
        let mut q = p.clone();
        q.swap(i, j);
        if (at(f, x, &p)? - at(f, x, &q)?).abs() > 1e-12 * (1.0 + at(f, x, &p)?.abs()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `f` never decreases in `feature` on the domain.
pub fn verify_nondecreasing(f: &Model, x: &FeatureVector, feature: &str, cols: &[Vec<f64>]) -> Result<bool> {
    let i = index(x, feature)?;
    for p in points(cols) {
        let mut prev: Option<f64> = None;
        for v in &cols[i] {
            let mut q = p.clone();
            q[i] = *v;
            let y = at(f, x, &q)?;
            if prev.is_some_and(|p| y < p - 1e-12 * (1.0 + p.abs())) {
                return Ok(false);
            }
            prev = Some(y);
        }
    }
    Ok(true)
}

/// `∂f1/∂feature ≥ ∂f2/∂feature` on a grid over the box.
pub fn verify_dominance(
    f1: &Model,
    f2: &Model,
    x: &FeatureVector,
    feature: &str,
    region: &(Vec<f64>, Vec<f64>),
) -> Result<bool> {
    if !(f1.supports_analytic_gradient() && f2.supports_analytic_gradient()) {
        return Err(unverifiable("derivative dominance needs analytic models or an assertion"));
    }
    let i = index(x, feature)?;
    let (lo, hi) = region;
    let cols: Vec<Vec<f64>> = lo
        .iter()
        .zip(hi)
        .map(|(a, b)| (0..DOMINANCE_GRID).map(|k| a + (b - a) * k as f64 / (DOMINANCE_GRID - 1) as f64).collect())
        .collect();
    for p in points(&cols) {
        let v = FeatureVector::new(x.names().clone(), p)?;
        let d1 = f1.partial_derivative(&v, &x.names()[i], GradientMode::Analytic)?;
        let d2 = f2.partial_derivative(&v, &x.names()[i], GradientMode::Analytic)?;
        if d1 < d2 - 1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Every partial derivative of `f` is nonnegative on a grid over `[0, upper]`.
pub fn verify_nondecreasing_grid(f: &Model, upper: &FeatureVector) -> Result<bool> {
    let opts = ReductionOptions { grid_points: DOMINANCE_GRID, ..ReductionOptions::default() };
    Ok(grid_min_partial(f, upper, &opts)? >= -1e-9)
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (p, q)| m.max((p - q).abs()))
}

pub fn check_axiom(check: &AxiomCheck) -> Result<AxiomReport> {
    let AxiomCheck { axiom, method, instance: inst, tolerance } = check;
    let ctx = &inst.context;
    let mut models = vec![model(inst, 0)?.to_json()];
    let (deviation, explicands, scores) = match axiom {
        Axiom::Dummy => {
            let (f, x, name) = (model(inst, 0)?, explicand(inst, 0)?, feature(inst)?);
            if !inst.asserted && !verify_dummy(f, x, name, &domain(inst, x)?)? {
                return Err(Error::Precondition(format!("`{name}` is not a dummy of the model")));
            }
            let a = method.attribute(f, x, ctx)?;
            (a.score(name)?.abs(), vec![x.clone()], vec![a.scores])
        }
        Axiom::Efficiency => {
            let (f, x) = (model(inst, 0)?, explicand(inst, 0)?);
            let a = method.attribute(f, x, ctx)?;
            (a.efficiency_gap(), vec![x.clone()], vec![a.scores])
        }
        Axiom::Linearity => {
            let (f1, f2, x) = (model(inst, 0)?, model(inst, 1)?, explicand(inst, 0)?);
            models.push(f2.to_json());
            let (a, b) = inst.weights.unwrap_or((1.0, 1.0));
            let joint = method.attribute(&Model::sum([(a, f1.clone()), (b, f2.clone())]), x, ctx)?;
            let part = |f: &Model, k: usize| -> Result<Vec<f64>> {
                let Some(features) = inst.component_features.as_ref().map(|c| &c[k]) else {
                    return Ok(method.attribute(f, x, ctx)?.values().to_vec());
                };
                let keep = feature_names(features.iter().cloned());
                let sub = method.attribute(f, &x.reorder(&keep)?, &ctx.restrict(features)?)?;
                Ok(x.names().iter().map(|n| sub.score(n).unwrap_or(0.0)).collect())
            };
            let (s1, s2) = (part(f1, 0)?, part(f2, 1)?);
            let combined: Vec<f64> = s1.iter().zip(&s2).map(|(p, q)| a * p + b * q).collect();
            let dev = max_abs(joint.values(), &combined);
            let names = x.names().clone();
            let s1 = FeatureVector::new(names.clone(), s1)?;
            let s2 = FeatureVector::new(names, s2)?;
            (dev, vec![x.clone()], vec![joint.scores, s1, s2])
        }
        Axiom::Symmetry => {
            let (f, x) = (model(inst, 0)?, explicand(inst, 0)?);
            let (p, q) = inst.pair.as_ref().ok_or_else(|| Error::Argument("instance needs a feature pair".into()))?;
            if x.value(p)? != x.value(q)? {
                return Err(Error::Precondition("explicand differs on the symmetric pair".into()));
            }
            if let Some(b) = &ctx.baseline {
                if b.value(p)? != b.value(q)? {
                    return Err(Error::Precondition("baseline differs on the symmetric pair".into()));
                }
            }
            if !inst.asserted && !verify_symmetric(f, x, p, q, &domain(inst, x)?)? {
                return Err(Error::Precondition(format!("model is not symmetric in `{p}` and `{q}`")));
            }
            let a = method.attribute(f, x, ctx)?;
            ((a.score(p)? - a.score(q)?).abs(), vec![x.clone()], vec![a.scores])
        }
        Axiom::Asi => {
            let (f, x, name) = (model(inst, 0)?, explicand(inst, 0)?, feature(inst)?);
            let (c, d) = inst.transform.ok_or_else(|| Error::Argument("instance needs (c, d)".into()))?;
            let g = Model::affine_reparam(f.clone(), name, c, d)?;
            models.push(g.to_json());
            let moved = x.with(name, c * x.value(name)? + d)?;
            let before = method.attribute(f, x, ctx)?;
            let after = method.attribute(&g, &moved, &ctx.map_feature(name, c, d)?)?;
            (before.max_abs_diff(&after)?, vec![x.clone(), moved], vec![before.scores, after.scores])
        }
        Axiom::DemandMonotonicity => {
            let (f, low, high, name) = (model(inst, 0)?, explicand(inst, 0)?, explicand(inst, 1)?, feature(inst)?);
            let i = index(low, name)?;
            let high = high.reorder(low.names())?;
            let others_equal = (0..low.len()).all(|k| k == i || low.at(k) == high.at(k));
            if !others_equal || high.at(i) < low.at(i) {
                return Err(Error::Precondition(format!("explicands must differ only by raising `{name}`")));
            }
            if !inst.asserted && !verify_nondecreasing(f, low, name, &domain(inst, low)?)? {
                return Err(Error::Precondition(format!("model is not nondecreasing in `{name}`")));
            }
            let (a, b) = (method.attribute(f, low, ctx)?, method.attribute(f, &high, ctx)?);
            ((a.score(name)? - b.score(name)?).max(0.0), vec![low.clone(), high], vec![a.scores, b.scores])
        }
        Axiom::Proportionality => {
            let (f, x) = (model(inst, 0)?, explicand(inst, 0)?);
            if !inst.asserted {
                return Err(unverifiable("proportionality needs the model asserted to depend on the feature sum"));
            }
            if ctx.baseline.as_ref().is_some_and(|b| b.values().iter().any(|v| *v != 0.0)) {
                return Err(Error::Precondition("proportionality needs the zero baseline".into()));
            }
            let a = method.attribute(f, x, ctx)?;
            let sum_x: f64 = x.values().iter().sum();
            if sum_x == 0.0 {
                return Err(Error::Precondition("explicand values sum to zero".into()));
            }
            let total = a.total();
            let expected: Vec<f64> = x.values().iter().map(|v| v * total / sum_x).collect();
            (max_abs(a.values(), &expected), vec![x.clone()], vec![a.scores])
        }
        Axiom::StrongMonotonicity => {
            let (f1, f2, x, name) = (model(inst, 0)?, model(inst, 1)?, explicand(inst, 0)?, feature(inst)?);
            models.push(f2.to_json());
            if !inst.asserted {
                let region = match &inst.region {
                    Some(r) => r.clone(),
                    None => {
                        let cols = domain(inst, x)?;
                        (cols.iter().map(|c| c[0]).collect(), cols.iter().map(|c| c[c.len() - 1]).collect())
                    }
                };
                if !verify_dominance(f1, f2, x, name, &region)? {
                    return Err(Error::Precondition(format!("first model does not dominate the second in `{name}`")));
                }
            }
            let (a, b) = (method.attribute(f1, x, ctx)?, method.attribute(f2, x, ctx)?);
            ((b.score(name)? - a.score(name)?).max(0.0), vec![x.clone()], vec![a.scores, b.scores])
        }
    };
    let verdict = if deviation <= *tolerance { Verdict::Pass } else { Verdict::Fail };
    let witness = (verdict == Verdict::Fail).then_some(Witness { models, explicands, scores });
    Ok(AxiomReport { axiom: *axiom, method: method.name(), verdict, deviation, tolerance: *tolerance, witness })
}

//! The versioned file of expected scenario values.

use std::path::Path;

use serde::{Deserialize, Serialize};

use manyshap::{Error, Result};

pub const GOLDEN_VERSION: u32 = 1;
pub const BUNDLED_GOLDEN: &str = include_str!("../data/golden.json");

/// Where an expected value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Printed in the worked examples.
    Published,
    /// Forced by the construction of the instance.
    Definitional,
    /// Produced by the brute-force oracle.
    Enumerated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenEntry {
    pub scenario: String,
    pub key: String,
    pub expected: f64,
    pub tolerance: f64,
    pub source: Source,
    pub gating: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenFile {
    pub version: u32,
    pub entries: Vec<GoldenEntry>,
}

impl GoldenFile {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_GOLDEN).expect("bundled golden file parses")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: GoldenFile =
            serde_json::from_str(text).map_err(|e| Error::Parse { position: e.column(), message: e.to_string() })?;
        if file.version != GOLDEN_VERSION {
            return Err(Error::Argument(format!("golden file version {} is not {GOLDEN_VERSION}", file.version)));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())
            .map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })
    }

    pub fn for_scenario<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a GoldenEntry> + 'a {
        self.entries.iter().filter(move |e| e.scenario == name)
    }
}

/// Published and definitional values followed by a fresh oracle run.
pub fn build() -> GoldenFile {
    let mut entries = fixed_entries();
    entries.extend(crate::oracle::enumerated_entries());
    GoldenFile { version: GOLDEN_VERSION, entries }
}

fn entry(scenario: &str, key: &str, expected: f64, tolerance: f64, source: Source) -> GoldenEntry {
    GoldenEntry { scenario: scenario.into(), key: key.into(), expected, tolerance, source, gating: true }
}

fn fixed_entries() -> Vec<GoldenEntry> {
    use Source::{Definitional as D, Published as P};
    let third = 1.0 / 3.0;
    let mut e = vec![
        entry("dummy-failure", "ces.x", 11.25, 1e-3, P),
        entry("dummy-failure", "ces.y", 11.25, 1e-3, P),
        entry("dummy-failure", "antecedent.x_is_dummy", 1.0, 0.0, D),
        entry("dummy-failure", "bshap.x", 0.0, 0.0, D),
        entry("linearity-failure", "joint.x", 13.25, 1e-3, P),
        entry("linearity-failure", "joint.y", 13.25, 1e-3, P),
        entry("linearity-failure", "f1_alone.y", 22.5, 1e-3, P),
        entry("linearity-failure", "f2_alone.x", 4.0, 1e-3, P),
        entry("linearity-failure", "gap.y", 9.25, 1e-3, P),
        entry("demand-monotonicity-failure", "sign.ces_empirical_low.y", 1.0, 0.0, P),
        entry("demand-monotonicity-failure", "sign.ces_empirical_high.y", -1.0, 0.0, P),
        entry("demand-monotonicity-failure", "antecedent.y_nondecreasing", 1.0, 0.0, D),
        entry("symmetry-failure", "ces.x", 0.7, 1e-12, P),
        entry("symmetry-failure", "ces.y", 0.4, 1e-12, P),
        entry("symmetry-failure", "antecedent.symmetric", 1.0, 0.0, D),
        entry("strong-monotonicity-failure", "f1.x", (2.0 * 2f64.sqrt() - 1.0 - 3f64.sqrt()) / 3.0, 1e-9, P),
        entry("strong-monotonicity-failure", "f2.x", 0.0, 1e-12, P),
        entry("strong-monotonicity-failure", "antecedent.dominates", 1.0, 0.0, D),
        entry("marginal-sum-remark", "rbshap_joint.total", 0.5, 1e-12, P),
        entry("marginal-sum-remark", "rbshap_product.total", 0.75, 1e-12, P),
        entry("min-remark", "ig.x1", 0.0, 1e-9, P),
        entry("min-remark", "ig.x2", 1.0, 1e-9, P),
        entry("min-remark", "restricted.x1", 2.5, 1e-12, P),
        entry("min-remark", "restricted.x2", -1.5, 1e-12, P),
        entry("cube-remark", "ig.x1", 180.0, 1e-3, P),
        entry("cube-remark", "ig.x2", 36.0, 1e-3, P),
        entry("cube-remark", "bshap.x1", 170.0, 1e-9, P),
        entry("cube-remark", "bshap.x2", 46.0, 1e-9, P),
        entry("cube-remark", "sampled_bshap.x1", 170.0, 0.02 * 170.0, P),
        entry("cube-remark", "sampled_bshap.x2", 46.0, 0.02 * 46.0, P),
        entry("young-counterexample", "fixed.x1", 0.0, 5e-3, P),
        entry("young-counterexample", "fixed.x2", 0.0, 5e-3, P),
        entry("young-counterexample", "fixed.x3", 1.0, 5e-3, P),
        entry("young-counterexample", "reversed.x1", 1.0, 5e-3, P),
        entry("young-counterexample", "reversed.x2", 0.0, 5e-3, P),
        entry("young-counterexample", "reversed.x3", 0.0, 5e-3, P),
        entry("young-counterexample", "shapley.x1", third, 1e-9, P),
        entry("young-counterexample", "shapley.x2", third, 1e-9, P),
        entry("young-counterexample", "shapley.x3", third, 1e-9, P),
        entry("deepshap-order", "left.x1", 0.25, 1e-12, P),
        entry("deepshap-order", "left.x2", 0.25, 1e-12, P),
        entry("deepshap-order", "left.x3", 0.5, 1e-12, P),
        entry("deepshap-order", "right.x1", 0.5, 1e-12, P),
        entry("deepshap-order", "right.x2", 0.25, 1e-12, P),
        entry("deepshap-order", "right.x3", 0.25, 1e-12, P),
        entry("deepshap-order", "end_to_end.x1", third, 1e-12, P),
        entry("deepshap-order", "end_to_end.x2", third, 1e-12, P),
        entry("deepshap-order", "end_to_end.x3", third, 1e-12, P),
        entry("kahneman", "argmax.patient", 2.0, 0.0, P),
        entry("kahneman", "argmax.spouse", 0.0, 0.0, P),
        entry("kahneman", "argmax.doctor", 1.0, 0.0, P),
        entry("pms-impossible-everywhere", "estimate.n2", 2.0, 1e-12, D),
        entry("pms-impossible-everywhere", "completion.n2.x1", 0.0, 1e-12, D),
        entry("pms-impossible-everywhere", "completion.n2.x2", 0.0, 1e-12, D),
        entry("pms-impossible-everywhere", "always_possible.max_diff", 0.0, 1e-12, D),
        entry("pms-boolean-3", "efficiency_gap", 0.0, 1e-12, D),
        entry("pms-boolean-n", "efficiency_gap", 0.0, 1e-12, D),
        entry("sparsity-equal-split", "spread", 0.0, 1e-9, P),
        entry("sparsity-equal-split", "appended", 1.0, 0.0, D),
        entry("bshap-as-ces-epsilon", "relative_deviation@1e-4", 0.0, 1e-2, D),
        entry("bshap-as-ces-epsilon", "shrinking", 1.0, 0.0, D),
        entry("rbshap-equals-ces-independent", "max_diff", 0.0, 1e-9, D),
        entry("micro-convergence", "strictly_decreasing", 1.0, 0.0, D),
        entry("micro-convergence", "relative_error@64", 0.0, 0.01, D),
        entry("reduction-roundtrip", "residual", 0.0, 1e-9, D),
        entry("reduction-roundtrip", "f1_nondecreasing", 1.0, 0.0, D),
        entry("reduction-roundtrip", "f2_nondecreasing", 1.0, 0.0, D),
        entry("reduction-roundtrip", "baseline_at_zero", 1.0, 0.0, D),
    ];
    for n in 2..=4usize {
        let share = (n * (n + 1) / 2 + 1) as f64 / n as f64;
        for i in 1..=n {
            e.push(entry("pms-impossible-everywhere", &format!("n{n}.x{i}"), share, 1e-12, P));
        }
    }
    e
}

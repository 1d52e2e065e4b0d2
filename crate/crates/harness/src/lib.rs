//! Executable worked examples, axiom checks, a brute-force oracle and the
//! cohort case-study pipeline on top of the `manyshap` engine.

pub mod axioms;
pub mod cohort;
pub mod generators;
pub mod golden;
pub mod instances;
pub mod oracle;
pub mod report;
pub mod scenarios;

pub use axioms::{check_axiom, Axiom, AxiomCheck, AxiomReport, Context, Instance, MethodUnderTest, Verdict};
pub use cohort::{attribute_cohort, load_dataset, CohortReport, RunConfig};
pub use golden::{GoldenEntry, GoldenFile, Source};
pub use report::emit_report;
pub use scenarios::{run_all, run_scenario, ScenarioResult, SCENARIOS};

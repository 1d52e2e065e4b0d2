//! `manyshap`: attributions, diabetes cohorts, scenarios, axiom checks and
//! golden-file regeneration from the command line.
//!
//! Exit status is 0 on success, 1 when an expectation fails and 2 on a usage
//! or input error.

mod inputs;
mod instance;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use manyshap::{DiscreteDistribution, EngineOptions, Error, FeatureNames, PossibilityPredicate, Result};
use manyshap_harness::axioms::{check_axiom, Axiom, AxiomCheck, AxiomReport, Context, MethodUnderTest};
use manyshap_harness::cohort::{
    attribute_cohort, BaselineChoice, Format, RunConfig, Selection, DEFAULT_EXPLICANDS, DEFAULT_SEED,
};
use manyshap_harness::golden::{self, GoldenFile};
use manyshap_harness::scenarios::{render_text, run_all, run_scenario, ScenarioResult};
use manyshap_harness::{emit_report, instances};

const OUT_DIR_ENV: &str = "MANYSHAP_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "manyshap-report";

#[derive(Parser)]
#[command(name = "manyshap", version, about = "Shapley-value feature attribution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Attribute one explicand with one method.
    Attribute(AttributeArgs),
    /// Attribute a cohort of dataset rows and write CSV, JSON and SVG reports.
    Cohort(CohortArgs),
    /// Run a registered scenario, or `all`, against the golden file.
    Scenario(ScenarioArgs),
    /// Check one axiom for one method on an instance file.
    Check(CheckArgs),
    /// Rebuild the golden file from brute-force enumeration.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TextOrJson {
    Text,
    Json,
}

#[derive(Args)]
struct Inputs {
    /// Model JSON; the bundled diabetes model when neither this nor --data is given.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Dataset CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Distribution JSON; the empirical distribution of --data otherwise.
    #[arg(long)]
    dist: Option<PathBuf>,
}

#[derive(Args)]
struct AttributeArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// `5,1` in feature order, `a=5,b=1`, or `row:N` of --data.
    #[arg(long)]
    explicand: String,
    /// `zeros`, `mean`, or values as for --explicand. Defaults to `mean` with
    /// data and `zeros` without.
    #[arg(long)]
    baseline: Option<String>,
    /// bshap, ces, ces_empirical, rbshap, ig or pms.
    #[arg(long, default_value = "bshap")]
    method: String,
    /// Agreement tolerance for ces_empirical, as a fraction of each feature's standard deviation.
    #[arg(long)]
    smoothing: Option<f64>,
    /// Quadrature steps for ig.
    #[arg(long)]
    steps: Option<usize>,
    /// Sample this many permutations instead of computing exactly.
    #[arg(long)]
    perms: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Possibility predicate for pms, as an expression over the features.
    #[arg(long)]
    possible: Option<String>,
    /// Write the result here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: TextOrJson,
}

#[derive(Args)]
struct CohortArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Comma-separated row indices; a seeded sample otherwise.
    #[arg(long, value_delimiter = ',')]
    rows: Option<Vec<usize>>,
    /// Sample size when --rows is absent.
    #[arg(long, default_value_t = DEFAULT_EXPLICANDS)]
    count: usize,
    /// Comma-separated methods.
    #[arg(
        long = "method",
        value_delimiter = ',',
        default_value = "bshap,ces_empirical,ces_empirical_0.1,ces_empirical_0.2,rbshap,ig,pms"
    )]
    methods: Vec<String>,
    /// Run every ces_empirical entry once per listed tolerance.
    #[arg(long, value_delimiter = ',')]
    smoothing: Option<Vec<f64>>,
    #[arg(long, default_value = "mean")]
    baseline: String,
    #[arg(long)]
    perms: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Shift every explicand value by a distinct amount of this order.
    #[arg(long)]
    noise: Option<f64>,
    /// Output directory; falls back to $MANYSHAP_OUT_DIR.
    #[arg(long, env = OUT_DIR_ENV, default_value = DEFAULT_OUT_DIR)]
    out: PathBuf,
    /// Comma-separated subset of csv, json, svg.
    #[arg(long, value_delimiter = ',', default_value = "csv,json,svg")]
    format: Vec<String>,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario name or `all`.
    name: String,
    /// Golden file; the bundled one otherwise.
    #[arg(long)]
    golden: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: TextOrJson,
}

#[derive(Args)]
struct CheckArgs {
    /// dummy, efficiency, linearity, symmetry, asi, demand_monotonicity,
    /// proportionality or strong_monotonicity.
    axiom: String,
    #[arg(long)]
    method: String,
    /// Instance JSON.
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    smoothing: Option<f64>,
    /// Override the method's default tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long, value_enum, default_value = "text")]
    format: TextOrJson,
}

#[derive(Args)]
struct OracleArgs {
    /// Where to write the golden file; standard output otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Outcome {
    Ok,
    ExpectationFailed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Attribute(a) => attribute(a),
        Command::Cohort(a) => cohort(a),
        Command::Scenario(a) => scenario(a),
        Command::Check(a) => check(a),
        Command::Oracle(a) => oracle(a),
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::ExpectationFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn method(name: &str, steps: Option<usize>, smoothing: Option<f64>) -> Result<MethodUnderTest> {
    let mut m = MethodUnderTest::parse(name)?;
    match (&mut m, steps, smoothing) {
        (MethodUnderTest::Ig { steps: s }, Some(n), _) => *s = n,
        (MethodUnderTest::CesEmpirical { smoothing: t }, _, Some(tau)) => *t = tau,
        (_, None, None) => {}
        _ => {
            return Err(Error::Argument(format!("--steps applies to ig and --smoothing to ces_empirical, not {name}")))
        }
    }
    Ok(m)
}

fn engine(perms: Option<usize>, seed: u64) -> EngineOptions {
    perms.map_or_else(EngineOptions::exact, |p| EngineOptions::sampled(p, seed))
}

/// Standard output; a closed pipe ends the process quietly.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: writing standard output: {e}");
        std::process::exit(2);
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| Error::Io { path: p.display().to_string(), message: e.to_string() })
        }
        None => {
            emit(text);
            Ok(())
        }
    }
}

fn attribute(a: AttributeArgs) -> Result<Outcome> {
    let Inputs { model, data, dist } = &a.inputs;
    let (model, data) = match (model, data) {
        (None, None) => (instances::diabetes_model(), Some(instances::diabetes_data())),
        (m, d) => (
            m.as_deref().map(inputs::model).transpose()?.unwrap_or_else(instances::diabetes_model),
            d.as_deref().map(inputs::dataset).transpose()?,
        ),
    };
    let distribution = match (dist, &data) {
        (Some(p), _) => Some(inputs::distribution(p)?),
        (None, Some(d)) => Some(DiscreteDistribution::empirical(d)?),
        (None, None) => None,
    };
    let names: FeatureNames = match (&data, &distribution) {
        (Some(d), _) => d.names().clone(),
        (None, Some(d)) => d.names().clone(),
        (None, None) => model.feature_names(),
    };
    let x = inputs::vector(&a.explicand, &names, data.as_ref())?;
    let baseline_spec = a.baseline.as_deref().unwrap_or(if data.is_some() { "mean" } else { "zeros" });
    let baseline = inputs::baseline(baseline_spec, &names, data.as_ref())?;
    let m = method(&a.method, a.steps, a.smoothing)?;
    let ctx = Context {
        baseline: Some(baseline.clone()),
        distribution,
        data,
        possibility: a.possible.as_deref().map(PossibilityPredicate::expression).transpose()?,
    };
    let attribution = m.attribute_with(&model, &x, &ctx, &engine(a.perms, a.seed))?;
    let text = match a.format {
        TextOrJson::Json => {
            let mut body = serde_json::to_string_pretty(&json!({
                "method": m.name(),
                "features": names.to_vec(),
                "scores": attribution.scores,
                "explicand": x,
                "baseline": baseline,
                "reference": attribution.reference,
                "prediction": attribution.prediction,
                "seed": a.seed,
                "provenance": attribution.provenance,
            }))
            .expect("attribution serializes");
            body.push('\n');
            body
        }
        TextOrJson::Text => {
            let mut s =
                format!("{}  f(x)={:?}  reference={:?}\n", m.name(), attribution.prediction, attribution.reference);
            for (n, v) in names.iter().zip(attribution.values()) {
                s.push_str(&format!("{n:<12} {v:?}\n"));
            }
            s
        }
    };
    write_or_print(a.out.as_deref(), &text)?;
    Ok(Outcome::Ok)
}

fn cohort(a: CohortArgs) -> Result<Outcome> {
    let Inputs { model, data, dist } = a.inputs;
    if data.is_none() && (model.is_some() || dist.is_some()) {
        return Err(Error::Argument("--model and --dist need --data for a cohort".into()));
    }
    let methods = match &a.smoothing {
        None => a.methods.clone(),
        Some(taus) => a
            .methods
            .iter()
            .flat_map(|m| match m.as_str() {
                "ces_empirical" => {
                    taus.iter().map(|t| MethodUnderTest::CesEmpirical { smoothing: *t }.name()).collect()
                }
                _ => vec![m.clone()],
            })
            .collect(),
    };
    let baseline = match a.baseline.as_str() {
        "mean" => BaselineChoice::Mean,
        "zeros" => BaselineChoice::Zeros,
        values => BaselineChoice::Values(inputs::numbers(values)?),
    };
    let formats = a.format.iter().map(|f| Format::parse(f)).collect::<Result<Vec<_>>>()?;
    let config = RunConfig {
        model_path: model,
        data_path: data,
        distribution_path: dist,
        explicands: match a.rows {
            Some(rows) => Selection::Rows(rows),
            None => Selection::Sample { count: a.count },
        },
        methods,
        engine: engine(a.perms, a.seed),
        seed: a.seed,
        baseline,
        noise: a.noise,
        out_dir: a.out,
        formats,
    };
    let report = attribute_cohort(&config)?;
    let emitted = emit_report(&report, &config.formats, &config.out_dir)?;
    for w in &emitted.warnings {
        eprintln!("warning: {w}");
    }
    for f in &emitted.files {
        emit(&format!("{}\n", f.display()));
    }
    let failed = report.methods.iter().any(|m| !m.errors.is_empty());
    Ok(if failed { Outcome::ExpectationFailed } else { Outcome::Ok })
}

fn scenario(a: ScenarioArgs) -> Result<Outcome> {
    let golden = match &a.golden {
        Some(p) => GoldenFile::load(p)?,
        None => GoldenFile::bundled(),
    };
    let results: Vec<ScenarioResult> =
        if a.name == "all" { run_all(&golden)? } else { vec![run_scenario(&a.name, &golden)?] };
    match a.format {
        TextOrJson::Text => {
            let passed = results.iter().filter(|r| r.passed()).count();
            emit(&format!("{}{passed} of {} scenarios passed\n", render_text(&results), results.len()));
        }
        TextOrJson::Json => emit(&format!("{}\n", serde_json::to_string_pretty(&results).expect("results serialize"))),
    }
    Ok(if results.iter().all(ScenarioResult::passed) { Outcome::Ok } else { Outcome::ExpectationFailed })
}

fn render_check(r: &AxiomReport) -> String {
    let verdict = if r.passed() { "PASS" } else { "FAIL" };
    let mut s = format!(
        "{} / {}: {verdict}  deviation {:e}  tolerance {:e}\n",
        r.axiom.name(),
        r.method,
        r.deviation,
        r.tolerance
    );
    if let Some(w) = &r.witness {
        for (k, m) in w.models.iter().enumerate() {
            let compact = serde_json::from_str::<serde_json::Value>(m).map_or_else(|_| m.clone(), |v| v.to_string());
            s.push_str(&format!("  model {}: {compact}\n", k + 1));
        }
        for (x, sc) in w.explicands.iter().zip(&w.scores) {
            s.push_str(&format!("  at {x:?}: {sc:?}\n"));
        }
    }
    s
}

fn check(a: CheckArgs) -> Result<Outcome> {
    let axiom = Axiom::parse(&a.axiom)?;
    let m = method(&a.method, a.steps, a.smoothing)?;
    let mut c = AxiomCheck::new(axiom, m, instance::load(&a.instance)?);
    if let Some(t) = a.tolerance {
        c.tolerance = t;
    }
    let report = check_axiom(&c)?;
    match a.format {
        TextOrJson::Text => emit(&render_check(&report)),
        TextOrJson::Json => emit(&format!("{}\n", serde_json::to_string_pretty(&report).expect("report serializes"))),
    }
    Ok(if report.passed() { Outcome::Ok } else { Outcome::ExpectationFailed })
}

fn oracle(a: OracleArgs) -> Result<Outcome> {
    let built = golden::build();
    match &a.out {
        Some(p) => {
            built.write(p)?;
            eprintln!("wrote {} entries to {}", built.entries.len(), p.display());
        }
        None => emit(&built.to_json()),
    }
    let failing: Vec<String> = run_all(&built)?
        .iter()
        .flat_map(|r| r.failures().map(|c| format!("{}: {}", r.name, c.key)).collect::<Vec<_>>())
        .collect();
    for f in &failing {
        eprintln!("engine disagrees with the oracle: {f}");
    }
    Ok(if failing.is_empty() { Outcome::Ok } else { Outcome::ExpectationFailed })
}

use std::path::Path;

use manyshap_harness::golden::{build, GoldenFile, Source};
use manyshap_harness::SCENARIOS;

/// Set `MANYSHAP_BLESS=1` to rewrite the bundled file from a fresh oracle run.
#[test]
fn bundled_golden_is_fresh() {
    let fresh = build();
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/golden.json");
    if std::env::var_os("MANYSHAP_BLESS").is_some() {
        fresh.write(&path).unwrap();
    }
    let bundled = GoldenFile::load(&path).unwrap();
    assert_eq!(bundled, fresh, "golden file is stale; rerun with MANYSHAP_BLESS=1");
}

#[test]
fn every_scenario_has_gating_entries() {
    let g = GoldenFile::bundled();
    for name in SCENARIOS {
        assert!(g.for_scenario(name).any(|e| e.gating), "{name} has no gating expectation");
    }
    assert!(g.entries.iter().all(|e| SCENARIOS.contains(&e.scenario.as_str())));
    assert!(g.entries.iter().any(|e| e.source == Source::Enumerated));
}

#[test]
fn version_mismatch_is_rejected() {
    assert!(GoldenFile::parse(r#"{"version": 99, "entries": []}"#).is_err());
    assert!(GoldenFile::parse("not json").is_err());
}

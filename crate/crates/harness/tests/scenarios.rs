use manyshap::Error;
use manyshap_harness::golden::GoldenFile;
use manyshap_harness::scenarios::{compute, render_text};
use manyshap_harness::{run_all, run_scenario, SCENARIOS};

#[test]
fn every_scenario_passes_against_the_bundled_file() {
    let results = run_all(&GoldenFile::bundled()).unwrap();
    assert_eq!(results.len(), SCENARIOS.len());
    let text = render_text(&results);
    for r in &results {
        assert!(r.passed(), "{}\n{text}", r.name);
        assert!(r.checks.iter().all(|c| c.computed.is_some()), "{} has a key it never computes", r.name);
    }
}

#[test]
fn scenarios_are_deterministic() {
    for name in SCENARIOS {
        assert_eq!(compute(name).unwrap(), compute(name).unwrap(), "{name}");
    }
}

#[test]
fn unknown_scenario_lists_the_registry() {
    match run_scenario("no-such-thing", &GoldenFile::bundled()) {
        Err(Error::LookupMiss(msg)) => assert!(msg.contains("kahneman") && msg.contains("min-remark")),
        other => panic!("expected lookup error, got {other:?}"),
    }
}

#[test]
fn a_wrong_expectation_fails_the_gate() {
    let mut g = GoldenFile::bundled();
    let e = g.entries.iter_mut().find(|e| e.scenario == "symmetry-failure" && e.key == "ces.x").unwrap();
    e.expected = 0.3;
    let r = run_scenario("symmetry-failure", &g).unwrap();
    assert!(!r.passed());
    assert_eq!(r.failures().count(), 1);
}

#[test]
fn min_remark_reports_all_three_games() {
    let r = run_scenario("min-remark", &GoldenFile::bundled()).unwrap();
    for (key, want) in [
        ("ig.x1", 0.0),
        ("ig.x2", 1.0),
        ("bshap.x1", 0.5),
        ("bshap.x2", 0.5),
        ("restricted.x1", 2.5),
        ("restricted.x2", -1.5),
    ] {
        assert!((r.value(key).unwrap() - want).abs() < 1e-9, "{key}");
    }
}

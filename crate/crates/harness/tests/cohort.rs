use std::fs;
use std::path::PathBuf;

use manyshap::{feature_names, Dataset, Error};
use manyshap_harness::cohort::{attribute_cohort, load_dataset, Format, RunConfig, Selection};
use manyshap_harness::emit_report;
use tempfile::tempdir;

fn bundled(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

#[test]
fn bundled_diabetes_loads() {
    let d = load_dataset(&bundled("diabetes.csv")).unwrap();
    assert_eq!(d.len(), 442);
    assert_eq!(d.names().len(), 10);
    assert!(d.weights().is_none());
}

#[test]
fn empty_csv_is_a_parse_error() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    fs::write(&path, "").unwrap();
    assert!(matches!(load_dataset(&path), Err(Error::Parse { position: 1, .. })));
    fs::write(&path, "a,b\n1,oops\n").unwrap();
    match load_dataset(&path) {
        Err(Error::Parse { position, message }) => {
            assert_eq!(position, 2);
            assert!(message.contains("oops"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(load_dataset(&dir.path().join("missing.csv")), Err(Error::Io { .. })));
}

#[test]
fn weighted_rows_round_trip() {
    let d =
        Dataset::new(feature_names(["a", "b"]), vec![vec![1.0, 0.1], vec![-2.5, 3.0]], Some(vec![0.25, 0.75])).unwrap();
    let dir = tempdir().unwrap();
    let path = dir.path().join("w.csv");
    let mut buf = Vec::new();
    d.write_csv(&mut buf).unwrap();
    fs::write(&path, &buf).unwrap();
    let back = load_dataset(&path).unwrap();
    assert_eq!(back.rows(), d.rows());
    assert_eq!(back.weights(), d.weights());
    assert_eq!(back.names(), d.names());
}

fn small_config(out: PathBuf, methods: &[&str]) -> (RunConfig, PathBuf) {
    let data = out.join("data.csv");
    fs::write(&data, "u,v\n1,2\n0,1\n3,-1\n2,2\n").unwrap();
    let model = out.join("model.json");
    fs::write(&model, r#"{"type":"expression","expr":"u*v + 2*u"}"#).unwrap();
    let config = RunConfig {
        model_path: Some(model),
        data_path: Some(data),
        explicands: Selection::Rows(vec![0, 2, 3]),
        methods: methods.iter().map(|s| s.to_string()).collect(),
        out_dir: out.join("report"),
        ..RunConfig::default()
    };
    (config, out.join("report"))
}

#[test]
fn csv_has_one_row_per_method_explicand_and_feature() {
    let dir = tempdir().unwrap();
    let (config, out) = small_config(dir.path().to_path_buf(), &["bshap", "ces_empirical"]);
    let report = attribute_cohort(&config).unwrap();
    let emitted = emit_report(&report, &[Format::Csv], &out).unwrap();
    assert_eq!(emitted.files.len(), 2);
    assert!(emitted.warnings.is_empty(), "{:?}", emitted.warnings);
    let mut rows = 0;
    for f in &emitted.files {
        let mut r = csv::Reader::from_path(f).unwrap();
        assert_eq!(r.headers().unwrap(), vec!["method", "seed", "explicand", "row", "feature", "score"]);
        rows += r.records().count();
    }
    assert_eq!(rows, 12);
}

#[test]
fn no_methods_means_no_files() {
    let dir = tempdir().unwrap();
    let (config, out) = small_config(dir.path().to_path_buf(), &[]);
    let report = attribute_cohort(&config).unwrap();
    let emitted = emit_report(&report, &Format::ALL, &out).unwrap();
    assert!(emitted.files.is_empty());
    assert_eq!(emitted.warnings.len(), 1);
    assert!(!out.exists());
}

#[test]
fn unknown_method_is_rejected_before_running() {
    let dir = tempdir().unwrap();
    let (config, _) = small_config(dir.path().to_path_buf(), &["bshap", "kernel"]);
    assert!(matches!(attribute_cohort(&config), Err(Error::LookupMiss(_))));
}

#[test]
fn diabetes_boxplot_has_one_box_per_feature() {
    let dir = tempdir().unwrap();
    let config =
        RunConfig { explicands: Selection::Sample { count: 5 }, methods: vec!["bshap".into()], ..RunConfig::default() };
    let report = attribute_cohort(&config).unwrap();
    let emitted = emit_report(&report, &[Format::Svg], dir.path()).unwrap();
    let svg = fs::read_to_string(&emitted.files[0]).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches(r#"class="box""#).count(), 10);
    assert!(svg.contains("<!-- manyshap-harness "));
}

#[test]
fn identical_configs_give_identical_files() {
    let run = || {
        let dir = tempdir().unwrap();
        let (config, out) = small_config(dir.path().to_path_buf(), &["bshap", "rbshap", "ces_empirical_0.1"]);
        let report = attribute_cohort(&config).unwrap();
        let emitted = emit_report(&report, &Format::ALL, &out).unwrap();
        emitted.files.iter().map(|f| (f.file_name().unwrap().to_owned(), fs::read(f).unwrap())).collect::<Vec<_>>()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.len(), 9);
    assert_eq!(a, b);
}

#[test]
fn sampled_explicands_depend_on_the_seed() {
    let with_seed = |seed| {
        let config = RunConfig {
            seed,
            explicands: Selection::Sample { count: 6 },
            methods: vec!["bshap".into()],
            ..RunConfig::default()
        };
        attribute_cohort(&config).unwrap().rows
    };
    assert_eq!(with_seed(3), with_seed(3));
    assert_ne!(with_seed(3), with_seed(4));
}

#[test]
fn out_of_range_rows_are_rejected() {
    let dir = tempdir().unwrap();
    let (mut config, _) = small_config(dir.path().to_path_buf(), &["bshap"]);
    config.explicands = Selection::Rows(vec![9]);
    assert!(matches!(attribute_cohort(&config), Err(Error::Argument(_))));
}

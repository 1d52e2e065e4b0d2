//! Cohort report files: raw scores as CSV, summary statistics as JSON and a
//! box-and-whisker plot per method as standalone SVG.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use manyshap::{Error, Result};

use crate::cohort::{CellError, CohortReport, FeatureSummary, Format, MethodScores};

pub const SVG_VERSION_LINE: &str = concat!("<!-- manyshap-harness ", env!("CARGO_PKG_VERSION"), " -->");

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Emitted {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Io { path: path.display().to_string(), message: e.to_string() }
}

/// File-system-safe stem for a method name.
pub fn file_stem(method: &str) -> String {
    method.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '-' }).collect()
}

pub fn emit_report(report: &CohortReport, formats: &[Format], out_dir: &Path) -> Result<Emitted> {
    let mut out = Emitted::default();
    if report.methods.is_empty() {
        out.warnings.push("no methods in the report; nothing written".into());
        return Ok(out);
    }
    if formats.is_empty() {
        out.warnings.push("no output formats requested; nothing written".into());
        return Ok(out);
    }
    fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    for m in &report.methods {
        for format in formats {
            let (name, body) = match format {
                Format::Csv => (format!("scores_{}.csv", file_stem(&m.method)), scores_csv(report, m)?),
                Format::Json => (format!("summary_{}.json", file_stem(&m.method)), summary_json(report, m)),
                Format::Svg => (format!("boxplot_{}.svg", file_stem(&m.method)), boxplot_svg(&m.method, &m.summary)),
            };
            let path = out_dir.join(name);
            fs::write(&path, body).map_err(io(&path))?;
            out.files.push(path);
        }
        for e in &m.errors {
            out.warnings.push(format!("{}: explicand {} failed: {}", m.method, e.explicand, e.message));
        }
    }
    Ok(out)
}

/// One row per (explicand, feature) that produced a score.
pub fn scores_csv(report: &CohortReport, m: &MethodScores) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Error::Io { path: "<csv buffer>".into(), message: e.to_string() };
    w.write_record(["method", "seed", "explicand", "row", "feature", "score"]).map_err(fail)?;
    for (e, scores) in m.scores.iter().enumerate() {
        let Some(scores) = scores else { continue };
        for (f, s) in report.features.iter().zip(scores) {
            let record = [
                m.method.clone(),
                report.seed.to_string(),
                e.to_string(),
                report.rows[e].to_string(),
                f.clone(),
                format!("{s:?}"),
            ];
            w.write_record(&record).map_err(fail)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io { path: "<csv buffer>".into(), message: e.to_string() })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Serialize)]
struct Summary<'a> {
    method: &'a str,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    smoothing: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise: Option<f64>,
    explicands: usize,
    rows: &'a [usize],
    features: &'a [String],
    summary: &'a [FeatureSummary],
    errors: &'a [CellError],
}

pub fn summary_json(report: &CohortReport, m: &MethodScores) -> String {
    let s = Summary {
        method: &m.method,
        seed: report.seed,
        smoothing: m.smoothing,
        noise: report.noise,
        explicands: m.scores.len(),
        rows: &report.rows,
        features: &report.features,
        summary: &m.summary,
        errors: &m.errors,
    };
    let mut text = serde_json::to_string_pretty(&s).expect("summary serializes");
    text.push('\n');
    text
}

const PLOT_HEIGHT: f64 = 300.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const SLOT: f64 = 56.0;
const BOX_WIDTH: f64 = 30.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// One box per feature, drawn with rect and line primitives only.
pub fn boxplot_svg(title: &str, summary: &[FeatureSummary]) -> String {
    let finite: Vec<f64> = summary.iter().flat_map(|s| [s.min, s.max]).filter(|v| v.is_finite()).collect();
    let (mut lo, mut hi) = finite.iter().fold((0.0f64, 0.0f64), |(l, h), v| (l.min(*v), h.max(*v)));
    if hi - lo < 1e-12 {
        lo -= 1.0;
        hi += 1.0;
    }
    let width = MARGIN_LEFT + SLOT * summary.len().max(1) as f64 + 20.0;
    let height = MARGIN_TOP + PLOT_HEIGHT + MARGIN_BOTTOM;
    let y = |v: f64| MARGIN_TOP + PLOT_HEIGHT * (hi - v) / (hi - lo);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(s, "{SVG_VERSION_LINE}");
    s.push_str("<style>.box{fill:#9ecae1;stroke:#08519c}.median{stroke:#08519c;stroke-width:2}.whisker{stroke:#333}.axis{stroke:#000}text{font-family:sans-serif;font-size:11px}</style>\n");
    let _ = writeln!(s, r#"<text x="{:.1}" y="20" text-anchor="middle">{}</text>"#, width / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{MARGIN_LEFT:.1}" y1="{MARGIN_TOP:.1}" x2="{MARGIN_LEFT:.1}" y2="{:.1}"/>"#,
        MARGIN_TOP + PLOT_HEIGHT
    );
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let _ =
            writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.3}</text>"#, MARGIN_LEFT - 6.0, y(v) + 4.0);
    }
    let zero = y(0.0);
    let _ = writeln!(
        s,
        r##"<line class="axis" x1="{MARGIN_LEFT:.1}" y1="{zero:.1}" x2="{:.1}" y2="{zero:.1}" stroke-dasharray="3,3"/>"##,
        width - 20.0
    );
    for (k, f) in summary.iter().enumerate() {
        let cx = MARGIN_LEFT + SLOT * (k as f64 + 0.5);
        let label = escape(&f.feature);
        if f.min.is_finite() {
            let (left, right) = (cx - BOX_WIDTH / 2.0, cx + BOX_WIDTH / 2.0);
            let _ = writeln!(
                s,
                r#"<line class="whisker" x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}"/>"#,
                y(f.max),
                y(f.q3)
            );
            let _ = writeln!(
                s,
                r#"<line class="whisker" x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}"/>"#,
                y(f.q1),
                y(f.min)
            );
            for v in [f.min, f.max] {
                let _ = writeln!(
                    s,
                    r#"<line class="whisker" x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}"/>"#,
                    cx - BOX_WIDTH / 4.0,
                    y(v),
                    cx + BOX_WIDTH / 4.0,
                    y(v)
                );
            }
            let top = y(f.q3);
            let _ = writeln!(
                s,
                r#"<rect class="box" x="{left:.1}" y="{top:.1}" width="{BOX_WIDTH:.1}" height="{:.1}"><title>{label}</title></rect>"#,
                (y(f.q1) - top).max(0.5)
            );
            let _ = writeln!(
                s,
                r#"<line class="median" x1="{left:.1}" y1="{:.1}" x2="{right:.1}" y2="{:.1}"/>"#,
                y(f.median),
                y(f.median)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{label}</text>"#,
            MARGIN_TOP + PLOT_HEIGHT + 18.0
        );
    }
    s.push_str("</svg>\n");
    s
}

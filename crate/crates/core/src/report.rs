//! Model comparison and report rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::Groups;
use crate::error::{Error, Result};
use crate::metrics::{evaluate_base_metric, BaseMetricId, FairnessMetric, MetricFrame};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub performance: f64,
    pub fairness: f64,
    pub pareto: bool,
}

/// One point per model: overall performance against a disparity metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub performance_metric: String,
    pub fairness_metric: String,
    pub rows: Vec<ComparisonRow>,
}

/// A row is Pareto-optimal when no other row has performance at least as
/// high and disparity at most as high, with one of the two strictly better.
pub fn pareto_flags(points: &[(f64, f64)]) -> Vec<bool> {
    points
        .iter()
        .map(|&(p, f)| {
            !points
                .iter()
                .any(|&(q, g)| q >= p && g <= f && (q > p || g < f))
        })
        .collect()
}

/// Scores every model on performance and fairness. Predictions may be hard
/// labels or expected predictions in [0, 1].
pub fn compare_models(
    models: &[(String, Vec<f64>)],
    y_true: &[f64],
    groups: &Groups,
    performance: BaseMetricId,
    fairness: FairnessMetric,
) -> Result<ComparisonTable> {
    if models.is_empty() {
        return Err(Error::Config("at least one model is required".into()));
    }
    if !fairness.is_disparity() {
        return Err(Error::Config(format!(
            "`{}` is a ratio; comparisons need a disparity (difference) metric",
            fairness.name()
        )));
    }
    let mut seen = std::collections::HashSet::new();
    let mut points = Vec::with_capacity(models.len());
    for (name, preds) in models {
        if !seen.insert(name.as_str()) {
            return Err(Error::Config(format!("model name `{name}` is used twice")));
        }
        let perf = evaluate_base_metric(performance, y_true, preds, None)?.ok_or_else(|| {
            Error::Undefined(format!("{} of model `{name}`", performance.as_str()))
        })?;
        let fair = fairness.evaluate(y_true, preds, groups, None)?;
        points.push((perf, fair));
    }
    let flags = pareto_flags(&points);
    Ok(ComparisonTable {
        performance_metric: performance.as_str().to_string(),
        fairness_metric: fairness.name(),
        rows: models
            .iter()
            .zip(points)
            .zip(flags)
            .map(
                |(((name, _), (performance, fairness)), pareto)| ComparisonRow {
                    model: name.clone(),
                    performance,
                    fairness,
                    pareto,
                },
            )
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Assessment,
    Comparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool_version: String,
    /// SHA-256 of the input bytes, hex encoded.
    pub input_digest: String,
    /// Always `null`: reports are byte-identical across runs.
    pub timestamp: Option<String>,
}

impl Metadata {
    pub fn for_input(bytes: &[u8]) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input_digest: sha256_hex(bytes),
            timestamp: None,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Payload {
    Assessment(MetricFrame),
    Comparison(ComparisonTable),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub kind: ReportKind,
    pub metadata: Metadata,
    pub payload: Payload,
}

impl Report {
    pub fn assessment(frame: MetricFrame, metadata: Metadata) -> Self {
        Self {
            kind: ReportKind::Assessment,
            metadata,
            payload: Payload::Assessment(frame),
        }
    }

    pub fn comparison(table: ComparisonTable, metadata: Metadata) -> Self {
        Self {
            kind: ReportKind::Comparison,
            metadata,
            payload: Payload::Comparison(table),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text)?;
        let matches = matches!(
            (&r.kind, &r.payload),
            (ReportKind::Assessment, Payload::Assessment(_))
                | (ReportKind::Comparison, Payload::Comparison(_))
        );
        if !matches {
            return Err(Error::Format(
                "report kind does not match its payload".into(),
            ));
        }
        Ok(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "svg" => Ok(Format::Svg),
            _ => Err(Error::Config(format!("unknown format `{s}`"))),
        }
    }
}

/// Renders a report as pretty JSON, flat CSV or (comparisons only) an SVG
/// scatter plot. Numbers use the shortest representation that reads back
/// to the same value.
pub fn render_report(report: &Report, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(report)?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => match &report.payload {
            Payload::Assessment(frame) => assessment_csv(frame),
            Payload::Comparison(table) => comparison_csv(table),
        },
        Format::Svg => match &report.payload {
            Payload::Comparison(table) => Ok(scatter_svg(table).into_bytes()),
            Payload::Assessment(_) => {
                Err(Error::Format("svg output needs a comparison report".into()))
            }
        },
    }
}

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

/// One row per scope and metric: the overall values first, then each group.
fn assessment_csv(frame: &MetricFrame) -> Result<Vec<u8>> {
    let total: usize = frame.by_group.iter().map(|g| g.n).sum();
    let mut rows = Vec::new();
    for m in &frame.metrics {
        rows.push(vec![
            "overall".into(),
            String::new(),
            m.clone(),
            num(frame.overall_value(m)),
            total.to_string(),
        ]);
    }
    for g in &frame.by_group {
        for m in &frame.metrics {
            rows.push(vec![
                "group".into(),
                g.group.parts().join(","),
                m.clone(),
                num(g.values.get(m).copied().flatten()),
                g.n.to_string(),
            ]);
        }
    }
    csv_bytes(&["scope", "group", "metric", "value", "n"], rows)
}

fn comparison_csv(table: &ComparisonTable) -> Result<Vec<u8>> {
    let rows = table
        .rows
        .iter()
        .map(|r| {
            vec![
                r.model.clone(),
                num(Some(r.performance)),
                num(Some(r.fairness)),
                r.pareto.to_string(),
            ]
        })
        .collect();
    csv_bytes(
        &[
            "model",
            table.performance_metric.as_str(),
            table.fairness_metric.as_str(),
            "pareto",
        ],
        rows,
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Tick positions covering `[lo, hi]` with a 1-2-5 step, and the number of
/// decimals needed to print them.
fn ticks(lo: f64, hi: f64) -> (Vec<f64>, usize) {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    ((first..=last).map(|k| k as f64 * step).collect(), decimals)
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    let pad = if hi > lo { 0.1 * (hi - lo) } else { 0.05 };
    (lo - pad, hi + pad)
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 40.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;

fn scatter_svg(table: &ComparisonTable) -> String {
    let (x0, x1) = padded_range(table.rows.iter().map(|r| r.performance));
    let (y0, y1) = padded_range(table.rows.iter().map(|r| r.fairness));
    let px = |v: f64| LEFT + (v - x0) / (x1 - x0) * (WIDTH - LEFT - RIGHT);
    let py = |v: f64| HEIGHT - BOTTOM - (v - y0) / (y1 - y0) * (HEIGHT - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="600" viewBox="0 0 800 600" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="800" height="600" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="400" y="28" text-anchor="middle" font-size="16">{} vs {}</text>"#,
        escape(&table.performance_metric),
        escape(&table.fairness_metric)
    );
    let (bx, by) = (HEIGHT - BOTTOM, WIDTH - RIGHT);
    let _ = writeln!(
        s,
        r#"<g stroke="black"><line x1="{LEFT}" y1="{bx}" x2="{by}" y2="{bx}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{bx}"/></g>"#
    );

    let (xt, xd) = ticks(x0, x1);
    for t in xt {
        let x = px(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{bx}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{t:.xd$}</text>"#,
            bx + 5.0,
            bx + 20.0
        );
    }
    let (yt, yd) = ticks(y0, y1);
    for t in yt {
        let y = py(t);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{t:.yd$}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 20.0,
        escape(&table.performance_metric)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        escape(&table.fairness_metric)
    );

    for r in &table.rows {
        let (cx, cy) = (px(r.performance), py(r.fairness));
        let style = if r.pareto {
            r##"class="pareto" fill="#d62728" stroke="#d62728""##
        } else {
            r##"class="dominated" fill="white" stroke="#1f77b4""##
        };
        let _ = writeln!(
            s,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="6" stroke-width="2" {style}/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            cx + 9.0,
            cy - 9.0,
            escape(&r.model)
        );
    }
    s.push_str("</svg>\n");
    s
}

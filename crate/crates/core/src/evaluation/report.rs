//! Report files written for a run: a per-event CSV table, a JSON summary
//! and SVG charts.

use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{
    ConformanceTrace, Diagnostics, EvaluationError, FailedRun, MetricsReport, Phase, RunMeta,
};

pub const TABLE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CHART_FILE: &str = "chart.svg";
pub const COMPARISON_CHART_FILE: &str = "comparison.svg";
pub const SUMMARY_FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub index: usize,
    pub gt: f64,
    pub prediction: f64,
    pub abs_error: f64,
    pub latency_ns: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Completed,
    Failed,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub format_version: u64,
    pub status: RunStatus,
    pub meta: RunMeta,
    /// Number of validation events answered.
    pub events: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_phase: Option<Phase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_event: Option<usize>,
    pub diagnostics: Diagnostics,
    /// Metrics of the comparison trace, when one was given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSummary {
    pub algorithm: String,
    pub metrics: MetricsReport,
}

impl RunSummary {
    pub fn completed(trace: &ConformanceTrace, metrics: MetricsReport) -> Self {
        Self {
            format_version: SUMMARY_FORMAT_VERSION,
            status: RunStatus::Completed,
            meta: trace.meta.clone(),
            events: trace.len(),
            metrics: Some(metrics),
            error: None,
            failed_phase: None,
            failed_event: None,
            diagnostics: trace.diagnostics.clone(),
            baseline: None,
        }
    }

    pub fn failed(run: &FailedRun) -> Self {
        Self {
            format_version: SUMMARY_FORMAT_VERSION,
            status: RunStatus::Failed,
            meta: run.trace.meta.clone(),
            events: run.trace.len(),
            metrics: None,
            error: Some(run.error.to_string()),
            failed_phase: Some(run.phase),
            failed_event: run.event_index,
            diagnostics: run.trace.diagnostics.clone(),
            baseline: None,
        }
    }

    pub fn with_baseline(mut self, algorithm: impl Into<String>, metrics: MetricsReport) -> Self {
        self.baseline = Some(BaselineSummary {
            algorithm: algorithm.into(),
            metrics,
        });
        self
    }
}

pub fn write_table<W: Write>(trace: &ConformanceTrace, sink: W) -> Result<(), EvaluationError> {
    let mut w = csv::Writer::from_writer(sink);
    for (i, ((g, p), l)) in trace
        .gt
        .iter()
        .zip(&trace.predictions)
        .zip(&trace.latencies)
        .enumerate()
    {
        w.serialize(TableRow {
            index: i,
            gt: *g,
            prediction: *p,
            abs_error: (p - g).abs(),
            latency_ns: u64::try_from(l.as_nanos()).unwrap_or(u64::MAX),
        })
        .map_err(csv_error)?;
    }
    if trace.is_empty() {
        w.write_record(["index", "gt", "prediction", "abs_error", "latency_ns"])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> EvaluationError {
    EvaluationError::Report {
        path: TABLE_FILE.into(),
        message: e.to_string(),
    }
}

pub fn read_table<R: Read>(source: R) -> Result<Vec<TableRow>, EvaluationError> {
    csv::Reader::from_reader(source)
        .deserialize()
        .collect::<Result<Vec<TableRow>, _>>()
        .map_err(csv_error)
}

/// Splits table rows back into gt, prediction and latency columns.
pub fn table_columns(rows: &[TableRow]) -> (Vec<f64>, Vec<f64>, Vec<Duration>) {
    (
        rows.iter().map(|r| r.gt).collect(),
        rows.iter().map(|r| r.prediction).collect(),
        rows.iter()
            .map(|r| Duration::from_nanos(r.latency_ns))
            .collect(),
    )
}

pub fn read_summary(dir: &Path) -> Result<RunSummary, EvaluationError> {
    let path = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&path)?;
    let summary: RunSummary = serde_json::from_str(&text).map_err(|e| EvaluationError::Report {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    if summary.format_version != SUMMARY_FORMAT_VERSION {
        return Err(EvaluationError::Report {
            path: path.display().to_string(),
            message: format!("unsupported format_version {}", summary.format_version),
        });
    }
    Ok(summary)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 320.0;
const MARGIN: f64 = 40.0;

fn points(values: &[f64], n: usize) -> String {
    let span = (n.max(2) - 1) as f64;
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        let x = MARGIN + (WIDTH - 2.0 * MARGIN) * i as f64 / span;
        let y = MARGIN + (HEIGHT - 2.0 * MARGIN) * (1.0 - v.clamp(0.0, 1.0));
        if !s.is_empty() {
            s.push(' ');
        }
        let _ = write!(s, "{x:.2},{y:.2}");
    }
    s
}

/// Prediction against ground truth over the event index, as a standalone
/// SVG document. A baseline trace, if given, is drawn as a third line.
pub fn render_chart(trace: &ConformanceTrace, baseline: Option<&ConformanceTrace>) -> String {
    let n = trace.len().max(baseline.map_or(0, ConformanceTrace::len));
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN}" y="24" font-family="sans-serif" font-size="14">{} on {}</text>"#,
        escape(&trace.meta.algorithm),
        escape(&trace.meta.stream_id)
    );
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r##"<path d="M{x0},{y0} L{x0},{y1} L{x1},{y1}" stroke="#444" fill="none"/>"##
    );
    for (label, y) in [("1", y0), ("0.5", (y0 + y1) / 2.0), ("0", y1)] {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{label}</text>"#,
            x0 - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{x1}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">event {}</text>"#,
        y1 + 16.0,
        n.saturating_sub(1)
    );
    let mut line = |id: &str, values: &[f64], color: &str, extra: &str| {
        let _ = writeln!(
            svg,
            r#"<polyline id="{id}" points="{}" stroke="{color}" stroke-width="1.5" fill="none"{extra}/>"#,
            points(values, n)
        );
    };
    line("gt", &trace.gt, "#222222", "");
    line(
        "prediction",
        &trace.predictions,
        "#1f77b4",
        r#" stroke-opacity="0.8""#,
    );
    if let Some(b) = baseline {
        line(
            "baseline",
            &b.predictions,
            "#ff7f0e",
            r#" stroke-dasharray="4 3""#,
        );
    }
    let mut legend = vec![("ground truth", "#222222"), ("prediction", "#1f77b4")];
    if baseline.is_some() {
        legend.push(("baseline", "#ff7f0e"));
    }
    for (i, (label, color)) in legend.iter().enumerate() {
        let x = x1 - 120.0;
        let y = 20.0 + 14.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}" font-family="sans-serif" font-size="11">{label}</text>"#,
            x + 16.0,
            x + 20.0,
            y + 4.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Paths written by [`emit_report`].
#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub table: PathBuf,
    pub summary: PathBuf,
    pub chart: PathBuf,
    pub comparison: Option<PathBuf>,
}

/// Writes table, summary and chart into `dir` (created if missing), plus a
/// comparison chart when `baseline` is given.
pub fn emit_report(
    dir: &Path,
    summary: &RunSummary,
    trace: &ConformanceTrace,
    baseline: Option<&ConformanceTrace>,
) -> Result<ReportFiles, EvaluationError> {
    fs::create_dir_all(dir)?;
    let files = ReportFiles {
        table: dir.join(TABLE_FILE),
        summary: dir.join(SUMMARY_FILE),
        chart: dir.join(CHART_FILE),
        comparison: baseline.map(|_| dir.join(COMPARISON_CHART_FILE)),
    };
    write_table(
        trace,
        std::io::BufWriter::new(fs::File::create(&files.table)?),
    )?;
    let json = serde_json::to_string_pretty(summary).expect("summary serializes");
    fs::write(&files.summary, json + "\n")?;
    fs::write(&files.chart, render_chart(trace, None))?;
    if let (Some(path), Some(b)) = (&files.comparison, baseline) {
        fs::write(path, render_chart(trace, Some(b)))?;
    }
    Ok(files)
}

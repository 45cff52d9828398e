//! Writes a report directory (per-event table, summary, charts) and reads
//! the table back to recompute the metrics.
//!
//!     cargo run --example reports -- /tmp/report

use std::path::PathBuf;

use driftbench::algorithm::{ConstantPredictor, FrequencyConformance};
use driftbench::bundle::{generate_bundle, BundleSpec};
use driftbench::evaluation::{
    average_latency, compute_metrics, emit_report, metrics_from_columns, read_table,
    run_evaluation, table_columns, RunOptions, RunSummary, ScoreWeights, DEFAULT_LATENCY_BUDGET,
};
use driftbench::stream::DriftType;

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("driftbench-report"));
    let bundle = generate_bundle(&BundleSpec::preset(DriftType::Recurring, 2)).expect("bundle");
    let options = RunOptions::default();
    let weights = ScoreWeights::default();

    let trace = run_evaluation(
        &mut FrequencyConformance::new(),
        &bundle.train,
        &bundle.validation,
        &options,
    )
    .unwrap();
    let other = run_evaluation(
        &mut ConstantPredictor::new(0.5),
        &bundle.train,
        &bundle.validation,
        &options,
    )
    .unwrap();
    let metrics = compute_metrics(&trace, &weights, DEFAULT_LATENCY_BUDGET).unwrap();
    let other_metrics = compute_metrics(&other, &weights, DEFAULT_LATENCY_BUDGET).unwrap();
    let summary =
        RunSummary::completed(&trace, metrics.clone()).with_baseline("constant:0.5", other_metrics);

    let files = emit_report(&dir, &summary, &trace, Some(&other)).expect("report");
    println!("table   {}", files.table.display());
    println!("summary {}", files.summary.display());
    println!(
        "charts  {} {}",
        files.chart.display(),
        files.comparison.unwrap().display()
    );

    let rows = read_table(std::fs::File::open(&files.table).unwrap()).unwrap();
    let (gt, pred, lat) = table_columns(&rows);
    let again = metrics_from_columns(
        &gt,
        &pred,
        average_latency(&lat),
        &weights,
        DEFAULT_LATENCY_BUDGET,
    )
    .unwrap();
    println!(
        "score {:.6}, recomputed from table {:.6}",
        metrics.score, again.score
    );
}

//! Runs the frequency baseline on a sudden drift stream and prints its
//! mean output per ground-truth level.

use driftbench::algorithm::FrequencyConformance;
use driftbench::bundle::{generate_bundle, BundleSpec};
use driftbench::evaluation::{
    compute_metrics, run_evaluation, RunOptions, ScoreWeights, DEFAULT_LATENCY_BUDGET,
};
use driftbench::stream::DriftType;

fn main() {
    let bundle = generate_bundle(&BundleSpec::preset(DriftType::Sudden, 1)).expect("bundle");
    let mut alg = FrequencyConformance::new();
    let trace = run_evaluation(
        &mut alg,
        &bundle.train,
        &bundle.validation,
        &RunOptions::default(),
    )
    .expect("run");

    for level in [1.0, 0.5, 0.0] {
        let out: Vec<f64> = trace
            .gt
            .iter()
            .zip(&trace.predictions)
            .filter(|(g, _)| **g == level)
            .map(|(_, p)| *p)
            .collect();
        println!(
            "gt {level}: mean conformance {:.3} over {} events",
            out.iter().sum::<f64>() / out.len() as f64,
            out.len()
        );
    }
    let m = compute_metrics(&trace, &ScoreWeights::default(), DEFAULT_LATENCY_BUDGET).unwrap();
    println!(
        "score {:.4}  mae {:.4}  accuracy {:.4}",
        m.score, m.mae, m.accuracy
    );
}

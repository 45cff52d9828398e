//! An algorithm living in another process.
//!
//! Run without arguments, this example re-launches itself with `child` and
//! evaluates the child over the line protocol; the child serves a self-updating
//! variant of the frequency baseline on stdin/stdout.
//!
//!     cargo run --example external_adapter

use std::time::Duration;

use driftbench::adapter::{serve, spawn, AdapterConfig, ServeOptions};
use driftbench::algorithm::{frequency_baseline_score, Algorithm, AlgorithmError, FrequencyState};
use driftbench::bundle::{generate_bundle, BundleSpec};
use driftbench::evaluation::{
    compute_metrics, run_evaluation, RunOptions, ScoreWeights, DEFAULT_LATENCY_BUDGET,
};
use driftbench::stream::{DriftType, Event};

/// Frequency baseline that keeps counting the events it scores.
struct SelfUpdating {
    state: FrequencyState,
}

impl Algorithm for SelfUpdating {
    fn name(&self) -> &str {
        "self-updating-frequency"
    }

    fn learn(&mut self, event: &Event) -> Result<(), AlgorithmError> {
        self.state.learn(event);
        Ok(())
    }

    fn conformance(&mut self, event: &Event) -> Result<f64, AlgorithmError> {
        let prev = self
            .state
            .last_activity_per_case
            .get(&event.case_id)
            .cloned();
        let score = frequency_baseline_score(&mut self.state, event);
        // scoring already advanced the case; rewind it so learn sees the true predecessor
        match prev {
            Some(p) => self
                .state
                .last_activity_per_case
                .insert(event.case_id.clone(), p),
            None => self.state.last_activity_per_case.remove(&event.case_id),
        };
        self.state.learn(event);
        Ok(score)
    }
}

fn child() {
    let mut alg = SelfUpdating {
        state: FrequencyState::default(),
    };
    eprintln!("child ready");
    let stdin = std::io::stdin();
    serve(
        &mut alg,
        stdin.lock(),
        std::io::stdout(),
        &ServeOptions::default(),
    )
    .expect("serve");
}

fn main() {
    if std::env::args().nth(1).as_deref() == Some("child") {
        return child();
    }
    let me = std::env::current_exe()
        .expect("current exe")
        .display()
        .to_string();
    let config = AdapterConfig {
        event_deadline: Duration::from_millis(500),
        ..AdapterConfig::default()
    };
    let mut ext = spawn(&[me, "child".into()], &config).expect("spawn child");

    let bundle = generate_bundle(&BundleSpec::preset(DriftType::Gradual, 5)).expect("bundle");
    match run_evaluation(
        &mut ext,
        &bundle.train,
        &bundle.validation,
        &RunOptions::default(),
    ) {
        Ok(trace) => {
            let m =
                compute_metrics(&trace, &ScoreWeights::default(), DEFAULT_LATENCY_BUDGET).unwrap();
            println!(
                "{}: score {:.4}, avg latency {:?}",
                trace.meta.algorithm, m.score, m.avg_latency
            );
        }
        Err(failed) => println!("run failed: {failed}"),
    }
    if let Some(log) = ext.diagnostics() {
        print!("child stderr: {log}");
    }
}

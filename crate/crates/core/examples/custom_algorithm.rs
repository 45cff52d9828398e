//! Implementing the algorithm contract in-process.
//!
//! The checker below remembers every (previous, current) activity pair seen
//! during warm-up and answers 1 for known pairs, 0 otherwise.

use std::collections::{HashMap, HashSet};

use driftbench::algorithm::{Algorithm, AlgorithmError};
use driftbench::bundle::{generate_bundle, BundleSpec};
use driftbench::evaluation::{
    compute_metrics, run_evaluation, RunOptions, ScoreWeights, DEFAULT_LATENCY_BUDGET,
};
use driftbench::stream::{DriftType, Event};

#[derive(Default)]
struct PairMemory {
    known: HashSet<(String, String)>,
    last: HashMap<String, String>,
}

impl PairMemory {
    fn step(&mut self, event: &Event) -> Option<(String, String)> {
        let prev = self
            .last
            .insert(event.case_id.clone(), event.activity.clone());
        prev.map(|p| (p, event.activity.clone()))
    }
}

impl Algorithm for PairMemory {
    fn name(&self) -> &str {
        "pair-memory"
    }

    fn learn(&mut self, event: &Event) -> Result<(), AlgorithmError> {
        if let Some(pair) = self.step(event) {
            self.known.insert(pair);
        }
        Ok(())
    }

    fn conformance(&mut self, event: &Event) -> Result<f64, AlgorithmError> {
        Ok(match self.step(event) {
            None => 1.0,
            Some(pair) if self.known.contains(&pair) => 1.0,
            Some(_) => 0.0,
        })
    }
}

fn main() {
    for drift in DriftType::ALL {
        let bundle = generate_bundle(&BundleSpec::preset(drift, 3)).expect("bundle");
        // scored mode: events arrive without labels
        let trace = run_evaluation(
            &mut PairMemory::default(),
            &bundle.train,
            &bundle.validation,
            &RunOptions::default(),
        )
        .expect("run");
        let m = compute_metrics(&trace, &ScoreWeights::default(), DEFAULT_LATENCY_BUDGET).unwrap();
        println!(
            "{:<12} score {:.4}  mae {:.4}",
            drift.name(),
            m.score,
            m.mae
        );
    }
}

//! Generates one bundle per drift type and summarizes its ground truth.
//!
//!     cargo run --example drift_streams -- /tmp/streams

use std::path::PathBuf;

use driftbench::bundle::{generate_bundle, write_bundle, BundleSpec};
use driftbench::stream::{DriftType, Interleaving};

fn main() {
    let out = std::env::args().nth(1).map(PathBuf::from);
    for drift in DriftType::ALL {
        let mut spec = BundleSpec::preset(drift, 42);
        spec.params.interleaving = Interleaving::RandomInterleave {
            max_parallel_cases: 3,
        };
        let bundle = generate_bundle(&spec).expect("bundle");
        let m = &bundle.manifest;
        let blocks: Vec<String> = m
            .gt_blocks
            .iter()
            .take(6)
            .map(|b| format!("{}x{}", b.cases, b.gt))
            .collect();
        println!(
            "{:<12} {} cases, {} events, gt blocks {}{}",
            drift.name(),
            m.validation_cases,
            m.validation_events,
            blocks.join(" "),
            if m.gt_blocks.len() > 6 { " ..." } else { "" }
        );
        if let Some(dir) = &out {
            write_bundle(&bundle, &dir.join(drift.name())).expect("write bundle");
        }
    }
}

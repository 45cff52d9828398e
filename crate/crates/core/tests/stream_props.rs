use std::collections::BTreeMap;

use driftbench::bundle::{generate_bundle, write_bundle, BundleSpec};
use driftbench::model::{accepts, generate_model_pair, GenerationConfig};
use driftbench::stream::{
    build_scenario, generate_validation_stream, read_events, read_stream, write_stream, DriftType,
    Interleaving, ScenarioParams,
};
use proptest::prelude::*;

fn drift() -> impl Strategy<Value = DriftType> {
    prop::sample::select(DriftType::ALL.to_vec())
}

fn allowed_gt(g: f64, intermediates: usize) -> bool {
    let j = intermediates + 1;
    [1.0, 0.5, 0.0].contains(&g) || (0..=j).any(|i| (g - (1.0 - i as f64 / j as f64)).abs() < 1e-12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn streams_are_well_formed(
        seed in any::<u64>(),
        drift in drift(),
        interleave in prop::option::of(2usize..6),
        cases in 1usize..30,
        transition in 1usize..20,
    ) {
        let pair = generate_model_pair(&GenerationConfig::with_seed(seed)).unwrap();
        let params = ScenarioParams {
            before_cases: cases,
            after_cases: cases,
            transition_cases: transition,
            transition_window: transition,
            interleaving: interleave
                .map_or(Interleaving::Sequential, |n| Interleaving::RandomInterleave { max_parallel_cases: n }),
            seed,
            ..ScenarioParams::default()
        };
        let scenario = build_scenario(&pair.p, &pair.k, drift, &params).unwrap();
        let s = generate_validation_stream(&scenario).unwrap();
        prop_assert_eq!(s.gt.len(), s.events.len());
        for g in &s.gt {
            prop_assert!(allowed_gt(*g, params.n_intermediate_models), "gt {}", g);
        }
        for w in s.events.windows(2) {
            prop_assert!(w[0].timestamp < w[1].timestamp);
        }
        // per-case order is a trace of the case's source model
        let mut traces: BTreeMap<&str, (Vec<String>, &str)> = BTreeMap::new();
        for e in &s.events {
            let entry = traces.entry(&e.case_id).or_insert((Vec::new(), e.origin.as_deref().unwrap()));
            entry.0.push(e.activity.clone());
        }
        prop_assert_eq!(traces.len(), scenario.total_cases());
        for (case, (trace, origin)) in &traces {
            prop_assert!(accepts(&scenario.models[*origin], trace), "{}: {:?}", case, trace);
        }
        let mut buf = Vec::new();
        write_stream(&s, &mut buf).unwrap();
        prop_assert_eq!(&read_stream(&buf[..]).unwrap(), &s);
        prop_assert_eq!(read_events(&buf[..]).unwrap(), s.events.clone());
    }
}

#[test]
fn identical_seeds_give_identical_files() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for drift in DriftType::ALL {
        let mut spec = BundleSpec::preset(drift, 42);
        spec.params.interleaving = Interleaving::RandomInterleave {
            max_parallel_cases: 4,
        };
        for d in &dirs {
            write_bundle(&generate_bundle(&spec).unwrap(), d.path()).unwrap();
        }
        for f in [
            "model_p.txt",
            "model_k.txt",
            "model_w.txt",
            "train.jsonl",
            "validation.jsonl",
            "scenario.json",
        ] {
            let a = std::fs::read(dirs[0].path().join(f)).unwrap();
            let b = std::fs::read(dirs[1].path().join(f)).unwrap();
            assert!(a == b, "{drift} {f} differs");
        }
    }
    let other = generate_bundle(&BundleSpec::preset(DriftType::Sudden, 43)).unwrap();
    assert_ne!(
        other,
        generate_bundle(&BundleSpec::preset(DriftType::Sudden, 42)).unwrap()
    );
}

#[test]
fn sudden_preset_case_labels() {
    let b = generate_bundle(&BundleSpec::preset(DriftType::Sudden, 5)).unwrap();
    let per_case: Vec<f64> = b
        .validation
        .per_case_gt()
        .into_iter()
        .map(|(_, g)| g)
        .collect();
    let count = |v: f64| per_case.iter().filter(|g| **g == v).count();
    assert_eq!((count(1.0), count(0.5), count(0.0)), (100, 50, 100));
}

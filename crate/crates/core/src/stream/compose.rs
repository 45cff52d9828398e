use std::collections::VecDeque;

use chrono::Duration;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{stream_epoch, DriftScenario, Event, Interleaving, LabeledStream, StreamError};
use crate::model::{play_out, play_out_with_rng, ProcessModel, Trace};

pub const DEFAULT_TRAIN_CASES: usize = 500;

struct Case {
    id: String,
    origin: String,
    gt: f64,
    trace: Trace,
}

fn flatten(cases: Vec<Case>, interleaving: Interleaving, rng: &mut ChaCha8Rng) -> LabeledStream {
    let mut order: Vec<(usize, usize)> = Vec::new();
    match interleaving {
        Interleaving::Sequential => {
            for (c, case) in cases.iter().enumerate() {
                order.extend((0..case.trace.len()).map(|i| (c, i)));
            }
        }
        Interleaving::RandomInterleave { max_parallel_cases } => {
            let mut pending: VecDeque<usize> = (0..cases.len()).collect();
            // (case, next event index)
            let mut open: Vec<(usize, usize)> = Vec::new();
            loop {
                while open.len() < max_parallel_cases {
                    match pending.pop_front() {
                        Some(c) => open.push((c, 0)),
                        None => break,
                    }
                }
                if open.is_empty() {
                    break;
                }
                let slot = rng.gen_range(0..open.len());
                let (c, i) = open[slot];
                order.push((c, i));
                if i + 1 == cases[c].trace.len() {
                    open.remove(slot);
                } else {
                    open[slot].1 += 1;
                }
            }
        }
    }
    let epoch = stream_epoch();
    let mut events = Vec::with_capacity(order.len());
    let mut gt = Vec::with_capacity(order.len());
    for (n, (c, i)) in order.into_iter().enumerate() {
        let case = &cases[c];
        events.push(
            Event::new(
                case.id.clone(),
                case.trace[i].clone(),
                epoch + Duration::seconds(n as i64),
            )
            .with_origin(case.origin.clone()),
        );
        gt.push(case.gt);
    }
    LabeledStream { events, gt }
}

/// Warm-up stream: a sequential play-out of `p`, every event at ground truth 1.
pub fn generate_train_stream(p: &ProcessModel, n_cases: usize, seed: u64) -> LabeledStream {
    let cases = play_out(p, n_cases, seed)
        .into_iter()
        .enumerate()
        .map(|(i, trace)| Case {
            id: format!("t{}", i + 1),
            origin: "p".into(),
            gt: 1.0,
            trace,
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    flatten(cases, Interleaving::Sequential, &mut rng)
}

/// Plays out every segment of `scenario` in order and lays the cases out
/// according to its interleaving. Event `n` is stamped `epoch + n` seconds.
pub fn generate_validation_stream(scenario: &DriftScenario) -> Result<LabeledStream, StreamError> {
    scenario.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    rng.set_stream(3);
    let mut cases = Vec::with_capacity(scenario.total_cases());
    for seg in &scenario.segments {
        let model = &scenario.models[&seg.source];
        for trace in play_out_with_rng(model, seg.n_cases, &mut rng) {
            cases.push(Case {
                id: format!("v{}", cases.len() + 1),
                origin: seg.origin_label.clone(),
                gt: seg.gt_level,
                trace,
            });
        }
    }
    Ok(flatten(cases, scenario.interleaving, &mut rng))
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, BTreeSet};

    use super::*;
    use crate::model::{accepts, generate_variant_with_steps, GenerationConfig};
    use crate::stream::{build_scenario, DriftType, ScenarioParams};

    fn model(s: &str) -> ProcessModel {
        s.parse().unwrap()
    }

    #[test]
    fn train_stream_of_a_fixed_sequence() {
        let s = generate_train_stream(&model("seq(a, b)"), 2, 0);
        let acts: Vec<&str> = s.events.iter().map(|e| e.activity.as_str()).collect();
        assert_eq!(acts, ["a", "b", "a", "b"]);
        let cases: BTreeSet<&str> = s.events.iter().map(|e| e.case_id.as_str()).collect();
        assert_eq!(cases.len(), 2);
        assert_eq!(s.gt, vec![1.0; 4]);
        assert!(s.events.iter().all(|e| e.origin.as_deref() == Some("p")));
    }

    fn two_step_scenario(interleaving: Interleaving) -> DriftScenario {
        let p = model("seq(a, b)");
        let k = generate_variant_with_steps(&p, &GenerationConfig::with_seed(0)).unwrap();
        assert_eq!(k.model, model("seq(b, a)"));
        let params = ScenarioParams {
            interleaving,
            seed: 11,
            ..Default::default()
        };
        build_scenario(&p, &k, DriftType::Sudden, &params).unwrap()
    }

    #[test]
    fn sudden_event_labels() {
        let s = generate_validation_stream(&two_step_scenario(Interleaving::Sequential)).unwrap();
        assert_eq!(s.len(), 500);
        let mut want = vec![1.0; 200];
        want.extend([0.5; 100]);
        want.extend([0.0; 200]);
        assert_eq!(s.gt, want);
        // contiguous cases
        for pair in s.events.chunks(2) {
            assert_eq!(pair[0].case_id, pair[1].case_id);
        }
        for w in s.events.windows(2) {
            assert!(w[0].timestamp < w[1].timestamp);
        }
    }

    #[test]
    fn interleaving_bounds_open_cases() {
        let scenario = two_step_scenario(Interleaving::RandomInterleave {
            max_parallel_cases: 5,
        });
        let s = generate_validation_stream(&scenario).unwrap();
        assert_eq!(s.len(), 500);
        let mut remaining: BTreeMap<&str, usize> = BTreeMap::new();
        for e in &s.events {
            *remaining.entry(&e.case_id).or_default() += 1;
        }
        let mut open = BTreeSet::new();
        let mut traces: BTreeMap<&str, Vec<String>> = BTreeMap::new();
        let mut max_open = 0;
        for e in &s.events {
            open.insert(e.case_id.as_str());
            max_open = max_open.max(open.len());
            traces
                .entry(&e.case_id)
                .or_default()
                .push(e.activity.clone());
            let r = remaining.get_mut(e.case_id.as_str()).unwrap();
            *r -= 1;
            if *r == 0 {
                open.remove(e.case_id.as_str());
            }
        }
        assert!(max_open <= 5 && max_open > 1);
        for (case, trace) in traces {
            let origin = &s.events.iter().find(|e| e.case_id == case).unwrap().origin;
            let m = &scenario.models[origin.as_deref().unwrap()];
            assert!(accepts(m, &trace), "{case}: {trace:?}");
        }
    }
}

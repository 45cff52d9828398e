//! Helpers shared by the integration tests, including oracles that
//! recompute library results by independent means.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};
use std::time::Duration;

use driftbench::algorithm::{Algorithm, AlgorithmError};
use driftbench::model::{DirectlyFollows, Node, ProcessModel};
use driftbench::stream::Event;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_driftbench")
}

/// Execution state of a process tree node, for small-step play-out.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum State {
    Ready,
    Done,
    Seq(usize, Box<State>),
    Xor(Option<(usize, Box<State>)>),
    And(Vec<State>),
    /// (in redo part, redo rounds taken, inner state)
    Loop(bool, u32, Box<State>),
}

fn init(node: &Node) -> State {
    match node {
        Node::Leaf(_) => State::Ready,
        Node::Sequence(c) => State::Seq(0, Box::new(init(&c[0]))),
        Node::ExclusiveChoice(_) => State::Xor(None),
        Node::Parallel(c) => State::And(c.iter().map(init).collect()),
        Node::Loop { body, .. } => State::Loop(false, 0, Box::new(init(body))),
    }
}

fn is_final(node: &Node, s: &State) -> bool {
    match (node, s) {
        (Node::Leaf(_), State::Done) => true,
        (Node::Sequence(c), State::Seq(i, s)) => *i + 1 == c.len() && is_final(&c[*i], s),
        (Node::ExclusiveChoice(c), State::Xor(Some((i, s)))) => is_final(&c[*i], s),
        (Node::Parallel(c), State::And(ss)) => c.iter().zip(ss).all(|(n, s)| is_final(n, s)),
        (Node::Loop { body, .. }, State::Loop(false, _, s)) => is_final(body, s),
        _ => false,
    }
}

/// Every (activity, successor state) one step away.
fn steps(node: &Node, s: &State) -> Vec<(String, State)> {
    match (node, s) {
        (Node::Leaf(a), State::Ready) => vec![(a.clone(), State::Done)],
        (Node::Leaf(_), _) => vec![],
        (Node::Sequence(c), State::Seq(i, inner)) => {
            let mut out: Vec<(String, State)> = steps(&c[*i], inner)
                .into_iter()
                .map(|(a, s)| (a, State::Seq(*i, Box::new(s))))
                .collect();
            if is_final(&c[*i], inner) && *i + 1 < c.len() {
                let next = &c[*i + 1];
                out.extend(
                    steps(next, &init(next))
                        .into_iter()
                        .map(|(a, s)| (a, State::Seq(*i + 1, Box::new(s)))),
                );
            }
            out
        }
        (Node::ExclusiveChoice(c), State::Xor(None)) => c
            .iter()
            .enumerate()
            .flat_map(|(i, n)| {
                steps(n, &init(n))
                    .into_iter()
                    .map(move |(a, s)| (a, State::Xor(Some((i, Box::new(s))))))
            })
            .collect(),
        (Node::ExclusiveChoice(c), State::Xor(Some((i, inner)))) => steps(&c[*i], inner)
            .into_iter()
            .map(|(a, s)| (a, State::Xor(Some((*i, Box::new(s))))))
            .collect(),
        (Node::Parallel(c), State::And(ss)) => {
            let mut out = Vec::new();
            for (j, n) in c.iter().enumerate() {
                for (a, s) in steps(n, &ss[j]) {
                    let mut next = ss.clone();
                    next[j] = s;
                    out.push((a, State::And(next)));
                }
            }
            out
        }
        (
            Node::Loop {
                body,
                redo,
                max_redo,
            },
            State::Loop(in_redo, rounds, inner),
        ) => {
            let (cur, other) = if *in_redo { (redo, body) } else { (body, redo) };
            let mut out: Vec<(String, State)> = steps(cur, inner)
                .into_iter()
                .map(|(a, s)| (a, State::Loop(*in_redo, *rounds, Box::new(s))))
                .collect();
            let may_switch = is_final(cur, inner) && (*in_redo || *rounds < *max_redo);
            if may_switch {
                let r = if *in_redo { *rounds } else { *rounds + 1 };
                out.extend(
                    steps(other, &init(other))
                        .into_iter()
                        .map(|(a, s)| (a, State::Loop(!*in_redo, r, Box::new(s)))),
                );
            }
            out
        }
        _ => vec![],
    }
}

/// Directly-follows pairs found by exhaustively exploring the model's
/// reachable execution states.
pub fn explored_directly_follows(model: &ProcessModel) -> DirectlyFollows {
    let root = model.root();
    let mut df = BTreeSet::new();
    let mut seen: HashSet<(State, Option<String>)> = HashSet::new();
    let mut stack = vec![(init(root), None::<String>)];
    while let Some((state, last)) = stack.pop() {
        if !seen.insert((state.clone(), last.clone())) {
            continue;
        }
        for (a, next) in steps(root, &state) {
            if let Some(prev) = &last {
                df.insert((prev.clone(), a.clone()));
            }
            stack.push((next, Some(a)));
        }
    }
    df
}

/// Leaf labels, collected by walking the tree directly.
pub fn leaf_labels(node: &Node) -> BTreeSet<String> {
    match node {
        Node::Leaf(a) => BTreeSet::from([a.clone()]),
        Node::Sequence(c) | Node::ExclusiveChoice(c) | Node::Parallel(c) => {
            c.iter().flat_map(leaf_labels).collect()
        }
        Node::Loop { body, redo, .. } => leaf_labels(body)
            .union(&leaf_labels(redo))
            .cloned()
            .collect(),
    }
}

/// Straightforward restatement of the metric definitions.
pub struct NaiveMetrics {
    pub accuracy: f64,
    pub mae: f64,
    pub rmse: f64,
    pub robustness: f64,
    pub latency_score: f64,
    pub score: f64,
}

pub fn naive_metrics(
    gt: &[f64],
    pred: &[f64],
    avg_latency_ms: f64,
    budget_ms: f64,
) -> NaiveMetrics {
    let n = gt.len() as f64;
    let errors: Vec<f64> = gt.iter().zip(pred).map(|(g, p)| (g - p).abs()).collect();
    let accuracy = errors.iter().filter(|e| **e <= 0.1).count() as f64 / n;
    let mae = errors.iter().sum::<f64>() / n;
    let rmse = (errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    let robustness = 1.0 - errors.iter().filter(|e| **e > 0.3).count() as f64 / n;
    let latency_score = f64::max(0.0, 1.0 - avg_latency_ms / budget_ms);
    let score = 0.3 * accuracy
        + 0.25 * (1.0 - mae)
        + 0.2 * (1.0 - rmse)
        + 0.15 * latency_score
        + 0.1 * robustness;
    NaiveMetrics {
        accuracy,
        mae,
        rmse,
        robustness,
        latency_score,
        score,
    }
}

/// Answers a constant after sleeping `delay` on every conformance call.
pub struct SleepStub {
    pub delay: Duration,
}

impl Algorithm for SleepStub {
    fn name(&self) -> &str {
        "sleep-stub"
    }
    fn learn(&mut self, _: &Event) -> Result<(), AlgorithmError> {
        Ok(())
    }
    fn conformance(&mut self, _: &Event) -> Result<f64, AlgorithmError> {
        if !self.delay.is_zero() {
            std::thread::sleep(self.delay);
        }
        Ok(0.5)
    }
}

pub fn sudden_case_gt() -> Vec<f64> {
    let mut gt = vec![1.0; 100];
    gt.extend([0.5; 50]);
    gt.extend([0.0; 100]);
    gt
}

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Node, ProcessModel};

/// Ordered activity labels of one case.
pub type Trace = Vec<String>;

pub(crate) fn sample_trace<R: Rng + ?Sized>(node: &Node, rng: &mut R, out: &mut Trace) {
    match node {
        Node::Leaf(a) => out.push(a.clone()),
        Node::Sequence(children) => children.iter().for_each(|c| sample_trace(c, rng, out)),
        Node::ExclusiveChoice(children) => {
            let c = children.choose(rng).expect("non-empty choice");
            sample_trace(c, rng, out);
        }
        Node::Parallel(children) => {
            let mut parts: Vec<std::vec::IntoIter<String>> = children
                .iter()
                .map(|c| {
                    let mut t = Trace::new();
                    sample_trace(c, rng, &mut t);
                    t.into_iter()
                })
                .collect();
            let mut remaining: Vec<usize> = parts.iter().map(|p| p.len()).collect();
            let mut open: Vec<usize> = (0..parts.len()).collect();
            while !open.is_empty() {
                let slot = rng.gen_range(0..open.len());
                let i = open[slot];
                out.push(parts[i].next().expect("remaining event"));
                remaining[i] -= 1;
                if remaining[i] == 0 {
                    open.swap_remove(slot);
                }
            }
        }
        Node::Loop {
            body,
            redo,
            max_redo,
        } => {
            let rounds = rng.gen_range(0..=*max_redo);
            sample_trace(body, rng, out);
            for _ in 0..rounds {
                sample_trace(redo, rng, out);
                sample_trace(body, rng, out);
            }
        }
    }
}

/// Simulates `n_cases` traces of `model`.
///
/// Choice branches and loop redo counts are uniform; parallel branches are
/// interleaved by picking a uniformly random unfinished branch per step.
pub fn play_out(model: &ProcessModel, n_cases: usize, seed: u64) -> Vec<Trace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    play_out_with_rng(model, n_cases, &mut rng)
}

pub fn play_out_with_rng<R: Rng + ?Sized>(
    model: &ProcessModel,
    n_cases: usize,
    rng: &mut R,
) -> Vec<Trace> {
    (0..n_cases)
        .map(|_| {
            let mut t = Trace::new();
            sample_trace(model.root(), rng, &mut t);
            t
        })
        .collect()
}

/// End positions reachable by matching `node` from any start in `starts`.
fn advance(node: &Node, trace: &[String], starts: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut ends = BTreeSet::new();
    for &s in starts {
        for e in s + 1..=trace.len() {
            if matches(node, &trace[s..e]) {
                ends.insert(e);
            }
        }
    }
    ends
}

fn matches(node: &Node, trace: &[String]) -> bool {
    if trace.is_empty() {
        return false;
    }
    match node {
        Node::Leaf(a) => trace.len() == 1 && &trace[0] == a,
        Node::ExclusiveChoice(children) => children.iter().any(|c| matches(c, trace)),
        Node::Sequence(children) => {
            let mut pos = BTreeSet::from([0]);
            for c in children {
                pos = advance(c, trace, &pos);
                if pos.is_empty() {
                    return false;
                }
            }
            pos.contains(&trace.len())
        }
        Node::Parallel(children) => {
            // Branches of a parallel node have disjoint alphabets, so each
            // event belongs to exactly one branch.
            let alphabets: Vec<BTreeSet<String>> = children.iter().map(Node::activities).collect();
            let mut projections = vec![Vec::new(); children.len()];
            for a in trace {
                match alphabets.iter().position(|s| s.contains(a)) {
                    Some(i) => projections[i].push(a.clone()),
                    None => return false,
                }
            }
            children
                .iter()
                .zip(&projections)
                .all(|(c, p)| matches(c, p))
        }
        Node::Loop {
            body,
            redo,
            max_redo,
        } => {
            let mut pos = advance(body, trace, &BTreeSet::from([0]));
            if pos.contains(&trace.len()) {
                return true;
            }
            for _ in 0..*max_redo {
                pos = advance(body, trace, &advance(redo, trace, &pos));
                if pos.is_empty() {
                    return false;
                }
                if pos.contains(&trace.len()) {
                    return true;
                }
            }
            false
        }
    }
}

/// Replays `trace` against `model`; true iff the model can produce it.
pub fn accepts(model: &ProcessModel, trace: &[String]) -> bool {
    matches(model.root(), trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Trace {
        s.chars().map(|c| c.to_string()).collect()
    }

    #[test]
    fn leaf_and_sequence_have_one_trace() {
        let leaf = ProcessModel::new(Node::leaf("a")).unwrap();
        assert_eq!(play_out(&leaf, 3, 1), vec![t("a"), t("a"), t("a")]);
        let seq = ProcessModel::new(Node::seq(vec![Node::leaf("a"), Node::leaf("b")])).unwrap();
        assert!(play_out(&seq, 20, 9).iter().all(|tr| *tr == t("ab")));
    }

    #[test]
    fn choice_is_roughly_uniform() {
        let m = ProcessModel::new(Node::xor(vec![Node::leaf("a"), Node::leaf("b")])).unwrap();
        for seed in [0, 1, 99] {
            let traces = play_out(&m, 10_000, seed);
            let a = traces.iter().filter(|tr| tr[0] == "a").count() as f64 / 10_000.0;
            assert!((0.45..=0.55).contains(&a), "seed {seed}: {a}");
        }
    }

    #[test]
    fn loop_redo_count_bounded() {
        let m = ProcessModel::new(Node::looped(Node::leaf("a"), Node::leaf("b"), 2)).unwrap();
        let lens: BTreeSet<usize> = play_out(&m, 500, 3).iter().map(Vec::len).collect();
        assert_eq!(lens, BTreeSet::from([1, 3, 5]));
    }

    #[test]
    fn replay_checker() {
        let m = ProcessModel::new(Node::seq(vec![
            Node::leaf("a"),
            Node::and(vec![
                Node::leaf("b"),
                Node::seq(vec![Node::leaf("c"), Node::leaf("d")]),
            ]),
            Node::looped(Node::leaf("e"), Node::leaf("f"), 1),
        ]))
        .unwrap();
        for good in ["abcde", "acbde", "acdbe", "abcdefe"] {
            assert!(accepts(&m, &t(good)), "{good}");
        }
        for bad in ["", "abdce", "abcd", "abcdefefe", "abcdez", "bacde"] {
            assert!(!accepts(&m, &t(bad)), "{bad}");
        }
    }

    #[test]
    fn play_out_is_accepted() {
        let m = ProcessModel::new(Node::seq(vec![
            Node::xor(vec![Node::leaf("a"), Node::leaf("b")]),
            Node::and(vec![
                Node::looped(Node::leaf("c"), Node::leaf("d"), 2),
                Node::leaf("e"),
            ]),
        ]))
        .unwrap();
        for tr in play_out(&m, 200, 5) {
            assert!(accepts(&m, &tr), "{tr:?}");
        }
    }
}

//! Drifted variants: reorderings of a base model that keep most of its
//! activities but share none of its directly-follows pairs.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::generate::activity_label;
use super::{activity_overlap, directly_follows, GenerationConfig, ModelError, Node, ProcessModel};

/// One elementary edit from a base model towards its variant.
///
/// Sequence nodes are addressed by their pre-order index in the base model;
/// the index stays attached to the node while its siblings move.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditStep {
    /// Swap children `index` and `index + 1` of a sequence node.
    SwapSequenceChildren { node: usize, index: usize },
    /// Exchange two labels everywhere in the tree.
    SwapLabels { a: String, b: String },
    /// Rename a label to one not currently in the tree.
    Relabel { from: String, to: String },
}

/// A generated variant and the edit script that produces it from its base.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub model: ProcessModel,
    pub steps: Vec<EditStep>,
}

#[derive(Debug, Clone)]
struct IdNode {
    id: usize,
    node: Shape,
}

#[derive(Debug, Clone)]
enum Shape {
    Leaf(String),
    Sequence(Vec<IdNode>),
    ExclusiveChoice(Vec<IdNode>),
    Parallel(Vec<IdNode>),
    Loop(Box<IdNode>, Box<IdNode>, u32),
}

impl IdNode {
    fn from_node(node: &Node, next: &mut usize) -> Self {
        let id = *next;
        *next += 1;
        let mut kids = |c: &[Node]| c.iter().map(|n| IdNode::from_node(n, next)).collect();
        let node = match node {
            Node::Leaf(a) => Shape::Leaf(a.clone()),
            Node::Sequence(c) => Shape::Sequence(kids(c)),
            Node::ExclusiveChoice(c) => Shape::ExclusiveChoice(kids(c)),
            Node::Parallel(c) => Shape::Parallel(kids(c)),
            Node::Loop {
                body,
                redo,
                max_redo,
            } => {
                let b = IdNode::from_node(body, next);
                let r = IdNode::from_node(redo, next);
                Shape::Loop(Box::new(b), Box::new(r), *max_redo)
            }
        };
        IdNode { id, node }
    }

    fn to_node(&self) -> Node {
        let kids = |c: &[IdNode]| c.iter().map(IdNode::to_node).collect();
        match &self.node {
            Shape::Leaf(a) => Node::Leaf(a.clone()),
            Shape::Sequence(c) => Node::Sequence(kids(c)),
            Shape::ExclusiveChoice(c) => Node::ExclusiveChoice(kids(c)),
            Shape::Parallel(c) => Node::Parallel(kids(c)),
            Shape::Loop(b, r, m) => Node::looped(b.to_node(), r.to_node(), *m),
        }
    }

    fn for_each_mut(&mut self, f: &mut impl FnMut(&mut IdNode)) {
        f(self);
        match &mut self.node {
            Shape::Leaf(_) => {}
            Shape::Sequence(c) | Shape::ExclusiveChoice(c) | Shape::Parallel(c) => {
                c.iter_mut().for_each(|n| n.for_each_mut(f))
            }
            Shape::Loop(b, r, _) => {
                b.for_each_mut(f);
                r.for_each_mut(f);
            }
        }
    }

    fn sequence_arities(&self, out: &mut Vec<(usize, usize)>) {
        match &self.node {
            Shape::Leaf(_) => {}
            Shape::Sequence(c) => {
                out.push((self.id, c.len()));
                c.iter().for_each(|n| n.sequence_arities(out));
            }
            Shape::ExclusiveChoice(c) | Shape::Parallel(c) => {
                c.iter().for_each(|n| n.sequence_arities(out))
            }
            Shape::Loop(b, r, _) => {
                b.sequence_arities(out);
                r.sequence_arities(out);
            }
        }
    }

    fn map_labels(&mut self, map: &impl Fn(&str) -> String) {
        self.for_each_mut(&mut |n| {
            if let Shape::Leaf(a) = &mut n.node {
                *a = map(a);
            }
        });
    }
}

fn apply_to(tree: &mut IdNode, step: &EditStep) {
    match step {
        EditStep::SwapSequenceChildren { node, index } => tree.for_each_mut(&mut |n| {
            if n.id == *node {
                if let Shape::Sequence(c) = &mut n.node {
                    c.swap(*index, *index + 1);
                }
            }
        }),
        EditStep::SwapLabels { a, b } => tree.map_labels(&|x| {
            if x == a {
                b.clone()
            } else if x == b {
                a.clone()
            } else {
                x.to_string()
            }
        }),
        EditStep::Relabel { from, to } => {
            tree.map_labels(&|x| if x == from { to.clone() } else { x.to_string() })
        }
    }
}

/// Applies an edit script to `base`.
pub fn apply_steps(base: &ProcessModel, steps: &[EditStep]) -> Result<ProcessModel, ModelError> {
    let mut tree = IdNode::from_node(base.root(), &mut 0);
    for step in steps {
        apply_to(&mut tree, step);
    }
    ProcessModel::new(tree.to_node())
}

/// One candidate: a child order for every sequence node plus a label map.
struct Candidate {
    orders: BTreeMap<usize, Vec<usize>>,
    mapping: BTreeMap<String, String>,
}

impl Candidate {
    fn build(&self, base: &IdNode) -> Node {
        let mut tree = base.clone();
        tree.for_each_mut(&mut |n| {
            if let (Some(order), Shape::Sequence(c)) = (self.orders.get(&n.id), &mut n.node) {
                let old = std::mem::take(c);
                *c = order.iter().map(|&i| old[i].clone()).collect();
            }
        });
        tree.map_labels(&|x| self.mapping[x].clone());
        tree.to_node()
    }

    fn steps(&self) -> Vec<EditStep> {
        let mut steps = Vec::new();
        for (&node, order) in &self.orders {
            let mut cur: Vec<usize> = (0..order.len()).collect();
            for (target, want) in order.iter().enumerate() {
                let mut at = cur.iter().position(|x| x == want).expect("permutation");
                while at > target {
                    steps.push(EditStep::SwapSequenceChildren {
                        node,
                        index: at - 1,
                    });
                    cur.swap(at - 1, at);
                    at -= 1;
                }
            }
        }
        // current label of each original label, and its inverse
        let mut cur: BTreeMap<String, String> = self
            .mapping
            .keys()
            .map(|k| (k.clone(), k.clone()))
            .collect();
        let mut inv = cur.clone();
        for (orig, target) in &self.mapping {
            let now = cur[orig].clone();
            if &now == target {
                continue;
            }
            if let Some(holder) = inv.get(target).cloned() {
                steps.push(EditStep::SwapLabels {
                    a: now.clone(),
                    b: target.clone(),
                });
                cur.insert(holder.clone(), now.clone());
                inv.insert(now, holder);
            } else {
                steps.push(EditStep::Relabel {
                    from: now.clone(),
                    to: target.clone(),
                });
                inv.remove(&now);
            }
            cur.insert(orig.clone(), target.clone());
            inv.insert(target.clone(), orig.clone());
        }
        steps
    }
}

/// Counts shared directly-follows pairs between the base model and a
/// candidate, with labels as indices into `labels ++ fresh`.
struct ConflictScorer {
    base: Vec<bool>,
    width: usize,
}

impl ConflictScorer {
    fn count(&self, reordered_df: &[(usize, usize)], targets: &[usize]) -> usize {
        reordered_df
            .iter()
            .filter(|&&(x, y)| self.base[targets[x] * self.width + targets[y]])
            .count()
    }
}

fn check_precondition(p: &ProcessModel) -> Result<BTreeSet<(String, String)>, ModelError> {
    if p.activities().len() < 2 {
        return Err(ModelError::Precondition(
            "base model needs at least 2 activities".into(),
        ));
    }
    let df = directly_follows(p);
    if df.is_empty() {
        return Err(ModelError::Precondition(
            "base model has no directly-follows pairs".into(),
        ));
    }
    Ok(df)
}

/// Largest number of fresh labels that keeps the activity overlap at or
/// above [`super::MIN_ACTIVITY_OVERLAP`].
fn max_relabels(n: usize) -> usize {
    (0..=n).rev().find(|r| (n - r) * 100 >= 85 * n).unwrap_or(0)
}

/// Generates a variant of `p` together with its edit script.
pub fn generate_variant_with_steps(
    p: &ProcessModel,
    config: &GenerationConfig,
) -> Result<Variant, ModelError> {
    config.validate()?;
    let base_df = check_precondition(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);

    let base = IdNode::from_node(p.root(), &mut 0);
    let mut arities = Vec::new();
    base.sequence_arities(&mut arities);
    let labels: Vec<String> = p.activities().into_iter().collect();
    let n = labels.len();
    let max_fresh = max_relabels(n);
    let fresh: Vec<String> = (0..)
        .map(activity_label)
        .filter(|l| !p.alphabet().contains(l))
        .take(max_fresh)
        .collect();

    let label_index: BTreeMap<&str, usize> = labels
        .iter()
        .chain(&fresh)
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let width = label_index.len();
    let mut scorer = ConflictScorer {
        base: vec![false; width * width],
        width,
    };
    for (x, y) in &base_df {
        scorer.base[label_index[x.as_str()] * width + label_index[y.as_str()]] = true;
    }

    for _ in 0..config.max_variant_attempts {
        let mut cand = Candidate {
            orders: arities
                .iter()
                .map(|&(id, len)| {
                    let mut o: Vec<usize> = (0..len).collect();
                    o.shuffle(&mut rng);
                    (id, o)
                })
                .collect(),
            mapping: BTreeMap::new(),
        };
        // footprint of the reordered tree before relabeling
        cand.mapping = labels.iter().map(|l| (l.clone(), l.clone())).collect();
        let reordered = ProcessModel::new(cand.build(&base))?;
        let reordered_df: Vec<(usize, usize)> = directly_follows(&reordered)
            .iter()
            .map(|(x, y)| (label_index[x.as_str()], label_index[y.as_str()]))
            .collect();

        let mut targets: Vec<usize> = (0..n).collect();
        targets.shuffle(&mut rng);
        let n_fresh = rng.gen_range(0..=max_fresh);
        for (k, slot) in index::sample(&mut rng, n, n_fresh).into_iter().enumerate() {
            targets[slot] = n + k;
        }

        let mut best = scorer.count(&reordered_df, &targets);
        // greedy repair by label swaps
        while best > 0 {
            let mut improved = None;
            for i in 0..n {
                for j in i + 1..n {
                    targets.swap(i, j);
                    let c = scorer.count(&reordered_df, &targets);
                    targets.swap(i, j);
                    if c < improved.map_or(best, |(_, _, b)| b) {
                        improved = Some((i, j, c));
                    }
                }
            }
            match improved {
                Some((i, j, c)) => {
                    targets.swap(i, j);
                    best = c;
                }
                None => break,
            }
        }
        if best == 0 {
            let all: Vec<&String> = labels.iter().chain(&fresh).collect();
            cand.mapping = labels
                .iter()
                .zip(&targets)
                .map(|(l, &t)| (l.clone(), all[t].clone()))
                .collect();
            let model = ProcessModel::new(cand.build(&base))?;
            debug_assert!(activity_overlap(p, &model) >= super::MIN_ACTIVITY_OVERLAP);
            debug_assert!(directly_follows(&model).is_disjoint(&base_df));
            return Ok(Variant {
                model,
                steps: cand.steps(),
            });
        }
    }
    Err(ModelError::VariantNotFound {
        attempts: config.max_variant_attempts,
    })
}

/// Generates `k`: a reordering of `p` with at least 85% of its activities
/// drawn from `p` and no directly-follows pair in common with `p`.
pub fn generate_variant(
    p: &ProcessModel,
    config: &GenerationConfig,
) -> Result<ProcessModel, ModelError> {
    generate_variant_with_steps(p, config).map(|v| v.model)
}

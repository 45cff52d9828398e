//! Block-structured process trees.
//!
//! A [`ProcessModel`] is a process tree over four operators (sequence,
//! exclusive choice, parallel and a loop with a bounded redo count) plus
//! the alphabet of activity labels it is allowed to use. Everything in
//! this module is a pure function of its inputs.

mod footprint;
mod generate;
mod playout;
mod text;
mod variant;

use std::collections::BTreeSet;

use thiserror::Error;

pub use footprint::{directly_follows, DirectlyFollows};
pub use generate::{generate_random_model, GenerationConfig, OperatorWeights};
pub use playout::{accepts, play_out, play_out_with_rng, Trace};
pub use text::ParseModelError;
pub use variant::{apply_steps, generate_variant, generate_variant_with_steps, EditStep, Variant};

/// Minimum share of `k`'s activities that must also occur in `p`.
pub const MIN_ACTIVITY_OVERLAP: f64 = 0.85;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid generation config: {0}")]
    Config(String),
    #[error("invalid process tree: {0}")]
    Invalid(String),
    #[error("variant precondition violated: {0}")]
    Precondition(String),
    #[error("no variant satisfying the overlap and directly-follows constraints found in {attempts} attempts")]
    VariantNotFound { attempts: u32 },
}

/// The four process-tree operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    Sequence,
    ExclusiveChoice,
    Parallel,
    Loop,
}

/// A process-tree node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    Leaf(String),
    Sequence(Vec<Node>),
    ExclusiveChoice(Vec<Node>),
    Parallel(Vec<Node>),
    /// `body (redo body)^r` for `r` in `0..=max_redo`.
    Loop {
        body: Box<Node>,
        redo: Box<Node>,
        max_redo: u32,
    },
}

impl Node {
    pub fn leaf(label: impl Into<String>) -> Self {
        Node::Leaf(label.into())
    }

    pub fn seq(children: Vec<Node>) -> Self {
        Node::Sequence(children)
    }

    pub fn xor(children: Vec<Node>) -> Self {
        Node::ExclusiveChoice(children)
    }

    pub fn and(children: Vec<Node>) -> Self {
        Node::Parallel(children)
    }

    pub fn looped(body: Node, redo: Node, max_redo: u32) -> Self {
        Node::Loop {
            body: Box::new(body),
            redo: Box::new(redo),
            max_redo,
        }
    }

    pub fn operator(&self) -> Option<Operator> {
        match self {
            Node::Leaf(_) => None,
            Node::Sequence(_) => Some(Operator::Sequence),
            Node::ExclusiveChoice(_) => Some(Operator::ExclusiveChoice),
            Node::Parallel(_) => Some(Operator::Parallel),
            Node::Loop { .. } => Some(Operator::Loop),
        }
    }

    /// Depth of the tree; a single leaf has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Sequence(c) | Node::ExclusiveChoice(c) | Node::Parallel(c) => {
                1 + c.iter().map(Node::depth).max().unwrap_or(0)
            }
            Node::Loop { body, redo, .. } => 1 + body.depth().max(redo.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        let mut n = 0;
        self.visit_leaves(&mut |_| n += 1);
        n
    }

    /// Calls `f` on every leaf label, left to right.
    pub fn visit_leaves<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Node::Leaf(a) => f(a),
            Node::Sequence(c) | Node::ExclusiveChoice(c) | Node::Parallel(c) => {
                c.iter().for_each(|n| n.visit_leaves(f))
            }
            Node::Loop { body, redo, .. } => {
                body.visit_leaves(f);
                redo.visit_leaves(f);
            }
        }
    }

    /// Labels appearing at leaves.
    pub fn activities(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_leaves(&mut |a| {
            out.insert(a.to_string());
        });
        out
    }

    fn check(&self) -> Result<(), ModelError> {
        match self {
            Node::Leaf(a) if a.is_empty() => {
                Err(ModelError::Invalid("empty activity label".into()))
            }
            Node::Leaf(_) => Ok(()),
            Node::Sequence(c) | Node::ExclusiveChoice(c) | Node::Parallel(c) => {
                if c.len() < 2 {
                    return Err(ModelError::Invalid(format!(
                        "{:?} node needs at least 2 children, has {}",
                        self.operator().expect("operator node"),
                        c.len()
                    )));
                }
                if let Node::Parallel(children) = self {
                    let mut seen = BTreeSet::new();
                    for child in children {
                        for a in child.activities() {
                            if !seen.insert(a.clone()) {
                                return Err(ModelError::Invalid(format!(
                                    "parallel branches share activity {a:?}"
                                )));
                            }
                        }
                    }
                }
                c.iter().try_for_each(Node::check)
            }
            Node::Loop { body, redo, .. } => {
                body.check()?;
                redo.check()
            }
        }
    }
}

/// A process tree together with its activity alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProcessModel {
    root: Node,
    alphabet: BTreeSet<String>,
}

impl ProcessModel {
    /// Builds a model whose alphabet is exactly the set of leaf labels.
    pub fn new(root: Node) -> Result<Self, ModelError> {
        let alphabet = root.activities();
        Self::with_alphabet(root, alphabet)
    }

    pub fn with_alphabet(root: Node, alphabet: BTreeSet<String>) -> Result<Self, ModelError> {
        root.check()?;
        let leaves = root.activities();
        if let Some(missing) = leaves.difference(&alphabet).next() {
            return Err(ModelError::Invalid(format!(
                "leaf activity {missing:?} is not in the alphabet"
            )));
        }
        Ok(Self { root, alphabet })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn alphabet(&self) -> &BTreeSet<String> {
        &self.alphabet
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn leaf_count(&self) -> usize {
        self.root.leaf_count()
    }

    pub fn activities(&self) -> BTreeSet<String> {
        self.root.activities()
    }

    pub fn directly_follows(&self) -> DirectlyFollows {
        directly_follows(self)
    }
}

/// Activities of a model: the labels appearing at its leaves.
pub fn activities(model: &ProcessModel) -> BTreeSet<String> {
    model.activities()
}

/// The union model `w`: every case is drawn from exactly one of `p` or `k`.
pub fn union_model(p: &ProcessModel, k: &ProcessModel) -> ProcessModel {
    let alphabet = p.alphabet.union(&k.alphabet).cloned().collect();
    ProcessModel {
        root: Node::ExclusiveChoice(vec![p.root.clone(), k.root.clone()]),
        alphabet,
    }
}

/// Base model, its drifted variant and their union.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPair {
    pub p: ProcessModel,
    pub k: Variant,
    pub w: ProcessModel,
    /// Seed the base model was finally drawn with.
    pub base_seed: u64,
    /// Base models discarded because no variant existed for them.
    pub redraws: u32,
}

/// Base models drawn before [`generate_model_pair`] gives up.
pub const MAX_BASE_REDRAWS: u32 = 64;

/// Draws `p`, its variant `k` and `w = p ∪ k`.
///
/// Some base models admit no variant at all (a parallel root relates
/// almost every pair of activities); those are redrawn with a seed derived
/// from `config.seed`, up to [`MAX_BASE_REDRAWS`] times.
pub fn generate_model_pair(config: &GenerationConfig) -> Result<ModelPair, ModelError> {
    let mut last_err = None;
    for redraws in 0..=MAX_BASE_REDRAWS {
        let base_seed = derive_seed(config.seed, redraws);
        let attempt = GenerationConfig {
            seed: base_seed,
            ..config.clone()
        };
        let p = generate_random_model(&attempt)?;
        match generate_variant_with_steps(&p, &attempt) {
            Ok(k) => {
                let w = union_model(&p, &k.model);
                return Ok(ModelPair {
                    p,
                    k,
                    w,
                    base_seed,
                    redraws,
                });
            }
            Err(e @ (ModelError::VariantNotFound { .. } | ModelError::Precondition(_))) => {
                last_err = Some(e)
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("at least one draw"))
}

/// `seed` itself for round 0, a splitmix64 mix of `(seed, round)` otherwise.
fn derive_seed(seed: u64, round: u32) -> u64 {
    if round == 0 {
        return seed;
    }
    let mut z = seed ^ (u64::from(round)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `|activities(k) ∩ activities(p)| / |activities(k)|`.
pub fn activity_overlap(p: &ProcessModel, k: &ProcessModel) -> f64 {
    let ka = k.activities();
    if ka.is_empty() {
        return 0.0;
    }
    let pa = p.activities();
    ka.intersection(&pa).count() as f64 / ka.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn activities_collect_leaves() {
        let m = ProcessModel::new(Node::leaf("a")).unwrap();
        assert_eq!(m.activities(), BTreeSet::from(["a".to_string()]));
        let m = ProcessModel::new(Node::seq(vec![
            Node::leaf("a"),
            Node::xor(vec![Node::leaf("b"), Node::leaf("c")]),
        ]))
        .unwrap();
        let want: BTreeSet<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        assert_eq!(activities(&m), want);
    }

    #[test]
    fn rejects_unary_operators() {
        let err = ProcessModel::new(Node::seq(vec![Node::leaf("a")])).unwrap_err();
        assert!(matches!(err, ModelError::Invalid(_)));
    }

    #[test]
    fn rejects_leaf_outside_alphabet() {
        let err = ProcessModel::with_alphabet(Node::leaf("z"), BTreeSet::from(["a".to_string()]))
            .unwrap_err();
        assert!(err.to_string().contains("\"z\""));
    }

    #[test]
    fn union_merges_alphabets() {
        let p = ProcessModel::new(Node::seq(vec![Node::leaf("a"), Node::leaf("b")])).unwrap();
        let k = ProcessModel::new(Node::seq(vec![Node::leaf("b"), Node::leaf("c")])).unwrap();
        let w = union_model(&p, &k);
        assert_eq!(
            w.activities(),
            p.activities().union(&k.activities()).cloned().collect()
        );
        assert_eq!(w.root().operator(), Some(Operator::ExclusiveChoice));
    }

    #[test]
    fn depth_counts_operator_levels() {
        assert_eq!(Node::leaf("a").depth(), 0);
        let n = Node::seq(vec![
            Node::leaf("a"),
            Node::looped(Node::leaf("b"), Node::leaf("c"), 2),
        ]);
        assert_eq!(n.depth(), 2);
        assert_eq!(n.leaf_count(), 3);
    }
}

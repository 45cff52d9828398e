use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ModelError, Node, Operator, ProcessModel};

/// Relative weights for picking the operator of an inner node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorWeights {
    pub sequence: f64,
    pub exclusive_choice: f64,
    pub parallel: f64,
    #[serde(rename = "loop")]
    pub loop_: f64,
}

impl Default for OperatorWeights {
    fn default() -> Self {
        Self {
            sequence: 5.0,
            exclusive_choice: 3.0,
            parallel: 2.0,
            loop_: 1.0,
        }
    }
}

impl OperatorWeights {
    fn get(&self, op: Operator) -> f64 {
        match op {
            Operator::Sequence => self.sequence,
            Operator::ExclusiveChoice => self.exclusive_choice,
            Operator::Parallel => self.parallel,
            Operator::Loop => self.loop_,
        }
    }
}

/// Parameters of the random model generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub alphabet_size: usize,
    pub max_depth: usize,
    pub operator_weights: OperatorWeights,
    pub loop_redo_bound: u32,
    pub max_variant_attempts: u32,
    pub seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            alphabet_size: 12,
            max_depth: 4,
            operator_weights: OperatorWeights::default(),
            loop_redo_bound: 2,
            max_variant_attempts: 1000,
            seed: 0,
        }
    }
}

impl GenerationConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |m: &str| Err(ModelError::Config(m.to_string()));
        if self.alphabet_size == 0 {
            return err("alphabet_size must be at least 1");
        }
        if self.max_depth == 0 && self.alphabet_size > 1 {
            return err("max_depth 0 only admits a single activity");
        }
        if self.max_variant_attempts == 0 {
            return err("max_variant_attempts must be at least 1");
        }
        let w = self.operator_weights;
        let all = [w.sequence, w.exclusive_choice, w.parallel, w.loop_];
        if all.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return err("operator weights must be finite and non-negative");
        }
        if all.iter().all(|x| *x == 0.0) {
            return err("operator weights must not all be zero");
        }
        Ok(())
    }
}

/// Label for the `index`-th activity: `a`, `b`, ..., `z`, `aa`, `ab`, ...
pub(crate) fn activity_label(mut index: usize) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'a' + (index % 26) as u8);
        if index < 26 {
            break;
        }
        index = index / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

struct Builder<'a> {
    config: &'a GenerationConfig,
    rng: ChaCha8Rng,
}

impl Builder<'_> {
    fn pick_operator(&mut self, n: usize, levels_left: usize) -> Result<Operator, ModelError> {
        let candidates = [
            Operator::Sequence,
            Operator::ExclusiveChoice,
            Operator::Parallel,
            Operator::Loop,
        ];
        // A loop has exactly two children, so at the last level it can only
        // hold two leaves.
        let eligible: Vec<(Operator, f64)> = candidates
            .iter()
            .map(|&op| (op, self.config.operator_weights.get(op)))
            .filter(|&(op, w)| w > 0.0 && (op != Operator::Loop || levels_left >= 2 || n == 2))
            .collect();
        let total: f64 = eligible.iter().map(|(_, w)| w).sum();
        if eligible.is_empty() {
            return Err(ModelError::Config(format!(
                "no operator with positive weight can hold {n} activities within the depth limit"
            )));
        }
        let mut x = self.rng.gen_range(0.0..total);
        for &(op, w) in &eligible {
            if x < w {
                return Ok(op);
            }
            x -= w;
        }
        Ok(eligible[eligible.len() - 1].0)
    }

    fn split<'l>(&mut self, labels: &'l [String], parts: usize) -> Vec<&'l [String]> {
        let mut cuts: Vec<usize> = (1..labels.len()).collect();
        cuts.shuffle(&mut self.rng);
        cuts.truncate(parts - 1);
        cuts.sort_unstable();
        let mut out = Vec::with_capacity(parts);
        let mut start = 0;
        for c in cuts {
            out.push(&labels[start..c]);
            start = c;
        }
        out.push(&labels[start..]);
        out
    }

    fn build(&mut self, labels: &[String], depth: usize) -> Result<Node, ModelError> {
        if labels.len() == 1 {
            return Ok(Node::Leaf(labels[0].clone()));
        }
        let levels_left = self.config.max_depth - depth;
        let op = self.pick_operator(labels.len(), levels_left)?;
        let parts = match op {
            Operator::Loop => 2,
            _ if levels_left == 1 => labels.len(),
            _ => self.rng.gen_range(2..=labels.len().min(4)),
        };
        let mut children = Vec::with_capacity(parts);
        for group in self.split(labels, parts) {
            children.push(self.build(group, depth + 1)?);
        }
        Ok(match op {
            Operator::Sequence => Node::Sequence(children),
            Operator::ExclusiveChoice => Node::ExclusiveChoice(children),
            Operator::Parallel => Node::Parallel(children),
            Operator::Loop => {
                let redo = children.pop().expect("two children");
                let body = children.pop().expect("two children");
                Node::looped(body, redo, self.config.loop_redo_bound)
            }
        })
    }
}

/// Draws a random block-structured model that uses every label of an
/// `alphabet_size`-letter alphabet exactly once.
pub fn generate_random_model(config: &GenerationConfig) -> Result<ProcessModel, ModelError> {
    config.validate()?;
    let mut builder = Builder {
        config,
        rng: ChaCha8Rng::seed_from_u64(config.seed),
    };
    let mut labels: Vec<String> = (0..config.alphabet_size).map(activity_label).collect();
    labels.shuffle(&mut builder.rng);
    let root = builder.build(&labels, 0)?;
    ProcessModel::new(root)
}

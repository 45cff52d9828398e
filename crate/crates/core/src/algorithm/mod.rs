//! The learn/conformance contract and the built-in algorithms.
//!
//! An algorithm first sees the warm-up stream through [`Algorithm::learn`],
//! then receives every validation event through
//! [`Algorithm::conformance`] and answers with a value in `[0, 1]`.

mod frequency;
mod reference;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stream::Event;

pub use frequency::{frequency_baseline_score, FrequencyConformance, FrequencyState};
pub use reference::{ConstantPredictor, OraclePredictor, RandomPredictor};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgorithmError {
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("algorithm failed: {0}")]
    Failed(String),
    #[error("transport error: {0}")]
    Transport(String),
}

/// Where an algorithm runs. Latencies of the two kinds include different
/// overheads and are reported side by side, not mixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmKind {
    InProcess,
    External,
}

pub trait Algorithm: Send {
    fn name(&self) -> &str;

    fn kind(&self) -> AlgorithmKind {
        AlgorithmKind::InProcess
    }

    /// Warm-up: observe one event.
    fn learn(&mut self, event: &Event) -> Result<(), AlgorithmError>;

    /// Current conformance of `event`. Implementations may update their
    /// state here as well.
    fn conformance(&mut self, event: &Event) -> Result<f64, AlgorithmError>;

    /// Free-form diagnostics collected so far (for example an external
    /// child's error output).
    fn diagnostics(&self) -> Option<String> {
        None
    }

    /// Whether the algorithm reads ground truth and so must not be scored.
    fn requires_ground_truth(&self) -> bool {
        false
    }
}

pub type AlgorithmHandle = Box<dyn Algorithm>;

impl<A: Algorithm + ?Sized> Algorithm for Box<A> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn kind(&self) -> AlgorithmKind {
        (**self).kind()
    }
    fn learn(&mut self, event: &Event) -> Result<(), AlgorithmError> {
        (**self).learn(event)
    }
    fn conformance(&mut self, event: &Event) -> Result<f64, AlgorithmError> {
        (**self).conformance(event)
    }
    fn diagnostics(&self) -> Option<String> {
        (**self).diagnostics()
    }
    fn requires_ground_truth(&self) -> bool {
        (**self).requires_ground_truth()
    }
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: &[&str] = &[
    "frequency-baseline",
    "constant:<v>",
    "random[:<seed>]",
    "oracle",
];

/// Instantiates a built-in algorithm by name: `frequency-baseline`,
/// `constant:<v>`, `random` / `random:<seed>`, or `oracle`.
pub fn builtin(spec: &str) -> Option<Result<AlgorithmHandle, AlgorithmError>> {
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (spec, None),
    };
    let bad = |m: String| Some(Err(AlgorithmError::Configuration(m)));
    match (name, arg) {
        ("frequency-baseline", None) => Some(Ok(Box::new(FrequencyConformance::new()))),
        ("oracle", None) => Some(Ok(Box::new(OraclePredictor))),
        ("constant", Some(v)) => match v.parse::<f64>() {
            Ok(v) if (0.0..=1.0).contains(&v) => Some(Ok(Box::new(ConstantPredictor::new(v)))),
            _ => bad(format!(
                "constant value must be a number in [0, 1], got {v:?}"
            )),
        },
        ("random", None) => Some(Ok(Box::new(RandomPredictor::new(0)))),
        ("random", Some(s)) => match s.parse::<u64>() {
            Ok(seed) => Some(Ok(Box::new(RandomPredictor::new(seed)))),
            Err(_) => bad(format!(
                "random seed must be an unsigned integer, got {s:?}"
            )),
        },
        _ => None,
    }
}

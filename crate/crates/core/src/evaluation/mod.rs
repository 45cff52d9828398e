//! Runs an algorithm over a warm-up and a validation stream, times every
//! conformance call, and scores the result.

mod metrics;
mod report;

use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithm::{Algorithm, AlgorithmError, AlgorithmKind};
use crate::stream::LabeledStream;

pub use metrics::{
    average_latency, compute_metrics, latency_score, metrics_from_columns, MetricsReport,
    ScoreWeights, ACCURACY_TOLERANCE, DEFAULT_LATENCY_BUDGET, ROBUSTNESS_TOLERANCE,
};
pub use report::{
    emit_report, read_summary, read_table, render_chart, table_columns, write_table,
    BaselineSummary, ReportFiles, RunStatus, RunSummary, TableRow, CHART_FILE,
    COMPARISON_CHART_FILE, SUMMARY_FILE, SUMMARY_FORMAT_VERSION, TABLE_FILE,
};

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("cannot compute metrics of an empty trace")]
    EmptyTrace,
    #[error("gt has {gt} values but there are {predictions} predictions")]
    LengthMismatch { gt: usize, predictions: usize },
    #[error("invalid score weights: {0}")]
    Weights(String),
    #[error("report {path}: {message}")]
    Report { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Durations as integer nanoseconds.
pub(crate) mod duration_nanos {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(u64::try_from(d.as_nanos()).unwrap_or(u64::MAX))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_nanos)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub stream_id: String,
    pub algorithm: String,
    pub kind: AlgorithmKind,
    pub seed: Option<u64>,
    pub scored: bool,
    pub started_at: DateTime<Utc>,
}

/// Counts of outputs the harness had to repair.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Finite outputs outside `[0, 1]`, clamped.
    pub clamped: usize,
    /// NaN or infinite outputs, replaced by the worst possible prediction.
    pub non_finite: usize,
    /// Error output of an external algorithm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConformanceTrace {
    pub meta: RunMeta,
    pub gt: Vec<f64>,
    pub predictions: Vec<f64>,
    pub latencies: Vec<Duration>,
    pub diagnostics: Diagnostics,
}

impl ConformanceTrace {
    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Setup,
    Learn,
    Conformance,
}

/// A run that stopped early. `trace` holds everything recorded before the
/// failure.
#[derive(Debug, Clone)]
pub struct FailedRun {
    pub error: AlgorithmError,
    pub phase: Phase,
    pub event_index: Option<usize>,
    pub trace: ConformanceTrace,
}

impl FailedRun {
    /// A run that could not start, e.g. because the algorithm failed to
    /// launch.
    pub fn before_start(
        name: &str,
        kind: AlgorithmKind,
        options: &RunOptions,
        error: AlgorithmError,
    ) -> Self {
        Self {
            error,
            phase: Phase::Setup,
            event_index: None,
            trace: ConformanceTrace {
                meta: RunMeta {
                    stream_id: options.stream_id.clone(),
                    algorithm: name.to_string(),
                    kind,
                    seed: options.seed,
                    scored: options.scored,
                    started_at: Utc::now(),
                },
                gt: Vec::new(),
                predictions: Vec::new(),
                latencies: Vec::new(),
                diagnostics: Diagnostics::default(),
            },
        }
    }
}

impl std::fmt::Display for FailedRun {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.event_index {
            Some(i) => write!(f, "{:?} of event {i} failed: {}", self.phase, self.error),
            None => write!(f, "{}", self.error),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Strip `gt` and `concept:origin` before events reach the algorithm.
    pub scored: bool,
    pub stream_id: String,
    pub seed: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            scored: true,
            stream_id: String::new(),
            seed: None,
        }
    }
}

/// Maps a raw algorithm output into `[0, 1]`.
fn sanitize(value: f64, gt: f64, diagnostics: &mut Diagnostics) -> f64 {
    if !value.is_finite() {
        diagnostics.non_finite += 1;
        if gt >= 0.5 {
            0.0
        } else {
            1.0
        }
    } else if !(0.0..=1.0).contains(&value) {
        diagnostics.clamped += 1;
        value.clamp(0.0, 1.0)
    } else {
        value
    }
}

/// Feeds every `train` event to `learn`, then every `validation` event to
/// `conformance`, in stream order.
pub fn run_evaluation<A: Algorithm + ?Sized>(
    algorithm: &mut A,
    train: &LabeledStream,
    validation: &LabeledStream,
    options: &RunOptions,
) -> Result<ConformanceTrace, FailedRun> {
    let mut trace = ConformanceTrace {
        meta: RunMeta {
            stream_id: options.stream_id.clone(),
            algorithm: algorithm.name().to_string(),
            kind: algorithm.kind(),
            seed: options.seed,
            scored: options.scored,
            started_at: Utc::now(),
        },
        gt: Vec::with_capacity(validation.len()),
        predictions: Vec::with_capacity(validation.len()),
        latencies: Vec::with_capacity(validation.len()),
        diagnostics: Diagnostics::default(),
    };
    let fail = |algorithm: &A, mut trace: ConformanceTrace, error, phase, event_index| {
        trace.diagnostics.log = algorithm.diagnostics();
        FailedRun {
            error,
            phase,
            event_index,
            trace,
        }
    };
    if options.scored && algorithm.requires_ground_truth() {
        let error = AlgorithmError::Configuration(format!(
            "{} reads ground truth and cannot be used in scored mode",
            algorithm.name()
        ));
        return Err(fail(algorithm, trace, error, Phase::Setup, None));
    }
    for (i, event) in train.delivery_events(options.scored).iter().enumerate() {
        if let Err(e) = algorithm.learn(event) {
            return Err(fail(algorithm, trace, e, Phase::Learn, Some(i)));
        }
    }
    for (i, (event, &gt)) in validation
        .delivery_events(options.scored)
        .iter()
        .zip(&validation.gt)
        .enumerate()
    {
        let start = Instant::now();
        let result = algorithm.conformance(event);
        let elapsed = start.elapsed();
        match result {
            Ok(v) => {
                let v = sanitize(v, gt, &mut trace.diagnostics);
                trace.gt.push(gt);
                trace.predictions.push(v);
                trace.latencies.push(elapsed);
            }
            Err(e) => return Err(fail(algorithm, trace, e, Phase::Conformance, Some(i))),
        }
    }
    trace.diagnostics.log = algorithm.diagnostics();
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithm::{ConstantPredictor, OraclePredictor};
    use crate::stream::{stream_epoch, Event};

    struct Counting {
        learned: usize,
        asked: usize,
        outputs: Vec<f64>,
    }

    impl Algorithm for Counting {
        fn name(&self) -> &str {
            "counting"
        }
        fn learn(&mut self, e: &Event) -> Result<(), AlgorithmError> {
            assert!(e.origin.is_none() && e.gt().is_none());
            self.learned += 1;
            Ok(())
        }
        fn conformance(&mut self, _: &Event) -> Result<f64, AlgorithmError> {
            self.asked += 1;
            if self.asked > self.outputs.len() {
                return Err(AlgorithmError::Failed("out of outputs".into()));
            }
            Ok(self.outputs[self.asked - 1])
        }
    }

    fn stream(gt: &[f64]) -> LabeledStream {
        let events = gt
            .iter()
            .enumerate()
            .map(|(i, _)| Event::new(format!("c{i}"), "a", stream_epoch()).with_origin("p"))
            .collect();
        LabeledStream::new(events, gt.to_vec()).unwrap()
    }

    #[test]
    fn call_counts_and_repairs() {
        let train = stream(&[1.0; 7]);
        let val = stream(&[1.0, 0.0, 0.0, 0.5]);
        let mut alg = Counting {
            learned: 0,
            asked: 0,
            outputs: vec![f64::NAN, f64::NAN, 1.7, -0.2],
        };
        let trace = run_evaluation(&mut alg, &train, &val, &RunOptions::default()).unwrap();
        assert_eq!((alg.learned, alg.asked), (7, 4));
        assert_eq!(trace.predictions, vec![0.0, 1.0, 1.0, 0.0]);
        assert_eq!(trace.diagnostics.non_finite, 2);
        assert_eq!(trace.diagnostics.clamped, 2);
        assert_eq!(trace.latencies.len(), 4);
    }

    #[test]
    fn failure_keeps_partial_trace() {
        let mut alg = Counting {
            learned: 0,
            asked: 0,
            outputs: vec![0.5, 0.5],
        };
        let err = run_evaluation(
            &mut alg,
            &stream(&[1.0]),
            &stream(&[1.0; 5]),
            &RunOptions::default(),
        )
        .unwrap_err();
        assert_eq!(err.phase, Phase::Conformance);
        assert_eq!(err.event_index, Some(2));
        assert_eq!(err.trace.predictions, vec![0.5, 0.5]);
    }

    #[test]
    fn oracle_only_unscored() {
        let val = stream(&[1.0, 0.5, 0.0]);
        let unscored = RunOptions {
            scored: false,
            ..Default::default()
        };
        let t = run_evaluation(&mut OraclePredictor, &stream(&[1.0]), &val, &unscored).unwrap();
        assert_eq!(t.predictions, val.gt);
        let err = run_evaluation(
            &mut OraclePredictor,
            &stream(&[1.0]),
            &val,
            &RunOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err.error, AlgorithmError::Configuration(_)));
        assert_eq!(err.phase, Phase::Setup);
        let t = run_evaluation(
            &mut ConstantPredictor::new(0.5),
            &stream(&[]),
            &val,
            &unscored,
        )
        .unwrap();
        assert_eq!(t.meta.algorithm, "constant:0.5");
    }
}

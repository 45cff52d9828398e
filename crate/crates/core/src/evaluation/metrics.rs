use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{duration_nanos, ConformanceTrace, EvaluationError};

pub const DEFAULT_LATENCY_BUDGET: Duration = Duration::from_millis(5);
/// Errors up to this bound count as accurate.
pub const ACCURACY_TOLERANCE: f64 = 0.1;
/// Errors above this bound count as robustness violations.
pub const ROBUSTNESS_TOLERANCE: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoreWeights {
    pub accuracy: f64,
    pub mae: f64,
    pub rmse: f64,
    pub latency: f64,
    pub robustness: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self {
            accuracy: 0.3,
            mae: 0.25,
            rmse: 0.2,
            latency: 0.15,
            robustness: 0.1,
        }
    }
}

impl ScoreWeights {
    pub fn validate(&self) -> Result<(), EvaluationError> {
        let w = [
            self.accuracy,
            self.mae,
            self.rmse,
            self.latency,
            self.robustness,
        ];
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(EvaluationError::Weights(format!(
                "weights must be non-negative, got {w:?}"
            )));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(EvaluationError::Weights(format!(
                "weights must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_events: usize,
    pub accuracy: f64,
    pub mae: f64,
    pub rmse: f64,
    pub latency_score: f64,
    #[serde(rename = "avg_latency_ns", with = "duration_nanos")]
    pub avg_latency: Duration,
    pub robustness: f64,
    pub e_global: f64,
    pub score: f64,
    pub weights: ScoreWeights,
    #[serde(rename = "latency_budget_ns", with = "duration_nanos")]
    pub latency_budget: Duration,
}

/// Mean of `latencies`, rounded down to whole nanoseconds.
pub fn average_latency(latencies: &[Duration]) -> Duration {
    if latencies.is_empty() {
        return Duration::ZERO;
    }
    let total: u128 = latencies.iter().map(Duration::as_nanos).sum();
    let avg = total / latencies.len() as u128;
    Duration::from_nanos(u64::try_from(avg).unwrap_or(u64::MAX))
}

pub fn latency_score(avg: Duration, budget: Duration) -> f64 {
    if budget.is_zero() {
        return if avg.is_zero() { 1.0 } else { 0.0 };
    }
    (1.0 - avg.as_nanos() as f64 / budget.as_nanos() as f64).max(0.0)
}

/// Metrics from raw columns. `gt` and `predictions` must have equal,
/// non-zero length.
pub fn metrics_from_columns(
    gt: &[f64],
    predictions: &[f64],
    avg_latency: Duration,
    weights: &ScoreWeights,
    latency_budget: Duration,
) -> Result<MetricsReport, EvaluationError> {
    if gt.len() != predictions.len() {
        return Err(EvaluationError::LengthMismatch {
            gt: gt.len(),
            predictions: predictions.len(),
        });
    }
    if gt.is_empty() {
        return Err(EvaluationError::EmptyTrace);
    }
    weights.validate()?;
    let n = gt.len() as f64;
    let (mut abs_sum, mut sq_sum, mut accurate, mut violations) = (0.0, 0.0, 0usize, 0usize);
    for (g, p) in gt.iter().zip(predictions) {
        let e = (p - g).abs();
        abs_sum += e;
        sq_sum += e * e;
        if e <= ACCURACY_TOLERANCE {
            accurate += 1;
        }
        if e > ROBUSTNESS_TOLERANCE {
            violations += 1;
        }
    }
    let accuracy = accurate as f64 / n;
    let mae = abs_sum / n;
    // guard against rounding pushing rmse below mae for near-constant errors
    let rmse = (sq_sum / n).sqrt().max(mae);
    // (n - v) / n rather than 1 - v / n keeps robustness >= accuracy exact
    let robustness = (gt.len() - violations) as f64 / n;
    let lat = latency_score(avg_latency, latency_budget);
    let score = weights.accuracy * accuracy
        + weights.mae * (1.0 - mae)
        + weights.rmse * (1.0 - rmse)
        + weights.latency * lat
        + weights.robustness * robustness;
    Ok(MetricsReport {
        n_events: gt.len(),
        accuracy,
        mae,
        rmse,
        latency_score: lat,
        avg_latency,
        robustness,
        e_global: mae,
        score: score.clamp(0.0, 1.0),
        weights: *weights,
        latency_budget,
    })
}

pub fn compute_metrics(
    trace: &ConformanceTrace,
    weights: &ScoreWeights,
    latency_budget: Duration,
) -> Result<MetricsReport, EvaluationError> {
    metrics_from_columns(
        &trace.gt,
        &trace.predictions,
        average_latency(&trace.latencies),
        weights,
        latency_budget,
    )
}

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::StreamError;
use crate::model::{apply_steps, union_model, ProcessModel, Variant};

pub const SCENARIO_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DriftType {
    #[default]
    Sudden,
    Gradual,
    Incremental,
    Recurring,
}

impl DriftType {
    pub const ALL: [DriftType; 4] = [
        DriftType::Sudden,
        DriftType::Gradual,
        DriftType::Incremental,
        DriftType::Recurring,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DriftType::Sudden => "sudden",
            DriftType::Gradual => "gradual",
            DriftType::Incremental => "incremental",
            DriftType::Recurring => "recurring",
        }
    }
}

impl fmt::Display for DriftType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DriftType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DriftType::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                format!("unknown drift type {s:?} (sudden, gradual, incremental, recurring)")
            })
    }
}

/// How the cases of a stream are laid out over time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Interleaving {
    /// Each case's events are contiguous.
    #[default]
    Sequential,
    /// Up to `max_parallel_cases` cases are open at once; the next event
    /// comes from a uniformly chosen open case.
    RandomInterleave { max_parallel_cases: usize },
}

/// Knobs of the predefined drift scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioParams {
    /// Cases drawn from `p` before the drift (each `p` block when recurring).
    pub before_cases: usize,
    /// Cases of the mixed segment (sudden) or of each intermediate model
    /// (incremental).
    pub transition_cases: usize,
    /// Cases drawn from `k` after the drift.
    pub after_cases: usize,
    /// Gradual only: cases over which the share of `k` rises from 0 to 1.
    pub transition_window: usize,
    /// Incremental only: models strictly between `p` and `k`.
    pub n_intermediate_models: usize,
    pub interleaving: Interleaving,
    pub seed: u64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            before_cases: 100,
            transition_cases: 50,
            after_cases: 100,
            transition_window: 50,
            n_intermediate_models: 3,
            interleaving: Interleaving::Sequential,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSegment {
    /// Key into [`DriftScenario::models`].
    pub source: String,
    pub n_cases: usize,
    pub gt_level: f64,
    pub origin_label: String,
}

/// A fully resolved validation stream description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftScenario {
    pub format_version: u32,
    pub drift_type: DriftType,
    pub models: BTreeMap<String, ProcessModel>,
    pub segments: Vec<StreamSegment>,
    pub interleaving: Interleaving,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition_window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_intermediate_models: Option<usize>,
    pub seed: u64,
}

impl DriftScenario {
    pub fn validate(&self) -> Result<(), StreamError> {
        let bad = |m: String| Err(StreamError::Scenario(m));
        if self.format_version != SCENARIO_FORMAT_VERSION {
            return bad(format!(
                "unsupported format_version {}",
                self.format_version
            ));
        }
        if self.segments.is_empty() {
            return bad("a scenario needs at least one segment".into());
        }
        for s in &self.segments {
            if !self.models.contains_key(&s.source) {
                return bad(format!(
                    "segment source {:?} is not a known model",
                    s.source
                ));
            }
            if s.n_cases == 0 {
                return bad(format!("segment {:?} has no cases", s.origin_label));
            }
            if !(0.0..=1.0).contains(&s.gt_level) {
                return bad(format!("gt_level {} outside [0, 1]", s.gt_level));
            }
        }
        if let Interleaving::RandomInterleave {
            max_parallel_cases: 0,
        } = self.interleaving
        {
            return bad("max_parallel_cases must be at least 1".into());
        }
        match self.drift_type {
            DriftType::Gradual if self.transition_window.unwrap_or(0) == 0 => {
                bad("gradual drift needs transition_window >= 1".into())
            }
            DriftType::Incremental if self.n_intermediate_models.unwrap_or(0) == 0 => {
                bad("incremental drift needs n_intermediate_models >= 1".into())
            }
            _ => Ok(()),
        }
    }

    pub fn total_cases(&self) -> usize {
        self.segments.iter().map(|s| s.n_cases).sum()
    }

    /// Ground truth per case, in stream order.
    pub fn per_case_gt(&self) -> Vec<f64> {
        self.segments
            .iter()
            .flat_map(|s| std::iter::repeat_n(s.gt_level, s.n_cases))
            .collect()
    }
}

fn segment(source: &str, n_cases: usize, gt_level: f64) -> StreamSegment {
    StreamSegment {
        source: source.to_string(),
        n_cases,
        gt_level,
        origin_label: source.to_string(),
    }
}

/// Appends a segment, merging it into the previous one if it has the same source.
fn push_merged(segments: &mut Vec<StreamSegment>, next: StreamSegment) {
    if next.n_cases == 0 {
        return;
    }
    match segments.last_mut() {
        Some(last) if last.source == next.source && last.gt_level == next.gt_level => {
            last.n_cases += next.n_cases
        }
        _ => segments.push(next),
    }
}

/// Lays out the validation stream for one of the predefined drift types.
///
/// * Sudden: `p` then `w = p ∪ k` then `k`, at ground truth 1, 0.5, 0.
/// * Gradual: `p`, then a window where each case comes from `k` with a
///   probability rising linearly from 0 to 1, then `k`. Cases score 1 when
///   drawn from `p` and 0 when drawn from `k`.
/// * Incremental: `p = m0, m1, ..., mj = k` where `mi` applies the first
///   `i/j` of the edit script from `p` to `k`; `mi` cases score `1 - i/j`.
/// * Recurring: `p`, `k`, `p`.
pub fn build_scenario(
    p: &ProcessModel,
    k: &Variant,
    drift_type: DriftType,
    params: &ScenarioParams,
) -> Result<DriftScenario, StreamError> {
    let mut models = BTreeMap::from([
        ("p".to_string(), p.clone()),
        ("k".to_string(), k.model.clone()),
    ]);
    let mut segments = Vec::new();
    let mut transition_window = None;
    let mut n_intermediate_models = None;
    if params.before_cases == 0 || params.after_cases == 0 {
        return Err(StreamError::Scenario(
            "before_cases and after_cases must be at least 1".into(),
        ));
    }

    match drift_type {
        DriftType::Sudden => {
            models.insert("w".into(), union_model(p, &k.model));
            push_merged(&mut segments, segment("p", params.before_cases, 1.0));
            push_merged(&mut segments, segment("w", params.transition_cases, 0.5));
            push_merged(&mut segments, segment("k", params.after_cases, 0.0));
        }
        DriftType::Gradual => {
            let window = params.transition_window;
            if window == 0 {
                return Err(StreamError::Scenario(
                    "gradual drift needs transition_window >= 1".into(),
                ));
            }
            transition_window = Some(window);
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(2);
            push_merged(&mut segments, segment("p", params.before_cases, 1.0));
            for t in 0..window {
                let share_k = (t + 1) as f64 / (window + 1) as f64;
                let next = if rng.gen_bool(share_k) {
                    segment("k", 1, 0.0)
                } else {
                    segment("p", 1, 1.0)
                };
                push_merged(&mut segments, next);
            }
            push_merged(&mut segments, segment("k", params.after_cases, 0.0));
        }
        DriftType::Incremental => {
            let n = params.n_intermediate_models;
            if n == 0 {
                return Err(StreamError::Scenario(
                    "incremental drift needs n_intermediate_models >= 1".into(),
                ));
            }
            if params.transition_cases == 0 {
                return Err(StreamError::Scenario(
                    "incremental drift needs transition_cases >= 1".into(),
                ));
            }
            n_intermediate_models = Some(n);
            let j = n + 1;
            let total = k.steps.len();
            push_merged(&mut segments, segment("p", params.before_cases, 1.0));
            for i in 1..j {
                let name = format!("m{i}");
                let upto = (i * total + j / 2) / j;
                models.insert(name.clone(), apply_steps(p, &k.steps[..upto])?);
                segments.push(segment(
                    &name,
                    params.transition_cases,
                    (j - i) as f64 / j as f64,
                ));
            }
            push_merged(&mut segments, segment("k", params.after_cases, 0.0));
        }
        DriftType::Recurring => {
            push_merged(&mut segments, segment("p", params.before_cases, 1.0));
            push_merged(&mut segments, segment("k", params.after_cases, 0.0));
            push_merged(&mut segments, segment("p", params.before_cases, 1.0));
        }
    }

    let scenario = DriftScenario {
        format_version: SCENARIO_FORMAT_VERSION,
        drift_type,
        models,
        segments,
        interleaving: params.interleaving,
        transition_window,
        n_intermediate_models,
        seed: params.seed,
    };
    scenario.validate()?;
    Ok(scenario)
}

use std::collections::HashMap;

use super::{Algorithm, AlgorithmError};
use crate::stream::Event;

/// Counts learned by the frequency baseline during warm-up.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrequencyState {
    pub activity_counts: HashMap<String, u64>,
    pub df_counts: HashMap<(String, String), u64>,
    pub last_activity_per_case: HashMap<String, String>,
    max_activity_count: u64,
    max_df_count: u64,
}

impl FrequencyState {
    pub fn learn(&mut self, event: &Event) {
        let a = &event.activity;
        let n = self.activity_counts.entry(a.clone()).or_default();
        *n += 1;
        self.max_activity_count = self.max_activity_count.max(*n);
        if let Some(prev) = self.last_activity_per_case.get(&event.case_id) {
            let n = self.df_counts.entry((prev.clone(), a.clone())).or_default();
            *n += 1;
            self.max_df_count = self.max_df_count.max(*n);
        }
        self.last_activity_per_case
            .insert(event.case_id.clone(), a.clone());
    }

    /// Recomputes the cached maxima after the count maps were edited by hand.
    pub fn refresh_maxima(&mut self) {
        self.max_activity_count = self.activity_counts.values().copied().max().unwrap_or(0);
        self.max_df_count = self.df_counts.values().copied().max().unwrap_or(0);
    }

    fn ratio(count: u64, max: u64) -> f64 {
        if max == 0 {
            0.0
        } else {
            count as f64 / max as f64
        }
    }
}

/// Frequency score of `event`: the activity's count relative to the most
/// frequent activity, averaged 50/50 with the directly-follows pair's count
/// relative to the most frequent pair when the case has a previous event.
/// Remembers `event` as the case's last activity.
pub fn frequency_baseline_score(state: &mut FrequencyState, event: &Event) -> f64 {
    let a = &event.activity;
    let act = FrequencyState::ratio(
        state.activity_counts.get(a).copied().unwrap_or(0),
        state.max_activity_count,
    );
    let score = match state.last_activity_per_case.get(&event.case_id) {
        None => act,
        Some(prev) => {
            let df = state
                .df_counts
                .get(&(prev.clone(), a.clone()))
                .copied()
                .unwrap_or(0);
            0.5 * act + 0.5 * FrequencyState::ratio(df, state.max_df_count)
        }
    };
    state
        .last_activity_per_case
        .insert(event.case_id.clone(), a.clone());
    score
}

/// Learns activity and directly-follows frequencies; more frequent
/// behavior is more conformant.
#[derive(Debug, Clone, Default)]
pub struct FrequencyConformance {
    state: FrequencyState,
}

impl FrequencyConformance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&self) -> &FrequencyState {
        &self.state
    }
}

impl Algorithm for FrequencyConformance {
    fn name(&self) -> &str {
        "frequency-baseline"
    }

    fn learn(&mut self, event: &Event) -> Result<(), AlgorithmError> {
        self.state.learn(event);
        Ok(())
    }

    fn conformance(&mut self, event: &Event) -> Result<f64, AlgorithmError> {
        Ok(frequency_baseline_score(&mut self.state, event))
    }
}

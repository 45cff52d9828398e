use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::bundle::BundleSpec;
use crate::evaluation::{ScoreWeights, DEFAULT_LATENCY_BUDGET};
use crate::model::GenerationConfig;
use crate::stream::{DriftType, Interleaving, ScenarioParams, DEFAULT_TRAIN_CASES};

pub const CONFIG_FILE: &str = "driftbench.toml";
pub const SCENARIO_FILE_FORMAT_VERSION: u32 = 1;

/// Scenario section of `driftbench.toml`, also accepted on its own by
/// `generate --scenario-file`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub format_version: u32,
    /// Defaults to the drift type's name.
    pub scenario_id: Option<String>,
    pub drift_type: DriftType,
    pub seed: u64,
    pub train_cases: usize,
    /// Cases before and after the drift.
    pub cases: usize,
    pub transition_cases: usize,
    pub transition_window: usize,
    pub n_intermediate_models: usize,
    /// Maximum number of concurrently open cases; absent means sequential.
    pub interleave: Option<usize>,
    pub generation: GenerationConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let p = ScenarioParams::default();
        Self {
            format_version: SCENARIO_FILE_FORMAT_VERSION,
            scenario_id: None,
            drift_type: DriftType::Sudden,
            seed: 0,
            train_cases: DEFAULT_TRAIN_CASES,
            cases: p.before_cases,
            transition_cases: p.transition_cases,
            transition_window: p.transition_window,
            n_intermediate_models: p.n_intermediate_models,
            interleave: None,
            generation: GenerationConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.format_version != SCENARIO_FILE_FORMAT_VERSION {
            return Err(format!(
                "unsupported scenario format_version {}",
                self.format_version
            ));
        }
        let mut zero = Vec::new();
        for (name, v) in [("cases", self.cases), ("train_cases", self.train_cases)] {
            if v == 0 {
                zero.push(name);
            }
        }
        if self.drift_type == DriftType::Gradual && self.transition_window == 0 {
            zero.push("transition_window");
        }
        if self.drift_type == DriftType::Incremental {
            if self.transition_cases == 0 {
                zero.push("transition_cases");
            }
            if self.n_intermediate_models == 0 {
                zero.push("n_intermediate_models");
            }
        }
        if self.interleave == Some(0) {
            zero.push("interleave");
        }
        if !zero.is_empty() {
            return Err(format!("must be at least 1: {}", zero.join(", ")));
        }
        self.generation.validate().map_err(|e| e.to_string())
    }

    pub fn scenario_id(&self) -> String {
        self.scenario_id
            .clone()
            .unwrap_or_else(|| self.drift_type.name().to_string())
    }

    pub fn bundle_spec(&self) -> BundleSpec {
        BundleSpec {
            scenario_id: self.scenario_id(),
            drift_type: self.drift_type,
            seed: self.seed,
            train_cases: self.train_cases,
            params: ScenarioParams {
                before_cases: self.cases,
                transition_cases: self.transition_cases,
                after_cases: self.cases,
                transition_window: self.transition_window,
                n_intermediate_models: self.n_intermediate_models,
                interleaving: match self.interleave {
                    None => Interleaving::Sequential,
                    Some(n) => Interleaving::RandomInterleave {
                        max_parallel_cases: n,
                    },
                },
                seed: self.seed,
            },
            generation: self.generation.clone(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

/// Contents of `driftbench.toml` in the workspace root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    #[serde(skip)]
    pub workspace: PathBuf,
    pub scenario: ScenarioConfig,
    /// Strip labels from events during evaluation.
    pub scored: bool,
    pub latency_budget_ms: f64,
    pub event_deadline_ms: u64,
    pub weights: ScoreWeights,
}

impl Default for CliConfig {
    fn default() -> Self {
        Self {
            workspace: PathBuf::from("."),
            scenario: ScenarioConfig::default(),
            scored: false,
            latency_budget_ms: DEFAULT_LATENCY_BUDGET.as_secs_f64() * 1e3,
            event_deadline_ms: crate::adapter::DEFAULT_EVENT_DEADLINE.as_millis() as u64,
            weights: ScoreWeights::default(),
        }
    }
}

impl CliConfig {
    /// Reads `driftbench.toml` from `workspace` if present.
    pub fn discover(workspace: &Path) -> Result<Self, String> {
        let path = workspace.join(CONFIG_FILE);
        let mut config = if path.is_file() {
            let text = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            toml::from_str::<CliConfig>(&text).map_err(|e| format!("{}: {e}", path.display()))?
        } else {
            CliConfig::default()
        };
        config.workspace = workspace.to_path_buf();
        config
            .validate()
            .map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.scenario.validate()?;
        self.weights.validate().map_err(|e| e.to_string())?;
        if !(self.latency_budget_ms.is_finite() && self.latency_budget_ms > 0.0) {
            return Err("latency_budget_ms must be positive".into());
        }
        if self.event_deadline_ms == 0 {
            return Err("event_deadline_ms must be at least 1".into());
        }
        Ok(())
    }

    pub fn latency_budget(&self) -> Duration {
        Duration::from_secs_f64(self.latency_budget_ms / 1e3)
    }
}

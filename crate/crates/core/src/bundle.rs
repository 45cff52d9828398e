//! A generated benchmark instance on disk.
//!
//! A bundle directory holds:
//!
//! | file | content |
//! |------|---------|
//! | `model_p.txt`, `model_k.txt`, `model_w.txt` | the three models in text notation |
//! | `train.jsonl` | warm-up stream |
//! | `validation.jsonl` | labeled validation stream |
//! | `scenario.json` | [`Manifest`] |

use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{generate_model_pair, EditStep, GenerationConfig, ModelError, ProcessModel};
use crate::stream::{
    build_scenario, generate_train_stream, generate_validation_stream, read_stream, write_stream,
    DriftScenario, DriftType, LabeledStream, ScenarioParams, StreamError,
};

pub const MANIFEST_FILE: &str = "scenario.json";
pub const TRAIN_FILE: &str = "train.jsonl";
pub const VALIDATION_FILE: &str = "validation.jsonl";
pub const MODEL_FILES: [(&str, &str); 3] = [
    ("p", "model_p.txt"),
    ("k", "model_k.txt"),
    ("w", "model_w.txt"),
];
pub const MANIFEST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("model generation failed for seed {seed}: {source}")]
    Generation { seed: u64, source: ModelError },
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BundleError + '_ {
    move |source| BundleError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Consecutive cases sharing one ground-truth value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtBlock {
    pub gt: f64,
    pub cases: usize,
}

pub fn gt_blocks(per_case: &[f64]) -> Vec<GtBlock> {
    let mut out: Vec<GtBlock> = Vec::new();
    for &g in per_case {
        match out.last_mut() {
            Some(b) if b.gt == g => b.cases += 1,
            _ => out.push(GtBlock { gt: g, cases: 1 }),
        }
    }
    out
}

/// Everything needed to regenerate and to interpret a bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub scenario_id: String,
    pub drift_type: DriftType,
    pub seed: u64,
    /// Seed of the base model actually used (differs from `seed` when
    /// base models without a variant were skipped).
    pub base_seed: u64,
    pub redraws: u32,
    pub train_cases: usize,
    pub train_events: usize,
    pub validation_cases: usize,
    pub validation_events: usize,
    pub gt_blocks: Vec<GtBlock>,
    pub edit_steps: Vec<EditStep>,
    pub generation: GenerationConfig,
    pub scenario: DriftScenario,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub manifest: Manifest,
    pub p: ProcessModel,
    pub k: ProcessModel,
    pub w: ProcessModel,
    pub train: LabeledStream,
    pub validation: LabeledStream,
}

/// What [`generate_bundle`] needs.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleSpec {
    pub scenario_id: String,
    pub drift_type: DriftType,
    pub seed: u64,
    pub train_cases: usize,
    pub params: ScenarioParams,
    pub generation: GenerationConfig,
}

impl BundleSpec {
    /// Preset defaults for `drift_type` with `seed` driving all randomness.
    pub fn preset(drift_type: DriftType, seed: u64) -> Self {
        Self {
            scenario_id: drift_type.name().to_string(),
            drift_type,
            seed,
            train_cases: crate::stream::DEFAULT_TRAIN_CASES,
            params: ScenarioParams::default(),
            generation: GenerationConfig::default(),
        }
    }
}

pub fn generate_bundle(spec: &BundleSpec) -> Result<Bundle, BundleError> {
    let generation = GenerationConfig {
        seed: spec.seed,
        ..spec.generation.clone()
    };
    let pair = generate_model_pair(&generation).map_err(|source| BundleError::Generation {
        seed: spec.seed,
        source,
    })?;
    let params = ScenarioParams {
        seed: spec.seed,
        ..spec.params.clone()
    };
    let scenario = build_scenario(&pair.p, &pair.k, spec.drift_type, &params)?;
    let train = generate_train_stream(&pair.p, spec.train_cases, spec.seed);
    let validation = generate_validation_stream(&scenario)?;
    let manifest = Manifest {
        format_version: MANIFEST_FORMAT_VERSION,
        scenario_id: spec.scenario_id.clone(),
        drift_type: spec.drift_type,
        seed: spec.seed,
        base_seed: pair.base_seed,
        redraws: pair.redraws,
        train_cases: spec.train_cases,
        train_events: train.len(),
        validation_cases: scenario.total_cases(),
        validation_events: validation.len(),
        gt_blocks: gt_blocks(&scenario.per_case_gt()),
        edit_steps: pair.k.steps.clone(),
        generation,
        scenario,
    };
    Ok(Bundle {
        manifest,
        p: pair.p,
        k: pair.k.model,
        w: pair.w,
        train,
        validation,
    })
}

pub fn write_bundle(bundle: &Bundle, dir: &Path) -> Result<(), BundleError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for ((_, file), model) in MODEL_FILES.iter().zip([&bundle.p, &bundle.k, &bundle.w]) {
        let path = dir.join(file);
        fs::write(&path, format!("{model}\n")).map_err(io_err(&path))?;
    }
    for (file, stream) in [
        (TRAIN_FILE, &bundle.train),
        (VALIDATION_FILE, &bundle.validation),
    ] {
        let path = dir.join(file);
        let f = fs::File::create(&path).map_err(io_err(&path))?;
        write_stream(stream, BufWriter::new(f))?;
    }
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&bundle.manifest).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(io_err(&path))?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, BundleError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| BundleError::Format {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    if manifest.format_version != MANIFEST_FORMAT_VERSION {
        return Err(BundleError::Format {
            path: path.display().to_string(),
            message: format!("unsupported format_version {}", manifest.format_version),
        });
    }
    Ok(manifest)
}

pub fn read_stream_file(path: &Path) -> Result<LabeledStream, BundleError> {
    let f = fs::File::open(path).map_err(io_err(path))?;
    read_stream(BufReader::new(f)).map_err(|e| match e {
        StreamError::Io(source) => BundleError::Io {
            path: path.display().to_string(),
            source,
        },
        other => BundleError::Format {
            path: path.display().to_string(),
            message: other.to_string(),
        },
    })
}

pub fn read_bundle(dir: &Path) -> Result<Bundle, BundleError> {
    let manifest = read_manifest(dir)?;
    let mut models = Vec::new();
    for (_, file) in MODEL_FILES {
        let path = dir.join(file);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let model: ProcessModel = text.trim().parse().map_err(|e| BundleError::Format {
            path: path.display().to_string(),
            message: format!("{e}"),
        })?;
        models.push(model);
    }
    let w = models.pop().expect("three models");
    let k = models.pop().expect("three models");
    let p = models.pop().expect("three models");
    Ok(Bundle {
        manifest,
        p,
        k,
        w,
        train: read_stream_file(&dir.join(TRAIN_FILE))?,
        validation: read_stream_file(&dir.join(VALIDATION_FILE))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sudden_preset_round_trip() {
        let bundle = generate_bundle(&BundleSpec::preset(DriftType::Sudden, 42)).unwrap();
        let blocks: Vec<(f64, usize)> = bundle
            .manifest
            .gt_blocks
            .iter()
            .map(|b| (b.gt, b.cases))
            .collect();
        assert_eq!(blocks, [(1.0, 100), (0.5, 50), (0.0, 100)]);
        let dir = tempfile::tempdir().unwrap();
        write_bundle(&bundle, dir.path()).unwrap();
        assert_eq!(read_bundle(dir.path()).unwrap(), bundle);
    }

    #[test]
    fn blocks() {
        assert_eq!(gt_blocks(&[]), vec![]);
        assert_eq!(
            gt_blocks(&[1.0, 1.0, 0.0, 1.0]),
            vec![
                GtBlock { gt: 1.0, cases: 2 },
                GtBlock { gt: 0.0, cases: 1 },
                GtBlock { gt: 1.0, cases: 1 }
            ]
        );
    }
}

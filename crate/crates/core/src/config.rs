//! Run configuration: system, data generation, models, evaluation, seed.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::evaluate::{EvalConfig, SweepConfig};
use crate::kernels::{ActiveDims, KernelHyperparams};
use crate::regression::{KernelKind, DEFAULT_BUDGET};
use crate::simulate::DataGenConfig;
use crate::system::{ConstraintSystem, System};
use crate::{Error, Result};

/// The shipped benchmark configuration.
pub const BENCHMARK_JSON: &str = include_str!("../benchmark.json");

fn default_budget() -> usize {
    DEFAULT_BUDGET
}

/// One model to train.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// Used in file names and report rows.
    pub label: String,
    pub kind: KernelKind,
    /// One set per channel. Omitted means heuristic multi-start.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<KernelHyperparams>>,
    /// Objective evaluations per optimizer start.
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn default_models() -> Vec<ModelSpec> {
    [
        ("nh_gp", KernelKind::AdaptedCoordinates),
        ("standard_gp", KernelKind::StandardAmbient),
    ]
    .into_iter()
    .map(|(label, kind)| ModelSpec {
        label: label.into(),
        kind,
        init: None,
        budget: DEFAULT_BUDGET,
    })
    .collect()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub system: System,
    /// `data.seed` must be left out; the top-level `seed` drives data generation.
    #[serde(default)]
    pub data: DataGenConfig,
    /// Kernel inputs; defaults to the system's angular coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_dims: Option<Vec<usize>>,
    #[serde(default = "default_models")]
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub evaluation: EvalConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: System::default(),
            data: DataGenConfig::default(),
            active_dims: None,
            models: default_models(),
            evaluation: EvalConfig::default(),
            sweep: SweepConfig::default(),
            output_dir: default_output_dir(),
            seed: 0,
        }
    }
}

impl RunConfig {
    /// Parse and validate. Syntax errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn benchmark() -> Self {
        Self::from_json(BENCHMARK_JSON).expect("shipped benchmark config is valid")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        let n = self.system.ambient_dim();
        self.data.validate(n)?;
        if self.data.seed != 0 {
            return Err(Error::Config("data.seed is not used; set the top-level seed".into()));
        }
        self.evaluation.validate(n)?;
        self.sweep.evaluation.validate(n)?;
        self.sweep.data.validate(n)?;
        if self.sweep.sample_sizes.is_empty() || self.sweep.seeds.is_empty() {
            return Err(Error::Config("sweep: sample_sizes and seeds must be non-empty".into()));
        }
        if self.sweep.sample_sizes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("sweep: sample_sizes must be strictly increasing".into()));
        }
        let dims = self.active_dims()?;
        check_hyperparams("sweep", self.sweep.kind, &self.sweep.hyperparams, &self.system, &dims)?;

        if self.models.is_empty() {
            return Err(Error::Config("models: at least one model is required".into()));
        }
        let mut seen = HashSet::new();
        for m in &self.models {
            let ok_label = !m.label.is_empty()
                && m.label
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !ok_label {
                return Err(Error::Config(format!(
                    "models: label '{}' must be non-empty and use only [A-Za-z0-9_-]",
                    m.label
                )));
            }
            if !seen.insert(m.label.as_str()) {
                return Err(Error::Config(format!("models: duplicate label '{}'", m.label)));
            }
            if m.budget == 0 {
                return Err(Error::Config(format!(
                    "models: '{}' budget must be at least 1",
                    m.label
                )));
            }
            if let Some(init) = &m.init {
                check_hyperparams(&format!("models: '{}'", m.label), m.kind, init, &self.system, &dims)?;
            }
        }
        Ok(())
    }

    pub fn active_dims(&self) -> Result<ActiveDims> {
        match &self.active_dims {
            Some(d) => ActiveDims::new(d.clone(), self.system.ambient_dim())
                .map_err(|e| Error::Config(format!("active_dims: {e}"))),
            None => Ok(ActiveDims::for_system(&self.system)),
        }
    }

    /// Data generation settings with the run seed applied.
    pub fn data_config(&self) -> DataGenConfig {
        DataGenConfig {
            seed: self.seed,
            ..self.data.clone()
        }
    }

    pub fn model(&self, label: &str) -> Option<&ModelSpec> {
        self.models.iter().find(|m| m.label == label)
    }
}

fn check_hyperparams(
    context: &str,
    kind: KernelKind,
    hps: &[KernelHyperparams],
    system: &System,
    dims: &ActiveDims,
) -> Result<()> {
    let expected = kind.num_channels(system);
    if hps.len() != expected {
        return Err(Error::Config(format!(
            "{context}: {kind:?} needs {expected} hyperparameter sets, got {}",
            hps.len()
        )));
    }
    for hp in hps {
        hp.validate().map_err(|e| Error::Config(format!("{context}: {e}")))?;
        if hp.length_scales.len() != dims.len() {
            return Err(Error::Config(format!(
                "{context}: {} length scales for {} active dims",
                hp.length_scales.len(),
                dims.len()
            )));
        }
    }
    Ok(())
}

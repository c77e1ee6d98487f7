//! The generate / train / evaluate workflow as library calls.
//!
//! Every step is a pure function of the config, its input artifacts and the
//! seed; rerunning a step reproduces its files byte for byte.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::evaluate::{
    build_report, consistency_sweep, Evaluation, MetricsReport, NominalField, SweepRow, VectorField,
};
use crate::io;
use crate::regression::{train_vector_gp, Dataset, GpModel};
use crate::simulate::{generate_dataset, integrate_true};
use crate::{Error, Result};

pub const DATASET_FILE: &str = "dataset.csv";
pub const REPORT_FILE: &str = "report.json";
pub const SWEEP_FILE: &str = "consistency_sweep.csv";
pub const NOMINAL_LABEL: &str = "nominal";

pub fn model_file(label: &str) -> String {
    format!("model_{label}.json")
}

/// SHA-256 over everything that determines the dataset.
pub fn config_hash(cfg: &RunConfig) -> String {
    let key = serde_json::json!({
        "system": cfg.system,
        "data": cfg.data_config(),
    });
    Sha256::digest(key.to_string().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn generate(cfg: &RunConfig) -> Result<Dataset> {
    let mut data = generate_dataset(&cfg.system, &cfg.data_config())?;
    data.meta.config_hash = config_hash(cfg);
    Ok(data)
}

/// Write the dataset and the true source trajectories.
pub fn write_generated(cfg: &RunConfig, data: &Dataset, out: &Path) -> Result<Vec<PathBuf>> {
    let path = out.join(DATASET_FILE);
    io::write_dataset(&path, data)?;
    let mut files = vec![path.clone(), io::meta_path(&path)];
    let d = cfg.data_config();
    for (i, ic) in d.initial_conditions.iter().enumerate() {
        let traj = integrate_true(&cfg.system, &nalgebra::DVector::from_column_slice(ic), d.dt, d.horizon)?;
        let p = out.join(format!("true_trajectory_{i}.csv"));
        io::write_trajectory(&p, &traj)?;
        files.push(p);
    }
    Ok(files)
}

/// Result of training every configured model. One model failing does not
/// stop the others.
#[derive(Debug, Default)]
pub struct Trained {
    pub models: Vec<(String, GpModel)>,
    pub failures: Vec<(String, Error)>,
}

pub fn train(cfg: &RunConfig, data: &Dataset) -> Result<Trained> {
    let dims = cfg.active_dims()?;
    let mut out = Trained::default();
    for spec in &cfg.models {
        log::info!("training '{}' ({:?}, budget {})", spec.label, spec.kind, spec.budget);
        match train_vector_gp(data, spec.kind, &cfg.system, &dims, spec.init.as_deref(), spec.budget) {
            Ok(model) => {
                for (c, hp) in model.hyperparams().iter().enumerate() {
                    log::info!(
                        "'{}' channel {c}: sf2 {:.4e} l {:?} sn2 {:.4e}",
                        spec.label,
                        hp.signal_variance,
                        hp.length_scales,
                        hp.noise_variance
                    );
                }
                out.models.push((spec.label.clone(), model));
            }
            Err(e) => {
                log::error!("training '{}' failed: {e}", spec.label);
                out.failures.push((spec.label.clone(), e));
            }
        }
    }
    Ok(out)
}

pub fn write_models(models: &[(String, GpModel)], out: &Path) -> Result<Vec<PathBuf>> {
    models
        .iter()
        .map(|(label, m)| {
            let p = out.join(model_file(label));
            io::write_model(&p, m)?;
            Ok(p)
        })
        .collect()
}

/// Load every configured model that has a file in `dir`.
pub fn load_models(cfg: &RunConfig, dir: &Path) -> Result<Vec<(String, GpModel)>> {
    let mut models = Vec::new();
    for spec in &cfg.models {
        let p = dir.join(model_file(&spec.label));
        if p.exists() {
            models.push((spec.label.clone(), io::read_model(&p)?));
        } else {
            log::warn!("no model file for '{}' at {}", spec.label, p.display());
        }
    }
    if models.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no model files found in {}",
            dir.display()
        )));
    }
    Ok(models)
}

/// Evaluate the models plus the nominal baseline, which is always last.
pub fn evaluate(cfg: &RunConfig, models: &[(String, GpModel)]) -> Result<Evaluation> {
    let nominal = NominalField(&cfg.system);
    let mut fields: Vec<(&str, &dyn VectorField)> = models
        .iter()
        .map(|(l, m)| (l.as_str(), m as &dyn VectorField))
        .collect();
    fields.push((NOMINAL_LABEL, &nominal));
    build_report(&fields, &cfg.system, &cfg.evaluation, cfg.seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedModel {
    pub label: String,
    pub error: String,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub seed: u64,
    pub config_hash: String,
    pub models: Vec<MetricsReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failed: Vec<FailedModel>,
}

pub fn write_evaluation(
    cfg: &RunConfig,
    eval: &Evaluation,
    failures: &[(String, Error)],
    out: &Path,
) -> Result<Vec<PathBuf>> {
    let doc = ReportDocument {
        seed: cfg.seed,
        config_hash: config_hash(cfg),
        models: eval.reports(),
        failed: failures
            .iter()
            .map(|(label, e)| FailedModel {
                label: label.clone(),
                error: e.to_string(),
            })
            .collect(),
    };
    let report = out.join(REPORT_FILE);
    io::write_json(&report, &doc)?;
    let mut files = vec![report];
    files.extend(io::write_figures(out, eval)?);
    let p = out.join("rollout_true.csv");
    io::write_trajectory(&p, &eval.reference)?;
    files.push(p);
    for m in &eval.models {
        let p = out.join(format!("rollout_{}.csv", m.report.model_label));
        io::write_trajectory(&p, &m.rollout)?;
        files.push(p);
    }
    Ok(files)
}

pub fn sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    consistency_sweep(&cfg.system, &cfg.sweep.sample_sizes, &cfg.sweep.seeds, &cfg.sweep)
}

#[derive(Debug)]
pub struct Reproduction {
    pub dataset: Dataset,
    pub trained: Trained,
    pub evaluation: Evaluation,
    pub sweep: Vec<SweepRow>,
    pub files: Vec<PathBuf>,
}

/// Every step end to end, writing all artifacts under `out`.
pub fn reproduce(cfg: &RunConfig, out: &Path) -> Result<Reproduction> {
    let dataset = generate(cfg)?;
    let mut files = write_generated(cfg, &dataset, out)?;
    let trained = train(cfg, &dataset)?;
    files.extend(write_models(&trained.models, out)?);
    let evaluation = evaluate(cfg, &trained.models)?;
    files.extend(write_evaluation(cfg, &evaluation, &trained.failures, out)?);
    log::info!(
        "consistency sweep: sizes {:?}, seeds {:?}",
        cfg.sweep.sample_sizes,
        cfg.sweep.seeds
    );
    let sweep = sweep(cfg)?;
    let p = out.join(SWEEP_FILE);
    io::write_sweep(&p, &sweep)?;
    files.push(p);
    Ok(Reproduction {
        dataset,
        trained,
        evaluation,
        sweep,
        files,
    })
}

//! Browser bindings for the rolling-disk demo.
//!
//! The plain functions return JSON strings so they can be tested natively;
//! the `#[wasm_bindgen]` wrappers only convert errors.

use nalgebra::DVector;
use nhgp::evaluate::{build_report, EvalConfig, NominalField, VectorField};
use nhgp::kernels::ActiveDims;
use nhgp::regression::{train_vector_gp, KernelKind};
use nhgp::simulate::{generate_dataset, integrate_nominal, integrate_true, DataGenConfig, Trajectory};
use nhgp::system::{ConstraintSystem, DiskParams, System};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn disk(radius: f64, rolling_rate: f64, turning_rate: f64, perturbation: f64) -> nhgp::Result<System> {
    let s = System::VerticalRollingDisk(DiskParams {
        radius,
        rolling_rate,
        turning_rate,
        perturbation,
    });
    s.validate()?;
    Ok(s)
}

fn planar(traj: &Trajectory) -> Value {
    json!({
        "x": traj.states.iter().map(|q| q[0]).collect::<Vec<_>>(),
        "y": traj.states.iter().map(|q| q[1]).collect::<Vec<_>>(),
    })
}

/// Row-major `P(q)` at heading `phi`, with the residual `|A P|` for display.
pub fn projector_json(phi: f64, radius: f64) -> nhgp::Result<String> {
    let s = disk(radius, 1.0, 0.35, 0.0)?;
    let q = DVector::from_vec(vec![0.0, 0.0, phi, 0.0]);
    let p = s.projector(&q)?;
    let rows: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| p.matrix()[(i, j)]).collect()).collect();
    let residual = (s.constraint_matrix(&q).matrix() * p.matrix()).abs().max();
    Ok(json!({ "phi": phi, "projector": rows, "constraint_residual": residual }).to_string())
}

/// True and nominal planar paths from `q0 = (0, 0, phi0, theta0)`.
pub fn trajectories_json(
    perturbation: f64,
    turning_rate: f64,
    phi0: f64,
    theta0: f64,
    horizon: f64,
) -> nhgp::Result<String> {
    let s = disk(1.0, 1.0, turning_rate, perturbation)?;
    let q0 = DVector::from_vec(vec![0.0, 0.0, phi0, theta0]);
    let truth = integrate_true(&s, &q0, 0.05, horizon)?;
    let nominal = integrate_nominal(&s, &q0, 0.05, horizon)?;
    Ok(json!({
        "t": truth.times,
        "true": planar(&truth),
        "nominal": planar(&nominal),
    })
    .to_string())
}

/// Train the adapted nonholonomic GP and the standard GP on a fresh dataset
/// and report metrics and rollouts.
pub fn benchmark_json(seed: u64, n_train: usize, budget: usize, horizon: f64) -> nhgp::Result<String> {
    let s = System::default();
    let data = generate_dataset(
        &s,
        &DataGenConfig {
            n_train,
            seed,
            ..DataGenConfig::default()
        },
    )?;
    let dims = ActiveDims::for_system(&s);
    let nh = train_vector_gp(&data, KernelKind::AdaptedCoordinates, &s, &dims, None, budget)?;
    let std = train_vector_gp(&data, KernelKind::StandardAmbient, &s, &dims, None, budget)?;
    let nominal = NominalField(&s);
    let eval = EvalConfig {
        horizon,
        ..EvalConfig::default()
    };
    let fields: [(&str, &dyn VectorField); 3] = [("nh_gp", &nh), ("standard_gp", &std), ("nominal", &nominal)];
    let r = build_report(&fields, &s, &eval, seed)?;
    Ok(json!({
        "t": r.reference.times,
        "true": planar(&r.reference),
        "models": r.models.iter().map(|m| json!({
            "label": m.report.model_label,
            "metrics": m.report,
            "path": planar(&m.rollout),
            "planar_error": m.planar_error.per_time,
        })).collect::<Vec<_>>(),
        "training": {
            "x": data.inputs.iter().map(|q| q[0]).collect::<Vec<_>>(),
            "y": data.inputs.iter().map(|q| q[1]).collect::<Vec<_>>(),
        },
    })
    .to_string())
}

fn js(r: nhgp::Result<String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn projector(phi: f64, radius: f64) -> Result<String, JsError> {
    js(projector_json(phi, radius))
}

#[wasm_bindgen]
pub fn trajectories(
    perturbation: f64,
    turning_rate: f64,
    phi0: f64,
    theta0: f64,
    horizon: f64,
) -> Result<String, JsError> {
    js(trajectories_json(perturbation, turning_rate, phi0, theta0, horizon))
}

#[wasm_bindgen]
pub fn benchmark(seed: u32, n_train: u32, budget: u32, horizon: f64) -> Result<String, JsError> {
    js(benchmark_json(seed as u64, n_train as usize, budget as usize, horizon))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projector_matches_closed_form() {
        let v: Value = serde_json::from_str(&projector_json(0.0, 1.0).unwrap()).unwrap();
        let p = &v["projector"];
        assert!((p[0][0].as_f64().unwrap() - 0.5).abs() < 1e-12);
        assert!((p[0][3].as_f64().unwrap() - 0.5).abs() < 1e-12);
        assert!((p[2][2].as_f64().unwrap() - 1.0).abs() < 1e-12);
        assert!(p[1][1].as_f64().unwrap().abs() < 1e-12);
        assert!(v["constraint_residual"].as_f64().unwrap() < 1e-12);
        assert!(projector_json(0.0, -1.0).is_err());
    }

    #[test]
    fn zero_perturbation_paths_coincide() {
        let v: Value = serde_json::from_str(&trajectories_json(0.0, 0.35, 0.2, 0.1, 2.0).unwrap()).unwrap();
        assert_eq!(v["t"].as_array().unwrap().len(), 41);
        assert_eq!(v["true"], v["nominal"]);
    }

    #[test]
    fn small_benchmark_runs() {
        let v: Value = serde_json::from_str(&benchmark_json(0, 40, 80, 5.0).unwrap()).unwrap();
        let models = v["models"].as_array().unwrap();
        assert_eq!(models.len(), 3);
        assert!(models[0]["metrics"]["max_constraint_violation"].as_f64().unwrap() <= 1e-8);
        assert!(benchmark_json(0, 0, 10, 5.0).is_err());
    }
}

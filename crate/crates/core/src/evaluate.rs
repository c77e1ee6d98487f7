//! Model quality metrics: field error, constraint violation, planar
//! tracking error, and the sample-size consistency sweep.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::kernels::{ActiveDims, KernelHyperparams};
use crate::regression::{fit_vector_gp, GpModel, KernelKind};
use crate::simulate::{generate_dataset, integrate, integrate_true, uniform_stride_indices, DataGenConfig, Trajectory};
use crate::system::{ConstraintSystem, System};
use crate::{Error, Result};

/// Anything that can be evaluated as an ambient vector field.
pub trait VectorField {
    fn eval(&self, q: &DVector<f64>) -> Result<DVector<f64>>;
}

impl VectorField for GpModel {
    fn eval(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        self.predict(q)
    }
}

/// The system's nominal field, the baseline every learned model is compared to.
pub struct NominalField<'a>(pub &'a dyn ConstraintSystem);

impl VectorField for NominalField<'_> {
    fn eval(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.0.nominal_field(q))
    }
}

pub struct TrueField<'a>(pub &'a dyn ConstraintSystem);

impl VectorField for TrueField<'_> {
    fn eval(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.0.true_field(q))
    }
}

/// Any field followed by the orthogonal projection onto the distribution.
pub struct Projected<'a, F: ?Sized> {
    pub field: &'a F,
    pub system: &'a dyn ConstraintSystem,
}

impl<F: VectorField + ?Sized> VectorField for Projected<'_, F> {
    fn eval(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.system.projector(q)?.apply(&self.field.eval(q)?))
    }
}

/// Per-point values with their mean and max.
#[derive(Debug, Clone, PartialEq)]
pub struct PointStats {
    pub values: Vec<f64>,
    pub mean: f64,
    pub max: f64,
}

impl PointStats {
    fn from_values(values: Vec<f64>) -> Self {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let max = values.iter().copied().fold(0.0, f64::max);
        Self { values, mean, max }
    }
}

fn nonempty(points: &[DVector<f64>]) -> Result<()> {
    if points.is_empty() {
        Err(Error::InvalidInput("empty test set".into()))
    } else {
        Ok(())
    }
}

/// `e_f(q) = |f(q) - f*(q)|`.
pub fn field_error(
    model: &dyn VectorField,
    system: &dyn ConstraintSystem,
    test_points: &[DVector<f64>],
) -> Result<PointStats> {
    nonempty(test_points)?;
    let values = test_points
        .iter()
        .map(|q| Ok((model.eval(q)? - system.true_field(q)).norm()))
        .collect::<Result<Vec<_>>>()?;
    Ok(PointStats::from_values(values))
}

/// `e_nh(q) = |A(q) f(q)|`.
pub fn constraint_violation(
    model: &dyn VectorField,
    system: &dyn ConstraintSystem,
    test_points: &[DVector<f64>],
) -> Result<PointStats> {
    nonempty(test_points)?;
    let values = test_points
        .iter()
        .map(|q| Ok(system.constraint_matrix(q).residual(&model.eval(q)?).norm()))
        .collect::<Result<Vec<_>>>()?;
    Ok(PointStats::from_values(values))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanarError {
    pub per_time: Vec<f64>,
    pub mean: f64,
    pub final_value: f64,
}

/// Contact-point distance `sqrt((x - x')^2 + (y - y')^2)` at every step.
pub fn planar_error(traj_true: &Trajectory, traj_model: &Trajectory) -> Result<PlanarError> {
    if traj_true.times != traj_model.times || traj_true.is_empty() {
        return Err(Error::InvalidInput(format!(
            "trajectories '{}' and '{}' are on different time grids",
            traj_true.field_label, traj_model.field_label
        )));
    }
    if traj_true.states[0].len() < 2 || traj_model.states[0].len() < 2 {
        return Err(Error::InvalidInput(
            "planar error needs at least two coordinates".into(),
        ));
    }
    let per_time: Vec<f64> = traj_true
        .states
        .iter()
        .zip(&traj_model.states)
        .map(|(a, b)| (a[0] - b[0]).hypot(a[1] - b[1]))
        .collect();
    let mean = per_time.iter().sum::<f64>() / per_time.len() as f64;
    let final_value = *per_time.last().unwrap();
    Ok(PlanarError {
        per_time,
        mean,
        final_value,
    })
}

fn default_test_ic() -> Vec<f64> {
    vec![0.0, 0.0, 0.2, 0.1]
}
fn default_eval_dt() -> f64 {
    0.05
}
fn default_eval_horizon() -> f64 {
    25.0
}

/// Held-out test set and rollout settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    /// Test states are taken along the true trajectory from this state.
    #[serde(default = "default_test_ic")]
    pub test_initial_condition: Vec<f64>,
    /// All models are rolled out from this state for the planar error.
    #[serde(default = "default_test_ic")]
    pub rollout_initial_condition: Vec<f64>,
    #[serde(default = "default_eval_dt")]
    pub dt: f64,
    #[serde(default = "default_eval_horizon")]
    pub horizon: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            test_initial_condition: default_test_ic(),
            rollout_initial_condition: default_test_ic(),
            dt: default_eval_dt(),
            horizon: default_eval_horizon(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self, ambient_dim: usize) -> Result<()> {
        for (name, ic) in [
            ("test_initial_condition", &self.test_initial_condition),
            ("rollout_initial_condition", &self.rollout_initial_condition),
        ] {
            if ic.len() != ambient_dim {
                return Err(Error::Config(format!(
                    "evaluation: {name} has length {}, system dimension is {ambient_dim}",
                    ic.len()
                )));
            }
        }
        if !(self.dt > 0.0 && self.horizon >= self.dt) {
            return Err(Error::Config("evaluation: need dt > 0 and horizon >= dt".into()));
        }
        Ok(())
    }

    /// Test states along the held-out true trajectory.
    pub fn test_trajectory(&self, system: &dyn ConstraintSystem) -> Result<Trajectory> {
        integrate_true(
            system,
            &DVector::from_column_slice(&self.test_initial_condition),
            self.dt,
            self.horizon,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMeta {
    pub seed: u64,
    pub test_set: String,
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model_label: String,
    pub mean_field_error: f64,
    pub mean_constraint_violation: f64,
    pub max_constraint_violation: f64,
    pub mean_planar_error: f64,
    pub final_planar_error: f64,
    pub eval_meta: EvalMeta,
}

/// Everything computed for one model.
#[derive(Debug, Clone)]
pub struct ModelEvaluation {
    pub report: MetricsReport,
    pub field_error: PointStats,
    pub constraint_violation: PointStats,
    pub rollout: Trajectory,
    pub planar_error: PlanarError,
}

/// Metrics for a set of models plus the series behind the figures.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub test_times: Vec<f64>,
    pub reference: Trajectory,
    pub models: Vec<ModelEvaluation>,
}

impl Evaluation {
    pub fn reports(&self) -> Vec<MetricsReport> {
        self.models.iter().map(|m| m.report.clone()).collect()
    }

    pub fn report(&self, label: &str) -> Option<&MetricsReport> {
        self.models.iter().map(|m| &m.report).find(|r| r.model_label == label)
    }
}

/// Evaluate every model on the held-out test set and by rollout.
pub fn build_report(
    models: &[(&str, &dyn VectorField)],
    system: &dyn ConstraintSystem,
    eval: &EvalConfig,
    seed: u64,
) -> Result<Evaluation> {
    if models.is_empty() {
        return Err(Error::InvalidInput("no models to evaluate".into()));
    }
    eval.validate(system.ambient_dim())?;
    let test = eval.test_trajectory(system)?;
    let reference = integrate_true(
        system,
        &DVector::from_column_slice(&eval.rollout_initial_condition),
        eval.dt,
        eval.horizon,
    )?;
    let q0 = DVector::from_column_slice(&eval.rollout_initial_condition);
    let test_set = format!(
        "{} states along the true trajectory from {:?}, dt {}, horizon {}",
        test.len(),
        eval.test_initial_condition,
        eval.dt,
        eval.horizon
    );

    let mut out = Vec::with_capacity(models.len());
    for &(label, model) in models {
        let fe = field_error(model, system, &test.states)?;
        let cv = constraint_violation(model, system, &test.states)?;
        let rollout = integrate(|q| model.eval(q), &q0, eval.dt, eval.horizon, label)?;
        let pe = planar_error(&reference, &rollout)?;
        let report = MetricsReport {
            model_label: label.to_string(),
            mean_field_error: fe.mean,
            mean_constraint_violation: cv.mean,
            max_constraint_violation: cv.max,
            mean_planar_error: pe.mean,
            final_planar_error: pe.final_value,
            eval_meta: EvalMeta {
                seed,
                test_set: test_set.clone(),
            },
        };
        out.push(ModelEvaluation {
            report,
            field_error: fe,
            constraint_violation: cv,
            rollout,
            planar_error: pe,
        });
    }
    Ok(Evaluation {
        test_times: test.times,
        reference,
        models: out,
    })
}

/// Render the reports as a metrics-by-model table.
pub fn format_table(reports: &[MetricsReport]) -> String {
    let mut s = format!("{:<20}", "Metric");
    for r in reports {
        s.push_str(&format!("{:>16}", r.model_label));
    }
    s.push('\n');
    type Row = (&'static str, fn(&MetricsReport) -> f64);
    let rows: [Row; 5] = [
        ("Mean field err.", |r| r.mean_field_error),
        ("Mean constr. viol.", |r| r.mean_constraint_violation),
        ("Max constr. viol.", |r| r.max_constraint_violation),
        ("Mean planar err.", |r| r.mean_planar_error),
        ("Final planar err.", |r| r.final_planar_error),
    ];
    for (name, get) in rows {
        s.push_str(&format!("{name:<20}"));
        for r in reports {
            s.push_str(&format!("{:>16.6e}", get(r)));
        }
        s.push('\n');
    }
    s
}

fn default_sweep_sizes() -> Vec<usize> {
    vec![20, 40, 80, 160]
}
fn default_sweep_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3, 4]
}
fn default_grid_points() -> usize {
    200
}
fn default_sweep_hp() -> Vec<KernelHyperparams> {
    vec![
        KernelHyperparams {
            signal_variance: 1.0,
            length_scales: vec![1.5, 1.5],
            noise_variance: 1e-6,
        };
        2
    ]
}

/// Settings for the sample-size consistency experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Strictly increasing training-set sizes.
    #[serde(default = "default_sweep_sizes")]
    pub sample_sizes: Vec<usize>,
    #[serde(default = "default_sweep_seeds")]
    pub seeds: Vec<u64>,
    /// Data generation template; `n_train` and `seed` are set per cell.
    /// Observation noise defaults to zero here.
    #[serde(default = "default_sweep_data")]
    pub data: DataGenConfig,
    #[serde(default = "default_sweep_kind")]
    pub kind: KernelKind,
    /// Fixed hyperparameters, one set per channel of `kind`.
    #[serde(default = "default_sweep_hp")]
    pub hyperparams: Vec<KernelHyperparams>,
    #[serde(default)]
    pub evaluation: EvalConfig,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

fn default_sweep_kind() -> KernelKind {
    KernelKind::AdaptedCoordinates
}

fn default_sweep_data() -> DataGenConfig {
    DataGenConfig {
        sigma_obs: 0.0,
        ..DataGenConfig::default()
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            sample_sizes: default_sweep_sizes(),
            seeds: default_sweep_seeds(),
            data: default_sweep_data(),
            kind: default_sweep_kind(),
            hyperparams: default_sweep_hp(),
            evaluation: EvalConfig::default(),
            grid_points: default_grid_points(),
        }
    }
}

impl SweepConfig {
    /// The fixed test grid: evenly strided states along the test trajectory.
    pub fn test_grid(&self, system: &dyn ConstraintSystem) -> Result<Vec<DVector<f64>>> {
        let traj = self.evaluation.test_trajectory(system)?;
        let count = self.grid_points.min(traj.len());
        Ok(uniform_stride_indices(traj.len(), count)
            .into_iter()
            .map(|i| traj.states[i].clone())
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_train: usize,
    pub seed: u64,
    pub sup_error: f64,
}

/// Sup-norm field error on a fixed grid for every `(N, seed)` cell.
pub fn consistency_sweep(
    system: &System,
    sample_sizes: &[usize],
    seeds: &[u64],
    cfg: &SweepConfig,
) -> Result<Vec<SweepRow>> {
    if sample_sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("sample sizes must be strictly increasing".into()));
    }
    let grid = cfg.test_grid(system)?;
    let dims = ActiveDims::for_system(system);
    let mut rows = Vec::with_capacity(sample_sizes.len() * seeds.len());
    for &seed in seeds {
        for &n_train in sample_sizes {
            let data_cfg = DataGenConfig {
                n_train,
                seed,
                ..cfg.data.clone()
            };
            let data = generate_dataset(system, &data_cfg)?;
            let model = fit_vector_gp(&data, cfg.kind, system, &cfg.hyperparams, &dims)?;
            let sup_error = field_error(&model, system, &grid)?.max;
            rows.push(SweepRow {
                n_train,
                seed,
                sup_error,
            });
        }
    }
    Ok(rows)
}

//! Fixed-step trajectory integration and training-data generation.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::regression::{Dataset, DatasetMeta};
use crate::rng::GaussianStream;
use crate::system::ConstraintSystem;
use crate::{Error, Result};

/// States on a uniform time grid (the final step may be shorter so the
/// grid lands exactly on the horizon).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub field_label: String,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory has at least the initial state")
    }
}

fn rk4_step<F>(field: &mut F, q: &DVector<f64>, h: f64) -> Result<DVector<f64>>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    let k1 = field(q)?;
    let k2 = field(&(q + &k1 * (0.5 * h)))?;
    let k3 = field(&(q + &k2 * (0.5 * h)))?;
    let k4 = field(&(q + &k3 * h))?;
    Ok(q + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// Classical RK4 from `t = 0` to `t_end` with step `dt`.
pub fn integrate<F>(mut field: F, q0: &DVector<f64>, dt: f64, t_end: f64, label: &str) -> Result<Trajectory>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    if !(t_end >= dt && t_end.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "horizon {t_end} must be at least one step {dt}"
        )));
    }
    if !q0.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput("initial state is not finite".into()));
    }
    let ratio = t_end / dt;
    let full_steps = (ratio + 1e-9).floor() as usize;
    let remainder = t_end - full_steps as f64 * dt;
    let partial = remainder > 1e-9 * dt;

    let capacity = full_steps + 1 + usize::from(partial);
    let mut times = Vec::with_capacity(capacity);
    let mut states = Vec::with_capacity(capacity);
    times.push(0.0);
    states.push(q0.clone());

    let mut step = |q: &DVector<f64>, h: f64, t_prev: f64| -> Result<DVector<f64>> {
        let next = rk4_step(&mut field, q, h)?;
        if next.iter().all(|v| v.is_finite()) {
            Ok(next)
        } else {
            Err(Error::Divergence {
                last_valid_time: t_prev,
            })
        }
    };
    for i in 1..=full_steps {
        let q = step(states.last().unwrap(), dt, times[i - 1])?;
        times.push(i as f64 * dt);
        states.push(q);
    }
    if partial {
        let q = step(states.last().unwrap(), remainder, *times.last().unwrap())?;
        times.push(t_end);
        states.push(q);
    }
    Ok(Trajectory {
        times,
        states,
        field_label: label.to_string(),
    })
}

/// Integrate the system's true field.
pub fn integrate_true(system: &dyn ConstraintSystem, q0: &DVector<f64>, dt: f64, t_end: f64) -> Result<Trajectory> {
    integrate(|q| Ok(system.true_field(q)), q0, dt, t_end, "true")
}

/// Integrate the system's nominal field.
pub fn integrate_nominal(system: &dyn ConstraintSystem, q0: &DVector<f64>, dt: f64, t_end: f64) -> Result<Trajectory> {
    integrate(|q| Ok(system.nominal_field(q)), q0, dt, t_end, "nominal")
}

fn default_initial_conditions() -> Vec<Vec<f64>> {
    vec![
        vec![0.0, 0.0, 0.2, 0.1],
        vec![0.0, 0.0, -0.6, 0.4],
        vec![0.0, 0.0, 0.8, -0.5],
    ]
}
fn default_dt() -> f64 {
    0.05
}
fn default_horizon() -> f64 {
    25.0
}
fn default_n_train() -> usize {
    120
}
fn default_sigma_state() -> f64 {
    0.05
}
fn default_sigma_obs() -> f64 {
    0.03
}

/// How training data is sampled from the true dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataGenConfig {
    #[serde(default = "default_initial_conditions")]
    pub initial_conditions: Vec<Vec<f64>>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Integration horizon of each data trajectory before subsampling.
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_n_train")]
    pub n_train: usize,
    /// Std of the Gaussian perturbation added to the kernel's active coordinates.
    #[serde(default = "default_sigma_state")]
    pub sigma_state: f64,
    /// Std of the observation noise on every ambient component.
    #[serde(default = "default_sigma_obs")]
    pub sigma_obs: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for DataGenConfig {
    fn default() -> Self {
        Self {
            initial_conditions: default_initial_conditions(),
            dt: default_dt(),
            horizon: default_horizon(),
            n_train: default_n_train(),
            sigma_state: default_sigma_state(),
            sigma_obs: default_sigma_obs(),
            seed: 0,
        }
    }
}

impl DataGenConfig {
    pub fn validate(&self, ambient_dim: usize) -> Result<()> {
        if self.initial_conditions.is_empty() {
            return Err(Error::Config("data: at least one initial condition is required".into()));
        }
        if let Some(ic) = self.initial_conditions.iter().find(|ic| ic.len() != ambient_dim) {
            return Err(Error::Config(format!(
                "data: initial condition {ic:?} has length {}, system dimension is {ambient_dim}",
                ic.len()
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("data: dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return Err(Error::Config(format!(
                "data: horizon must be at least dt, got {}",
                self.horizon
            )));
        }
        if self.n_train == 0 {
            return Err(Error::Config("data: n_train must be at least 1".into()));
        }
        if !(self.sigma_state >= 0.0 && self.sigma_obs >= 0.0) {
            return Err(Error::Config("data: noise levels must be non-negative".into()));
        }
        Ok(())
    }
}

/// Indices `floor(j * total / count)` for `j = 0..count`.
pub fn uniform_stride_indices(total: usize, count: usize) -> Vec<usize> {
    (0..count).map(|j| j * total / count).collect()
}

/// Sample noisy training pairs along true trajectories.
///
/// 1. integrate the true field from every initial condition;
/// 2. concatenate and subsample by uniform stride to exactly `n_train` states;
/// 3. perturb the active coordinates by `N(0, sigma_state^2)`;
/// 4. observe `y_i = f*(q_i) + N(0, sigma_obs^2 I)`.
///
/// Random draws are taken state noise first (sample-major, active dims in
/// order), then observation noise (sample-major, all components).
pub fn generate_dataset(system: &dyn ConstraintSystem, cfg: &DataGenConfig) -> Result<Dataset> {
    let n = system.ambient_dim();
    cfg.validate(n)?;
    let mut pool: Vec<(f64, DVector<f64>)> = Vec::new();
    for ic in &cfg.initial_conditions {
        let traj = integrate_true(system, &DVector::from_column_slice(ic), cfg.dt, cfg.horizon)?;
        pool.extend(traj.times.into_iter().zip(traj.states));
    }
    if cfg.n_train > pool.len() {
        return Err(Error::InsufficientData {
            requested: cfg.n_train,
            available: pool.len(),
        });
    }
    let picked: Vec<(f64, DVector<f64>)> = uniform_stride_indices(pool.len(), cfg.n_train)
        .into_iter()
        .map(|i| pool[i].clone())
        .collect();

    let mut noise = GaussianStream::new(cfg.seed);
    let active = system.default_active_dims();
    let mut times = Vec::with_capacity(cfg.n_train);
    let mut inputs = Vec::with_capacity(cfg.n_train);
    for (t, mut q) in picked {
        for &d in &active {
            q[d] += noise.normal(cfg.sigma_state);
        }
        times.push(t);
        inputs.push(q);
    }
    let outputs = inputs
        .iter()
        .map(|q| {
            let mut y = system.true_field(q);
            for v in y.iter_mut() {
                *v += noise.normal(cfg.sigma_obs);
            }
            y
        })
        .collect();
    let dataset = Dataset {
        inputs,
        outputs,
        times,
        meta: DatasetMeta {
            seed: cfg.seed,
            sigma_state: cfg.sigma_state,
            sigma_obs: cfg.sigma_obs,
            source: format!(
                "{}: {} true trajectories, dt {}, horizon {}, stride-subsampled to {}",
                system.name(),
                cfg.initial_conditions.len(),
                cfg.dt,
                cfg.horizon,
                cfg.n_train
            ),
            config_hash: String::new(),
        },
    };
    dataset.validate()?;
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{DiskParams, VerticalRollingDisk, DISK_PHI, DISK_THETA, DISK_X, DISK_Y};

    fn disk() -> VerticalRollingDisk {
        VerticalRollingDisk::new(DiskParams::default()).unwrap()
    }

    #[test]
    fn zero_field_is_constant() {
        let q0 = DVector::from_vec(vec![1.0, -2.0, 0.3]);
        let t = integrate(|q| Ok(DVector::zeros(q.len())), &q0, 0.1, 2.0, "zero").unwrap();
        assert_eq!(t.len(), 21);
        assert!(t.states.iter().all(|q| q == &q0));
    }

    #[test]
    fn exponential_decay_matches_analytic() {
        let q0 = DVector::from_vec(vec![1.0]);
        let t = integrate(|q| Ok(-q), &q0, 0.05, 1.0, "decay").unwrap();
        assert_eq!(t.len(), 21);
        assert!((t.times[20] - 1.0).abs() < 1e-15);
        assert!((t.final_state()[0] - (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn partial_final_step_lands_on_horizon() {
        let q0 = DVector::from_vec(vec![1.0]);
        let t = integrate(|q| Ok(-q), &q0, 0.3, 1.0, "decay").unwrap();
        assert_eq!(t.times, vec![0.0, 0.3, 0.6, 0.8999999999999999, 1.0]);
        assert!((t.final_state()[0] - (-1.0f64).exp()).abs() < 1e-4);
    }

    #[test]
    fn divergence_is_reported_with_last_valid_time() {
        let q0 = DVector::from_vec(vec![1.0]);
        let err = integrate(|q| Ok(q.map(|v| v * v * 1e30)), &q0, 0.1, 5.0, "blowup").unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }), "{err}");
        assert!(integrate(|q| Ok(-q), &q0, 0.0, 1.0, "bad").is_err());
        assert!(integrate(|q| Ok(-q), &q0, 0.5, 0.1, "bad").is_err());
    }

    #[test]
    fn rk4_order_on_disk() {
        let d = disk();
        let q0 = DVector::from_vec(vec![0.0, 0.0, 0.2, 0.1]);
        let end = |dt: f64| integrate_true(&d, &q0, dt, 5.0).unwrap().final_state().clone();
        let (a, b, c) = (end(0.1), end(0.05), end(0.025));
        let order = ((&a - &b).norm() / (&b - &c).norm()).log2();
        assert!(order >= 3.5, "observed order {order}");
    }

    #[test]
    fn true_trajectories_roll_without_slipping() {
        let d = disk();
        let q0 = DVector::from_vec(vec![0.0, 0.0, -0.6, 0.4]);
        let traj = integrate_true(&d, &q0, 0.05, 25.0).unwrap();
        for q in &traj.states {
            let v = d.true_field(q);
            let r = d.params.radius;
            assert!((v[DISK_X] - r * q[DISK_PHI].cos() * v[DISK_THETA]).abs() <= 1e-12);
            assert!((v[DISK_Y] - r * q[DISK_PHI].sin() * v[DISK_THETA]).abs() <= 1e-12);
        }
    }

    #[test]
    fn default_generation_has_120_finite_pairs() {
        let data = generate_dataset(&disk(), &DataGenConfig::default()).unwrap();
        assert_eq!(data.len(), 120);
        assert!(data
            .inputs
            .iter()
            .chain(&data.outputs)
            .all(|v| v.iter().all(|x| x.is_finite())));
        // generic observations leave the distribution
        let d = disk();
        let violated = data
            .inputs
            .iter()
            .zip(&data.outputs)
            .filter(|(q, y)| d.constraint_matrix(q).residual(y).norm() > 0.0)
            .count();
        assert_eq!(violated, 120);
    }

    #[test]
    fn noiseless_generation_is_admissible() {
        let cfg = DataGenConfig {
            sigma_state: 0.0,
            sigma_obs: 0.0,
            ..DataGenConfig::default()
        };
        let d = disk();
        let data = generate_dataset(&d, &cfg).unwrap();
        for (q, y) in data.inputs.iter().zip(&data.outputs) {
            assert_eq!(y, &d.true_field(q));
            assert!(d.constraint_matrix(q).residual(y).norm() <= 1e-14);
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let cfg = DataGenConfig {
            seed: 17,
            ..DataGenConfig::default()
        };
        let a = generate_dataset(&disk(), &cfg).unwrap();
        let b = generate_dataset(&disk(), &cfg).unwrap();
        assert_eq!(a, b);
        let c = generate_dataset(&disk(), &DataGenConfig { seed: 18, ..cfg }).unwrap();
        assert_ne!(a.outputs, c.outputs);
    }

    #[test]
    fn too_many_samples_is_an_error() {
        let cfg = DataGenConfig {
            horizon: 1.0,
            n_train: 1000,
            ..DataGenConfig::default()
        };
        assert!(matches!(
            generate_dataset(&disk(), &cfg),
            Err(Error::InsufficientData {
                requested: 1000,
                available: 63
            })
        ));
    }

    #[test]
    fn stride_indices() {
        assert_eq!(uniform_stride_indices(10, 5), vec![0, 2, 4, 6, 8]);
        assert_eq!(uniform_stride_indices(3, 3), vec![0, 1, 2]);
        let idx = uniform_stride_indices(1503, 120);
        assert_eq!(idx.len(), 120);
        assert!(idx.windows(2).all(|w| w[1] > w[0]));
    }
}

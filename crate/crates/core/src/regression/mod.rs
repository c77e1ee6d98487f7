//! Gaussian process posterior inference.
//!
//! All fits share one numerical core: factor `K + (sn2 + jitter) I` by
//! Cholesky and solve for the dual coefficients `alpha`, so the posterior
//! mean is `f(q) = sum_i K(q, q_i) alpha_i`.

mod model;
mod optimize;

pub use model::{
    fit_vector_gp, initial_hyperparams, nonholonomic_log_marginal_likelihood, optimize_nonholonomic_hyperparams,
    train_vector_gp, GpModel, KernelKind, LENGTH_SCALE_STARTS, MODEL_FORMAT,
};
pub use optimize::{default_init, nelder_mead, optimize_hyperparams, Minimum, NelderMeadOptions, DEFAULT_BUDGET};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::kernels::{ActiveDims, KernelHyperparams, SquaredExponential};
use crate::{Error, Result};

/// Relative jitter levels tried in turn, as multiples of the mean diagonal of `K`.
pub const JITTER_LADDER: [f64; 5] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

/// Training pairs `(q_i, y_i)` with ambient observations `y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<DVector<f64>>,
    pub outputs: Vec<DVector<f64>>,
    /// Time along the source trajectory each sample was taken from.
    pub times: Vec<f64>,
    pub meta: DatasetMeta,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub seed: u64,
    pub sigma_state: f64,
    pub sigma_obs: f64,
    pub source: String,
    #[serde(default)]
    pub config_hash: String,
}

impl Dataset {
    pub fn new(inputs: Vec<DVector<f64>>, outputs: Vec<DVector<f64>>, meta: DatasetMeta) -> Result<Self> {
        let times = vec![0.0; inputs.len()];
        let d = Self {
            inputs,
            outputs,
            times,
            meta,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.inputs.len();
        if n == 0 {
            return Err(Error::InvalidInput("dataset is empty".into()));
        }
        if self.outputs.len() != n || self.times.len() != n {
            return Err(Error::InvalidInput(format!(
                "dataset has {} inputs, {} outputs, {} times",
                n,
                self.outputs.len(),
                self.times.len()
            )));
        }
        let (qd, yd) = (self.inputs[0].len(), self.outputs[0].len());
        for (q, y) in self.inputs.iter().zip(&self.outputs) {
            if q.len() != qd || y.len() != yd {
                return Err(Error::InvalidInput("inconsistent sample dimensions".into()));
            }
            if !q.iter().chain(y.iter()).all(|v| v.is_finite()) {
                return Err(Error::InvalidInput("dataset has non-finite entries".into()));
            }
        }
        Ok(())
    }
}

/// Cholesky factor and dual coefficients of one fitted channel.
///
/// A channel is either scalar (`alpha` has one entry per training input) or
/// a stacked block solve (`n` entries per input).
#[derive(Debug, Clone)]
pub struct ChannelFit {
    pub hp: KernelHyperparams,
    pub(crate) kernel: SquaredExponential,
    pub(crate) chol: Cholesky<f64, Dyn>,
    pub alpha: DVector<f64>,
    /// Diagonal jitter added on top of the noise variance.
    pub jitter: f64,
}

impl ChannelFit {
    /// Lower-triangular `L` with `L L^T = K + (sn2 + jitter) I`.
    pub fn chol_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    fn from_gram(k: DMatrix<f64>, targets: &DVector<f64>, hp: &KernelHyperparams, dims: &ActiveDims) -> Result<Self> {
        let kernel = SquaredExponential::new(hp, dims)?;
        let (chol, jitter) = factor_with_jitter(k, hp.noise_variance)?;
        let alpha = chol.solve(targets);
        Ok(Self {
            hp: hp.clone(),
            kernel,
            chol,
            alpha,
            jitter,
        })
    }

    /// `-1/2 y^T alpha - sum log L_ii - m/2 log 2 pi` for the fitted targets.
    pub fn log_marginal_likelihood(&self, targets: &DVector<f64>) -> f64 {
        let m = targets.len() as f64;
        let log_det_half: f64 = self.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
        -0.5 * targets.dot(&self.alpha) - log_det_half - 0.5 * m * (2.0 * std::f64::consts::PI).ln()
    }
}

fn mean_diagonal(k: &DMatrix<f64>) -> f64 {
    let dim = k.nrows().max(1) as f64;
    let mean = k.trace() / dim;
    if mean > 0.0 && mean.is_finite() {
        mean
    } else {
        1.0
    }
}

/// Factor `K + (noise + jitter) I`, escalating the jitter along [`JITTER_LADDER`].
pub(crate) fn factor_with_jitter(k: DMatrix<f64>, noise: f64) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let scale = mean_diagonal(&k);
    for rel in JITTER_LADDER {
        let jitter = rel * scale;
        if let Some(chol) = factor_fixed(k.clone(), noise, jitter) {
            return Ok((chol, jitter));
        }
    }
    Err(Error::IllConditioned {
        jitter: JITTER_LADDER[JITTER_LADDER.len() - 1] * scale,
    })
}

pub(crate) fn factor_fixed(mut k: DMatrix<f64>, noise: f64, jitter: f64) -> Option<Cholesky<f64, Dyn>> {
    let add = noise + jitter;
    for i in 0..k.nrows() {
        k[(i, i)] += add;
    }
    k.cholesky()
}

fn check_targets(inputs: &[DVector<f64>], targets: &DVector<f64>) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::InvalidInput("no training inputs".into()));
    }
    if inputs.len() != targets.len() {
        return Err(Error::InvalidInput(format!(
            "{} inputs but {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    if !targets.iter().all(|t| t.is_finite()) {
        return Err(Error::InvalidInput("non-finite target".into()));
    }
    Ok(())
}

/// Single-output GP with zero prior mean.
#[derive(Debug, Clone)]
pub struct ScalarGp {
    pub inputs: Vec<DVector<f64>>,
    pub channel: ChannelFit,
}

impl ScalarGp {
    pub fn predict(&self, q: &DVector<f64>) -> f64 {
        predict_scalar(&self.channel, &self.inputs, q)
    }
}

pub(crate) fn predict_scalar(channel: &ChannelFit, inputs: &[DVector<f64>], q: &DVector<f64>) -> f64 {
    inputs
        .iter()
        .zip(channel.alpha.iter())
        .map(|(qi, a)| channel.kernel.eval(q, qi) * a)
        .sum()
}

fn check_dims(inputs: &[DVector<f64>], dims: &ActiveDims) -> Result<()> {
    let n = inputs[0].len();
    if inputs.iter().any(|q| q.len() != n) {
        return Err(Error::InvalidInput("training inputs have different lengths".into()));
    }
    ActiveDims::new(dims.indices().to_vec(), n).map(|_| ())
}

/// `alpha = (K + sn2 I)^{-1} y` for one scalar output channel.
pub fn fit_scalar_channel(
    inputs: &[DVector<f64>],
    targets: &DVector<f64>,
    hp: &KernelHyperparams,
    dims: &ActiveDims,
) -> Result<ScalarGp> {
    check_targets(inputs, targets)?;
    check_dims(inputs, dims)?;
    let kernel = SquaredExponential::new(hp, dims)?;
    let channel = ChannelFit::from_gram(kernel.gram(inputs), targets, hp, dims)?;
    Ok(ScalarGp {
        inputs: inputs.to_vec(),
        channel,
    })
}

/// Log evidence of one scalar channel, through its Cholesky factor.
pub fn log_marginal_likelihood(
    inputs: &[DVector<f64>],
    targets: &DVector<f64>,
    hp: &KernelHyperparams,
    dims: &ActiveDims,
) -> Result<f64> {
    let gp = fit_scalar_channel(inputs, targets, hp, dims)?;
    Ok(gp.channel.log_marginal_likelihood(targets))
}

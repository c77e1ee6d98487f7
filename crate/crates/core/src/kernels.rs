//! Scalar and matrix-valued kernels.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::geometry::Projector;
use crate::system::ConstraintSystem;
use crate::{Error, Result};

/// Hyperparameters of one scalar squared-exponential channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelHyperparams {
    pub signal_variance: f64,
    pub length_scales: Vec<f64>,
    pub noise_variance: f64,
}

impl KernelHyperparams {
    pub fn new(signal_variance: f64, length_scales: Vec<f64>, noise_variance: f64) -> Result<Self> {
        let hp = Self {
            signal_variance,
            length_scales,
            noise_variance,
        };
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.signal_variance) {
            return Err(Error::InvalidHyperparameter(format!(
                "signal variance must be positive, got {}",
                self.signal_variance
            )));
        }
        if self.length_scales.is_empty() {
            return Err(Error::InvalidHyperparameter("no length scales".into()));
        }
        if let Some(l) = self.length_scales.iter().find(|&&l| !positive(l)) {
            return Err(Error::InvalidHyperparameter(format!(
                "length scale must be positive, got {l}"
            )));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::InvalidHyperparameter(format!(
                "noise variance must be non-negative, got {}",
                self.noise_variance
            )));
        }
        Ok(())
    }

    /// `[ln sf2, ln l_1, .., ln l_d, ln sn2]`.
    pub fn to_log_params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.length_scales.len() + 2);
        v.push(self.signal_variance.ln());
        v.extend(self.length_scales.iter().map(|l| l.ln()));
        v.push(self.noise_variance.ln());
        v
    }

    pub fn from_log_params(p: &[f64]) -> Self {
        let d = p.len() - 2;
        Self {
            signal_variance: p[0].exp(),
            length_scales: p[1..=d].iter().map(|x| x.exp()).collect(),
            noise_variance: p[d + 1].exp(),
        }
    }
}

/// Input coordinates the scalar kernel acts on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActiveDims(Vec<usize>);

impl ActiveDims {
    pub fn new(indices: Vec<usize>, ambient_dim: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("active dims must not be empty".into()));
        }
        for (i, &d) in indices.iter().enumerate() {
            if d >= ambient_dim {
                return Err(Error::InvalidInput(format!(
                    "active dim {d} out of range for ambient dimension {ambient_dim}"
                )));
            }
            if indices[..i].contains(&d) {
                return Err(Error::InvalidInput(format!("active dim {d} repeated")));
            }
        }
        Ok(Self(indices))
    }

    pub fn for_system(system: &dyn ConstraintSystem) -> Self {
        Self(system.default_active_dims())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn check(&self, q: &DVector<f64>) -> Result<()> {
        match self.0.iter().find(|&&d| d >= q.len()) {
            Some(d) => Err(Error::InvalidInput(format!(
                "active dim {d} out of range for configuration of length {}",
                q.len()
            ))),
            None => Ok(()),
        }
    }
}

/// Squared-exponential kernel with one length scale per active dimension,
/// validated once so evaluation is infallible.
#[derive(Debug, Clone, PartialEq)]
pub struct SquaredExponential {
    signal_variance: f64,
    inv_sq_lengths: Vec<f64>,
    dims: ActiveDims,
}

impl SquaredExponential {
    pub fn new(hp: &KernelHyperparams, dims: &ActiveDims) -> Result<Self> {
        hp.validate()?;
        if hp.length_scales.len() != dims.len() {
            return Err(Error::InvalidHyperparameter(format!(
                "{} length scales for {} active dims",
                hp.length_scales.len(),
                dims.len()
            )));
        }
        Ok(Self {
            signal_variance: hp.signal_variance,
            inv_sq_lengths: hp.length_scales.iter().map(|l| 1.0 / (l * l)).collect(),
            dims: dims.clone(),
        })
    }

    pub fn signal_variance(&self) -> f64 {
        self.signal_variance
    }

    pub fn dims(&self) -> &ActiveDims {
        &self.dims
    }

    pub fn eval(&self, q: &DVector<f64>, q2: &DVector<f64>) -> f64 {
        let r2: f64 = self
            .dims
            .indices()
            .iter()
            .zip(&self.inv_sq_lengths)
            .map(|(&d, w)| {
                let diff = q[d] - q2[d];
                diff * diff * w
            })
            .sum();
        self.signal_variance * (-0.5 * r2).exp()
    }

    /// `K[i, j] = k(points[i], points[j])`, without noise.
    pub fn gram(&self, points: &[DVector<f64>]) -> DMatrix<f64> {
        let n = points.len();
        let mut k = DMatrix::zeros(n, n);
        for j in 0..n {
            k[(j, j)] = self.signal_variance;
            for i in (j + 1)..n {
                let v = self.eval(&points[i], &points[j]);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }
}

/// `sf2 * exp(-1/2 sum_d (q_d - q2_d)^2 / l_d^2)` over the active dims.
pub fn se_ard_kernel(q: &DVector<f64>, q2: &DVector<f64>, hp: &KernelHyperparams, dims: &ActiveDims) -> Result<f64> {
    dims.check(q)?;
    dims.check(q2)?;
    Ok(SquaredExponential::new(hp, dims)?.eval(q, q2))
}

/// A kernel returning `n x n` blocks.
pub trait MatrixKernel {
    fn output_dim(&self) -> usize;

    fn eval(&self, q: &DVector<f64>, q2: &DVector<f64>) -> Result<DMatrix<f64>>;
}

impl<F> MatrixKernel for (usize, F)
where
    F: Fn(&DVector<f64>, &DVector<f64>) -> Result<DMatrix<f64>>,
{
    fn output_dim(&self) -> usize {
        self.0
    }

    fn eval(&self, q: &DVector<f64>, q2: &DVector<f64>) -> Result<DMatrix<f64>> {
        (self.1)(q, q2)
    }
}

/// `k(q, q') I_n`.
#[derive(Debug, Clone)]
pub struct StandardKernel {
    scalar: SquaredExponential,
    n: usize,
}

impl StandardKernel {
    pub fn new(scalar: SquaredExponential, n: usize) -> Self {
        Self { scalar, n }
    }
}

impl MatrixKernel for StandardKernel {
    fn output_dim(&self) -> usize {
        self.n
    }

    fn eval(&self, q: &DVector<f64>, q2: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(DMatrix::identity(self.n, self.n) * self.scalar.eval(q, q2))
    }
}

pub fn standard_matrix_kernel(
    q: &DVector<f64>,
    q2: &DVector<f64>,
    hp: &KernelHyperparams,
    dims: &ActiveDims,
    n: usize,
) -> Result<DMatrix<f64>> {
    Ok(DMatrix::identity(n, n) * se_ard_kernel(q, q2, hp, dims)?)
}

/// `P(q) k(q, q') P(q')`: every kernel section takes values in `ker A(q)`.
pub struct NonholonomicKernel<'a> {
    scalar: SquaredExponential,
    system: &'a dyn ConstraintSystem,
}

impl<'a> NonholonomicKernel<'a> {
    pub fn new(scalar: SquaredExponential, system: &'a dyn ConstraintSystem) -> Self {
        Self { scalar, system }
    }

    pub fn scalar(&self) -> &SquaredExponential {
        &self.scalar
    }

    /// Block for already-computed projectors.
    pub fn eval_with_projectors(
        &self,
        q: &DVector<f64>,
        p: &Projector,
        q2: &DVector<f64>,
        p2: &Projector,
    ) -> DMatrix<f64> {
        p.matrix() * p2.matrix() * self.scalar.eval(q, q2)
    }

    /// Block Gram matrix, computing each projector once per point.
    pub fn gram(&self, points: &[DVector<f64>]) -> Result<DMatrix<f64>> {
        if points.is_empty() {
            return Err(Error::InvalidInput("gram matrix of an empty point set".into()));
        }
        let projectors = points
            .iter()
            .map(|q| self.system.projector(q))
            .collect::<Result<Vec<_>>>()?;
        let n = self.system.ambient_dim();
        let big = points.len() * n;
        let mut g = DMatrix::zeros(big, big);
        for j in 0..points.len() {
            for i in j..points.len() {
                let block = self.eval_with_projectors(&points[i], &projectors[i], &points[j], &projectors[j]);
                g.view_mut((i * n, j * n), (n, n)).copy_from(&block);
                if i != j {
                    g.view_mut((j * n, i * n), (n, n)).copy_from(&block.transpose());
                }
            }
        }
        Ok(g)
    }
}

impl MatrixKernel for NonholonomicKernel<'_> {
    fn output_dim(&self) -> usize {
        self.system.ambient_dim()
    }

    fn eval(&self, q: &DVector<f64>, q2: &DVector<f64>) -> Result<DMatrix<f64>> {
        let p = self.system.projector(q)?;
        let p2 = self.system.projector(q2)?;
        Ok(self.eval_with_projectors(q, &p, q2, &p2))
    }
}

pub fn nonholonomic_kernel(
    q: &DVector<f64>,
    q2: &DVector<f64>,
    hp: &KernelHyperparams,
    dims: &ActiveDims,
    system: &dyn ConstraintSystem,
) -> Result<DMatrix<f64>> {
    dims.check(q)?;
    dims.check(q2)?;
    NonholonomicKernel::new(SquaredExponential::new(hp, dims)?, system).eval(q, q2)
}

/// Dense `(N n) x (N n)` block matrix with block `(i, j) = K(q_i, q_j)`.
pub fn gram_matrix(points: &[DVector<f64>], kernel: &dyn MatrixKernel) -> Result<DMatrix<f64>> {
    if points.is_empty() {
        return Err(Error::InvalidInput("gram matrix of an empty point set".into()));
    }
    let n = kernel.output_dim();
    let big = points.len() * n;
    let mut g = DMatrix::zeros(big, big);
    for (i, qi) in points.iter().enumerate() {
        for (j, qj) in points.iter().enumerate() {
            let block = kernel.eval(qi, qj)?;
            if block.shape() != (n, n) {
                return Err(Error::InvalidInput(format!(
                    "kernel block has shape {:?}, expected ({n}, {n})",
                    block.shape()
                )));
            }
            g.view_mut((i * n, j * n), (n, n)).copy_from(&block);
        }
    }
    Ok(g)
}

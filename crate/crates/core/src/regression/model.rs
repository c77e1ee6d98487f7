use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::optimize::{default_init, maximize_evidence};
use super::{factor_fixed, log_marginal_likelihood, optimize_hyperparams, predict_scalar, ChannelFit, Dataset};
use crate::geometry::{adapted_pseudoinverse, Projector};
use crate::kernels::{ActiveDims, KernelHyperparams, NonholonomicKernel, SquaredExponential};
use crate::system::{ConstraintSystem, System};
use crate::{Error, Result};

pub const MODEL_FORMAT: &str = "nhgp-model/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// `k I_n`: independent scalar GPs on each ambient output.
    StandardAmbient,
    /// One stacked solve with the block Gram of `P(q) k P(q')`.
    NonholonomicAmbient,
    /// Scalar GPs on `nu_i = B(q_i)^+ y_i`, mapped back through `B(q)`.
    AdaptedCoordinates,
}

impl KernelKind {
    /// Number of hyperparameter sets the kind expects.
    pub fn num_channels(self, system: &dyn ConstraintSystem) -> usize {
        match self {
            KernelKind::StandardAmbient => system.ambient_dim(),
            KernelKind::NonholonomicAmbient => 1,
            KernelKind::AdaptedCoordinates => system.ambient_dim() - system.num_constraints(),
        }
    }

    pub fn is_nonholonomic(self) -> bool {
        !matches!(self, KernelKind::StandardAmbient)
    }
}

/// A fitted vector-valued GP. Immutable once built.
#[derive(Debug, Clone)]
pub struct GpModel {
    kind: KernelKind,
    system: System,
    dims: ActiveDims,
    inputs: Vec<DVector<f64>>,
    channels: Vec<ChannelFit>,
    /// `P(q_i)`, cached for the ambient nonholonomic kind.
    projectors: Vec<Projector>,
    seed: Option<u64>,
}

/// Per-channel scalar targets for the kind, or the stacked `vec(Y)` for the
/// ambient nonholonomic kind.
pub(crate) fn channel_targets(
    data: &Dataset,
    kind: KernelKind,
    system: &dyn ConstraintSystem,
) -> Result<Vec<DVector<f64>>> {
    let n = system.ambient_dim();
    if data.outputs[0].len() != n || data.inputs[0].len() != n {
        return Err(Error::InvalidInput(format!(
            "dataset dimension {} does not match system dimension {n}",
            data.outputs[0].len()
        )));
    }
    let rows: Vec<DVector<f64>> = match kind {
        KernelKind::StandardAmbient => data.outputs.clone(),
        KernelKind::AdaptedCoordinates => data
            .inputs
            .iter()
            .zip(&data.outputs)
            .map(|(q, y)| Ok(adapted_pseudoinverse(&system.basis(q))? * y))
            .collect::<Result<_>>()?,
        KernelKind::NonholonomicAmbient => {
            let stacked = DVector::from_iterator(data.len() * n, data.outputs.iter().flat_map(|y| y.iter().copied()));
            return Ok(vec![stacked]);
        }
    };
    let m = rows[0].len();
    Ok((0..m)
        .map(|c| DVector::from_iterator(rows.len(), rows.iter().map(|r| r[c])))
        .collect())
}

fn nh_gram(kernel: &SquaredExponential, system: &System, inputs: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    NonholonomicKernel::new(kernel.clone(), system).gram(inputs)
}

/// Fit a vector-valued GP of the given kind.
///
/// `hp_per_channel` holds one entry per output channel for the standard
/// kind (`n`), one per adapted coordinate (`n - k`), or a single entry for
/// the ambient nonholonomic kind.
pub fn fit_vector_gp(
    data: &Dataset,
    kind: KernelKind,
    system: &System,
    hp_per_channel: &[KernelHyperparams],
    dims: &ActiveDims,
) -> Result<GpModel> {
    data.validate()?;
    let expected = kind.num_channels(system);
    if hp_per_channel.len() != expected {
        return Err(Error::InvalidInput(format!(
            "{kind:?} expects {expected} hyperparameter sets, got {}",
            hp_per_channel.len()
        )));
    }
    ActiveDims::new(dims.indices().to_vec(), system.ambient_dim())?;
    let targets = channel_targets(data, kind, system)?;
    let inputs = data.inputs.clone();

    let mut channels = Vec::with_capacity(expected);
    let mut projectors = Vec::new();
    for (hp, y) in hp_per_channel.iter().zip(&targets) {
        let kernel = SquaredExponential::new(hp, dims)?;
        let gram = match kind {
            KernelKind::NonholonomicAmbient => nh_gram(&kernel, system, &inputs)?,
            _ => kernel.gram(&inputs),
        };
        channels.push(ChannelFit::from_gram(gram, y, hp, dims)?);
    }
    if kind == KernelKind::NonholonomicAmbient {
        projectors = inputs.iter().map(|q| system.projector(q)).collect::<Result<_>>()?;
    }
    Ok(GpModel {
        kind,
        system: *system,
        dims: dims.clone(),
        inputs,
        channels,
        projectors,
        seed: Some(data.meta.seed),
    })
}

/// Log evidence of the ambient nonholonomic model, `log p(vec(Y) | hp)`.
pub fn nonholonomic_log_marginal_likelihood(
    data: &Dataset,
    system: &System,
    hp: &KernelHyperparams,
    dims: &ActiveDims,
) -> Result<f64> {
    let y = channel_targets(data, KernelKind::NonholonomicAmbient, system)?.remove(0);
    let kernel = SquaredExponential::new(hp, dims)?;
    let fit = ChannelFit::from_gram(nh_gram(&kernel, system, &data.inputs)?, &y, hp, dims)?;
    Ok(fit.log_marginal_likelihood(&y))
}

/// Maximize the ambient nonholonomic evidence over one shared hyperparameter set.
pub fn optimize_nonholonomic_hyperparams(
    data: &Dataset,
    system: &System,
    dims: &ActiveDims,
    init: &KernelHyperparams,
    budget: usize,
) -> Result<KernelHyperparams> {
    maximize_evidence(
        |hp| nonholonomic_log_marginal_likelihood(data, system, hp, dims),
        init,
        budget,
    )
}

/// Heuristic initial hyperparameters for every channel of the kind.
pub fn initial_hyperparams(
    data: &Dataset,
    kind: KernelKind,
    system: &System,
    dims: &ActiveDims,
) -> Result<Vec<KernelHyperparams>> {
    let targets = channel_targets(data, kind, system)?;
    Ok(match kind {
        KernelKind::NonholonomicAmbient => {
            // pooled over all outputs; inputs only feed the length scales
            let mut hp = default_init(&data.inputs, &targets[0], dims);
            let pooled = &targets[0];
            let mean = pooled.mean();
            let var = pooled.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / pooled.len() as f64;
            hp.signal_variance = if var > 1e-12 { var } else { 1.0 };
            hp.noise_variance = 0.01 * hp.signal_variance;
            vec![hp]
        }
        _ => targets.iter().map(|y| default_init(&data.inputs, y, dims)).collect(),
    })
}

/// Length-scale factors applied to the heuristic init when training without
/// an explicit init. The half-range heuristic alone often settles in a
/// long-length-scale optimum that explains real structure as noise.
pub const LENGTH_SCALE_STARTS: [f64; 3] = [1.0, 0.25, 0.0625];

fn start_points(init: &KernelHyperparams, multi_start: bool) -> Vec<KernelHyperparams> {
    if !multi_start {
        return vec![init.clone()];
    }
    LENGTH_SCALE_STARTS
        .iter()
        .map(|f| KernelHyperparams {
            length_scales: init.length_scales.iter().map(|l| l * f).collect(),
            ..init.clone()
        })
        .collect()
}

/// Run `optimize` from every start and keep the highest evidence; ties go
/// to the earlier start.
fn best_of<O, E>(starts: &[KernelHyperparams], optimize: O, evidence: E) -> Result<KernelHyperparams>
where
    O: Fn(&KernelHyperparams) -> Result<KernelHyperparams>,
    E: Fn(&KernelHyperparams) -> Result<f64>,
{
    let mut best: Option<(f64, KernelHyperparams)> = None;
    let mut last_err = None;
    for start in starts {
        match optimize(start).and_then(|hp| Ok((evidence(&hp)?, hp))) {
            Ok((lml, hp)) => {
                if best.as_ref().is_none_or(|(b, _)| lml > *b) {
                    best = Some((lml, hp));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match (best, last_err) {
        (Some((_, hp)), _) => Ok(hp),
        (None, Some(e)) => Err(e),
        (None, None) => Err(Error::OptimizationFailed("no starting points".into())),
    }
}

/// Optimize each channel's hyperparameters, then fit.
///
/// With `init = None` every channel starts from the heuristic init with its
/// length scales multiplied by each of [`LENGTH_SCALE_STARTS`] and keeps the
/// best evidence; `budget` applies per start. An explicit `init` is a single
/// start.
pub fn train_vector_gp(
    data: &Dataset,
    kind: KernelKind,
    system: &System,
    dims: &ActiveDims,
    init: Option<&[KernelHyperparams]>,
    budget: usize,
) -> Result<GpModel> {
    let multi_start = init.is_none() && budget > 1;
    let init = match init {
        Some(h) => h.to_vec(),
        None => initial_hyperparams(data, kind, system, dims)?,
    };
    let expected = kind.num_channels(system);
    if init.len() != expected {
        return Err(Error::InvalidInput(format!(
            "{kind:?} expects {expected} initial hyperparameter sets, got {}",
            init.len()
        )));
    }
    let hps = match kind {
        KernelKind::NonholonomicAmbient => vec![best_of(
            &start_points(&init[0], multi_start),
            |h| optimize_nonholonomic_hyperparams(data, system, dims, h, budget),
            |h| nonholonomic_log_marginal_likelihood(data, system, h, dims),
        )?],
        _ => {
            let targets = channel_targets(data, kind, system)?;
            targets
                .iter()
                .zip(&init)
                .map(|(y, h)| {
                    best_of(
                        &start_points(h, multi_start),
                        |s| optimize_hyperparams(&data.inputs, y, dims, s, budget),
                        |s| log_marginal_likelihood(&data.inputs, y, s, dims),
                    )
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    fit_vector_gp(data, kind, system, &hps, dims)
}

impl GpModel {
    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn system(&self) -> &System {
        &self.system
    }

    pub fn active_dims(&self) -> &ActiveDims {
        &self.dims
    }

    pub fn training_inputs(&self) -> &[DVector<f64>] {
        &self.inputs
    }

    pub fn channels(&self) -> &[ChannelFit] {
        &self.channels
    }

    pub fn hyperparams(&self) -> Vec<KernelHyperparams> {
        self.channels.iter().map(|c| c.hp.clone()).collect()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Posterior mean in adapted coordinates (adapted kind only).
    pub fn predict_adapted(&self, q: &DVector<f64>) -> Option<DVector<f64>> {
        (self.kind == KernelKind::AdaptedCoordinates).then(|| {
            DVector::from_iterator(
                self.channels.len(),
                self.channels.iter().map(|c| predict_scalar(c, &self.inputs, q)),
            )
        })
    }

    /// Posterior mean `f(q)` in ambient coordinates.
    pub fn predict(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.system.ambient_dim();
        if q.len() != n {
            return Err(Error::InvalidInput(format!(
                "query has length {}, expected {n}",
                q.len()
            )));
        }
        match self.kind {
            KernelKind::StandardAmbient => Ok(DVector::from_iterator(
                n,
                self.channels.iter().map(|c| predict_scalar(c, &self.inputs, q)),
            )),
            KernelKind::AdaptedCoordinates => {
                let nu = self.predict_adapted(q).expect("adapted kind");
                Ok(self.system.basis(q).lift(&nu))
            }
            KernelKind::NonholonomicAmbient => {
                let channel = &self.channels[0];
                let kernel = NonholonomicKernel::new(channel.kernel.clone(), &self.system);
                let p = self.system.projector(q)?;
                let mut f = DVector::zeros(n);
                for (i, (qi, pi)) in self.inputs.iter().zip(&self.projectors).enumerate() {
                    let block = kernel.eval_with_projectors(q, &p, qi, pi);
                    f += block * channel.alpha.rows(i * n, n);
                }
                Ok(f)
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument {
            format: MODEL_FORMAT.to_string(),
            kind: self.kind,
            system: self.system,
            active_dims: self.dims.clone(),
            seed: self.seed,
            training_inputs: self.inputs.iter().map(|q| q.iter().copied().collect()).collect(),
            channels: self
                .channels
                .iter()
                .map(|c| ChannelDocument {
                    hyperparams: c.hp.clone(),
                    jitter: c.jitter,
                    dual_coefficients: c.alpha.iter().copied().collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).map_err(|source| Error::Json {
            context: "serializing model".into(),
            source,
        })
    }

    /// Rebuild a model; the Cholesky factors are recomputed from the stored
    /// inputs, hyperparameters and jitter.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text).map_err(|source| Error::Json {
            context: "parsing model".into(),
            source,
        })?;
        if doc.format != MODEL_FORMAT {
            return Err(Error::InvalidInput(format!(
                "unsupported model format {:?}, expected {MODEL_FORMAT:?}",
                doc.format
            )));
        }
        let system = doc.system;
        system.validate()?;
        let n = system.ambient_dim();
        let dims = ActiveDims::new(doc.active_dims.indices().to_vec(), n)?;
        if doc.training_inputs.is_empty() || doc.training_inputs.iter().any(|q| q.len() != n) {
            return Err(Error::InvalidInput("model training inputs malformed".into()));
        }
        let inputs: Vec<DVector<f64>> = doc.training_inputs.into_iter().map(DVector::from_vec).collect();
        let expected = doc.kind.num_channels(&system);
        if doc.channels.len() != expected {
            return Err(Error::InvalidInput(format!(
                "{:?} model needs {expected} channels, document has {}",
                doc.kind,
                doc.channels.len()
            )));
        }
        let alpha_len = match doc.kind {
            KernelKind::NonholonomicAmbient => inputs.len() * n,
            _ => inputs.len(),
        };
        let mut channels = Vec::with_capacity(expected);
        for c in doc.channels {
            if c.dual_coefficients.len() != alpha_len {
                return Err(Error::InvalidInput("dual coefficient length mismatch".into()));
            }
            let kernel = SquaredExponential::new(&c.hyperparams, &dims)?;
            let gram = match doc.kind {
                KernelKind::NonholonomicAmbient => nh_gram(&kernel, &system, &inputs)?,
                _ => kernel.gram(&inputs),
            };
            let chol = factor_fixed(gram, c.hyperparams.noise_variance, c.jitter)
                .ok_or(Error::IllConditioned { jitter: c.jitter })?;
            channels.push(ChannelFit {
                hp: c.hyperparams,
                kernel,
                chol,
                alpha: DVector::from_vec(c.dual_coefficients),
                jitter: c.jitter,
            });
        }
        let projectors = match doc.kind {
            KernelKind::NonholonomicAmbient => inputs.iter().map(|q| system.projector(q)).collect::<Result<_>>()?,
            _ => Vec::new(),
        };
        Ok(Self {
            kind: doc.kind,
            system,
            dims,
            inputs,
            channels,
            projectors,
            seed: doc.seed,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    kind: KernelKind,
    system: System,
    active_dims: ActiveDims,
    seed: Option<u64>,
    training_inputs: Vec<Vec<f64>>,
    channels: Vec<ChannelDocument>,
}

#[derive(Serialize, Deserialize)]
struct ChannelDocument {
    hyperparams: KernelHyperparams,
    jitter: f64,
    dual_coefficients: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::max_abs;
    use crate::regression::DatasetMeta;
    use crate::system::DiskParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn disk() -> System {
        System::VerticalRollingDisk(DiskParams::default())
    }

    fn random_q(rng: &mut ChaCha8Rng) -> DVector<f64> {
        DVector::from_fn(4, |_, _| rng.random_range(-2.0..2.0))
    }

    /// Observations with noise that leaves the distribution.
    fn noisy_dataset(n: usize, seed: u64) -> Dataset {
        let sys = disk();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs: Vec<_> = (0..n).map(|_| random_q(&mut rng)).collect();
        let outputs = inputs
            .iter()
            .map(|q| sys.true_field(q) + DVector::from_fn(4, |_, _| rng.random_range(-0.05..0.05)))
            .collect();
        Dataset::new(
            inputs,
            outputs,
            DatasetMeta {
                seed,
                ..Default::default()
            },
        )
        .unwrap()
    }

    fn hp(noise: f64) -> KernelHyperparams {
        KernelHyperparams::new(1.0, vec![1.2, 1.6], noise).unwrap()
    }

    fn dims() -> ActiveDims {
        ActiveDims::new(vec![2, 3], 4).unwrap()
    }

    fn fit(kind: KernelKind, data: &Dataset) -> GpModel {
        let sys = disk();
        let hps = vec![hp(0.01); kind.num_channels(&sys)];
        fit_vector_gp(data, kind, &sys, &hps, &dims()).unwrap()
    }

    #[test]
    fn nonholonomic_predictions_are_admissible() {
        let data = noisy_dataset(40, 1);
        let sys = disk();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for kind in [KernelKind::NonholonomicAmbient, KernelKind::AdaptedCoordinates] {
            let m = fit(kind, &data);
            for _ in 0..500 {
                let q = random_q(&mut rng);
                let f = m.predict(&q).unwrap();
                assert!(sys.constraint_matrix(&q).residual(&f).norm() <= 1e-10, "{kind:?}");
                let off = &f - sys.projector(&q).unwrap().apply(&f);
                assert!(off.norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn standard_predictions_violate_constraints() {
        let data = noisy_dataset(40, 2);
        let sys = disk();
        let m = fit(KernelKind::StandardAmbient, &data);
        let q = &data.inputs[0];
        assert!(sys.constraint_matrix(q).residual(&m.predict(q).unwrap()).norm() > 1e-6);
    }

    #[test]
    fn zero_observations_give_zero_field() {
        let mut data = noisy_dataset(15, 3);
        for y in &mut data.outputs {
            y.fill(0.0);
        }
        let q = DVector::from_vec(vec![0.0, 0.0, 0.3, -0.4]);
        for kind in [
            KernelKind::StandardAmbient,
            KernelKind::NonholonomicAmbient,
            KernelKind::AdaptedCoordinates,
        ] {
            assert_eq!(fit(kind, &data).predict(&q).unwrap().amax(), 0.0);
        }
    }

    #[test]
    fn representer_structure_of_ambient_model() {
        let data = noisy_dataset(30, 4);
        let sys = disk();
        let m = fit(KernelKind::NonholonomicAmbient, &data);
        let alpha = &m.channels()[0].alpha;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let q = random_q(&mut rng);
            // P(q) sum_i k(q, q_i) P(q_i) c_i
            let mut inner = DVector::zeros(4);
            for (i, qi) in data.inputs.iter().enumerate() {
                let k = crate::kernels::se_ard_kernel(&q, qi, &hp(0.01), &dims()).unwrap();
                let pi = crate::geometry::projector_from_constraints(&sys.constraint_matrix(qi)).unwrap();
                inner += pi.matrix() * alpha.rows(i * 4, 4) * k;
            }
            let factored = sys.projector(&q).unwrap().apply(&inner);
            assert!((m.predict(&q).unwrap() - factored).amax() <= 1e-10);
        }
    }

    #[test]
    fn posterior_mean_is_linear_in_observations() {
        let d1 = noisy_dataset(20, 6);
        let mut d2 = d1.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for y in &mut d2.outputs {
            *y = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
        }
        let mut d12 = d1.clone();
        for (y, y2) in d12.outputs.iter_mut().zip(&d2.outputs) {
            *y += y2;
        }
        for kind in [
            KernelKind::StandardAmbient,
            KernelKind::NonholonomicAmbient,
            KernelKind::AdaptedCoordinates,
        ] {
            let (m1, m2, m12) = (fit(kind, &d1), fit(kind, &d2), fit(kind, &d12));
            for _ in 0..20 {
                let q = random_q(&mut rng);
                let sum = m1.predict(&q).unwrap() + m2.predict(&q).unwrap();
                assert!((m12.predict(&q).unwrap() - sum).amax() <= 1e-9, "{kind:?}");
            }
        }
    }

    #[test]
    fn cholesky_factor_reconstructs_block_gram() {
        let data = noisy_dataset(12, 8);
        let sys = disk();
        let m = fit(KernelKind::NonholonomicAmbient, &data);
        let c = &m.channels()[0];
        let mut k = nh_gram(&c.kernel, &sys, &data.inputs).unwrap();
        for i in 0..k.nrows() {
            k[(i, i)] += c.hp.noise_variance + c.jitter;
        }
        let l = c.chol_factor();
        assert!((&l * l.transpose() - &k).norm() / k.norm() <= 1e-8);
    }

    #[test]
    fn json_round_trip_preserves_predictions() {
        let data = noisy_dataset(25, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for kind in [
            KernelKind::StandardAmbient,
            KernelKind::NonholonomicAmbient,
            KernelKind::AdaptedCoordinates,
        ] {
            let m = fit(kind, &data);
            let back = GpModel::from_json(&m.to_json().unwrap()).unwrap();
            assert_eq!(back.kind(), kind);
            assert_eq!(back.hyperparams(), m.hyperparams());
            assert_eq!(back.seed(), Some(9));
            for _ in 0..50 {
                let q = random_q(&mut rng);
                assert!((back.predict(&q).unwrap() - m.predict(&q).unwrap()).amax() <= 1e-12);
            }
            assert!(max_abs(&(back.channels()[0].chol_factor() - m.channels()[0].chol_factor())) <= 1e-12);
        }
    }

    #[test]
    fn wrong_channel_count_is_rejected() {
        let data = noisy_dataset(5, 11);
        let sys = disk();
        let err = fit_vector_gp(&data, KernelKind::AdaptedCoordinates, &sys, &[hp(0.1)], &dims()).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
        assert!(GpModel::from_json("{\"format\": \"other\"}").is_err());
    }

    #[test]
    fn free_particle_nonholonomic_matches_standard() {
        let sys = System::FreeParticle(Default::default());
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let inputs: Vec<_> = (0..10)
            .map(|_| DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        let outputs: Vec<_> = inputs.iter().map(|q| sys.true_field(q)).collect();
        let data = Dataset::new(inputs, outputs, DatasetMeta::default()).unwrap();
        let d = ActiveDims::new(vec![0, 1], 2).unwrap();
        let h = KernelHyperparams::new(1.0, vec![0.8, 0.8], 1e-3).unwrap();
        let std = fit_vector_gp(&data, KernelKind::StandardAmbient, &sys, &[h.clone(), h.clone()], &d).unwrap();
        let nh = fit_vector_gp(&data, KernelKind::NonholonomicAmbient, &sys, &[h], &d).unwrap();
        let q = DVector::from_vec(vec![0.2, -0.1]);
        assert!((std.predict(&q).unwrap() - nh.predict(&q).unwrap()).amax() < 1e-9);
    }
}

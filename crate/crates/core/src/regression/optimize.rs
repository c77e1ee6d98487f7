//! Marginal-likelihood hyperparameter search.
//!
//! Derivative-free Nelder-Mead in log-parameter space, restarted from the
//! incumbent until a restart stops improving or the evaluation budget runs out.

use nalgebra::DVector;

use super::{fit_scalar_channel, log_marginal_likelihood};
use crate::kernels::{ActiveDims, KernelHyperparams};
use crate::{Error, Result};

pub const DEFAULT_BUDGET: usize = 2000;

/// Box on log-parameters; the objective is `+inf` outside it.
const LOG_SIGNAL_BOUNDS: (f64, f64) = (-13.8, 9.2); // 1e-6 .. 1e4
const LOG_LENGTH_BOUNDS: (f64, f64) = (-6.9, 6.9); // 1e-3 .. 1e3
const LOG_NOISE_BOUNDS: (f64, f64) = (-18.4, 4.6); // 1e-8 .. 1e2

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub initial_step: f64,
    pub f_tol: f64,
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.5,
            f_tol: 1e-10,
            x_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

struct Budgeted<F> {
    f: F,
    used: usize,
    budget: usize,
    best: Option<(Vec<f64>, f64)>,
}

impl<F: FnMut(&[f64]) -> f64> Budgeted<F> {
    fn exhausted(&self) -> bool {
        self.used >= self.budget
    }

    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.exhausted() {
            return None;
        }
        self.used += 1;
        let v = (self.f)(x);
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if v.is_finite() && self.best.as_ref().is_none_or(|(_, b)| v < *b) {
            self.best = Some((x.to_vec(), v));
        }
        Some(v)
    }
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t (b - a)
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// One Nelder-Mead run from `x0`. Returns `None` once the budget is spent.
fn run_simplex<F: FnMut(&[f64]) -> f64>(
    obj: &mut Budgeted<F>,
    x0: &[f64],
    f0: f64,
    opts: &NelderMeadOptions,
) -> Option<()> {
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;

    let dim = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), f0)];
    for i in 0..dim {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step;
        let v = obj.eval(&x)?;
        simplex.push((x, v));
    }

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best_f, worst_f) = (simplex[0].1, simplex[dim].1);
        let f_spread = simplex.iter().map(|(_, v)| (v - best_f).abs()).fold(0.0, f64::max);
        let x_spread = simplex
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if f_spread <= opts.f_tol && x_spread <= opts.x_tol {
            return Some(());
        }
        if !best_f.is_finite() && x_spread <= opts.x_tol {
            return Some(());
        }

        let mut centroid = vec![0.0; dim];
        for (x, _) in &simplex[..dim] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / dim as f64;
            }
        }
        let worst = simplex[dim].0.clone();
        let second_worst_f = simplex[dim - 1].1;

        let xr = lerp(&centroid, &worst, -REFLECT);
        let fr = obj.eval(&xr)?;
        if fr < best_f {
            let xe = lerp(&centroid, &xr, EXPAND);
            let fe = obj.eval(&xe)?;
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < second_worst_f {
            simplex[dim] = (xr, fr);
            continue;
        }
        let accepted = if fr < worst_f {
            let xc = lerp(&centroid, &xr, CONTRACT);
            let fc = obj.eval(&xc)?;
            (fc <= fr).then_some((xc, fc))
        } else {
            let xc = lerp(&centroid, &worst, CONTRACT);
            let fc = obj.eval(&xc)?;
            (fc < worst_f).then_some((xc, fc))
        };
        match accepted {
            Some(v) => simplex[dim] = v,
            None => {
                let anchor = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x = lerp(&anchor, &vertex.0, SHRINK);
                    let v = obj.eval(&x)?;
                    *vertex = (x, v);
                }
            }
        }
    }
}

/// Minimize `f` with at most `budget` evaluations.
///
/// Deterministic for a fixed `x0`, budget and options. Non-finite values are
/// treated as `+inf`; if no evaluation is finite the result has `value = inf`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(f: F, x0: &[f64], budget: usize, opts: &NelderMeadOptions) -> Minimum {
    let mut obj = Budgeted {
        f,
        used: 0,
        budget,
        best: None,
    };
    let f0 = obj.eval(x0).unwrap_or(f64::INFINITY);
    if !x0.is_empty() {
        let mut start = (x0.to_vec(), f0);
        while !obj.exhausted() {
            if run_simplex(&mut obj, &start.0, start.1, opts).is_none() {
                break;
            }
            let incumbent = match &obj.best {
                Some((x, v)) => (x.clone(), *v),
                None => break,
            };
            let improved = incumbent.1 < start.1 - opts.f_tol * (1.0 + start.1.abs());
            start = incumbent;
            if !improved {
                break;
            }
        }
    }
    match obj.best {
        Some((x, value)) => Minimum {
            x,
            value,
            evaluations: obj.used,
        },
        None => Minimum {
            x: x0.to_vec(),
            value: f64::INFINITY,
            evaluations: obj.used,
        },
    }
}

fn in_bounds(p: &[f64]) -> bool {
    let d = p.len() - 2;
    let within = |x: f64, (lo, hi): (f64, f64)| x >= lo && x <= hi;
    within(p[0], LOG_SIGNAL_BOUNDS)
        && p[1..=d].iter().all(|&l| within(l, LOG_LENGTH_BOUNDS))
        && within(p[d + 1], LOG_NOISE_BOUNDS)
}

/// Maximize an arbitrary log evidence over hyperparameters in log space.
pub(crate) fn maximize_evidence(
    evidence: impl Fn(&KernelHyperparams) -> Result<f64>,
    init: &KernelHyperparams,
    budget: usize,
) -> Result<KernelHyperparams> {
    if budget == 0 {
        return Err(Error::InvalidInput("optimizer budget must be at least 1".into()));
    }
    init.validate()?;
    if init.noise_variance == 0.0 {
        return Err(Error::InvalidHyperparameter(
            "noise variance must be positive to optimize in log space".into(),
        ));
    }
    let x0 = init.to_log_params();
    let objective = |p: &[f64]| {
        if !in_bounds(p) && p != x0.as_slice() {
            return f64::INFINITY;
        }
        match evidence(&KernelHyperparams::from_log_params(p)) {
            Ok(v) if v.is_finite() => -v,
            _ => f64::INFINITY,
        }
    };
    let min = nelder_mead(objective, &x0, budget, &NelderMeadOptions::default());
    if !min.value.is_finite() {
        return Err(Error::OptimizationFailed(format!(
            "all {} marginal likelihood evaluations were non-finite",
            min.evaluations
        )));
    }
    if min.x == x0 {
        // exact copy keeps budget = 1 an identity
        return Ok(init.clone());
    }
    Ok(KernelHyperparams::from_log_params(&min.x))
}

/// Maximize the log marginal likelihood of one scalar channel.
///
/// The result never has lower evidence than `init`; `budget = 1` returns
/// `init` unchanged.
pub fn optimize_hyperparams(
    inputs: &[DVector<f64>],
    targets: &DVector<f64>,
    dims: &ActiveDims,
    init: &KernelHyperparams,
    budget: usize,
) -> Result<KernelHyperparams> {
    // surface shape errors before searching
    fit_scalar_channel(inputs, targets, init, dims)
        .map(|_| ())
        .or_else(|e| match e {
            Error::IllConditioned { .. } => Ok(()),
            other => Err(other),
        })?;
    maximize_evidence(|hp| log_marginal_likelihood(inputs, targets, hp, dims), init, budget)
}

/// Heuristic starting point: `sf2 = var(y)`, `l_d = range_d / 2`, `sn2 = 0.01 var(y)`.
pub fn default_init(inputs: &[DVector<f64>], targets: &DVector<f64>, dims: &ActiveDims) -> KernelHyperparams {
    let n = targets.len().max(1) as f64;
    let mean = targets.sum() / n;
    let var = targets.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
    let signal_variance = if var > 1e-12 { var } else { 1.0 };
    let length_scales = dims
        .indices()
        .iter()
        .map(|&d| {
            let (lo, hi) = inputs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), q| {
                (lo.min(q[d]), hi.max(q[d]))
            });
            let half = 0.5 * (hi - lo);
            if half > 1e-12 && half.is_finite() {
                half
            } else {
                1.0
            }
        })
        .collect();
    KernelHyperparams {
        signal_variance,
        length_scales,
        noise_variance: 0.01 * signal_variance,
    }
}

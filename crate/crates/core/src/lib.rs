//! Gaussian process regression for vector fields subject to linear velocity
//! (nonholonomic) constraints.
//!
//! The central object is the nonholonomic matrix kernel
//! `K(q, q') = P(q) k(q, q') P(q')`, where `P(q)` is the orthogonal projector
//! onto `ker A(q)`. Every posterior mean built from this kernel satisfies
//! `A(q) f(q) = 0` at every query point, not only at the training data.
//!
//! Module map:
//!
//! * [`geometry`]: pseudoinverses, projectors and distribution bases.
//! * [`kernels`]: squared-exponential scalar kernel and the matrix kernels.
//! * [`regression`]: scalar and vector GP fits, marginal likelihood, optimizer.
//! * [`system`]: concrete constrained systems (vertical rolling disk, free particle).
//! * [`simulate`]: fixed-step RK4 and training-data generation.
//! * [`evaluate`]: field error, constraint violation, planar error, consistency sweep.
//! * [`config`] and [`pipeline`]: the reproducible generate/train/evaluate workflow.

pub mod config;
pub mod error;
pub mod evaluate;
pub mod geometry;
pub mod io;
pub mod kernels;
pub mod pipeline;
pub mod regression;
pub mod rng;
pub mod simulate;
pub mod system;

pub use error::{Error, Result};

/// Configuration vector `q` in ambient coordinates.
pub type Config = nalgebra::DVector<f64>;

//! Automatic reweighting of auxiliary tasks for learning a main task from
//! little data.
//!
//! Auxiliary likelihoods, weighted by `alpha` on the scaled simplex, act as a
//! surrogate prior for the main task. The weights are learned by matching the
//! main-task score `∇ log p(T_m | θ)` with `Σ_k α_k ∇ log p(T_k | θ)` on
//! parameters sampled by Langevin dynamics during joint training.
//!
//! Modules:
//! - [`params`], [`random`], [`linalg`]: parameter layouts, seeded substreams,
//!   small dense helpers
//! - [`tasks`]: task likelihoods and analytic scores
//! - [`reweight`]: the weight update and baseline reweighters
//! - [`trainer`]: the joint-training loops and the gradient-noise diagnostic
//! - [`oracle`]: closed-form Gaussian machinery used as ground truth
//! - [`harness`]: configs, synthetic data, run artifacts and the CLI

pub mod error;
pub mod harness;
pub mod linalg;
pub mod oracle;
pub mod params;
pub mod random;
pub mod reweight;
pub mod tasks;
pub mod trainer;

pub use error::{ArmlError, Result};

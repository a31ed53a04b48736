//! Task likelihoods `log p(T | theta)` and their score functions.
//!
//! Dataset-backed models return the total-data estimate
//! `(n / |batch|) * sum_{i in batch} log p(x_i | theta)`, so minibatch
//! gradients are unbiased for the full-data score. Additive constants that do
//! not depend on `theta` are omitted; see [`TaskModel::log_normalizer`].

mod dataset;
mod finite_diff;
mod gaussian;
mod mlp;
mod regression;

use std::fmt::Debug;

pub use dataset::Dataset;
pub use finite_diff::{finite_diff_grad, relative_error};
pub use gaussian::{GaussianTask, GaussianTaskSpec};
pub use mlp::{make_mlp_task, mlp_layout, Activation, MlpTask};
pub use regression::{LinearRegressionTask, LogisticRegressionTask};

use crate::error::{ArmlError, Result};
use crate::params::{Gradient, ParamVector, TaskId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskKind {
    Gaussian,
    LinearRegression,
    LogisticRegression,
    Mlp,
}

pub trait TaskModel: Debug + Send + Sync {
    fn kind(&self) -> TaskKind;

    /// Head segment owned by this task, if any.
    fn head(&self) -> Option<TaskId>;

    /// Number of examples, or `None` for tasks defined directly in parameter
    /// space (those ignore the batch argument).
    fn n_examples(&self) -> Option<usize>;

    fn log_likelihood(&self, theta: &ParamVector, batch: &[usize]) -> Result<f64>;

    fn grad_log_likelihood(&self, theta: &ParamVector, batch: &[usize]) -> Result<Gradient>;

    fn value_and_grad(&self, theta: &ParamVector, batch: &[usize]) -> Result<(f64, Gradient)> {
        Ok((
            self.log_likelihood(theta, batch)?,
            self.grad_log_likelihood(theta, batch)?,
        ))
    }

    /// The `theta`-independent constant dropped from the full-data
    /// log-likelihood.
    fn log_normalizer(&self) -> f64 {
        0.0
    }
}

/// Validates a minibatch and returns the total-data scale `n / |batch|`.
pub(crate) fn batch_scale(batch: &[usize], n: usize) -> Result<f64> {
    if batch.is_empty() {
        return Err(ArmlError::arg("batch is empty"));
    }
    if let Some(&bad) = batch.iter().find(|&&i| i >= n) {
        return Err(ArmlError::arg(format!(
            "batch index {bad} out of range for {n} examples"
        )));
    }
    Ok(n as f64 / batch.len() as f64)
}

/// Negative log-likelihood per example on the whole dataset. Used as the
/// validation loss.
pub fn mean_nll(task: &dyn TaskModel, theta: &ParamVector) -> Result<f64> {
    match task.n_examples() {
        Some(n) => {
            let all: Vec<usize> = (0..n).collect();
            Ok(-task.log_likelihood(theta, &all)? / n as f64)
        }
        None => Ok(-task.log_likelihood(theta, &[])?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_validation() {
        assert!(batch_scale(&[], 3).is_err());
        assert!(batch_scale(&[0, 3], 3).is_err());
        assert_eq!(batch_scale(&[0, 2], 4).unwrap(), 2.0);
    }
}

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ArmlError, Result};
use crate::linalg::cholesky_spd;
use crate::params::{Gradient, ParamVector, TaskId};

use super::{TaskKind, TaskModel};

/// A task whose likelihood is Gaussian directly in parameter space:
/// `p(T | theta) ∝ N(theta | center, covariance)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianTaskSpec {
    pub center: Vec<f64>,
    /// Row-major `d x d` covariance.
    pub covariance: Vec<Vec<f64>>,
}

impl GaussianTaskSpec {
    pub fn new(center: Vec<f64>, covariance: DMatrix<f64>) -> Self {
        let covariance = (0..covariance.nrows())
            .map(|i| covariance.row(i).iter().copied().collect())
            .collect();
        GaussianTaskSpec { center, covariance }
    }

    pub fn isotropic(center: Vec<f64>, var: f64) -> Self {
        let d = center.len();
        Self::new(center, DMatrix::identity(d, d) * var)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn covariance_matrix(&self) -> Result<DMatrix<f64>> {
        let d = self.center.len();
        if self.covariance.len() != d || self.covariance.iter().any(|r| r.len() != d) {
            return Err(ArmlError::arg(format!("covariance must be {d}x{d}")));
        }
        Ok(DMatrix::from_fn(d, d, |i, j| self.covariance[i][j]))
    }
}

#[derive(Clone, Debug)]
pub struct GaussianTask {
    center: DVector<f64>,
    precision: DMatrix<f64>,
}

impl GaussianTask {
    pub fn new(spec: &GaussianTaskSpec) -> Result<Self> {
        let cov = spec.covariance_matrix()?;
        let chol = cholesky_spd(&cov)?;
        Ok(GaussianTask {
            center: DVector::from_column_slice(&spec.center),
            precision: chol.inverse(),
        })
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    fn offset(&self, theta: &ParamVector) -> Result<DVector<f64>> {
        let shared = theta.shared();
        if shared.len() != self.center.len() {
            return Err(ArmlError::arg(format!(
                "gaussian task of dimension {} applied to shared segment of length {}",
                self.center.len(),
                shared.len()
            )));
        }
        Ok(DVector::from_column_slice(shared) - &self.center)
    }
}

impl TaskModel for GaussianTask {
    fn kind(&self) -> TaskKind {
        TaskKind::Gaussian
    }

    fn head(&self) -> Option<TaskId> {
        None
    }

    fn n_examples(&self) -> Option<usize> {
        None
    }

    /// `-1/2 (theta - c)^T Sigma^-1 (theta - c)`; the Gaussian normalizer is
    /// omitted and the batch is ignored.
    fn log_likelihood(&self, theta: &ParamVector, _batch: &[usize]) -> Result<f64> {
        let r = self.offset(theta)?;
        Ok(-0.5 * r.dot(&(&self.precision * &r)))
    }

    fn grad_log_likelihood(&self, theta: &ParamVector, _batch: &[usize]) -> Result<Gradient> {
        let r = self.offset(theta)?;
        let score = -(&self.precision * r);
        let mut g = Gradient::zeros(theta.layout().clone());
        g.shared_mut().copy_from_slice(score.as_slice());
        Ok(g)
    }

    fn value_and_grad(&self, theta: &ParamVector, _batch: &[usize]) -> Result<(f64, Gradient)> {
        let r = self.offset(theta)?;
        let pr = &self.precision * &r;
        let mut g = Gradient::zeros(theta.layout().clone());
        for (gi, v) in g.shared_mut().iter_mut().zip(pr.iter()) {
            *gi = -v;
        }
        Ok((-0.5 * r.dot(&pr), g))
    }
}

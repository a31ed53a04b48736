use crate::error::{ArmlError, Result};
use crate::linalg;
use crate::params::{Gradient, ParamVector};

use super::TaskModel;

/// Central-difference gradient of `task.log_likelihood` in every coordinate.
pub fn finite_diff_grad(
    task: &dyn TaskModel,
    theta: &ParamVector,
    batch: &[usize],
    h: f64,
) -> Result<Gradient> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(ArmlError::arg(format!("step h must be > 0, got {h}")));
    }
    let mut out = Vec::with_capacity(theta.dim());
    for i in 0..theta.dim() {
        let up = task.log_likelihood(&theta.perturbed(i, h), batch)?;
        let down = task.log_likelihood(&theta.perturbed(i, -h), batch)?;
        out.push((up - down) / (2.0 * h));
    }
    Gradient::new(out, theta.layout().clone())
}

/// `||a - b|| / max(||a||, 1e-12)`
pub fn relative_error(analytic: &[f64], reference: &[f64]) -> f64 {
    let diff: Vec<f64> = analytic.iter().zip(reference).map(|(a, b)| a - b).collect();
    linalg::norm(&diff) / linalg::norm(analytic).max(1e-12)
}

//! Gradient-matching weight update: pull `sum_k alpha_k g_aux[k]` toward the
//! main-task score and project back onto the scaled simplex.

use crate::error::{ArmlError, Result};
use crate::linalg::{axpy, dot, norm_sq};

use super::simplex::project_simplex;
use super::weights::{GradientSnapshot, TaskWeights};

fn residual(snap: &GradientSnapshot, alpha: &[f64]) -> Vec<f64> {
    let mut r = snap.g_main.clone();
    for (a, g) in alpha.iter().zip(&snap.g_aux) {
        axpy(&mut r, -a, g);
    }
    r
}

fn check_len(snap: &GradientSnapshot, alpha: &[f64]) -> Result<()> {
    snap.validate()?;
    if alpha.len() != snap.k() {
        return Err(ArmlError::arg(format!(
            "{} weights for {} auxiliary tasks",
            alpha.len(),
            snap.k()
        )));
    }
    Ok(())
}

/// `|| g_main - sum_k alpha_k g_aux[k] ||^2` for any `alpha`, on or off the
/// simplex.
pub fn matching_objective(snap: &GradientSnapshot, alpha: &[f64]) -> Result<f64> {
    check_len(snap, alpha)?;
    Ok(norm_sq(&residual(snap, alpha)))
}

/// `d/d alpha_k = -2 g_aux[k]^T (g_main - sum_j alpha_j g_aux[j])`
pub fn matching_gradient(snap: &GradientSnapshot, alpha: &[f64]) -> Result<Vec<f64>> {
    check_len(snap, alpha)?;
    let r = residual(snap, alpha);
    Ok(snap.g_aux.iter().map(|g| -2.0 * dot(g, &r)).collect())
}

pub fn arml_objective(snap: &GradientSnapshot, alpha: &TaskWeights) -> Result<f64> {
    matching_objective(snap, alpha.as_slice())
}

pub fn arml_weight_gradient(snap: &GradientSnapshot, alpha: &TaskWeights) -> Result<Vec<f64>> {
    matching_gradient(snap, alpha.as_slice())
}

/// One projected gradient step with weight learning rate `beta`.
pub fn arml_update(alpha: &TaskWeights, snap: &GradientSnapshot, beta: f64) -> Result<TaskWeights> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(ArmlError::arg(format!("weight learning rate must be > 0, got {beta}")));
    }
    let grad = arml_weight_gradient(snap, alpha)?;
    let stepped: Vec<f64> = alpha
        .as_slice()
        .iter()
        .zip(&grad)
        .map(|(a, g)| a - beta * g)
        .collect();
    project_onto_weights(&stepped)
}

/// Projects onto the simplex with total `K = v.len()`. A step too large to
/// resolve the total (or not finite at all) is a numeric failure.
pub(crate) fn project_onto_weights(v: &[f64]) -> Result<TaskWeights> {
    let k = v.len() as f64;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(ArmlError::numeric(0, "weight step is not finite"));
    }
    let p = project_simplex(v, k)?;
    TaskWeights::new(p).map_err(|_| ArmlError::numeric(0, "weight step lost precision in the projection"))
}

/// Exponential moving average over snapshots, for smoothing the
/// single-sample estimate of the matching objective.
#[derive(Clone, Debug)]
pub struct SnapshotEma {
    decay: f64,
    state: Option<GradientSnapshot>,
}

impl SnapshotEma {
    pub fn new(decay: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&decay) {
            return Err(ArmlError::arg(format!("EMA decay must be in [0, 1), got {decay}")));
        }
        Ok(SnapshotEma { decay, state: None })
    }

    pub fn push(&mut self, snap: &GradientSnapshot) -> &GradientSnapshot {
        let d = self.decay;
        match &mut self.state {
            None => self.state = Some(snap.clone()),
            Some(prev) => {
                for (p, v) in prev.g_main.iter_mut().zip(&snap.g_main) {
                    *p = d * *p + (1.0 - d) * v;
                }
                for (pg, vg) in prev.g_aux.iter_mut().zip(&snap.g_aux) {
                    for (p, v) in pg.iter_mut().zip(vg) {
                        *p = d * *p + (1.0 - d) * v;
                    }
                }
                prev.iteration = snap.iteration;
            }
        }
        self.state.as_ref().unwrap()
    }
}

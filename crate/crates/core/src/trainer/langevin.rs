use crate::error::{ArmlError, Result};
use crate::params::{Gradient, ParamVector};
use crate::random::RngState;

/// Standard deviation of the injected Langevin noise for step size `eps`.
pub fn injected_noise_std(eps: f64) -> f64 {
    (2.0 * eps).sqrt()
}

/// Result of one Langevin step.
#[derive(Clone, Debug)]
pub struct LangevinStep {
    pub theta: ParamVector,
    /// Per-coordinate std of the noise that was added.
    pub noise_std: f64,
}

/// `theta' = theta + eps * grad + eta`, `eta ~ N(0, 2 eps I)`.
pub fn langevin_step(
    theta: &ParamVector,
    joint_grad: &Gradient,
    eps: f64,
    rng: &mut RngState,
) -> Result<LangevinStep> {
    let noise_std = injected_noise_std(eps);
    let theta = gradient_step(theta, joint_grad, eps, Some((rng, noise_std)))?;
    Ok(LangevinStep { theta, noise_std })
}

/// Plain gradient ascent on the joint log-density.
pub fn sgd_step(theta: &ParamVector, joint_grad: &Gradient, eps: f64) -> Result<ParamVector> {
    gradient_step(theta, joint_grad, eps, None)
}

fn gradient_step(
    theta: &ParamVector,
    grad: &Gradient,
    eps: f64,
    noise: Option<(&mut RngState, f64)>,
) -> Result<ParamVector> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(ArmlError::arg(format!("step size must be > 0, got {eps}")));
    }
    if grad.dim() != theta.dim() {
        return Err(ArmlError::arg("gradient and parameter dimensions differ"));
    }
    if !grad.is_finite() {
        return Err(ArmlError::numeric(0, "non-finite joint gradient"));
    }
    let mut values: Vec<f64> = theta
        .values()
        .iter()
        .zip(grad.values())
        .map(|(t, g)| t + eps * g)
        .collect();
    if let Some((rng, std)) = noise {
        for v in values.iter_mut() {
            *v += std * rng.standard_normal();
        }
    }
    let mut out = theta.clone();
    out.set_values(values)
        .map_err(|_| ArmlError::numeric(0, "parameters became non-finite"))?;
    Ok(out)
}

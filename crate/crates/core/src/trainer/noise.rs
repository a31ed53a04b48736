use serde::{Deserialize, Serialize};

use crate::error::{ArmlError, Result};
use crate::params::ParamVector;
use crate::random::RngState;
use crate::reweight::TaskWeights;
use crate::tasks::TaskModel;

use super::langevin::injected_noise_std;
use super::train::{draw_batches, joint_grad};

/// Minibatch gradient noise versus injected Langevin noise, both measured as
/// per-coordinate standard deviations of a parameter increment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub grad_noise_std: f64,
    pub injected_noise_std: f64,
    pub ratio: f64,
}

/// Resamples `n_batches` minibatches at fixed `theta`, takes the sample std
/// of `eps * joint_grad` per coordinate and averages over coordinates.
#[allow(clippy::too_many_arguments)]
pub fn noise_diagnostic(
    main: &dyn TaskModel,
    aux: &[Box<dyn TaskModel>],
    alpha: &TaskWeights,
    theta: &ParamVector,
    eps: f64,
    n_batches: usize,
    batch_sizes: (usize, usize),
    rng: &mut RngState,
) -> Result<NoiseReport> {
    if n_batches < 2 {
        return Err(ArmlError::arg("noise diagnostic needs at least two batches"));
    }
    if !(eps > 0.0) {
        return Err(ArmlError::arg("step size must be > 0"));
    }
    let d = theta.dim();
    let mut mean = vec![0.0; d];
    let mut m2 = vec![0.0; d];
    for b in 0..n_batches {
        let batches = draw_batches(rng, main, aux, batch_sizes.0, batch_sizes.1);
        let g = joint_grad(theta, main, aux, alpha, &batches, 0.0)?;
        // Welford
        let count = (b + 1) as f64;
        for i in 0..d {
            let x = eps * g.values()[i];
            let delta = x - mean[i];
            mean[i] += delta / count;
            m2[i] += delta * (x - mean[i]);
        }
    }
    let grad_noise_std =
        m2.iter().map(|v| (v / (n_batches - 1) as f64).sqrt()).sum::<f64>() / d as f64;
    let injected = injected_noise_std(eps);
    Ok(NoiseReport {
        grad_noise_std,
        injected_noise_std: injected,
        ratio: grad_noise_std / injected,
    })
}

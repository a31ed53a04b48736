//! Baseline reweighting schemes. AdaLoss and GradNorm are simplified
//! variants inspired by the original methods; all schemes that produce
//! weights project back onto the same scaled simplex as ARML.

use crate::error::{ArmlError, Result};
use crate::linalg::{dot, norm};

use super::arml::project_onto_weights;
use super::weights::{GradientSnapshot, TaskWeights};

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(ArmlError::arg(format!("learning rate must be > 0, got {beta}")));
    }
    Ok(())
}

/// 1 when `cos(g_aux[k], g_main) >= 0`, else 0. A zero-norm gradient counts
/// as cosine 0 and so keeps its task. Returns a mask, not simplex weights.
pub fn cosine_sim_weights(snap: &GradientSnapshot) -> Result<Vec<f64>> {
    snap.validate()?;
    let nm = norm(&snap.g_main);
    Ok(snap
        .g_aux
        .iter()
        .map(|g| {
            let denom = nm * norm(g);
            let cos = if denom > 0.0 { dot(g, &snap.g_main) / denom } else { 0.0 };
            if cos >= 0.0 {
                1.0
            } else {
                0.0
            }
        })
        .collect())
}

/// `alpha_k += beta * g_aux[k]^T g_main`, then projection.
pub fn ol_aux_update(alpha: &TaskWeights, snap: &GradientSnapshot, beta: f64) -> Result<TaskWeights> {
    check_beta(beta)?;
    snap.check_weights(alpha)?;
    let stepped: Vec<f64> = alpha
        .as_slice()
        .iter()
        .zip(&snap.g_aux)
        .map(|(a, g)| a + beta * dot(g, &snap.g_main))
        .collect();
    project_onto_weights(&stepped)
}

/// `alpha_k ∝ 1 / (|loss_k| + 1e-8)`, rescaled to sum to `K`.
pub fn adaloss_weights(recent_losses: &[f64]) -> Result<TaskWeights> {
    if recent_losses.is_empty() || recent_losses.iter().any(|l| !l.is_finite()) {
        return Err(ArmlError::arg("losses must be finite and non-empty"));
    }
    const DELTA: f64 = 1e-8;
    let inv: Vec<f64> = recent_losses.iter().map(|l| 1.0 / (l.abs() + DELTA)).collect();
    let k = inv.len() as f64;
    let total: f64 = inv.iter().sum();
    let mut alpha: Vec<f64> = inv.iter().map(|v| k * v / total).collect();
    // absorb rounding so the sum is K to the last bit we can manage
    let drift = k - alpha.iter().sum::<f64>();
    let imax = (0..alpha.len())
        .max_by(|&a, &b| alpha[a].total_cmp(&alpha[b]))
        .unwrap();
    alpha[imax] += drift;
    TaskWeights::new(alpha)
}

/// One step on `sum_k | ||alpha_k g_k|| - mean_j ||alpha_j g_j|| * rate_k^gamma |`
/// with the balancing target held fixed, followed by projection.
pub fn gradnorm_update(
    alpha: &TaskWeights,
    snap: &GradientSnapshot,
    relative_rates: &[f64],
    beta: f64,
    gamma: f64,
) -> Result<TaskWeights> {
    check_beta(beta)?;
    snap.check_weights(alpha)?;
    if relative_rates.len() != alpha.k() {
        return Err(ArmlError::arg("one relative rate per auxiliary task required"));
    }
    if relative_rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(ArmlError::arg("relative rates must be finite and >= 0"));
    }
    let gnorms: Vec<f64> = snap.g_aux.iter().map(|g| norm(g)).collect();
    let weighted: Vec<f64> = alpha.as_slice().iter().zip(&gnorms).map(|(a, n)| a * n).collect();
    let mean = weighted.iter().sum::<f64>() / weighted.len() as f64;
    let stepped: Vec<f64> = (0..alpha.k())
        .map(|k| {
            let target = mean * relative_rates[k].powf(gamma);
            let gap = weighted[k] - target;
            let sign = if gap.abs() <= 1e-12 * mean { 0.0 } else { gap.signum() };
            alpha[k] - beta * sign * gnorms[k]
        })
        .collect();
    project_onto_weights(&stepped)
}

//! Stateful per-run reweighters used by the trainer.

use crate::error::Result;

use super::arml::{arml_update, project_onto_weights, SnapshotEma};
use super::baselines::{adaloss_weights, cosine_sim_weights, gradnorm_update, ol_aux_update};
use super::weights::{GradientSnapshot, TaskWeights};

/// What a reweighter sees after each parameter step.
#[derive(Clone, Copy, Debug)]
pub struct UpdateInputs<'a> {
    pub snapshot: &'a GradientSnapshot,
    /// Current minibatch negative log-likelihood of each auxiliary task.
    pub aux_losses: &'a [f64],
}

pub trait Reweighter: Send {
    fn name(&self) -> &'static str;

    fn initial_weights(&self, k: usize) -> Result<TaskWeights> {
        Ok(TaskWeights::uniform(k))
    }

    fn update(&mut self, alpha: &TaskWeights, inputs: UpdateInputs<'_>) -> Result<TaskWeights>;
}

/// Keeps the weights where they started.
#[derive(Clone, Debug, Default)]
pub struct Uniform;

impl Reweighter for Uniform {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn update(&mut self, alpha: &TaskWeights, _: UpdateInputs<'_>) -> Result<TaskWeights> {
        Ok(alpha.clone())
    }
}

/// Trains with a fixed, caller-chosen weight vector (grid-search children).
#[derive(Clone, Debug)]
pub struct Fixed(pub TaskWeights);

impl Reweighter for Fixed {
    fn name(&self) -> &'static str {
        "fixed"
    }

    fn initial_weights(&self, _k: usize) -> Result<TaskWeights> {
        Ok(self.0.clone())
    }

    fn update(&mut self, alpha: &TaskWeights, _: UpdateInputs<'_>) -> Result<TaskWeights> {
        Ok(alpha.clone())
    }
}

#[derive(Clone, Debug)]
pub struct Arml {
    beta: f64,
    ema: Option<SnapshotEma>,
}

impl Arml {
    pub fn new(beta: f64) -> Self {
        Arml { beta, ema: None }
    }

    /// Smooths snapshots with an EMA of the given decay before each update.
    pub fn with_snapshot_ema(beta: f64, decay: f64) -> Result<Self> {
        Ok(Arml {
            beta,
            ema: Some(SnapshotEma::new(decay)?),
        })
    }
}

impl Reweighter for Arml {
    fn name(&self) -> &'static str {
        "arml"
    }

    fn update(&mut self, alpha: &TaskWeights, inputs: UpdateInputs<'_>) -> Result<TaskWeights> {
        match &mut self.ema {
            None => arml_update(alpha, inputs.snapshot, self.beta),
            Some(ema) => {
                let smoothed = ema.push(inputs.snapshot).clone();
                arml_update(alpha, &smoothed, self.beta)
            }
        }
    }
}

/// Inverse-loss weights from an EMA (decay 0.9) of the auxiliary losses.
#[derive(Clone, Debug, Default)]
pub struct AdaLoss {
    recent: Option<Vec<f64>>,
}

impl Reweighter for AdaLoss {
    fn name(&self) -> &'static str {
        "adaloss"
    }

    fn update(&mut self, _alpha: &TaskWeights, inputs: UpdateInputs<'_>) -> Result<TaskWeights> {
        let recent = match self.recent.take() {
            None => inputs.aux_losses.to_vec(),
            Some(prev) => prev
                .iter()
                .zip(inputs.aux_losses)
                .map(|(p, l)| 0.9 * p + 0.1 * l)
                .collect(),
        };
        let w = adaloss_weights(&recent)?;
        self.recent = Some(recent);
        Ok(w)
    }
}

/// Relative training rates are `(L_k / L_k(0)) / mean_j (L_j / L_j(0))`, with
/// `L_k(0)` the first observed loss.
#[derive(Clone, Debug)]
pub struct GradNorm {
    beta: f64,
    gamma: f64,
    initial: Option<Vec<f64>>,
}

impl GradNorm {
    pub fn new(beta: f64, gamma: f64) -> Self {
        GradNorm {
            beta,
            gamma,
            initial: None,
        }
    }
}

impl Reweighter for GradNorm {
    fn name(&self) -> &'static str {
        "gradnorm"
    }

    fn update(&mut self, alpha: &TaskWeights, inputs: UpdateInputs<'_>) -> Result<TaskWeights> {
        let initial = self
            .initial
            .get_or_insert_with(|| inputs.aux_losses.to_vec());
        let ratios: Vec<f64> = inputs
            .aux_losses
            .iter()
            .zip(initial.iter())
            .map(|(l, l0)| if l0.abs() > 0.0 { (l / l0).abs() } else { 1.0 })
            .collect();
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let rates: Vec<f64> = if mean > 0.0 {
            ratios.iter().map(|r| r / mean).collect()
        } else {
            vec![1.0; ratios.len()]
        };
        gradnorm_update(alpha, inputs.snapshot, &rates, self.beta, self.gamma)
    }
}

/// Cosine filtering, rescaled so the kept tasks share the total `K`. If every
/// task is filtered the previous weights are kept.
#[derive(Clone, Debug, Default)]
pub struct CosineSim;

impl Reweighter for CosineSim {
    fn name(&self) -> &'static str {
        "cosine"
    }

    fn update(&mut self, alpha: &TaskWeights, inputs: UpdateInputs<'_>) -> Result<TaskWeights> {
        let mask = cosine_sim_weights(inputs.snapshot)?;
        let kept: f64 = mask.iter().sum();
        if kept == 0.0 {
            return Ok(alpha.clone());
        }
        let k = mask.len() as f64;
        project_onto_weights(&mask.iter().map(|m| m * k / kept).collect::<Vec<_>>())
    }
}

#[derive(Clone, Debug)]
pub struct OlAux {
    beta: f64,
}

impl OlAux {
    pub fn new(beta: f64) -> Self {
        OlAux { beta }
    }
}

impl Reweighter for OlAux {
    fn name(&self) -> &'static str {
        "ol_aux"
    }

    fn update(&mut self, alpha: &TaskWeights, inputs: UpdateInputs<'_>) -> Result<TaskWeights> {
        ol_aux_update(alpha, inputs.snapshot, self.beta)
    }
}

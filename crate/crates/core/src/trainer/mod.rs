//! Joint training of the main and auxiliary tasks with live weight learning.

mod config;
mod convergence;
mod langevin;
mod noise;
mod train;

pub use config::{LrPhase, LrSchedule, Mode, TrainerConfig};
pub use convergence::{weight_convergence_check, ConvergenceMonitor, WEIGHT_EMA_DECAY};
pub use langevin::{injected_noise_std, langevin_step, sgd_step, LangevinStep};
pub use noise::{noise_diagnostic, NoiseReport};
pub use train::{draw_batches, joint_grad, train, Batches, TrainResult};

use serde::{Deserialize, Serialize};

/// Whether the weights were live (`Sampling`) or frozen (`Optimizing`) in an
/// iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Sampling,
    Optimizing,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Sampling => "sampling",
            Stage::Optimizing => "optimizing",
        }
    }
}

impl std::str::FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sampling" => Ok(Stage::Sampling),
            "optimizing" => Ok(Stage::Optimizing),
            other => Err(format!("unknown stage `{other}`")),
        }
    }
}

/// One row of per-iteration output. Losses are minibatch estimates of the
/// total-data negative log-likelihood at the post-step parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRecord {
    pub iteration: usize,
    pub stage: Stage,
    pub main_loss: f64,
    pub aux_losses: Vec<f64>,
    pub alpha: Vec<f64>,
    pub arml_objective: f64,
    pub grad_norm_main: f64,
}

use serde::{Deserialize, Serialize};

use crate::error::{ArmlError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Two stages: Langevin sampling with live weight updates until the
    /// weights converge, then plain SGD with frozen weights.
    Alg1,
    /// Single stage: every iteration steps the parameters (noise optional)
    /// and updates the weights.
    Alg2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrPhase {
    /// First iteration (1-based) that uses `lr`.
    pub start: usize,
    pub lr: f64,
}

/// Piecewise-constant learning rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LrSchedule(pub Vec<LrPhase>);

impl LrSchedule {
    pub fn constant(lr: f64) -> Self {
        LrSchedule(vec![LrPhase { start: 1, lr }])
    }

    pub fn validate(&self) -> Result<()> {
        let phases = &self.0;
        if phases.is_empty() {
            return Err(ArmlError::validation("trainer.lr_schedule", "must not be empty"));
        }
        if phases[0].start > 1 {
            return Err(ArmlError::validation(
                "trainer.lr_schedule",
                "first phase must start at iteration 0 or 1",
            ));
        }
        if phases.windows(2).any(|w| w[1].start <= w[0].start) {
            return Err(ArmlError::validation(
                "trainer.lr_schedule",
                "phase starts must be strictly increasing",
            ));
        }
        if phases.iter().any(|p| !(p.lr > 0.0) || !p.lr.is_finite()) {
            return Err(ArmlError::validation("trainer.lr_schedule", "learning rates must be > 0"));
        }
        Ok(())
    }

    pub fn lr_at(&self, iteration: usize) -> f64 {
        self.0
            .iter()
            .take_while(|p| p.start <= iteration)
            .last()
            .unwrap_or(&self.0[0])
            .lr
    }
}

fn default_mode() -> Mode {
    Mode::Alg1
}
fn default_schedule() -> LrSchedule {
    LrSchedule::constant(1e-4)
}
pub(crate) fn default_weight_lr() -> f64 {
    0.005
}
fn default_batch() -> usize {
    64
}
fn default_true() -> bool {
    true
}
fn default_tol() -> f64 {
    1e-3
}
fn default_log_every() -> usize {
    1
}

fn default_window() -> usize {
    100
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainerConfig {
    #[serde(default = "default_mode")]
    pub mode: Mode,
    pub iterations: usize,
    #[serde(default = "default_schedule")]
    pub lr_schedule: LrSchedule,
    /// Learning rate for the task weights.
    #[serde(default = "default_weight_lr")]
    pub weight_lr: f64,
    #[serde(default = "default_batch")]
    pub batch_size_main: usize,
    #[serde(default = "default_batch")]
    pub batch_size_aux: usize,
    /// Inject Langevin noise. Always on during stage 1 of `alg1`.
    #[serde(default = "default_true")]
    pub langevin: bool,
    #[serde(default = "default_tol")]
    pub convergence_tol: f64,
    #[serde(default = "default_window")]
    pub convergence_window: usize,
    /// Hard cap on stage 1 length; defaults to `iterations`.
    #[serde(default)]
    pub max_stage1_iters: Option<usize>,
    /// Coefficient `lambda` of an isotropic prior `-lambda ||theta||^2`.
    #[serde(default)]
    pub prior_decay: f64,
    #[serde(default)]
    pub seed: u64,
    /// Record metrics every `log_every` iterations; the last iteration is
    /// always recorded.
    #[serde(default = "default_log_every")]
    pub log_every: usize,
}

impl TrainerConfig {
    pub fn new(mode: Mode, iterations: usize, lr: f64) -> Self {
        TrainerConfig {
            mode,
            iterations,
            lr_schedule: LrSchedule::constant(lr),
            weight_lr: default_weight_lr(),
            batch_size_main: default_batch(),
            batch_size_aux: default_batch(),
            langevin: true,
            convergence_tol: default_tol(),
            convergence_window: default_window(),
            max_stage1_iters: None,
            prior_decay: 0.0,
            seed: 0,
            log_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(ArmlError::validation("trainer.iterations", "must be >= 1"));
        }
        self.lr_schedule.validate()?;
        if !(self.weight_lr > 0.0) || !self.weight_lr.is_finite() {
            return Err(ArmlError::validation("trainer.weight_lr", "must be > 0"));
        }
        if self.batch_size_main == 0 {
            return Err(ArmlError::validation("trainer.batch_size_main", "must be >= 1"));
        }
        if self.batch_size_aux == 0 {
            return Err(ArmlError::validation("trainer.batch_size_aux", "must be >= 1"));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(ArmlError::validation("trainer.convergence_tol", "must be > 0"));
        }
        if self.convergence_window == 0 {
            return Err(ArmlError::validation("trainer.convergence_window", "must be >= 1"));
        }
        if self.max_stage1_iters == Some(0) {
            return Err(ArmlError::validation("trainer.max_stage1_iters", "must be >= 1"));
        }
        if self.log_every == 0 {
            return Err(ArmlError::validation("trainer.log_every", "must be >= 1"));
        }
        if !(self.prior_decay >= 0.0) || !self.prior_decay.is_finite() {
            return Err(ArmlError::validation("trainer.prior_decay", "must be >= 0"));
        }
        Ok(())
    }

    pub fn stage1_cap(&self) -> usize {
        self.max_stage1_iters.unwrap_or(self.iterations)
    }
}

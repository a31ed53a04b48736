//! Settings of the shipped synthetic benchmarks.

use crate::oracle::GaussianFamily;
use crate::trainer::{Mode, TrainerConfig};

use super::config::{ExperimentConfig, FamilySource, GaussianProblem, ProblemSpec, ReweighterSpec};

/// `fraction / λ`, with `λ = (n / s + K) / λ_min(Σ)` bounding the largest
/// eigenvalue of the joint precision of a Gaussian problem.
pub fn gaussian_step_size(family: &GaussianFamily, main_n: usize, main_noise_scale: f64, fraction: f64) -> f64 {
    let min_eig = family.sigma().clone().symmetric_eigenvalues().min();
    let lambda = (main_n as f64 / main_noise_scale + family.k() as f64) / min_eig;
    fraction / lambda
}

/// Knobs of the Gaussian weight-recovery benchmark.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianBenchmark {
    pub main_n: usize,
    pub main_noise_scale: f64,
    /// Langevin step as a fraction of the stability limit scale.
    pub step_fraction: f64,
    pub weight_lr: f64,
    pub iterations: usize,
    pub stage1_iters: usize,
    pub log_every: usize,
}

impl Default for GaussianBenchmark {
    fn default() -> Self {
        GaussianBenchmark {
            main_n: 1000,
            main_noise_scale: 0.25,
            step_fraction: 0.8,
            weight_lr: 5e-8,
            iterations: 2_000_000,
            stage1_iters: 1_800_000,
            log_every: 10_000,
        }
    }
}

impl GaussianBenchmark {
    /// ARML in `alg1` mode on `family` with main-task data drawn from
    /// `data_seed`.
    pub fn config(&self, name: &str, family: &GaussianFamily, data_seed: u64, seed: u64) -> ExperimentConfig {
        let eps = gaussian_step_size(family, self.main_n, self.main_noise_scale, self.step_fraction);
        let mut trainer = TrainerConfig::new(Mode::Alg1, self.iterations, eps);
        trainer.weight_lr = self.weight_lr;
        trainer.max_stage1_iters = Some(self.stage1_iters);
        trainer.convergence_window = 200_000;
        trainer.convergence_tol = 1e-3;
        trainer.log_every = self.log_every;
        trainer.seed = seed;
        ExperimentConfig {
            name: name.to_string(),
            trainer,
            reweighter: ReweighterSpec::Arml { snapshot_ema: None },
            problem: ProblemSpec::Gaussian(GaussianProblem {
                family: FamilySource::Inline(family.to_spec()),
                main_n: self.main_n,
                main_noise_scale: self.main_noise_scale,
                data_seed,
            }),
            diagnostics: Default::default(),
            output_dir: None,
        }
    }
}

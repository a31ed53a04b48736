use crate::error::{ArmlError, Result};
use crate::linalg::norm;
use crate::params::{shared_slice, Gradient, ParamVector};
use crate::random::{RngState, Stream};
use crate::reweight::{arml_objective, GradientSnapshot, Reweighter, TaskWeights, UpdateInputs};
use crate::tasks::TaskModel;

use super::config::{Mode, TrainerConfig};
use super::convergence::ConvergenceMonitor;
use super::langevin::{langevin_step, sgd_step};
use super::{MetricsRecord, Stage};

/// Minibatch indices for one iteration. Tasks without a dataset get an empty
/// batch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Batches {
    pub main: Vec<usize>,
    pub aux: Vec<Vec<usize>>,
}

pub fn draw_batches(
    rng: &mut RngState,
    main: &dyn TaskModel,
    aux: &[Box<dyn TaskModel>],
    batch_main: usize,
    batch_aux: usize,
) -> Batches {
    let mut draw = |task: &dyn TaskModel, size: usize| match task.n_examples() {
        Some(n) => rng.batch(n, size),
        None => Vec::new(),
    };
    let main_batch = draw(main, batch_main);
    let aux_batches = aux.iter().map(|t| draw(t.as_ref(), batch_aux)).collect();
    Batches {
        main: main_batch,
        aux: aux_batches,
    }
}

/// `∇ log p(T_m|θ) + Σ_k α_k ∇ log p(T_k|θ) - 2 λ θ`.
pub fn joint_grad(
    theta: &ParamVector,
    main: &dyn TaskModel,
    aux: &[Box<dyn TaskModel>],
    alpha: &TaskWeights,
    batches: &Batches,
    prior_decay: f64,
) -> Result<Gradient> {
    if aux.len() != alpha.k() || batches.aux.len() != aux.len() {
        return Err(ArmlError::arg(format!(
            "{} auxiliary tasks, {} weights, {} batches",
            aux.len(),
            alpha.k(),
            batches.aux.len()
        )));
    }
    let mut g = main.grad_log_likelihood(theta, &batches.main)?;
    for ((task, a), batch) in aux.iter().zip(alpha.as_slice()).zip(&batches.aux) {
        let gk = task.grad_log_likelihood(theta, batch)?;
        g.add_scaled(*a, &gk)?;
    }
    if prior_decay > 0.0 {
        for (gi, t) in g.values_mut().iter_mut().zip(theta.values()) {
            *gi -= 2.0 * prior_decay * t;
        }
    }
    Ok(g)
}

#[derive(Clone, Debug)]
pub struct TrainResult {
    pub final_theta: ParamVector,
    /// Starts with `(0, initial weights)`, then one entry per recorded
    /// iteration.
    pub weight_trajectory: Vec<(usize, TaskWeights)>,
    pub loss_trajectory: Vec<MetricsRecord>,
    /// Iteration at which the convergence check fired (alg1 only).
    pub converged_at: Option<usize>,
    /// Last iteration of stage 1 (alg1 only): `converged_at` or the cap.
    pub stage1_end: Option<usize>,
    /// Std of the noise injected at each iteration (0 when none).
    pub injected_noise_std: Vec<f64>,
}

impl TrainResult {
    pub fn final_weights(&self) -> &TaskWeights {
        &self.weight_trajectory.last().expect("non-empty trajectory").1
    }
}

fn finite_or_abort(iteration: usize, what: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ArmlError::numeric(iteration, format!("{what} is not finite")))
    }
}

fn at_iteration(iteration: usize, e: ArmlError) -> ArmlError {
    match e {
        ArmlError::Numeric { message, .. } => ArmlError::Numeric { iteration, message },
        other => other,
    }
}

/// Runs the joint-training loop.
///
/// Each iteration draws fresh batches, steps `θ` along the joint score at
/// `θ_{t-1}` (with noise in sampling phases), then evaluates every task on
/// the same batches at `θ_t` to build the snapshot for the weight update.
pub fn train(
    config: &TrainerConfig,
    main: &dyn TaskModel,
    aux: &[Box<dyn TaskModel>],
    reweighter: &mut dyn Reweighter,
    theta0: ParamVector,
) -> Result<TrainResult> {
    config.validate()?;
    if aux.is_empty() {
        return Err(ArmlError::arg("at least one auxiliary task is required"));
    }
    let k = aux.len();
    let mut alpha = reweighter.initial_weights(k)?;
    if alpha.k() != k {
        return Err(ArmlError::arg("initial weights do not match the task count"));
    }

    let mut batch_rng = RngState::for_stream(config.seed, Stream::Batches);
    let mut noise_rng = RngState::for_stream(config.seed, Stream::Noise);
    let mut monitor = ConvergenceMonitor::new(config.convergence_tol, config.convergence_window);
    monitor.push(&alpha);

    let mut theta = theta0;
    let mut weight_trajectory = Vec::with_capacity(config.iterations / config.log_every + 2);
    weight_trajectory.push((0, alpha.clone()));
    let mut records = Vec::with_capacity(config.iterations / config.log_every + 1);
    let mut noise_trace = Vec::with_capacity(config.iterations);
    let mut converged_at = None;
    let mut stage1_end = None;
    let mut in_stage1 = config.mode == Mode::Alg1;

    for t in 1..=config.iterations {
        let eps = config.lr_schedule.lr_at(t);
        let batches = draw_batches(
            &mut batch_rng,
            main,
            aux,
            config.batch_size_main,
            config.batch_size_aux,
        );
        let g = joint_grad(&theta, main, aux, &alpha, &batches, config.prior_decay)
            .map_err(|e| at_iteration(t, e))?;
        if !g.is_finite() {
            return Err(ArmlError::numeric(t, "joint gradient is not finite"));
        }
        let (live, noisy) = match config.mode {
            Mode::Alg1 => (in_stage1, in_stage1),
            Mode::Alg2 => (true, config.langevin),
        };
        if noisy {
            let step = langevin_step(&theta, &g, eps, &mut noise_rng).map_err(|e| at_iteration(t, e))?;
            theta = step.theta;
            noise_trace.push(step.noise_std);
        } else {
            theta = sgd_step(&theta, &g, eps).map_err(|e| at_iteration(t, e))?;
            noise_trace.push(0.0);
        }

        let (main_ll, g_main) = main
            .value_and_grad(&theta, &batches.main)
            .map_err(|e| at_iteration(t, e))?;
        let main_loss = finite_or_abort(t, "main loss", -main_ll)?;
        let mut aux_losses = Vec::with_capacity(k);
        let mut g_aux = Vec::with_capacity(k);
        for (idx, (task, batch)) in aux.iter().zip(&batches.aux).enumerate() {
            let (ll, gk) = task.value_and_grad(&theta, batch).map_err(|e| at_iteration(t, e))?;
            aux_losses.push(finite_or_abort(t, &format!("auxiliary loss {}", idx + 1), -ll)?);
            g_aux.push(shared_slice(&gk).to_vec());
        }
        let snapshot = GradientSnapshot::new(shared_slice(&g_main).to_vec(), g_aux, t)
            .map_err(|e| ArmlError::numeric(t, e.to_string()))?;

        if live {
            alpha = reweighter
                .update(
                    &alpha,
                    UpdateInputs {
                        snapshot: &snapshot,
                        aux_losses: &aux_losses,
                    },
                )
                .map_err(|e| at_iteration(t, e))?;
        }
        let objective = finite_or_abort(t, "matching objective", arml_objective(&snapshot, &alpha)?)?;
        if t % config.log_every == 0 || t == config.iterations {
            records.push(MetricsRecord {
                iteration: t,
                stage: if live { Stage::Sampling } else { Stage::Optimizing },
                main_loss,
                aux_losses,
                alpha: alpha.as_slice().to_vec(),
                arml_objective: objective,
                grad_norm_main: norm(&snapshot.g_main),
            });
            weight_trajectory.push((t, alpha.clone()));
        }

        if in_stage1 {
            monitor.push(&alpha);
            if monitor.converged() {
                converged_at = Some(t);
                stage1_end = Some(t);
                in_stage1 = false;
            } else if t >= config.stage1_cap() {
                stage1_end = Some(t);
                in_stage1 = false;
            }
        }
    }

    Ok(TrainResult {
        final_theta: theta,
        weight_trajectory,
        loss_trajectory: records,
        converged_at,
        stage1_end,
        injected_noise_std: noise_trace,
    })
}

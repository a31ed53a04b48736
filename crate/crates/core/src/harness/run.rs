use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ArmlError, Result};
use crate::oracle::GaussianFamily;
use crate::params::{ParamVector, TaskId};
use crate::random::{RngState, Stream};
use crate::reweight::{
    select, AdaLoss, Arml, CosineSim, Fixed, GradNorm, GridSelection, OlAux, Reweighter, TaskWeights, Uniform,
};
use crate::tasks::{
    make_mlp_task, mean_nll, mlp_layout, Activation, Dataset, GaussianTask, LinearRegressionTask,
    LogisticRegressionTask, TaskModel,
};
use crate::trainer::{noise_diagnostic, train, NoiseReport, TrainResult};

use super::config::{
    ExperimentConfig, FamilySource, ModelKind, ModelSpec, ProblemSpec, ReweighterSpec, MANIFEST_KIND,
};
use super::metrics::{gnuplot_script, write_metrics_csv};
use super::synthetic::{gaussian_main_task, generate_gaussian_family, generate_regression};

/// Environment variable naming the default output root.
pub const OUT_DIR_ENV: &str = "ARML_OUT_DIR";

/// A problem ready to train.
#[derive(Debug)]
pub struct Problem {
    pub main: Box<dyn TaskModel>,
    pub aux: Vec<Box<dyn TaskModel>>,
    /// Held-out main-task data, when the problem has any.
    pub validation: Option<Box<dyn TaskModel>>,
    pub theta0: ParamVector,
    pub family: Option<GaussianFamily>,
}

impl Problem {
    /// Main-task loss used to compare runs: mean NLL on the validation set,
    /// or on the training set when there is none.
    pub fn evaluation_loss(&self, theta: &ParamVector) -> Result<f64> {
        match &self.validation {
            Some(v) => mean_nll(v.as_ref(), theta),
            None => mean_nll(self.main.as_ref(), theta),
        }
    }
}

pub fn build_family(source: &FamilySource) -> Result<GaussianFamily> {
    match source {
        FamilySource::Inline(spec) => GaussianFamily::from_spec(spec),
        FamilySource::Generate(gen) => Ok(generate_gaussian_family(gen)?.family),
    }
}

fn dataset_models(
    model: &ModelSpec,
    main: Dataset,
    aux: Vec<Dataset>,
    validation: Option<Dataset>,
    seed: u64,
) -> Result<Problem> {
    let p = main.input_dim();
    for (i, d) in aux.iter().chain(validation.iter()).enumerate() {
        if d.input_dim() != p {
            return Err(ArmlError::arg(format!(
                "dataset {} has {} features, main task has {p}",
                i + 1,
                d.input_dim()
            )));
        }
    }
    let k = aux.len();
    type Build = dyn Fn(Dataset, Option<TaskId>) -> Result<Box<dyn TaskModel>>;
    let (layout_theta, build): (ParamVector, Box<Build>) = match model.kind {
        ModelKind::Linear => {
            let nv = model.noise_var;
            (
                ParamVector::from_shared(vec![0.0; p])?,
                Box::new(move |d, _| Ok(Box::new(LinearRegressionTask::new(d, nv, None)?))),
            )
        }
        ModelKind::Logistic => (
            ParamVector::from_shared(vec![0.0; p])?,
            Box::new(|d, _| Ok(Box::new(LogisticRegressionTask::new(d, None)?))),
        ),
        ModelKind::Mlp => {
            let heads: Vec<(TaskId, usize)> = (0..=k as u32).map(|i| (TaskId(i), 1)).collect();
            let layout = mlp_layout(p, &model.hidden, &heads)?;
            let mut rng = RngState::for_stream(seed, Stream::Init);
            let values = rng.gaussian_vector(layout.dim(), 0.0, model.init_std)?;
            let mut sizes = vec![p];
            sizes.extend(&model.hidden);
            sizes.push(1);
            let nv = model.noise_var;
            (
                ParamVector::new(values, layout)?,
                Box::new(move |d, head| Ok(Box::new(make_mlp_task(&sizes, Activation::Tanh, d, head, nv)?))),
            )
        }
    };
    let head = |i: u32| match model.kind {
        ModelKind::Mlp => Some(TaskId(i)),
        _ => None,
    };
    Ok(Problem {
        main: build(main, head(0))?,
        aux: aux
            .into_iter()
            .enumerate()
            .map(|(i, d)| build(d, head(i as u32 + 1)))
            .collect::<Result<_>>()?,
        validation: validation.map(|d| build(d, head(0))).transpose()?,
        theta0: layout_theta,
        family: None,
    })
}

pub fn build_problem(spec: &ProblemSpec, seed: u64) -> Result<Problem> {
    match spec {
        ProblemSpec::Gaussian(g) => {
            let family = build_family(&g.family)?;
            let main_spec = gaussian_main_task(&family, g.main_n, g.main_noise_scale, g.data_seed)?;
            let aux = family
                .specs()
                .iter()
                .map(|s| Ok(Box::new(GaussianTask::new(s)?) as Box<dyn TaskModel>))
                .collect::<Result<_>>()?;
            // start at the uniform-weight surrogate mean
            let k = family.k() as f64;
            let mut start = vec![0.0; family.dim()];
            for c in family.centers() {
                for (s, v) in start.iter_mut().zip(c.iter()) {
                    *s += v / k;
                }
            }
            Ok(Problem {
                main: Box::new(GaussianTask::new(&main_spec)?),
                aux,
                validation: None,
                theta0: ParamVector::from_shared(start)?,
                family: Some(family),
            })
        }
        ProblemSpec::Regression(r) => {
            let data = generate_regression(&r.data)?;
            dataset_models(&r.model, data.main, data.aux, Some(data.validation), seed)
        }
        ProblemSpec::Csv(c) => {
            let main = Dataset::load_csv(&c.main)?;
            let aux = c.aux.iter().map(Dataset::load_csv).collect::<Result<_>>()?;
            let val = c.validation.as_ref().map(Dataset::load_csv).transpose()?;
            dataset_models(&c.model, main, aux, val, seed)
        }
    }
}

pub fn build_reweighter(spec: &ReweighterSpec, beta: f64) -> Result<Box<dyn Reweighter>> {
    Ok(match spec {
        ReweighterSpec::Arml { snapshot_ema: None } => Box::new(Arml::new(beta)),
        ReweighterSpec::Arml {
            snapshot_ema: Some(d),
        } => Box::new(Arml::with_snapshot_ema(beta, *d)?),
        ReweighterSpec::Uniform => Box::new(Uniform),
        ReweighterSpec::Fixed { weights } => Box::new(Fixed(weights.clone())),
        ReweighterSpec::Adaloss => Box::new(AdaLoss::default()),
        ReweighterSpec::Gradnorm { gamma } => Box::new(GradNorm::new(beta, *gamma)),
        ReweighterSpec::Cosine => Box::new(CosineSim),
        ReweighterSpec::OlAux => Box::new(OlAux::new(beta)),
        ReweighterSpec::Grid { .. } => {
            return Err(ArmlError::arg("grid reweighters run through grid_search"));
        }
    })
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub gnuplot: bool,
    /// Parallel child runs for grid search.
    pub jobs: Option<usize>,
}

/// `--out`, then `output_dir`, then `$ARML_OUT_DIR`, then `runs`.
pub fn resolve_out_root(opts: &RunOptions, config: &ExperimentConfig) -> PathBuf {
    opts.out_dir
        .clone()
        .or_else(|| config.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    NumericAbort,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: String,
    pub code_version: String,
    pub name: String,
    pub seed: u64,
    pub status: RunStatus,
    #[serde(default)]
    pub error: Option<String>,
    #[serde(default)]
    pub error_iteration: Option<usize>,
    #[serde(default)]
    pub converged_at: Option<usize>,
    #[serde(default)]
    pub stage1_end: Option<usize>,
    #[serde(default)]
    pub final_weights: Option<TaskWeights>,
    #[serde(default)]
    pub evaluation_loss: Option<f64>,
    pub metrics: Option<String>,
    pub config: ExperimentConfig,
}

#[derive(Clone, Debug, Serialize)]
struct WeightsFile<'a> {
    final_weights: &'a TaskWeights,
    converged_at: Option<usize>,
    stage1_end: Option<usize>,
    trajectory: Vec<(usize, &'a [f64])>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub run_dir: PathBuf,
    pub result: TrainResult,
    pub evaluation_loss: f64,
    pub problem: Problem,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| ArmlError::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| ArmlError::io(path, e))
}

/// Trains without touching the filesystem.
pub fn execute(config: &ExperimentConfig) -> Result<(Problem, TrainResult)> {
    config.validate()?;
    let problem = build_problem(&config.problem, config.trainer.seed)?;
    let mut reweighter = build_reweighter(&config.reweighter, config.trainer.weight_lr)?;
    let result = train(
        &config.trainer,
        problem.main.as_ref(),
        &problem.aux,
        reweighter.as_mut(),
        problem.theta0.clone(),
    )?;
    Ok((problem, result))
}

fn effective_config(config: &ExperimentConfig, opts: &RunOptions) -> ExperimentConfig {
    let mut cfg = config.clone();
    if let Some(seed) = opts.seed {
        cfg.trainer.seed = seed;
    }
    cfg
}

/// Trains one configuration and writes `metrics.csv`, `weights.json` and
/// `manifest.json` into `<root>/<name>/`. A failed run still leaves a
/// manifest recording the error.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome> {
    if let ReweighterSpec::Grid { .. } = config.reweighter {
        return Err(ArmlError::arg("use run_grid_search for grid reweighters"));
    }
    let cfg = effective_config(config, opts);
    let run_dir = resolve_out_root(opts, &cfg).join(&cfg.name);
    run_into(&cfg, &run_dir, opts.gnuplot)
}

fn run_into(cfg: &ExperimentConfig, run_dir: &Path, gnuplot: bool) -> Result<RunOutcome> {
    create_dir(run_dir)?;
    let mut manifest = Manifest {
        kind: MANIFEST_KIND.to_string(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        name: cfg.name.clone(),
        seed: cfg.trainer.seed,
        status: RunStatus::Ok,
        error: None,
        error_iteration: None,
        converged_at: None,
        stage1_end: None,
        final_weights: None,
        evaluation_loss: None,
        metrics: None,
        config: cfg.clone(),
    };
    let manifest_path = run_dir.join("manifest.json");
    let (problem, result) = match execute(cfg) {
        Ok(v) => v,
        Err(e) => {
            manifest.status = if e.is_numeric() {
                RunStatus::NumericAbort
            } else {
                RunStatus::Failed
            };
            if let ArmlError::Numeric { iteration, .. } = &e {
                manifest.error_iteration = Some(*iteration);
            }
            manifest.error = Some(e.to_string());
            write_json(&manifest_path, &manifest)?;
            return Err(e);
        }
    };
    let metrics_path = run_dir.join("metrics.csv");
    write_metrics_csv(&result.loss_trajectory, &metrics_path)?;
    if gnuplot {
        let script = gnuplot_script("metrics.csv", result.final_weights().k());
        let p = run_dir.join("weights.gp");
        std::fs::write(&p, script).map_err(|e| ArmlError::io(&p, e))?;
    }
    let evaluation_loss = problem.evaluation_loss(&result.final_theta)?;
    write_json(
        &run_dir.join("weights.json"),
        &WeightsFile {
            final_weights: result.final_weights(),
            converged_at: result.converged_at,
            stage1_end: result.stage1_end,
            trajectory: result
                .weight_trajectory
                .iter()
                .map(|(t, a)| (*t, a.as_slice()))
                .collect(),
        },
    )?;
    manifest.converged_at = result.converged_at;
    manifest.stage1_end = result.stage1_end;
    manifest.final_weights = Some(result.final_weights().clone());
    manifest.evaluation_loss = Some(evaluation_loss);
    manifest.metrics = Some("metrics.csv".into());
    write_json(&manifest_path, &manifest)?;
    Ok(RunOutcome {
        run_dir: run_dir.to_path_buf(),
        result,
        evaluation_loss,
        problem,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub winner: usize,
    pub winner_weights: TaskWeights,
    pub candidates: Vec<TaskWeights>,
    /// Evaluation loss per candidate, in candidate order.
    pub scores: Vec<f64>,
    pub child_dirs: Vec<String>,
}

#[derive(Debug)]
pub struct GridOutcome {
    pub run_dir: PathBuf,
    pub selection: GridSelection,
    pub record: SelectionRecord,
}

/// One fixed-weight child run per candidate, run on up to `jobs` threads.
/// The winner is the lowest evaluation loss, ties to the first candidate.
pub fn run_grid_search(config: &ExperimentConfig, opts: &RunOptions) -> Result<GridOutcome> {
    let cfg = effective_config(config, opts);
    cfg.validate()?;
    let ReweighterSpec::Grid { candidates } = &cfg.reweighter else {
        return Err(ArmlError::validation("reweighter.kind", "grid search needs a grid reweighter"));
    };
    let run_dir = resolve_out_root(opts, &cfg).join(&cfg.name);
    create_dir(&run_dir)?;
    let jobs = opts.jobs.unwrap_or(1).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| ArmlError::arg(format!("thread pool: {e}")))?;
    let children: Vec<(String, ExperimentConfig)> = candidates
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let mut child = cfg.clone();
            child.name = format!("candidate_{i}");
            child.reweighter = ReweighterSpec::Fixed { weights: w.clone() };
            child.output_dir = None;
            (child.name.clone(), child)
        })
        .collect();
    let scores: Vec<Result<f64>> = pool.install(|| {
        use rayon::prelude::*;
        children
            .par_iter()
            .map(|(name, child)| run_into(child, &run_dir.join(name), opts.gnuplot).map(|o| o.evaluation_loss))
            .collect()
    });
    let scores = scores.into_iter().collect::<Result<Vec<_>>>()?;
    let selection = select(candidates, scores)?;
    let record = SelectionRecord {
        winner: selection.index,
        winner_weights: selection.weights.clone(),
        candidates: candidates.clone(),
        scores: selection.scores.clone(),
        child_dirs: children.into_iter().map(|(n, _)| n).collect(),
    };
    write_json(&run_dir.join("selection.json"), &record)?;
    Ok(GridOutcome {
        run_dir,
        selection,
        record,
    })
}

/// Trains the config, then compares minibatch gradient noise with the
/// injected noise at the final parameters and weights.
pub fn diagnose_noise(config: &ExperimentConfig) -> Result<NoiseReport> {
    let (problem, result) = execute(config)?;
    let eps = config
        .diagnostics
        .lr
        .unwrap_or_else(|| config.trainer.lr_schedule.lr_at(1));
    let mut rng = RngState::for_stream(config.trainer.seed, Stream::Diagnostics);
    noise_diagnostic(
        problem.main.as_ref(),
        &problem.aux,
        result.final_weights(),
        &result.final_theta,
        eps,
        config.diagnostics.n_batches,
        (config.trainer.batch_size_main, config.trainer.batch_size_aux),
        &mut rng,
    )
}

//! Experiment configs, synthetic problems, run artifacts and the CLI.

pub mod benchmarks;
pub mod cli;
mod config;
mod metrics;
mod run;
mod synthetic;

pub use config::{
    load_config, parse_config, CsvProblem, DiagnosticsSpec, ExperimentConfig, FamilySource, GaussianProblem,
    ModelKind, ModelSpec, ProblemSpec, RegressionProblem, ReweighterSpec, MANIFEST_KIND,
};
pub use metrics::{gnuplot_script, metrics_header, read_metrics_csv, render_metrics_csv, write_metrics_csv};
pub use run::{
    build_family, build_problem, build_reweighter, diagnose_noise, execute, resolve_out_root, run_experiment,
    run_grid_search, GridOutcome, Manifest, Problem, RunOptions, RunOutcome, RunStatus, SelectionRecord,
    OUT_DIR_ENV,
};
pub use synthetic::{
    gaussian_main_task, generate_gaussian_family, generate_regression, GaussianFamilyGen, PlantedFamily,
    RegressionData, RegressionGen,
};

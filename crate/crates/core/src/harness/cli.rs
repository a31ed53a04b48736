//! Command-line front end. The binary only forwards `std::env::args` here.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{ArmlError, Result};
use crate::oracle::{brute_force_optimal_weights, kl_gaussian, simplex_lattice, surrogate_prior};
use crate::reweight::TaskWeights;

use super::config::{load_config, ProblemSpec, ReweighterSpec};
use super::run::{build_family, diagnose_noise, run_experiment, run_grid_search, RunOptions};
use super::synthetic::{generate_gaussian_family, generate_regression, GaussianFamilyGen, RegressionGen};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "arml", version, about = "Auxiliary task reweighting experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one experiment and write its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a gnuplot script next to the metrics.
        #[arg(long)]
        gnuplot: bool,
    },
    /// Print the brute-force optimal weights of a Gaussian problem.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "grid-res")]
        grid_res: f64,
        /// Rows of the KL table to print.
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Compare minibatch gradient noise with injected Langevin noise.
    DiagnoseNoise {
        #[arg(long)]
        config: PathBuf,
    },
    /// Generate a synthetic dataset or Gaussian family.
    GenData {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one fixed-weight child per grid candidate and pick the best.
    GridSearch {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Input of `gen-data`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    GaussianFamily(GaussianFamilyGen),
    Regression(RegressionGen),
}

fn read_data_spec(path: &PathBuf) -> Result<DataSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| ArmlError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| ArmlError::Parse {
        path: path.clone(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn gen_data(spec: &PathBuf, out: &PathBuf, stdout: &mut dyn Write) -> Result<()> {
    match read_data_spec(spec)? {
        DataSpec::GaussianFamily(gen) => {
            let planted = generate_gaussian_family(&gen)?;
            let mut text = serde_json::to_string_pretty(&planted.family.to_spec()).expect("serializable");
            text.push('\n');
            std::fs::write(out, text).map_err(|e| ArmlError::io(out, e))?;
            let _ = writeln!(stdout, "wrote family to {}", out.display());
        }
        DataSpec::Regression(gen) => {
            let data = generate_regression(&gen)?;
            std::fs::create_dir_all(out).map_err(|e| ArmlError::io(out, e))?;
            data.main.write_csv(out.join("main.csv"))?;
            data.validation.write_csv(out.join("validation.csv"))?;
            for (i, d) in data.aux.iter().enumerate() {
                d.write_csv(out.join(format!("aux_{}.csv", i + 1)))?;
            }
            let _ = writeln!(stdout, "wrote {} datasets to {}", data.aux.len() + 2, out.display());
        }
    }
    Ok(())
}

fn fmt_weights(a: &TaskWeights) -> String {
    let parts: Vec<String> = a.as_slice().iter().map(|v| format!("{v:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

fn oracle(config: &PathBuf, grid_res: f64, top: usize, stdout: &mut dyn Write) -> Result<()> {
    let cfg = load_config(config)?;
    let ProblemSpec::Gaussian(g) = &cfg.problem else {
        return Err(ArmlError::validation("problem.kind", "the oracle needs a gaussian problem"));
    };
    let family = build_family(&g.family)?;
    let (alpha, kl) = brute_force_optimal_weights(&family, grid_res)?;
    let mut table: Vec<(TaskWeights, f64)> = simplex_lattice(family.k(), grid_res)?
        .into_iter()
        .map(|a| {
            let v = kl_gaussian(family.p_star(), &surrogate_prior(&family, &a)?)?;
            Ok((a, v))
        })
        .collect::<Result<_>>()?;
    table.sort_by(|x, y| x.1.total_cmp(&y.1));
    let uniform = TaskWeights::uniform(family.k());
    let kl_uniform = kl_gaussian(family.p_star(), &surrogate_prior(&family, &uniform)?)?;
    let _ = writeln!(stdout, "alpha* = {}", fmt_weights(&alpha));
    let _ = writeln!(stdout, "kl*    = {kl:.6e}");
    let _ = writeln!(stdout, "uniform kl = {kl_uniform:.6e}");
    let _ = writeln!(stdout, "rank\talpha\tkl");
    for (i, (a, v)) in table.iter().take(top).enumerate() {
        let _ = writeln!(stdout, "{}\t{}\t{v:.6e}", i + 1, fmt_weights(a));
    }
    Ok(())
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            gnuplot,
        } => {
            let cfg = load_config(&config)?;
            let opts = RunOptions {
                seed,
                out_dir: out,
                gnuplot,
                jobs: None,
            };
            if let ReweighterSpec::Grid { .. } = cfg.reweighter {
                let g = run_grid_search(&cfg, &opts)?;
                let _ = writeln!(
                    stdout,
                    "winner candidate_{} {} -> {}",
                    g.record.winner,
                    fmt_weights(&g.record.winner_weights),
                    g.run_dir.display()
                );
                return Ok(());
            }
            let outcome = run_experiment(&cfg, &opts)?;
            let _ = writeln!(stdout, "final alpha {}", fmt_weights(outcome.result.final_weights()));
            let _ = writeln!(stdout, "evaluation loss {:.6e}", outcome.evaluation_loss);
            let _ = writeln!(stdout, "artifacts in {}", outcome.run_dir.display());
        }
        Command::Oracle { config, grid_res, top } => oracle(&config, grid_res, top, stdout)?,
        Command::DiagnoseNoise { config } => {
            let cfg = load_config(&config)?;
            let report = diagnose_noise(&cfg)?;
            let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&report).expect("serializable"));
        }
        Command::GenData { spec, out } => gen_data(&spec, &out, stdout)?,
        Command::GridSearch {
            config,
            jobs,
            out,
            seed,
        } => {
            let cfg = load_config(&config)?;
            let opts = RunOptions {
                seed,
                out_dir: out,
                gnuplot: false,
                jobs,
            };
            let g = run_grid_search(&cfg, &opts)?;
            for (i, s) in g.record.scores.iter().enumerate() {
                let _ = writeln!(stdout, "candidate_{i}\t{}\t{s:.6e}", fmt_weights(&g.record.candidates[i]));
            }
            let _ = writeln!(stdout, "winner candidate_{}", g.record.winner);
        }
    }
    Ok(())
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn cli_main<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(stdout, "{rendered}");
            } else {
                let _ = write!(stderr, "{rendered}");
            }
            return code;
        }
    };
    match dispatch(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_numeric() {
                EXIT_NUMERIC
            } else {
                EXIT_USAGE
            }
        }
    }
}


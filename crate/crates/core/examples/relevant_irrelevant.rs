//! One relevant and one irrelevant auxiliary regression task: the learned
//! weights should favour the relevant one and beat uniform weighting.
//!
//! cargo run --release --example relevant_irrelevant

use std::path::PathBuf;

use arml::harness::{execute, load_config, ReweighterSpec};

fn main() -> arml::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/relevant_irrelevant.json");
    let cfg = load_config(&path)?;

    let (problem, arml_run) = execute(&cfg)?;
    let arml_loss = problem.evaluation_loss(&arml_run.final_theta)?;

    let mut uniform = cfg.clone();
    uniform.reweighter = ReweighterSpec::Uniform;
    let (problem, uniform_run) = execute(&uniform)?;
    let uniform_loss = problem.evaluation_loss(&uniform_run.final_theta)?;

    for (t, a) in arml_run.weight_trajectory.iter().step_by(200) {
        println!("iter {t:>6}  alpha {:.4} {:.4}", a.as_slice()[0], a.as_slice()[1]);
    }
    println!("final alpha {:?}", arml_run.final_weights().as_slice());
    println!("validation NLL  arml {arml_loss:.4}  uniform {uniform_loss:.4}");
    Ok(())
}

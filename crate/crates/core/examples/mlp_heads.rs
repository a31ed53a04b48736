//! A tanh MLP with a shared trunk and one output head per task. Only the
//! trunk gradients enter the weight update.
//!
//! cargo run --release --example mlp_heads

use std::path::PathBuf;

use arml::harness::{execute, load_config, ReweighterSpec};

fn main() -> arml::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/mlp_heads.json");
    let cfg = load_config(&path)?;
    let (problem, result) = execute(&cfg)?;
    println!("parameter layout:");
    for seg in result.final_theta.layout().segments() {
        println!("  {:<12} {:?} x{}", seg.name, seg.kind, seg.len);
    }
    let mut uniform = cfg.clone();
    uniform.reweighter = ReweighterSpec::Uniform;
    let (up, ur) = execute(&uniform)?;
    println!("final alpha {:?}", result.final_weights().as_slice());
    println!(
        "validation NLL  arml {:.4}  uniform {:.4}",
        problem.evaluation_loss(&result.final_theta)?,
        up.evaluation_loss(&ur.final_theta)?
    );
    Ok(())
}
